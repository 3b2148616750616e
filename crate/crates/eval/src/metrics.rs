use geo::Coord;
use serde::{Deserialize, Serialize};

use crate::geometry::{covers_point, iou, rank_by_score, Region};
use crate::EvalError;

/// Outcome of greedy matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Prediction indices by descending score.
    pub ranking: Vec<usize>,
    /// Per prediction, in input order: the matched ground-truth index.
    pub matched: Vec<Option<usize>>,
}

impl MatchResult {
    /// TP/FP labels in ranking order.
    pub fn ranked_labels(&self) -> Vec<bool> {
        self.ranking.iter().map(|&i| self.matched[i].is_some()).collect()
    }
}

/// Greedy matching by descending score: each prediction takes the unmatched
/// ground-truth region of the same label with the highest IoU (lowest index
/// on ties) and is a true positive when that IoU reaches `tau`.
pub fn match_and_count(preds: &[(&Region, f64, &str)], gt: &[(&Region, &str)], tau: f64) -> MatchResult {
    let ranking = rank_by_score(preds.iter().map(|p| p.1));
    let mut taken = vec![false; gt.len()];
    let mut matched = vec![None; preds.len()];
    for &i in &ranking {
        let (region, _, label) = preds[i];
        let mut best: Option<(usize, f64)> = None;
        for (g, (gr, gl)) in gt.iter().enumerate() {
            if taken[g] || *gl != label {
                continue;
            }
            let v = iou(region, gr);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, v)) = best {
            if v >= tau {
                taken[g] = true;
                matched[i] = Some(g);
            }
        }
    }
    let tp = matched.iter().filter(|m| m.is_some()).count();
    MatchResult {
        tp,
        fp: preds.len() - tp,
        fn_: gt.len() - tp,
        ranking,
        matched,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Precision, recall and F1; every 0/0 is taken as 0.
pub fn precision_recall_f1(tp: usize, fp: usize, fn_: usize) -> Prf {
    let precision = ratio(tp as f64, (tp + fp) as f64);
    let recall = ratio(tp as f64, (tp + fn_) as f64);
    Prf {
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
    }
}

/// One rank of the precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Highest precision at any rank with recall at least this one.
    pub interpolated: f64,
    /// Ground-truth objects recovered at this rank (0 or 1).
    pub gained: usize,
}

/// Precision-recall curve of TP/FP labels given in descending score order.
pub fn pr_curve(ranked: &[bool], n_gt: usize) -> Result<Vec<PrPoint>, EvalError> {
    if n_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let mut tp = 0usize;
    let mut curve: Vec<PrPoint> = ranked
        .iter()
        .enumerate()
        .map(|(k, &hit)| {
            tp += hit as usize;
            let precision = tp as f64 / (k + 1) as f64;
            PrPoint {
                recall: tp as f64 / n_gt as f64,
                precision,
                interpolated: precision,
                gained: hit as usize,
            }
        })
        .collect();
    for k in (0..curve.len().saturating_sub(1)).rev() {
        curve[k].interpolated = curve[k].interpolated.max(curve[k + 1].interpolated);
    }
    // Earlier ranks of equal recall share the same maximum.
    for k in 1..curve.len() {
        if curve[k].recall == curve[k - 1].recall {
            curve[k].interpolated = curve[k - 1].interpolated;
        }
    }
    Ok(curve)
}

/// All-point interpolated average precision of TP/FP labels given in
/// descending score order, with `n_gt` ground-truth objects:
/// the sum of `(Rc(k) - Rc(k-1)) * Pr_interp(k)` from `Rc(0) = 0`.
pub fn average_precision(ranked: &[bool], n_gt: usize) -> Result<f64, EvalError> {
    let mut area = 0.0;
    for p in pr_curve(ranked, n_gt)? {
        if p.gained > 0 {
            area += p.interpolated * p.gained as f64;
        }
    }
    Ok(area / n_gt as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbineRecall {
    pub gt: usize,
    pub tp: usize,
    /// `None` without ground-truth turbines.
    pub recall: Option<f64>,
}

/// Ground-truth turbine points covered by any predicted region.
pub fn turbine_recall(regions: &[&Region], turbines: &[Coord<f64>]) -> TurbineRecall {
    let tp = turbines.iter().filter(|&&p| regions.iter().any(|r| covers_point(r, p))).count();
    TurbineRecall {
        gt: turbines.len(),
        tp,
        recall: (!turbines.is_empty()).then(|| tp as f64 / turbines.len() as f64),
    }
}
