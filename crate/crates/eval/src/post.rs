use crate::geometry::{iou, rank_by_score, union, Detection, Region};

/// Minimum IoU at which detections are merged.
pub const DEFAULT_MERGE_IOU: f64 = 0.333;

/// Score filter followed by greedy IoU suppression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmsConfig {
    /// Detections scoring below this are dropped first.
    pub score_threshold: f64,
    /// A detection is suppressed at IoU at or above this against a kept one.
    pub overlap_threshold: f64,
}

impl Default for NmsConfig {
    fn default() -> Self {
        Self::score_reading()
    }
}

impl NmsConfig {
    /// The 0.8 threshold applied to scores, suppression at IoU 0.5.
    pub fn score_reading() -> Self {
        Self {
            score_threshold: 0.8,
            overlap_threshold: 0.5,
        }
    }

    /// The 0.8 threshold applied to overlap, no score filter.
    pub fn overlap_reading() -> Self {
        Self {
            score_threshold: 0.0,
            overlap_threshold: 0.8,
        }
    }
}

/// Kept detections in descending score order.
pub fn score_filter_nms(dets: &[Detection], cfg: NmsConfig) -> Vec<Detection> {
    let mut kept: Vec<&Detection> = Vec::new();
    for i in rank_by_score(dets.iter().map(|d| d.score)) {
        let d = &dets[i];
        if d.score < cfg.score_threshold {
            continue;
        }
        if kept.iter().all(|k| iou(&k.region, &d.region) < cfg.overlap_threshold) {
            kept.push(d);
        }
    }
    kept.into_iter().cloned().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedDetection {
    pub region: Region,
    /// Highest member score.
    pub score: f64,
    pub label: String,
    /// Input indices absorbed into this region, seed first.
    pub members: Vec<usize>,
}

/// Cascading merge.
///
/// The highest-scoring unmerged detection seeds a region. Remaining
/// detections are scanned in score order and absorbed, growing the region,
/// whenever their IoU with the current region reaches `min_iou`; scans
/// repeat until one absorbs nothing, then the next seed starts. Finally,
/// output regions that still reach `min_iou` with an earlier one are folded
/// into it until all pairs are below `min_iou`.
pub fn cascade_merge(dets: &[Detection], min_iou: f64) -> Vec<MergedDetection> {
    let mut remaining = rank_by_score(dets.iter().map(|d| d.score));
    let mut out: Vec<MergedDetection> = Vec::new();
    while !remaining.is_empty() {
        let seed = remaining.remove(0);
        let mut m = MergedDetection {
            region: dets[seed].region.clone(),
            score: dets[seed].score,
            label: dets[seed].label.clone(),
            members: vec![seed],
        };
        loop {
            let mut absorbed = false;
            let mut k = 0;
            while k < remaining.len() {
                let j = remaining[k];
                if iou(&m.region, &dets[j].region) >= min_iou {
                    m.region = union(&m.region, &dets[j].region);
                    m.members.push(j);
                    remaining.remove(k);
                    absorbed = true;
                } else {
                    k += 1;
                }
            }
            if !absorbed {
                break;
            }
        }
        out.push(m);
    }
    'fold: loop {
        for b in 1..out.len() {
            for a in 0..b {
                if iou(&out[a].region, &out[b].region) >= min_iou {
                    let later = out.remove(b);
                    let first = &mut out[a];
                    first.region = union(&first.region, &later.region);
                    first.score = first.score.max(later.score);
                    first.members.extend(later.members);
                    continue 'fold;
                }
            }
        }
        break;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{bbox, covers_point};

    fn det(x0: f64, y0: f64, x1: f64, y1: f64, score: f64) -> Detection {
        Detection::new(bbox(x0, y0, x1, y1), score)
    }

    #[test]
    fn single_detection_is_kept() {
        let d = vec![det(0.0, 0.0, 1.0, 1.0, 0.9)];
        assert_eq!(score_filter_nms(&d, NmsConfig::default()), d);
        let m = cascade_merge(&d, DEFAULT_MERGE_IOU);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].score, m[0].region.clone()), (0.9, d[0].region.clone()));
    }

    #[test]
    fn exact_duplicate_is_suppressed() {
        let d = vec![det(0.0, 0.0, 1.0, 1.0, 0.85), det(0.0, 0.0, 1.0, 1.0, 0.9)];
        assert_eq!(score_filter_nms(&d, NmsConfig::default()), vec![d[1].clone()]);
    }

    #[test]
    fn low_scores_are_filtered() {
        let d = vec![det(0.0, 0.0, 1.0, 1.0, 0.79), det(5.0, 5.0, 6.0, 6.0, 0.8)];
        assert_eq!(score_filter_nms(&d, NmsConfig::default()), vec![d[1].clone()]);
        assert_eq!(score_filter_nms(&d, NmsConfig::overlap_reading()).len(), 2);
    }

    #[test]
    fn disjoint_boxes_stay_apart() {
        let d = vec![det(0.0, 0.0, 1.0, 1.0, 0.9), det(5.0, 5.0, 6.0, 6.0, 0.95)];
        let m = cascade_merge(&d, DEFAULT_MERGE_IOU);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].members, vec![1]);
    }

    #[test]
    fn chains_merge_in_cascade() {
        // A and C are the two halves of B: IoU 0.5 each, A and C disjoint.
        let d = vec![
            det(0.0, 0.0, 1.0, 1.0, 0.9),
            det(0.0, 0.0, 2.0, 1.0, 0.8),
            det(1.0, 0.0, 2.0, 1.0, 0.7),
        ];
        assert_eq!(iou(&d[0].region, &d[1].region), 0.5);
        assert_eq!(iou(&d[1].region, &d[2].region), 0.5);
        assert_eq!(iou(&d[0].region, &d[2].region), 0.0);
        let m = cascade_merge(&d, DEFAULT_MERGE_IOU);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].members, vec![0, 1, 2]);
        assert_eq!(m[0].score, 0.9);
        for x in [0.5, 1.5] {
            assert!(covers_point(&m[0].region, geo::Coord { x, y: 0.5 }));
        }
    }
}
