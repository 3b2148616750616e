//! Brute-force reference implementations over integer boxes on a 64 x 64
//! unit-cell grid. Areas are exact cell counts.

#![allow(dead_code)]

use rand::Rng;

pub const GRID: usize = 64;

/// Integer box `[x0, x1) x [y0, y1)` in cell units.
pub type IBox = (usize, usize, usize, usize);

/// One bit per unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cells([u64; GRID]);

impl Cells {
    pub fn of(b: IBox) -> Self {
        let mut rows = [0u64; GRID];
        let mask = if b.2 - b.0 == 64 { u64::MAX } else { ((1u64 << (b.2 - b.0)) - 1) << b.0 };
        for row in rows.iter_mut().take(b.3).skip(b.1) {
            *row = mask;
        }
        Cells(rows)
    }

    pub fn count(&self) -> u32 {
        self.0.iter().map(|r| r.count_ones()).sum()
    }

    pub fn and(&self, o: &Cells) -> Cells {
        Cells(std::array::from_fn(|i| self.0[i] & o.0[i]))
    }

    pub fn or(&self, o: &Cells) -> Cells {
        Cells(std::array::from_fn(|i| self.0[i] | o.0[i]))
    }

    pub fn has(&self, x: usize, y: usize) -> bool {
        self.0[y] >> x & 1 == 1
    }
}

pub fn iou(a: &Cells, b: &Cells) -> f64 {
    let u = a.or(b).count();
    if u == 0 {
        0.0
    } else {
        a.and(b).count() as f64 / u as f64
    }
}

fn rank(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Insertion by hand: higher score first, lower index first on ties.
    let before = |a: usize, b: usize| scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    for i in 1..order.len() {
        let mut j = i;
        while j > 0 && before(order[j], order[j - 1]) {
            order.swap(j, j - 1);
            j -= 1;
        }
    }
    order
}

/// Kept indices in rank order: the unique subset `S` of candidates such that
/// a candidate is in `S` exactly when it overlaps no higher-ranked member of
/// `S` at `overlap` or more. Found by enumerating all subsets.
pub fn nms(boxes: &[IBox], scores: &[f64], score_threshold: f64, overlap: f64) -> Vec<usize> {
    let cells: Vec<Cells> = boxes.iter().map(|&b| Cells::of(b)).collect();
    let order = rank(scores);
    let pos = |i: usize| order.iter().position(|&o| o == i).unwrap();
    let cand: Vec<usize> = (0..boxes.len()).filter(|&i| scores[i] >= score_threshold).collect();
    let mut found = Vec::new();
    for mask in 0u32..(1 << cand.len()) {
        let set: Vec<usize> = (0..cand.len()).filter(|b| mask >> b & 1 == 1).map(|b| cand[b]).collect();
        let consistent = cand.iter().all(|&d| {
            let free = set.iter().all(|&k| pos(k) >= pos(d) || iou(&cells[k], &cells[d]) < overlap);
            set.contains(&d) == free
        });
        if consistent {
            found.push(set);
        }
    }
    assert_eq!(found.len(), 1, "greedy suppression has a unique fixed point");
    let mut kept = found.pop().unwrap();
    kept.sort_by_key(|&i| pos(i));
    kept
}

#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub cells: Cells,
    pub score: f64,
    pub members: Vec<usize>,
}

/// Cascading merge on cell sets: seeds in rank order, score-ordered scans
/// that absorb at `min_iou` until a scan absorbs nothing, then folding of
/// output pairs still at `min_iou`.
pub fn cascade(boxes: &[IBox], scores: &[f64], min_iou: f64) -> Vec<Merged> {
    let cells: Vec<Cells> = boxes.iter().map(|&b| Cells::of(b)).collect();
    let mut left = rank(scores);
    let mut out: Vec<Merged> = Vec::new();
    while !left.is_empty() {
        let seed = left.remove(0);
        let mut m = Merged {
            cells: cells[seed],
            score: scores[seed],
            members: vec![seed],
        };
        let mut changed = true;
        while changed {
            changed = false;
            let mut keep = Vec::new();
            for &j in &left {
                if iou(&m.cells, &cells[j]) >= min_iou {
                    m.cells = m.cells.or(&cells[j]);
                    m.members.push(j);
                    changed = true;
                } else {
                    keep.push(j);
                }
            }
            left = keep;
        }
        out.push(m);
    }
    loop {
        let pair = (1..out.len()).flat_map(|b| (0..b).map(move |a| (a, b))).find(|&(a, b)| iou(&out[a].cells, &out[b].cells) >= min_iou);
        let Some((a, b)) = pair else { break };
        let later = out.remove(b);
        out[a].cells = out[a].cells.or(&later.cells);
        out[a].score = out[a].score.max(later.score);
        out[a].members.extend(later.members);
    }
    out
}

/// Greedy matching on cell sets: `(tp, fp, fn, matched gt per prediction)`.
pub fn matching(preds: &[IBox], scores: &[f64], gt: &[IBox], tau: f64) -> (usize, usize, usize, Vec<Option<usize>>) {
    let pc: Vec<Cells> = preds.iter().map(|&b| Cells::of(b)).collect();
    let gc: Vec<Cells> = gt.iter().map(|&b| Cells::of(b)).collect();
    let mut taken = vec![false; gt.len()];
    let mut matched = vec![None; preds.len()];
    for i in rank(scores) {
        let best = (0..gt.len())
            .filter(|&g| !taken[g])
            .map(|g| (g, iou(&pc[i], &gc[g])))
            .fold(None, |acc: Option<(usize, f64)>, (g, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((g, v)),
            });
        if let Some((g, v)) = best {
            if v >= tau {
                taken[g] = true;
                matched[i] = Some(g);
            }
        }
    }
    let tp = matched.iter().flatten().count();
    (tp, preds.len() - tp, gt.len() - tp, matched)
}

/// AP straight from the definition: interpolated precision at rank `k` is
/// the maximum precision over all ranks whose recall is at least `Rc(k)`.
pub fn ap(ranked: &[bool], n_gt: usize) -> f64 {
    let tps: Vec<usize> = ranked.iter().scan(0, |t, &h| {
        *t += h as usize;
        Some(*t)
    }).collect();
    let mut sum = 0.0;
    for k in 0..ranked.len() {
        let prev = if k == 0 { 0 } else { tps[k - 1] };
        if tps[k] == prev {
            continue;
        }
        let interp = (0..ranked.len())
            .filter(|&j| tps[j] >= tps[k])
            .map(|j| tps[j] as f64 / (j + 1) as f64)
            .fold(0.0, f64::max);
        sum += interp * (tps[k] - prev) as f64;
    }
    sum / n_gt as f64
}

pub fn random_box(rng: &mut impl Rng, max: usize) -> IBox {
    let x0 = rng.random_range(0..max - 1);
    let y0 = rng.random_range(0..max - 1);
    let w = rng.random_range(1..=(max - x0).min(16));
    let h = rng.random_range(1..=(max - y0).min(16));
    (x0, y0, x0 + w, y0 + h)
}

/// Scores on a 0.05 grid in `[0.5, 1]`, so ties occur.
pub fn random_score(rng: &mut impl Rng) -> f64 {
    (rng.random_range(10..=20) as f64) * 0.05
}
