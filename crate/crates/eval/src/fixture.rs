//! Synthetic prediction and ground-truth files with prescribed counts.

use serde_json::{json, Value};

/// Counts one site's fixture must reproduce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteCounts {
    pub site: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub gt_wt: usize,
    pub tp_wt: usize,
}

impl SiteCounts {
    pub fn new(site: &str, tp: usize, fp: usize, fn_: usize, gt_wt: usize, tp_wt: usize) -> Self {
        Self {
            site: site.to_string(),
            tp,
            fp,
            fn_,
            gt_wt,
            tp_wt,
        }
    }
}

const FARM: f64 = 100.0;
const PITCH: f64 = 300.0;
const SITE_ROW: f64 = 10_000.0;
/// Matched predictions cover the left part of their farm.
const COVERED: f64 = 0.6;
pub const TP_SCORE: f64 = 0.95;
pub const FP_SCORE: f64 = 0.85;

fn square(x0: f64, y0: f64, w: f64, h: f64, props: Value) -> Value {
    json!({"type": "Feature", "properties": props, "geometry": {"type": "Polygon",
        "coordinates": [[[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h], [x0, y0]]]}})
}

/// `n` points strictly inside `[x0, x0 + w] x [y0, y0 + h]`.
fn spread(n: usize, x0: f64, y0: f64, w: f64, h: f64) -> Vec<(f64, f64)> {
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols).max(1);
    (0..n)
        .map(|i| {
            let (c, r) = (i % cols, i / cols);
            (x0 + w * (c as f64 + 0.5) / cols as f64, y0 + h * (r as f64 + 0.5) / rows as f64)
        })
        .collect()
}

/// Splits `total` as evenly as possible over `parts` slots.
fn share(total: usize, parts: usize, i: usize) -> usize {
    total / parts + usize::from(i < total % parts)
}

/// Prediction and ground-truth FeatureCollections in `frame` that evaluate
/// to the given counts with the default configuration.
///
/// Sites occupy separate rows. Matched predictions are boxes over the left
/// 60 % of their farm at score 0.95; false positives are isolated boxes at
/// 0.85, so every site's true positives rank first. Missed turbines sit in
/// missed farms, or in the uncovered strip of matched farms when none are
/// missed. Panics when the counts cannot be realised.
pub fn table_fixture(sites: &[SiteCounts], frame: &str) -> (Value, Value) {
    let mut preds = Vec::new();
    let mut gt = Vec::new();
    for (s, c) in sites.iter().enumerate() {
        assert!(c.tp_wt <= c.gt_wt, "{}: more turbine hits than turbines", c.site);
        let missed = c.gt_wt - c.tp_wt;
        assert!(c.tp_wt == 0 || c.tp > 0, "{}: turbine hits need matched farms", c.site);
        assert!(missed == 0 || c.tp + c.fn_ > 0, "{}: missed turbines need farms", c.site);
        let y = s as f64 * SITE_ROW;
        let props = json!({"site": c.site});
        for i in 0..c.tp + c.fn_ {
            let x = i as f64 * PITCH;
            gt.push(square(x, y, FARM, FARM, props.clone()));
            if i < c.tp {
                preds.push(square(x, y, FARM * COVERED, FARM, json!({"site": c.site, "score": TP_SCORE})));
            }
        }
        for i in 0..c.fp {
            preds.push(square(i as f64 * PITCH, y + SITE_ROW / 2.0, FARM, FARM, json!({"site": c.site, "score": FP_SCORE})));
        }
        let mut points = Vec::new();
        for i in 0..c.tp {
            let x = i as f64 * PITCH;
            points.extend(spread(share(c.tp_wt, c.tp, i), x, y, FARM * COVERED, FARM));
            if c.fn_ == 0 {
                points.extend(spread(share(missed, c.tp, i), x + FARM * COVERED, y, FARM * (1.0 - COVERED), FARM));
            }
        }
        for i in 0..c.fn_ {
            let x = (c.tp + i) as f64 * PITCH;
            points.extend(spread(share(missed, c.fn_, i), x, y, FARM, FARM));
        }
        gt.extend(points.into_iter().map(|(px, py)| {
            json!({"type": "Feature", "properties": {"site": c.site}, "geometry": {"type": "Point", "coordinates": [px, py]}})
        }));
    }
    let site_names: Vec<&str> = sites.iter().map(|c| c.site.as_str()).collect();
    (
        json!({"type": "FeatureCollection", "frame": frame, "features": preds}),
        json!({"type": "FeatureCollection", "frame": frame, "sites": site_names, "features": gt}),
    )
}
