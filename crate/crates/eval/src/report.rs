use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use geo::{Coord, LineString, MultiPolygon, Polygon};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::geometry::{covers_point, Detection, Region, TARGET_LABEL};
use crate::metrics::{average_precision, match_and_count, precision_recall_f1, turbine_recall};
use crate::post::{cascade_merge, score_filter_nms, MergedDetection, NmsConfig, DEFAULT_MERGE_IOU};
use crate::EvalError;

/// IoU at which a merged prediction matches a ground-truth box.
pub const DEFAULT_MATCH_IOU: f64 = 0.33;

/// Site assigned to features without a `site` property.
pub const DEFAULT_SITE: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub score_threshold: f64,
    pub nms_iou: f64,
    pub merge_iou: f64,
    pub match_iou: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let nms = NmsConfig::default();
        Self {
            score_threshold: nms.score_threshold,
            nms_iou: nms.overlap_threshold,
            merge_iou: DEFAULT_MERGE_IOU,
            match_iou: DEFAULT_MATCH_IOU,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteDetection {
    pub site: String,
    pub detection: Detection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub frame: String,
    pub detections: Vec<SiteDetection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthFarm {
    pub site: String,
    pub region: Region,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub frame: String,
    /// Declared sites, reported even without features.
    pub sites: Vec<String>,
    pub farms: Vec<GroundTruthFarm>,
    pub turbines: Vec<(String, Coord<f64>)>,
}

impl GroundTruth {
    /// Turbines not covered by exactly one farm of their site.
    pub fn flagged_turbines(&self) -> Vec<usize> {
        self.turbines
            .iter()
            .enumerate()
            .filter(|(_, (site, p))| self.farms.iter().filter(|f| &f.site == site && covers_point(&f.region, *p)).count() != 1)
            .map(|(i, _)| i)
            .collect()
    }
}

/// One report line; rates are `None` where they are undefined, which the
/// text table renders blank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub site: String,
    pub gt: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub ap: Option<f64>,
    pub gt_wt: usize,
    pub tp_wt: usize,
    pub recall_wt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frame: String,
    pub config: EvalConfig,
    pub combined: MetricsRow,
    pub sites: Vec<MetricsRow>,
    pub flagged_turbines: usize,
}

fn bad(msg: impl Into<String>) -> EvalError {
    EvalError::GeoJson(msg.into())
}

fn ring(v: &Value) -> Result<LineString<f64>, EvalError> {
    let pts = v.as_array().ok_or_else(|| bad("ring is not an array"))?;
    pts.iter()
        .map(|p| match p.as_array().map(|c| (c.first().and_then(Value::as_f64), c.get(1).and_then(Value::as_f64))) {
            Some((Some(x), Some(y))) => Ok(Coord { x, y }),
            _ => Err(bad("bad coordinate")),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(LineString::new)
}

fn polygon(v: &Value) -> Result<Polygon<f64>, EvalError> {
    let rings = v.as_array().filter(|r| !r.is_empty()).ok_or_else(|| bad("polygon without rings"))?;
    let exterior = ring(&rings[0])?;
    let interiors = rings[1..].iter().map(ring).collect::<Result<Vec<_>, _>>()?;
    Ok(Polygon::new(exterior, interiors))
}

enum Geom {
    Area(Region),
    Point(Coord<f64>),
}

fn geometry(v: &Value) -> Result<Geom, EvalError> {
    let coords = v.get("coordinates").ok_or_else(|| bad("geometry without coordinates"))?;
    match v.get("type").and_then(Value::as_str) {
        Some("Polygon") => Ok(Geom::Area(MultiPolygon::new(vec![polygon(coords)?]))),
        Some("MultiPolygon") => {
            let polys = coords.as_array().ok_or_else(|| bad("MultiPolygon coordinates"))?;
            Ok(Geom::Area(MultiPolygon::new(polys.iter().map(polygon).collect::<Result<_, _>>()?)))
        }
        Some("Point") => match coords.as_array().map(|c| (c.first().and_then(Value::as_f64), c.get(1).and_then(Value::as_f64))) {
            Some((Some(x), Some(y))) => Ok(Geom::Point(Coord { x, y })),
            _ => Err(bad("bad point")),
        },
        other => Err(bad(format!("unsupported geometry type {other:?}"))),
    }
}

fn collection<'a>(doc: &'a Value, what: &'static str) -> Result<(Option<String>, &'a Vec<Value>), EvalError> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(bad(format!("{what} is not a FeatureCollection")));
    }
    let frame = doc.get("frame").and_then(Value::as_str).map(str::to_string);
    let features = doc.get("features").and_then(Value::as_array).ok_or_else(|| bad("missing features"))?;
    Ok((frame, features))
}

fn prop<'a>(f: &'a Value, name: &str) -> Option<&'a Value> {
    f.get("properties").and_then(|p| p.get(name))
}

fn site_of(f: &Value) -> String {
    prop(f, "site").and_then(Value::as_str).unwrap_or(DEFAULT_SITE).to_string()
}

fn label_of(f: &Value) -> String {
    prop(f, "label").and_then(Value::as_str).unwrap_or(TARGET_LABEL).to_string()
}

impl Predictions {
    /// Polygon or box features with a `score` property and optional `site`
    /// and `label`.
    pub fn from_geojson(doc: &Value) -> Result<Self, EvalError> {
        let (frame, features) = collection(doc, "predictions")?;
        let frame = frame.ok_or(EvalError::MissingFrame("predictions"))?;
        let mut detections = Vec::new();
        for (i, f) in features.iter().enumerate() {
            let region = match geometry(f.get("geometry").unwrap_or(&Value::Null))? {
                Geom::Area(r) => r,
                Geom::Point(_) => return Err(bad(format!("prediction {i} is a point"))),
            };
            let score = prop(f, "score").and_then(Value::as_f64).ok_or_else(|| bad(format!("prediction {i} has no score")))?;
            let detection = Detection {
                region,
                score,
                label: label_of(f),
            };
            detection.validate(i)?;
            detections.push(SiteDetection { site: site_of(f), detection });
        }
        Ok(Self { frame, detections })
    }
}

impl GroundTruth {
    /// Polygon features are farms and point features turbines; an optional
    /// top-level `sites` array lists sites in report order.
    pub fn from_geojson(doc: &Value) -> Result<Self, EvalError> {
        let (frame, features) = collection(doc, "ground truth")?;
        let frame = frame.ok_or(EvalError::MissingFrame("ground truth"))?;
        let sites = match doc.get("sites") {
            None => Vec::new(),
            Some(v) => v
                .as_array()
                .and_then(|a| a.iter().map(|s| s.as_str().map(str::to_string)).collect::<Option<Vec<_>>>())
                .ok_or_else(|| bad("sites must be an array of strings"))?,
        };
        let mut gt = GroundTruth {
            frame,
            sites,
            farms: Vec::new(),
            turbines: Vec::new(),
        };
        for f in features {
            match geometry(f.get("geometry").unwrap_or(&Value::Null))? {
                Geom::Area(region) => gt.farms.push(GroundTruthFarm {
                    site: site_of(f),
                    region,
                    label: label_of(f),
                }),
                Geom::Point(p) => gt.turbines.push((site_of(f), p)),
            }
        }
        Ok(gt)
    }
}

fn read_json(path: &Path) -> Result<Value, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}

/// Site names in report order: declared sites first, then the rest sorted.
fn site_order(p: &Predictions, g: &GroundTruth) -> Vec<String> {
    let mut out = g.sites.clone();
    let rest: BTreeSet<&String> = p
        .detections
        .iter()
        .map(|d| &d.site)
        .chain(g.farms.iter().map(|f| &f.site))
        .chain(g.turbines.iter().map(|t| &t.0))
        .collect();
    for s in rest {
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    out
}

/// Per-site intermediate results.
struct SiteResult {
    merged: Vec<MergedDetection>,
    ranked: Vec<(f64, bool)>,
    row: MetricsRow,
}

fn rates(site: &str, gt: usize, tp: usize, fp: usize, fn_: usize, ap: Option<f64>, gt_wt: usize, tp_wt: usize) -> MetricsRow {
    let prf = precision_recall_f1(tp, fp, fn_);
    let defined = gt > 0;
    MetricsRow {
        site: site.to_string(),
        gt,
        tp,
        fp,
        fn_,
        recall: defined.then_some(prf.recall),
        precision: defined.then_some(prf.precision),
        f1: defined.then_some(prf.f1),
        ap: if defined { ap } else { None },
        gt_wt,
        tp_wt,
        recall_wt: (gt_wt > 0).then(|| tp_wt as f64 / gt_wt as f64),
    }
}

fn evaluate_site(site: &str, p: &Predictions, g: &GroundTruth, cfg: &EvalConfig) -> SiteResult {
    let dets: Vec<Detection> = p.detections.iter().filter(|d| d.site == site).map(|d| d.detection.clone()).collect();
    let nms = NmsConfig {
        score_threshold: cfg.score_threshold,
        overlap_threshold: cfg.nms_iou,
    };
    let merged = cascade_merge(&score_filter_nms(&dets, nms), cfg.merge_iou);
    let farms: Vec<(&Region, &str)> = g.farms.iter().filter(|f| f.site == site).map(|f| (&f.region, f.label.as_str())).collect();
    let preds: Vec<(&Region, f64, &str)> = merged.iter().map(|m| (&m.region, m.score, m.label.as_str())).collect();
    let m = match_and_count(&preds, &farms, cfg.match_iou);
    let ranked: Vec<(f64, bool)> = m.ranking.iter().map(|&i| (merged[i].score, m.matched[i].is_some())).collect();
    let labels: Vec<bool> = ranked.iter().map(|r| r.1).collect();
    let turbines: Vec<Coord<f64>> = g.turbines.iter().filter(|t| t.0 == site).map(|t| t.1).collect();
    let regions: Vec<&Region> = merged.iter().map(|m| &m.region).collect();
    let wt = turbine_recall(&regions, &turbines);
    let row = rates(site, farms.len(), m.tp, m.fp, m.fn_, average_precision(&labels, farms.len()).ok(), wt.gt, wt.tp);
    SiteResult { merged, ranked, row }
}

/// Runs score filter, NMS, cascade merge and matching per site and
/// aggregates a combined row. Combined counts are sums over sites; combined
/// AP ranks the merged predictions of all sites together.
pub fn evaluate(p: &Predictions, g: &GroundTruth, cfg: &EvalConfig) -> Result<(MetricsReport, Vec<(String, MergedDetection)>), EvalError> {
    if p.frame != g.frame {
        return Err(EvalError::FrameMismatch {
            predictions: p.frame.clone(),
            ground_truth: g.frame.clone(),
        });
    }
    let results: Vec<SiteResult> = site_order(p, g).iter().map(|s| evaluate_site(s, p, g, cfg)).collect();
    let sum = |f: fn(&MetricsRow) -> usize| results.iter().map(|r| f(&r.row)).sum::<usize>();
    let mut pooled: Vec<(f64, bool)> = results.iter().flat_map(|r| r.ranked.iter().copied()).collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let labels: Vec<bool> = pooled.iter().map(|r| r.1).collect();
    let gt = sum(|r| r.gt);
    let combined = rates(
        "Combined",
        gt,
        sum(|r| r.tp),
        sum(|r| r.fp),
        sum(|r| r.fn_),
        average_precision(&labels, gt).ok(),
        sum(|r| r.gt_wt),
        sum(|r| r.tp_wt),
    );
    let merged = results
        .iter()
        .flat_map(|r| r.merged.iter().map(|m| (r.row.site.clone(), m.clone())))
        .collect();
    let report = MetricsReport {
        frame: p.frame.clone(),
        config: *cfg,
        combined,
        sites: results.into_iter().map(|r| r.row).collect(),
        flagged_turbines: g.flagged_turbines().len(),
    };
    Ok((report, merged))
}

pub fn evaluate_files(
    predictions: &Path,
    ground_truth: &Path,
    cfg: &EvalConfig,
) -> Result<(MetricsReport, Vec<(String, MergedDetection)>), EvalError> {
    let p = Predictions::from_geojson(&read_json(predictions)?)?;
    let g = GroundTruth::from_geojson(&read_json(ground_truth)?)?;
    evaluate(&p, &g, cfg)
}

fn coords(r: &Region) -> Value {
    let ring = |ls: &LineString<f64>| Value::Array(ls.0.iter().map(|c| json!([c.x, c.y])).collect());
    Value::Array(
        r.0.iter()
            .map(|p| Value::Array(std::iter::once(p.exterior()).chain(p.interiors()).map(ring).collect()))
            .collect(),
    )
}

/// Merged predictions as a FeatureCollection in `frame`.
pub fn merged_to_geojson(frame: &str, merged: &[(String, MergedDetection)]) -> Value {
    let features: Vec<Value> = merged
        .iter()
        .map(|(site, m)| {
            json!({
                "type": "Feature",
                "geometry": {"type": "MultiPolygon", "coordinates": coords(&m.region)},
                "properties": {"site": site, "score": m.score, "label": m.label, "members": m.members.len()},
            })
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("type".into(), json!("FeatureCollection"));
    doc.insert("frame".into(), json!(frame));
    doc.insert("features".into(), Value::Array(features));
    Value::Object(doc)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

impl MetricsReport {
    /// Aligned text table with columns GT, TP, FP, FN, Rc, Pr, F1, AP,
    /// GT_WT, TP_WT and Rc_WT.
    pub fn to_table(&self) -> String {
        let header = ["", "GT", "TP", "FP", "FN", "Rc", "Pr", "F1", "AP", "GT_WT", "TP_WT", "Rc_WT"];
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in std::iter::once(&self.combined).chain(&self.sites) {
            let count = |n: usize| if r.gt > 0 { n.to_string() } else { String::new() };
            let wt = |n: usize| if r.gt_wt > 0 { n.to_string() } else { String::new() };
            rows.push(vec![
                r.site.clone(),
                r.gt.to_string(),
                count(r.tp),
                r.fp.to_string(),
                count(r.fn_),
                cell(r.recall),
                cell(r.precision),
                cell(r.f1),
                cell(r.ap),
                wt(r.gt_wt),
                wt(r.tp_wt),
                cell(r.recall_wt),
            ]);
        }
        let widths: Vec<usize> = (0..header.len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for r in &rows {
            let mut line = format!("{:<w$}", r[0], w = widths[0]);
            for (c, v) in r.iter().enumerate().skip(1) {
                write!(line, "  {v:>w$}", w = widths[c]).expect("write to string");
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}
