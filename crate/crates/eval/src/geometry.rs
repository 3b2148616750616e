use geo::{Area, BooleanOps, BoundingRect, Coord, Intersects, MultiPolygon, Rect};

use crate::EvalError;

/// Label of wind-farm detections and ground-truth boxes.
pub const TARGET_LABEL: &str = "owf";

/// Planar region: a box, a polygon or a union of them.
pub type Region = MultiPolygon<f64>;

/// Axis-aligned box from corner coordinates.
pub fn bbox(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Region {
    MultiPolygon::new(vec![Rect::new(Coord { x: xmin, y: ymin }, Coord { x: xmax, y: ymax }).to_polygon()])
}

pub fn region_area(r: &Region) -> f64 {
    r.unsigned_area()
}

fn bounds_overlap(a: &Region, b: &Region) -> bool {
    match (a.bounding_rect(), b.bounding_rect()) {
        (Some(a), Some(b)) => a.min().x < b.max().x && b.min().x < a.max().x && a.min().y < b.max().y && b.min().y < a.max().y,
        _ => false,
    }
}

/// Intersection over union; 0 for disjoint or empty regions.
pub fn iou(a: &Region, b: &Region) -> f64 {
    if !bounds_overlap(a, b) {
        return 0.0;
    }
    let inter = a.intersection(b).unsigned_area();
    let union = a.unsigned_area() + b.unsigned_area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn union(a: &Region, b: &Region) -> Region {
    a.union(b)
}

/// True when `p` lies inside `r` or on its boundary.
pub fn covers_point(r: &Region, p: Coord<f64>) -> bool {
    r.intersects(&geo::Point::from(p))
}

/// A scored detection in a shared planar frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub region: Region,
    pub score: f64,
    pub label: String,
}

impl Detection {
    pub fn new(region: Region, score: f64) -> Self {
        Self {
            region,
            score,
            label: TARGET_LABEL.to_string(),
        }
    }

    pub fn validate(&self, index: usize) -> Result<(), EvalError> {
        let bad = |message: String| EvalError::InvalidDetection { index, message };
        if !(0.0..=1.0).contains(&self.score) {
            return Err(bad(format!("score {} outside [0, 1]", self.score)));
        }
        let area = region_area(&self.region);
        if !(area > 0.0 && area.is_finite()) {
            return Err(bad(format!("degenerate geometry with area {area}")));
        }
        Ok(())
    }
}

/// Indices ordered by descending score; ties keep input order.
pub fn rank_by_score(scores: impl IntoIterator<Item = f64>) -> Vec<usize> {
    let scores: Vec<f64> = scores.into_iter().collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}
