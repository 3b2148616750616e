//! Planar geometry primitives used by the composer.
//!
//! Coordinates are `f64` in whatever frame the caller uses (unit square for
//! layouts, scene meters for compositions). Scene frames put the origin at
//! the top-left corner with `y` growing downwards, matching raster rows.

use geo::{Coord, LineString, MultiPolygon, Polygon};

pub type Point = Coord<f64>;

pub fn pt(x: f64, y: f64) -> Point {
    Coord { x, y }
}

/// Axis-aligned bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut r = Rect::new(first.x, first.y, first.x, first.y);
        for p in it {
            r.min_x = r.min_x.min(p.x);
            r.min_y = r.min_y.min(p.y);
            r.max_x = r.max_x.max(p.x);
            r.max_y = r.max_y.max(p.y);
        }
        Some(r)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.min_x >= self.min_x
            && other.min_y >= self.min_y
            && other.max_x <= self.max_x
            && other.max_y <= self.max_y
    }

    pub fn to_polygon(&self) -> Polygon<f64> {
        polygon_from_ring(&[
            pt(self.min_x, self.min_y),
            pt(self.max_x, self.min_y),
            pt(self.max_x, self.max_y),
            pt(self.min_x, self.max_y),
        ])
    }
}

/// Builds a polygon (no holes) from an open ring of vertices.
pub fn polygon_from_ring(vertices: &[Point]) -> Polygon<f64> {
    let mut ring: Vec<Point> = vertices.to_vec();
    if ring.first() != ring.last() {
        if let Some(&first) = ring.first() {
            ring.push(first);
        }
    }
    Polygon::new(LineString::new(ring), vec![])
}

/// Open vertex list of a closed `LineString`.
pub fn open_ring(ring: &LineString<f64>) -> &[Point] {
    let coords = &ring.0;
    if coords.len() > 1 && coords.first() == coords.last() {
        &coords[..coords.len() - 1]
    } else {
        coords
    }
}

pub fn polygon_bounds(polygon: &Polygon<f64>) -> Option<Rect> {
    Rect::of_points(polygon.exterior().0.iter())
}

pub fn multipolygon_bounds(mp: &MultiPolygon<f64>) -> Option<Rect> {
    Rect::of_points(mp.0.iter().flat_map(|p| p.exterior().0.iter()))
}

/// Signed shoelace area of an open or closed ring (positive for
/// counter-clockwise in a y-up frame).
pub fn signed_ring_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let span = (b.x - a.x).abs().max((b.y - a.y).abs()).max(1.0);
    cross(a, b, p).abs() <= 1e-12 * span * span
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// True when `p` lies on any edge of the ring.
pub fn point_on_ring(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    (0..n).any(|i| on_segment(p, ring[i], ring[(i + 1) % n]))
}

/// Even-odd crossing parity of a horizontal ray from `p` against one ring.
fn crossing_parity(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Strict even-odd containment: points on the boundary are outside.
pub fn point_in_ring_strict(p: Point, ring: &[Point]) -> bool {
    if ring.len() < 3 || point_on_ring(p, ring) {
        return false;
    }
    crossing_parity(p, ring)
}

/// Strict even-odd containment over the exterior and all holes.
pub fn point_in_polygon_strict(p: Point, polygon: &Polygon<f64>) -> bool {
    let rings = std::iter::once(polygon.exterior()).chain(polygon.interiors());
    let mut inside = false;
    for ring in rings {
        let ring = open_ring(ring);
        if ring.len() < 3 {
            continue;
        }
        if point_on_ring(p, ring) {
            return false;
        }
        if crossing_parity(p, ring) {
            inside = !inside;
        }
    }
    inside
}

pub fn point_in_multipolygon_strict(p: Point, mp: &MultiPolygon<f64>) -> bool {
    mp.0.iter().any(|poly| point_in_polygon_strict(p, poly))
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

/// A ring is simple when non-adjacent edges never meet and adjacent edges
/// meet only at their shared vertex.
pub fn ring_is_simple(ring: &[Point]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if ring[i] == ring[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared vertex only: the far endpoint must not lie on the other edge.
                let (shared_far_1, shared_far_2) = if j == i + 1 { (a, d) } else { (b, c) };
                if on_segment(shared_far_1, c, d) || on_segment(shared_far_2, a, b) {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    signed_ring_area(ring).abs() > 0.0
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Smallest pairwise vertex distance, `inf` for fewer than two vertices.
pub fn min_pairwise_distance(points: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.min(distance(points[i], points[j]));
        }
    }
    best
}

/// Applies `f` to every coordinate of a polygon.
pub fn map_polygon(polygon: &Polygon<f64>, f: impl Fn(Point) -> Point) -> Polygon<f64> {
    let map_ring = |ring: &LineString<f64>| LineString::new(ring.0.iter().map(|&c| f(c)).collect());
    Polygon::new(
        map_ring(polygon.exterior()),
        polygon.interiors().iter().map(map_ring).collect(),
    )
}

/// Row-wise even-odd scanline rasterization over all rings of `polygons`.
///
/// Calls `fill(row, col_start, col_end_exclusive)` for every span of pixels
/// whose centers lie inside. `pixel_size` maps pixel indices to frame units.
pub fn scanline_fill(
    polygons: &[Polygon<f64>],
    width: usize,
    height: usize,
    pixel_size: f64,
    mut fill: impl FnMut(usize, usize, usize),
) {
    let mut edges: Vec<(Point, Point)> = Vec::new();
    for poly in polygons {
        for ring in std::iter::once(poly.exterior()).chain(poly.interiors()) {
            let r = open_ring(ring);
            for i in 0..r.len() {
                edges.push((r[i], r[(i + 1) % r.len()]));
            }
        }
    }
    let mut xs: Vec<f64> = Vec::new();
    for row in 0..height {
        let y = (row as f64 + 0.5) * pixel_size;
        xs.clear();
        for &(a, b) in &edges {
            // Same orientation for both users of a shared edge, so adjacent
            // polygons produce bit-identical crossings.
            let (a, b) = if (a.y, a.x) <= (b.y, b.x) { (a, b) } else { (b, a) };
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Centers exactly on the left crossing are included, on the right excluded.
            let start = ((pair[0] / pixel_size) - 0.5).ceil().max(0.0);
            let end = ((pair[1] / pixel_size) - 0.5).ceil().min(width as f64);
            if end > start {
                fill(row, start as usize, end as usize);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)]
    }

    #[test]
    fn strict_containment_excludes_boundary() {
        let sq = square();
        assert!(point_in_ring_strict(pt(0.5, 0.5), &sq));
        assert!(!point_in_ring_strict(pt(1.0, 0.5), &sq));
        assert!(!point_in_ring_strict(pt(0.0, 0.0), &sq));
        assert!(!point_in_ring_strict(pt(1.5, 0.5), &sq));
    }

    #[test]
    fn holes_are_outside() {
        let outer = LineString::from(vec![(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (0.0, 0.0)]);
        let hole = LineString::from(vec![(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0), (1.0, 1.0)]);
        let poly = Polygon::new(outer, vec![hole]);
        assert!(point_in_polygon_strict(pt(0.5, 0.5), &poly));
        assert!(!point_in_polygon_strict(pt(2.0, 2.0), &poly));
        assert!(!point_in_polygon_strict(pt(1.0, 2.0), &poly));
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(1.0, 0.0), pt(0.0, 1.0)];
        assert!(!ring_is_simple(&bowtie));
        assert!(ring_is_simple(&square()));
    }

    #[test]
    fn collinear_spike_is_not_simple() {
        // Edge 2->3 folds back over edge 1->2.
        let ring = vec![pt(0.0, 0.0), pt(2.0, 0.0), pt(2.0, 2.0), pt(2.0, 1.0)];
        assert!(!ring_is_simple(&ring));
    }

    #[test]
    fn shoelace_area_of_unit_square() {
        assert_eq!(signed_ring_area(&square()).abs(), 1.0);
    }

    #[test]
    fn scanline_covers_expected_pixel_count() {
        let poly = Rect::new(0.0, 0.0, 4.0, 3.0).to_polygon();
        let mut count = 0;
        scanline_fill(&[poly], 10, 10, 1.0, |_, a, b| count += b - a);
        assert_eq!(count, 12);
    }
}
