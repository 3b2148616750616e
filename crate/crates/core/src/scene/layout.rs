//! Unit-square wind-farm layouts: turbine grids, systematic deformations and
//! random boundary polygons.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use geo::Polygon;
use rand::Rng;

use super::{key_of, value_of, SceneError};
use crate::geometry::{min_pairwise_distance, point_in_ring_strict, polygon_from_ring, pt, ring_is_simple, Point};
use crate::ontology::SceneElementSpecification;

pub const BOUNDARY_RETRIES: usize = 1000;

/// One systematic transform applied to every grid point alike.
#[derive(Debug, Clone, PartialEq)]
pub enum Deformation {
    Identity,
    /// Rotation about the square's center.
    Rotation { angle_deg: f64 },
    /// `x' = x + factor * y`.
    Shear { factor: f64 },
    /// Axis warp: `x' = x + a sin(2 pi f y + phase)`, `y' = y + a sin(2 pi f x + phase)`.
    Sinusoidal { amplitude: f64, frequency: f64, phase: f64 },
    /// `p' = p / (1 + px x + py y)`.
    Projective { px: f64, py: f64 },
}

impl Deformation {
    pub fn name(&self) -> &'static str {
        match self {
            Deformation::Identity => "identity",
            Deformation::Rotation { .. } => "rotation",
            Deformation::Shear { .. } => "shear",
            Deformation::Sinusoidal { .. } => "sinusoidal",
            Deformation::Projective { .. } => "projective",
        }
    }

    /// Reads the deformation family and its parameters from a
    /// `WindfarmLayout` specification.
    pub fn from_spec(spec: &SceneElementSpecification) -> Result<Self, SceneError> {
        Ok(match key_of(spec, "deformation")? {
            "rotation" => Deformation::Rotation {
                angle_deg: value_of(spec, "rotationAngle")?,
            },
            "shear" => Deformation::Shear {
                factor: value_of(spec, "shearFactor")?,
            },
            "sinusoidal" => Deformation::Sinusoidal {
                amplitude: value_of(spec, "warpAmplitude")?,
                frequency: value_of(spec, "warpFrequency")?,
                phase: value_of(spec, "warpPhase")?,
            },
            "projective" => Deformation::Projective {
                px: value_of(spec, "projectiveX")?,
                py: value_of(spec, "projectiveY")?,
            },
            _ => Deformation::Identity,
        })
    }

    /// The raw transform, before re-normalization into the unit square.
    pub fn transform(&self, p: Point) -> Point {
        match *self {
            Deformation::Identity => p,
            Deformation::Rotation { angle_deg } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                let (dx, dy) = (p.x - 0.5, p.y - 0.5);
                pt(0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy)
            }
            Deformation::Shear { factor } => pt(p.x + factor * p.y, p.y),
            Deformation::Sinusoidal {
                amplitude,
                frequency,
                phase,
            } => {
                let w = 2.0 * PI * frequency;
                pt(
                    p.x + amplitude * (w * p.y + phase).sin(),
                    p.y + amplitude * (w * p.x + phase).sin(),
                )
            }
            Deformation::Projective { px, py } => {
                let d = 1.0 + px * p.x + py * p.y;
                pt(p.x / d, p.y / d)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub nx: usize,
    pub ny: usize,
    /// Row-major candidate turbine locations in the unit square.
    pub points: Vec<Point>,
    pub deformation: Deformation,
}

/// Regular orthogonal grid of `nx` by `ny` lines spanning the unit square.
pub fn regular_grid(nx: usize, ny: usize) -> GridLayout {
    assert!(nx >= 2 && ny >= 2, "a grid needs at least two lines per axis");
    let mut points = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            points.push(pt(i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64));
        }
    }
    GridLayout {
        nx,
        ny,
        points,
        deformation: Deformation::Identity,
    }
}

/// Draws the line counts from the inclusive bounds, then builds the grid.
pub fn generate_grid_layout(x: RangeInclusive<usize>, y: RangeInclusive<usize>, rng: &mut impl Rng) -> GridLayout {
    let nx = rng.random_range(x);
    let ny = rng.random_range(y);
    regular_grid(nx, ny)
}

/// Shifts and uniformly scales points so their bounding box starts at the
/// origin and its longer side spans `[0, 1]`.
fn normalize_unit(points: &mut [Point]) {
    let Some(b) = crate::geometry::Rect::of_points(points.iter()) else {
        return;
    };
    let scale = b.width().max(b.height());
    if scale <= 0.0 {
        return;
    }
    for p in points.iter_mut() {
        p.x = ((p.x - b.min_x) / scale).clamp(0.0, 1.0);
        p.y = ((p.y - b.min_y) / scale).clamp(0.0, 1.0);
    }
}

pub fn apply_deformation(g: &GridLayout, d: &Deformation) -> GridLayout {
    let mut points: Vec<Point> = g.points.iter().map(|&p| d.transform(p)).collect();
    if *d != Deformation::Identity {
        normalize_unit(&mut points);
    }
    GridLayout {
        nx: g.nx,
        ny: g.ny,
        points,
        deformation: d.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPolygon {
    /// Open ring in the unit square.
    pub vertices: Vec<Point>,
    pub min_vertex_distance: f64,
}

impl BoundaryPolygon {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// The polygon mapped by `f`, e.g. into scene meters.
    pub fn to_polygon(&self, f: impl Fn(Point) -> Point) -> Polygon<f64> {
        let mapped: Vec<Point> = self.vertices.iter().map(|&p| f(p)).collect();
        polygon_from_ring(&mapped)
    }
}

/// Random simple polygon around the square's center.
///
/// Angles are stratified with jitter, radii uniform in `[0.25, 0.5]`; draws
/// are rejected until the ring is simple and all vertex pairs are at least
/// `min_vertex_distance` apart.
pub fn generate_boundary_polygon(
    n_vertices: usize,
    min_vertex_distance: f64,
    rng: &mut impl Rng,
) -> Result<BoundaryPolygon, SceneError> {
    let infeasible = |attempts| SceneError::BoundaryInfeasible {
        n: n_vertices,
        min_distance: min_vertex_distance,
        attempts,
    };
    // A regular n-gon of radius 0.5 has the largest achievable spacing.
    if n_vertices < 3 || min_vertex_distance > (PI / n_vertices as f64).sin() {
        return Err(infeasible(0));
    }
    let step = 2.0 * PI / n_vertices as f64;
    for _ in 0..BOUNDARY_RETRIES {
        let start: f64 = rng.random::<f64>() * 2.0 * PI;
        let vertices: Vec<Point> = (0..n_vertices)
            .map(|i| {
                let theta = start + (i as f64 + 0.1 + 0.8 * rng.random::<f64>()) * step;
                let r = 0.25 + 0.25 * rng.random::<f64>();
                pt(0.5 + r * theta.cos(), 0.5 + r * theta.sin())
            })
            .collect();
        if min_pairwise_distance(&vertices) >= min_vertex_distance && ring_is_simple(&vertices) {
            return Ok(BoundaryPolygon {
                vertices,
                min_vertex_distance,
            });
        }
    }
    Err(infeasible(BOUNDARY_RETRIES))
}

/// Grid points strictly inside the boundary, in grid order. An empty result
/// means the caller has to resample.
pub fn clip_layout(g: &GridLayout, b: &BoundaryPolygon) -> Vec<Point> {
    g.points
        .iter()
        .copied()
        .filter(|&p| point_in_ring_strict(p, &b.vertices))
        .collect()
}
