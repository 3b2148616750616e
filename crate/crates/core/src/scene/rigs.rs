use geo::{unary_union, MultiPolygon, Polygon};
use noise::{NoiseFn, OpenSimplex};
use rand::Rng;

use super::topology::violations_of;
use super::{meters_of, sample_into, value_of, Role, SceneComposition, SceneElement, SceneError};
use crate::geometry::{point_in_multipolygon_strict, pt, Point, Rect};
use crate::ontology::{ContextKeys, Ontology};

/// Noise cells per field side.
pub const NOISE_CELLS: usize = 32;
pub const RIG_FIELD_RETRIES: usize = 20;

/// Organic field shapes: the union of noise cells whose 2D gradient-noise
/// value is at least `threshold`.
///
/// The noise is sampled at cell centers with `noise_scale` features across
/// the field and clamped to `[-1, 1]`, so a threshold of `-1` keeps the
/// whole field and one above `1` keeps nothing.
pub fn rig_field_shapes(field: Rect, noise_scale: f64, threshold: f64, noise_seed: u32) -> MultiPolygon<f64> {
    let noise = OpenSimplex::new(noise_seed);
    let n = NOISE_CELLS;
    let edge = |i: usize, lo: f64, span: f64| lo + span * i as f64 / n as f64;
    let mut cells: Vec<Polygon<f64>> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64 * noise_scale;
            let v = (j as f64 + 0.5) / n as f64 * noise_scale;
            if noise.get([u, v]).clamp(-1.0, 1.0) >= threshold {
                cells.push(
                    Rect::new(
                        edge(i, field.min_x, field.width()),
                        edge(j, field.min_y, field.height()),
                        edge(i + 1, field.min_x, field.width()),
                        edge(j + 1, field.min_y, field.height()),
                    )
                    .to_polygon(),
                );
            }
        }
    }
    if cells.is_empty() {
        return MultiPolygon::new(vec![]);
    }
    unary_union(&cells)
}

/// Candidates strictly inside `shapes`, in input order.
pub fn retain_inside(candidates: &[Point], shapes: &MultiPolygon<f64>) -> Vec<Point> {
    candidates
        .iter()
        .copied()
        .filter(|&p| point_in_multipolygon_strict(p, shapes))
        .collect()
}

/// Samples and places one rig field.
///
/// A square field of the sampled diameter is placed uniformly in the
/// extent; rig candidates are drawn uniformly over the field and kept only
/// inside the noise shapes. Empty shapes, zero retained rigs or violated
/// topology trigger a fresh draw; after [`RIG_FIELD_RETRIES`] the caller is
/// asked to resample.
pub fn generate_rig_field(
    o: &Ontology,
    composition: &SceneComposition,
    ctx: &mut ContextKeys,
    rng: &mut impl Rng,
) -> Result<SceneElement, SceneError> {
    let size = composition.extent.scene_size_m;
    let mut elements = composition.elements.clone();
    for _ in 0..RIG_FIELD_RETRIES {
        let field_spec = sample_into(o, "RigField", ctx, rng)?;
        let diameter = meters_of(o, &field_spec, "diameter")?.min(size);
        let ox = rng.random::<f64>() * (size - diameter);
        let oy = rng.random::<f64>() * (size - diameter);
        let field = Rect::new(ox, oy, ox + diameter, oy + diameter);
        let shapes = rig_field_shapes(
            field,
            value_of(&field_spec, "noiseScale")?,
            value_of(&field_spec, "threshold")?,
            rng.random(),
        );
        let count = value_of(&field_spec, "rigCount")?.max(0.0) as usize;
        let candidates: Vec<Point> = (0..count)
            .map(|_| pt(ox + rng.random::<f64>() * diameter, oy + rng.random::<f64>() * diameter))
            .collect();
        if shapes.0.is_empty() {
            continue;
        }
        let rigs = retain_inside(&candidates, &shapes);
        if rigs.is_empty() {
            continue;
        }
        let shape_spec = sample_into(o, "RigFieldShape", ctx, rng)?;
        let rig_spec = sample_into(o, "Rig", ctx, rng)?;
        let element = SceneElement {
            entity: "RigField".into(),
            role: Role::NoneTarget,
            area: shapes,
            points: rigs,
            area_entity: Some("RigFieldShape".into()),
            point_entity: Some("Rig".into()),
            spec: field_spec,
            parts: vec![shape_spec, rig_spec],
        };
        elements.push(element);
        let ok = violations_of(&elements, &composition.relations, Some(elements.len() - 1)).is_empty();
        let element = elements.pop().expect("just pushed");
        if ok {
            return Ok(element);
        }
    }
    Err(SceneError::Resample(format!(
        "no rig retained inside a field after {RIG_FIELD_RETRIES} draws"
    )))
}
