use geo::MultiPolygon;
use rand::Rng;

use super::layout::{apply_deformation, clip_layout, generate_boundary_polygon, regular_grid, Deformation};
use super::topology::violations_of;
use super::{meters_of, sample_into, value_of, Role, SceneComposition, SceneElement, SceneError};
use crate::geometry::pt;
use crate::ontology::{CharacteristicRef, ContextKeys, Ontology};

/// Farm offsets tried per layout before giving up.
pub const PLACEMENT_ATTEMPTS: usize = 500;
/// Layout/boundary draws allowed to clip away every grid point.
const LAYOUT_ATTEMPTS: usize = 50;

/// Samples, lays out and places one wind farm into `composition`.
///
/// The farm occupies a square of the sampled size; its boundary polygon and
/// the turbines inside it are scaled into that square and placed by
/// rejection sampling until every topology relation involving the farm
/// holds. Without a forced size, the presence of land forces `small`.
pub fn generate_windfarm(
    o: &Ontology,
    composition: &SceneComposition,
    ctx: &mut ContextKeys,
    rng: &mut impl Rng,
) -> Result<SceneElement, SceneError> {
    let size_ref = CharacteristicRef::new("WindFarm", "size");
    if !ctx.contains_key(&size_ref) && composition.element("Land").is_some() {
        ctx.insert(size_ref, "small".to_string());
    }
    let farm = sample_into(o, "WindFarm", ctx, rng)?;
    let size = meters_of(o, &farm, "size")?;
    let room = composition.extent.scene_size_m - size;
    if room < 0.0 {
        return Err(SceneError::Placement {
            entity: "WindFarm".into(),
            attempts: 0,
        });
    }

    for _ in 0..LAYOUT_ATTEMPTS {
        let layout = sample_into(o, "WindfarmLayout", ctx, rng)?;
        let nx = value_of(&layout, "gridX")?.max(2.0) as usize;
        let ny = value_of(&layout, "gridY")?.max(2.0) as usize;
        let grid = apply_deformation(&regular_grid(nx, ny), &Deformation::from_spec(&layout)?);

        let boundary_spec = sample_into(o, "WindfarmBoundary", ctx, rng)?;
        let boundary = generate_boundary_polygon(
            value_of(&boundary_spec, "vertices")? as usize,
            value_of(&boundary_spec, "minVertexDistance")?,
            rng,
        )?;
        let turbines = clip_layout(&grid, &boundary);
        if turbines.is_empty() {
            continue;
        }
        let turbine = sample_into(o, "WindTurbine", ctx, rng)?;

        let mut candidate = SceneElement {
            entity: "WindFarm".into(),
            role: Role::Target,
            area: MultiPolygon::new(vec![]),
            points: Vec::new(),
            area_entity: Some("WindfarmBoundary".into()),
            point_entity: Some("WindTurbine".into()),
            spec: farm.clone(),
            parts: vec![layout, boundary_spec, turbine],
        };
        let mut elements = composition.elements.clone();
        for _ in 0..PLACEMENT_ATTEMPTS {
            let ox = rng.random::<f64>() * room;
            let oy = rng.random::<f64>() * room;
            let to_scene = |p: crate::geometry::Point| pt(ox + p.x * size, oy + p.y * size);
            candidate.area = MultiPolygon::new(vec![boundary.to_polygon(to_scene)]);
            candidate.points = turbines.iter().map(|&p| to_scene(p)).collect();
            elements.push(candidate.clone());
            let ok = violations_of(&elements, &composition.relations, Some(elements.len() - 1)).is_empty();
            elements.pop();
            if ok {
                return Ok(candidate);
            }
        }
        return Err(SceneError::Placement {
            entity: "WindFarm".into(),
            attempts: PLACEMENT_ATTEMPTS,
        });
    }
    Err(SceneError::Resample(format!(
        "no grid point inside the boundary after {LAYOUT_ATTEMPTS} layouts"
    )))
}
