//! Discrete scene composition.
//!
//! A composition is built in the scene frame (meters, origin top-left, `y`
//! down) from specifications sampled out of the ontology: first the
//! sea/coast/land partition, then the target or none-target of the
//! requested composition class. Every placement is checked against the
//! ontology's topology relations before it is accepted.

mod geojson;
mod layout;
mod partition;
mod rigs;
mod topology;
mod windfarm;

use std::fmt;

use geo::MultiPolygon;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Rect};
use crate::ontology::{
    sample_specification, CharacteristicRef, ContextKeys, Ontology, SampleError, SceneDefaults,
    SceneElementSpecification, TopologyRelation,
};

pub use geojson::{composition_to_geojson, read_partition_geojson, GeoJsonError};
pub use layout::{
    apply_deformation, clip_layout, generate_boundary_polygon, generate_grid_layout, regular_grid,
    BoundaryPolygon, Deformation, GridLayout, BOUNDARY_RETRIES,
};
pub use partition::{generate_partition, partition_from_geometries, Side};
pub use rigs::{generate_rig_field, retain_inside, rig_field_shapes, NOISE_CELLS, RIG_FIELD_RETRIES};
pub use topology::{check_topology, violations, Violation};
pub use windfarm::{generate_windfarm, PLACEMENT_ATTEMPTS};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene size {scene_size_m} m is not a positive multiple of resolution {sensor_resolution_m} m")]
    InvalidExtent {
        scene_size_m: f64,
        sensor_resolution_m: f64,
    },
    #[error(
        "no simple {n}-gon with minimum vertex distance {min_distance} after {attempts} attempts; \
         use a smaller minimum distance"
    )]
    BoundaryInfeasible {
        n: usize,
        min_distance: f64,
        attempts: usize,
    },
    #[error("no valid placement for {entity} after {attempts} attempts")]
    Placement { entity: String, attempts: usize },
    /// Not fatal: the caller should retry with fresh randomness.
    #[error("resample needed: {0}")]
    Resample(String),
    #[error("degenerate partition geometry: {0}")]
    DegenerateGeometry(String),
    #[error("specification of {entity} lacks {characteristic}")]
    MissingValue { entity: String, characteristic: String },
    #[error(transparent)]
    Sample(#[from] SampleError),
}

impl SceneError {
    pub fn is_resample(&self) -> bool {
        matches!(self, SceneError::Resample(_))
    }
}

/// Physical scene size and the sensor resolution it is rendered at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneExtentConfig {
    pub scene_size_m: f64,
    pub sensor_resolution_m: f64,
}

impl SceneExtentConfig {
    pub fn new(scene_size_m: f64, sensor_resolution_m: f64) -> Result<Self, SceneError> {
        let ratio = scene_size_m / sensor_resolution_m;
        if !(scene_size_m > 0.0 && sensor_resolution_m > 0.0 && ratio.is_finite())
            || (ratio - ratio.round()).abs() > 1e-9
            || ratio.round() < 1.0
        {
            return Err(SceneError::InvalidExtent {
                scene_size_m,
                sensor_resolution_m,
            });
        }
        Ok(Self {
            scene_size_m,
            sensor_resolution_m,
        })
    }

    pub fn from_defaults(d: &SceneDefaults) -> Result<Self, SceneError> {
        Self::new(d.scene_size_m, d.sensor_resolution_m)
    }

    /// Pixels per side.
    pub fn image_size(&self) -> usize {
        (self.scene_size_m / self.sensor_resolution_m).round() as usize
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.scene_size_m, self.scene_size_m)
    }

    /// Pixel containing a scene point.
    pub fn pixel_of(&self, p: Point) -> (i64, i64) {
        (
            (p.x / self.sensor_resolution_m).floor() as i64,
            (p.y / self.sensor_resolution_m).floor() as i64,
        )
    }
}

impl Default for SceneExtentConfig {
    fn default() -> Self {
        Self {
            scene_size_m: 20_480.0,
            sensor_resolution_m: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Target,
    NoneTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneElement {
    pub entity: String,
    pub role: Role,
    /// Footprint polygons in scene meters; empty for pure point elements.
    pub area: MultiPolygon<f64>,
    /// Point members (turbines, rigs) in scene meters.
    pub points: Vec<Point>,
    /// Entity the footprint stands for on its own, e.g. `WindfarmBoundary`.
    pub area_entity: Option<String>,
    /// Entity of each point member, e.g. `WindTurbine`.
    pub point_entity: Option<String>,
    pub spec: SceneElementSpecification,
    /// Specifications of sub-entities (layout, boundary, point kernels).
    pub parts: Vec<SceneElementSpecification>,
}

impl SceneElement {
    pub fn area_only(entity: &str, role: Role, area: MultiPolygon<f64>, spec: SceneElementSpecification) -> Self {
        Self {
            entity: entity.to_string(),
            role,
            area,
            points: Vec::new(),
            area_entity: None,
            point_entity: None,
            spec,
            parts: Vec::new(),
        }
    }

    pub fn part(&self, entity: &str) -> Option<&SceneElementSpecification> {
        self.parts.iter().find(|p| p.entity == entity)
    }
}

/// The composition classes of the dataset recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompositionClass {
    #[serde(rename = "owf-small")]
    OwfSmall,
    #[serde(rename = "owf-medium")]
    OwfMedium,
    #[serde(rename = "owf-large")]
    OwfLarge,
    #[serde(rename = "none-target-rigs")]
    NoneTargetRigs,
    #[serde(rename = "none-target-land")]
    NoneTargetLand,
}

impl CompositionClass {
    pub const ALL: [CompositionClass; 5] = [
        CompositionClass::OwfSmall,
        CompositionClass::OwfMedium,
        CompositionClass::OwfLarge,
        CompositionClass::NoneTargetRigs,
        CompositionClass::NoneTargetLand,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            CompositionClass::OwfSmall => "owf-small",
            CompositionClass::OwfMedium => "owf-medium",
            CompositionClass::OwfLarge => "owf-large",
            CompositionClass::NoneTargetRigs => "none-target-rigs",
            CompositionClass::NoneTargetLand => "none-target-land",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.key() == key)
    }

    /// The `WindFarm.size` key this class forces, if it is a wind-farm class.
    pub fn size_key(&self) -> Option<&'static str> {
        match self {
            CompositionClass::OwfSmall => Some("small"),
            CompositionClass::OwfMedium => Some("medium"),
            CompositionClass::OwfLarge => Some("large"),
            _ => None,
        }
    }

    pub fn is_target(&self) -> bool {
        self.size_key().is_some()
    }
}

impl fmt::Display for CompositionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// What one example should contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionRequest {
    pub class: CompositionClass,
    pub coast: bool,
    pub template_sea: bool,
    pub tidal_turbines: bool,
}

impl CompositionRequest {
    /// Context keys that pin the recipe switches and the class.
    pub fn context(&self) -> ContextKeys {
        let flag = |on: bool| if on { "enabled" } else { "disabled" }.to_string();
        ContextKeys::from([
            (CharacteristicRef::new("Dataset", "coast"), flag(self.coast)),
            (
                CharacteristicRef::new("Dataset", "seaTexture"),
                if self.template_sea { "template" } else { "constant" }.to_string(),
            ),
            (CharacteristicRef::new("Dataset", "tidalTurbine"), flag(self.tidal_turbines)),
            (CharacteristicRef::new("Composition", "class"), self.class.key().to_string()),
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneComposition {
    pub extent: SceneExtentConfig,
    pub seed: u64,
    pub elements: Vec<SceneElement>,
    /// Topology relations the composition was built to satisfy.
    pub relations: Vec<TopologyRelation>,
    /// Every specification sampled for the example, in sampling order.
    pub specifications: Vec<SceneElementSpecification>,
}

impl SceneComposition {
    pub fn element(&self, entity: &str) -> Option<&SceneElement> {
        self.elements.iter().find(|e| e.entity == entity)
    }

    pub fn elements_of<'a>(&'a self, entity: &'a str) -> impl Iterator<Item = &'a SceneElement> + 'a {
        self.elements.iter().filter(move |e| e.entity == entity)
    }

    pub fn specification(&self, entity: &str) -> Option<&SceneElementSpecification> {
        self.specifications.iter().find(|s| s.entity == entity)
    }
}

pub(crate) fn value_of(spec: &SceneElementSpecification, characteristic: &str) -> Result<f64, SceneError> {
    spec.value(characteristic).ok_or_else(|| SceneError::MissingValue {
        entity: spec.entity.clone(),
        characteristic: characteristic.to_string(),
    })
}

pub(crate) fn key_of<'a>(spec: &'a SceneElementSpecification, characteristic: &str) -> Result<&'a str, SceneError> {
    spec.key(characteristic).ok_or_else(|| SceneError::MissingValue {
        entity: spec.entity.clone(),
        characteristic: characteristic.to_string(),
    })
}

/// A sampled length converted to meters using the characteristic's unit.
pub(crate) fn meters_of(o: &Ontology, spec: &SceneElementSpecification, characteristic: &str) -> Result<f64, SceneError> {
    let v = value_of(spec, characteristic)?;
    let unit = o
        .characteristic(&CharacteristicRef::new(spec.entity.clone(), characteristic))
        .and_then(|c| c.unit.as_deref());
    Ok(v * unit.and_then(crate::ontology::meters_per_unit).unwrap_or(1.0))
}

/// Samples `entity` and records its semantic keys in `ctx`.
pub(crate) fn sample_into(
    o: &Ontology,
    entity: &str,
    ctx: &mut ContextKeys,
    rng: &mut impl Rng,
) -> Result<SceneElementSpecification, SceneError> {
    let spec = sample_specification(o, entity, ctx, rng)?;
    for (r, k) in spec.context_keys() {
        ctx.insert(r, k.to_string());
    }
    Ok(spec)
}

/// Composes one scene for `request`.
///
/// Sampling order: `Dataset`, `Composition`, `Sea`, `Land`, `Coast`, then
/// the class-specific entities. Every sampled specification is kept in
/// [`SceneComposition::specifications`].
pub fn compose_scene(
    o: &Ontology,
    extent: SceneExtentConfig,
    request: &CompositionRequest,
    seed: u64,
    rng: &mut impl Rng,
) -> Result<SceneComposition, SceneError> {
    compose_scene_on(o, extent, request, None, seed, rng)
}

/// Land and optional coast geometry that replaces the procedural
/// coastline.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPartition {
    pub land: MultiPolygon<f64>,
    pub coast: Option<MultiPolygon<f64>>,
}

/// [`compose_scene`] on a fixed partition when `fixed` is given. The
/// partition specifications are sampled either way, so the random stream
/// stays aligned.
pub fn compose_scene_on(
    o: &Ontology,
    extent: SceneExtentConfig,
    request: &CompositionRequest,
    fixed: Option<&FixedPartition>,
    seed: u64,
    rng: &mut impl Rng,
) -> Result<SceneComposition, SceneError> {
    let mut ctx = request.context();
    let mut specs = Vec::new();
    for entity in ["Dataset", "Composition", "Sea", "Land", "Coast"] {
        specs.push(sample_into(o, entity, &mut ctx, rng)?);
    }
    let [_, _, sea, land, coast] = &specs[..] else {
        unreachable!()
    };
    let partition = match fixed {
        Some(f) => partition_from_geometries(extent, &f.land, f.coast.as_ref(), (sea, land, f.coast.as_ref().map(|_| coast)))?,
        None => generate_partition(extent, sea, land, request.coast.then_some(coast), rng)?,
    };

    let coast_used = fixed.map_or(request.coast, |f| f.coast.is_some());
    if !coast_used {
        specs.retain(|s| s.entity != "Coast");
    }
    let mut composition = SceneComposition {
        extent,
        seed,
        elements: partition,
        relations: o.relations().cloned().collect(),
        specifications: specs,
    };

    if let Some(size) = request.class.size_key() {
        ctx.insert(CharacteristicRef::new("WindFarm", "size"), size.to_string());
        let farm = generate_windfarm(o, &composition, &mut ctx, rng)?;
        composition.specifications.push(farm.spec.clone());
        composition.specifications.extend(farm.parts.iter().cloned());
        composition.elements.push(farm);
    } else if request.class == CompositionClass::NoneTargetRigs {
        let field = generate_rig_field(o, &composition, &mut ctx, rng)?;
        composition.specifications.push(field.spec.clone());
        composition.specifications.extend(field.parts.iter().cloned());
        composition.elements.push(field);
    }
    Ok(composition)
}
