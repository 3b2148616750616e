//! Dataset production: recipes, per-example generation, annotation, export
//! and sharding.

mod annotation;
mod build;
mod recipe;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ontology::{Ontology, OntologySnapshot};
use crate::raster::{RasterError, RasterImage};
use crate::rng::{draws, example_seed, rng_from_seed};
use crate::scene::{compose_scene_on, CompositionClass, CompositionRequest, FixedPartition, SceneComposition, SceneError, SceneExtentConfig};
use crate::templates::TemplateStore;
use crate::texture::{plan_for, render_scene, TextureError};
use crate::xml::XmlError;

pub use annotation::{
    derive_annotation, export_annotation, parse_annotation, rescale_box, rescale_for_training, BoxAnnotation, VocAnnotation,
    TARGET_LABEL,
};
pub use build::{
    build_dataset, example_id, make_shards, BuildOptions, DatasetManifest, ManifestEntry, Shard, ShardManifest, ShardRole,
    MANIFEST_FILE, TRAIN_SHARDS, VAL_FRACTION,
};
pub use recipe::{builtin_recipe, builtin_recipes, class_counts, DatasetRecipe, DEFAULT_SEED};

/// Fresh seeds tried per example slot.
pub const RETRY_BUDGET: u32 = 10;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid recipe: {0}")]
    Recipe(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Texture(#[from] TextureError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("malformed XML: {0}")]
    Xml(#[from] XmlError),
    #[error("cannot rescale {from} px to {to} px")]
    Rescale { from: usize, to: usize },
    #[error("example {id} failed after {attempts} attempts: {last}")]
    ExampleFailed { id: String, attempts: u32, last: String },
    #[error("{failed} of {total} examples failed, more than 1%")]
    BuildFailed { failed: usize, total: usize },
    #[error("snapshot {id}: {message}")]
    Snapshot { id: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything shared by the examples of one build.
#[derive(Clone, Copy)]
pub struct GenerationContext<'a> {
    pub ontology: &'a Ontology,
    pub extent: SceneExtentConfig,
    pub templates: Option<&'a TemplateStore>,
    pub partition: Option<&'a FixedPartition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub id: String,
    pub class: CompositionClass,
    pub attempt: u32,
    /// Exported image, after any rescale.
    pub image: RasterImage,
    /// Boxes in exported image pixels; empty for none-targets.
    pub annotations: Vec<BoxAnnotation>,
    pub snapshot: OntologySnapshot,
    pub composition: SceneComposition,
}

impl TrainingExample {
    pub fn voc(&self) -> VocAnnotation {
        VocAnnotation {
            filename: format!("{}.png", self.id),
            width: self.image.width,
            height: self.image.height,
            objects: self.annotations.clone(),
        }
    }
}

/// Scene errors a fresh seed can cure.
fn retryable(e: &SceneError) -> bool {
    matches!(
        e,
        SceneError::Resample(_) | SceneError::Placement { .. } | SceneError::BoundaryInfeasible { .. } | SceneError::DegenerateGeometry(_)
    )
}

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

/// Renders, annotates and optionally rescales one composition.
fn finish_example(
    ctx: &GenerationContext,
    c: SceneComposition,
    export: Option<usize>,
) -> Result<(RasterImage, Vec<BoxAnnotation>, SceneComposition), DatasetError> {
    let image = render_scene(&c, &plan_for(&c)?, ctx.templates)?;
    let mut boxes = derive_annotation(&c)?;
    let native = image.width;
    let image = match export {
        Some(n) if n != native => {
            let scaled = rescale_for_training(&image, n)?;
            boxes = boxes.iter().map(|b| rescale_box(b, native, n)).collect();
            scaled
        }
        _ => image,
    };
    Ok((image, boxes, c))
}

/// Generates example slot `index` of a build seeded with `seed`.
///
/// Attempt `k` uses [`example_seed`]`(seed, index, k)`; compositions that
/// fail placement or need resampling move on to the next attempt, up to
/// [`RETRY_BUDGET`].
pub fn generate_example(
    ctx: &GenerationContext,
    recipe: &DatasetRecipe,
    class: CompositionClass,
    id: &str,
    index: u64,
) -> Result<TrainingExample, DatasetError> {
    let request = recipe.request(class);
    let mut last = String::new();
    for attempt in 0..RETRY_BUDGET {
        let seed = example_seed(recipe.seed, index, attempt);
        let mut rng = rng_from_seed(seed);
        let c = match compose_scene_on(ctx.ontology, ctx.extent, &request, ctx.partition, seed, &mut rng) {
            Ok(c) => c,
            Err(e) if retryable(&e) => {
                log::debug!("example {id} attempt {attempt}: {e}");
                last = e.to_string();
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let mut snapshot = OntologySnapshot::new(id, seed);
        snapshot.draws = draws(&rng);
        snapshot.specifications = c.specifications.clone();
        snapshot.parameters = snapshot_parameters(&request, ctx.extent, attempt, recipe.export_scale);
        let (image, annotations, composition) = finish_example(ctx, c, recipe.export_scale)?;
        return Ok(TrainingExample {
            id: id.to_string(),
            class,
            attempt,
            image,
            annotations,
            snapshot,
            composition,
        });
    }
    Err(DatasetError::ExampleFailed {
        id: id.to_string(),
        attempts: RETRY_BUDGET,
        last,
    })
}

fn snapshot_parameters(r: &CompositionRequest, extent: SceneExtentConfig, attempt: u32, export: Option<usize>) -> BTreeMap<String, String> {
    let mut p = BTreeMap::from([
        ("class".to_string(), r.class.key().to_string()),
        ("coast".to_string(), flag(r.coast)),
        ("templateSea".to_string(), flag(r.template_sea)),
        ("tidalTurbine".to_string(), flag(r.tidal_turbines)),
        ("sceneSize".to_string(), extent.scene_size_m.to_string()),
        ("resolution".to_string(), extent.sensor_resolution_m.to_string()),
        ("attempt".to_string(), attempt.to_string()),
    ]);
    if let Some(n) = export {
        p.insert("exportSize".to_string(), n.to_string());
    }
    p
}

/// Rebuilds an example from its snapshot; the ontology, template store and
/// any fixed partition must be the ones it was generated with.
///
/// Fails when re-sampling does not reproduce the recorded specifications
/// and generator position.
pub fn regenerate_from_snapshot(
    ontology: &Ontology,
    templates: Option<&TemplateStore>,
    partition: Option<&FixedPartition>,
    s: &OntologySnapshot,
) -> Result<TrainingExample, DatasetError> {
    let bad = |message: String| DatasetError::Snapshot {
        id: s.example_id.clone(),
        message,
    };
    let param = |name: &str| s.parameters.get(name).ok_or_else(|| bad(format!("missing parameter {name}")));
    let number = |name: &str| -> Result<f64, DatasetError> {
        param(name)?.parse::<f64>().map_err(|_| bad(format!("parameter {name} is not a number")))
    };
    let class = CompositionClass::from_key(param("class")?).ok_or_else(|| bad("unknown class".into()))?;
    let request = CompositionRequest {
        class,
        coast: param("coast")? == "true",
        template_sea: param("templateSea")? == "true",
        tidal_turbines: param("tidalTurbine")? == "true",
    };
    let extent = SceneExtentConfig::new(number("sceneSize")?, number("resolution")?)?;
    let export = match s.parameters.get("exportSize") {
        Some(v) => Some(v.parse::<usize>().map_err(|_| bad("bad exportSize".into()))?),
        None => None,
    };
    let attempt = number("attempt")? as u32;

    let mut rng = rng_from_seed(s.rng_seed);
    let c = compose_scene_on(ontology, extent, &request, partition, s.rng_seed, &mut rng)?;
    if c.specifications != s.specifications || draws(&rng) != s.draws {
        return Err(bad("regenerated values differ from the recorded ones".into()));
    }
    let ctx = GenerationContext {
        ontology,
        extent,
        templates,
        partition,
    };
    let (image, annotations, composition) = finish_example(&ctx, c, export)?;
    Ok(TrainingExample {
        id: s.example_id.clone(),
        class,
        attempt,
        image,
        annotations,
        snapshot: s.clone(),
        composition,
    })
}

#[cfg(test)]
mod tests;
