//! Rendering of compositions into single-band 8-bit images.
//!
//! Partition elements (sea, coast, land) are filled from a constant or from
//! a template tile; point targets are then composited as brightness kernels
//! on top, using background statistics of the filled partition.

mod kernel;

use rand::Rng;
use thiserror::Error;

use crate::geometry::scanline_fill;
use crate::ontology::SceneElementSpecification;
use crate::raster::RasterImage;
use crate::rng::rng_from_seed;
use crate::scene::{SceneComposition, SceneElement};
use crate::templates::{TemplateError, TemplateStore, TileEntry, TileIndex};

pub use kernel::{local_sea_stats, render_rig, render_turbine, KernelKind, KernelSpec, LocalSeaStats};

#[derive(Debug, Error)]
pub enum TextureError {
    #[error("no {class} template tile can texture {element}")]
    NoTemplate { element: String, class: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("pixel ({col}, {row}) is outside the image")]
    OutOfImage { col: i64, row: i64 },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("specification of {entity} lacks {characteristic}")]
    MissingValue { entity: String, characteristic: String },
    #[error("texture plan has {plan} sources for {elements} elements")]
    PlanMismatch { plan: usize, elements: usize },
}

/// How one scene element gets its pixels.
#[derive(Debug, Clone, PartialEq)]
pub enum FillSource {
    Constant(u8),
    /// Template tile of `class`; `selector` fixes tile and offset.
    Template { class: String, selector: u64 },
    /// One kernel per point member.
    KernelStack(KernelSpec),
}

/// One fill source per composition element, in element order. Partition
/// sources are applied first, kernel stacks afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct TexturePlan {
    pub sources: Vec<FillSource>,
}

fn value(spec: &SceneElementSpecification, characteristic: &str) -> Result<f64, TextureError> {
    spec.value(characteristic).ok_or_else(|| TextureError::MissingValue {
        entity: spec.entity.clone(),
        characteristic: characteristic.to_string(),
    })
}

/// Kernel from a `WindTurbine` or `Rig` specification.
pub fn kernel_from_spec(spec: &SceneElementSpecification) -> Result<KernelSpec, TextureError> {
    let kind = match spec.key("kernel") {
        Some(k) => KernelKind::from_key(k).ok_or_else(|| TextureError::InvalidKernel(format!("unknown kernel {k}")))?,
        None => KernelKind::Gaussian,
    };
    let amplitude = value(spec, "amplitude")?;
    let sigma = value(spec, "sigma")?;
    match kind {
        KernelKind::Gaussian => KernelSpec::gaussian(amplitude, sigma),
        KernelKind::XPattern => KernelSpec::x_pattern(amplitude, sigma, value(spec, "armSigma")?, value(spec, "armWidth")?),
        KernelKind::TidalDamped => KernelSpec::tidal_damped(
            amplitude,
            sigma,
            value(spec, "armSigma")?,
            value(spec, "armWidth")?,
            value(spec, "damping")?,
        ),
    }
}

fn point_kernel(e: &SceneElement) -> Result<KernelSpec, TextureError> {
    let entity = e.point_entity.as_deref().unwrap_or(&e.entity);
    let spec = e.part(entity).ok_or_else(|| TextureError::MissingValue {
        entity: entity.to_string(),
        characteristic: "kernel".into(),
    })?;
    kernel_from_spec(spec)
}

/// Derives the plan from the sampled specifications: the recipe's sea
/// texture switch selects constant or template fill for every partition
/// element, point elements get their sampled kernels.
pub fn plan_for(c: &SceneComposition) -> Result<TexturePlan, TextureError> {
    let template = c
        .specification("Dataset")
        .and_then(|d| d.key("seaTexture"))
        .is_some_and(|k| k == "template");
    let sources = c
        .elements
        .iter()
        .map(|e| {
            if !e.points.is_empty() {
                return point_kernel(e).map(FillSource::KernelStack);
            }
            if template {
                let t = e.spec.get("texture").ok_or_else(|| TextureError::MissingValue {
                    entity: e.entity.clone(),
                    characteristic: "texture".into(),
                })?;
                Ok(FillSource::Template {
                    class: t.key.clone().unwrap_or_default(),
                    selector: t.value as u64,
                })
            } else {
                Ok(FillSource::Constant(value(&e.spec, "constantValue")?.round().clamp(0.0, 255.0) as u8))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(TexturePlan { sources })
}

/// Tile and pixel offset where the scene sits inside a template of `class`.
///
/// Candidates are the tiles of that class large enough for the scene at the
/// scene resolution; `selector` picks one and seeds the offset.
pub fn template_placement<'a>(
    index: &'a TileIndex,
    class: &str,
    selector: u64,
    scene_px: usize,
    resolution: f64,
) -> Option<(&'a TileEntry, usize, usize)> {
    let candidates: Vec<&TileEntry> = index
        .of_class(class)
        .filter(|t| {
            index.tile_width >= scene_px
                && index.tile_height >= scene_px
                && (index.pixel_size(t) - resolution).abs() <= 1e-9 * resolution
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let tile = candidates[(selector % candidates.len() as u64) as usize];
    let mut rng = rng_from_seed(selector);
    let ox = rng.random_range(0..=index.tile_width - scene_px);
    let oy = rng.random_range(0..=index.tile_height - scene_px);
    Some((tile, ox, oy))
}

/// Fills every partition element of `c` from its source.
pub fn fill_partition(c: &SceneComposition, plan: &TexturePlan, store: Option<&TemplateStore>) -> Result<RasterImage, TextureError> {
    if plan.sources.len() != c.elements.len() {
        return Err(TextureError::PlanMismatch {
            plan: plan.sources.len(),
            elements: c.elements.len(),
        });
    }
    let n = c.extent.image_size();
    let res = c.extent.sensor_resolution_m;
    let mut img = RasterImage::filled(n, n, res, 0);
    for (e, source) in c.elements.iter().zip(&plan.sources) {
        match source {
            FillSource::KernelStack(_) => {}
            FillSource::Constant(v) => scanline_fill(&e.area.0, n, n, res, |row, a, b| {
                img.data[row * n + a..row * n + b].fill(*v);
            }),
            FillSource::Template { class, selector } => {
                let no_template = || TextureError::NoTemplate {
                    element: e.entity.clone(),
                    class: class.clone(),
                };
                let store = store.ok_or_else(no_template)?;
                let (tile, ox, oy) = template_placement(store.index(), class, *selector, n, res).ok_or_else(no_template)?;
                let raster = store.tile(&tile.tile_id)?;
                scanline_fill(&e.area.0, n, n, res, |row, a, b| {
                    let src = (oy + row) * raster.width + ox;
                    img.data[row * n + a..row * n + b].copy_from_slice(&raster.data[src + a..src + b]);
                });
            }
        }
    }
    Ok(img)
}

/// Full deterministic render: partition fill, then every point target.
///
/// Kernel base levels come from the partition image, not from previously
/// drawn kernels.
pub fn render_scene(c: &SceneComposition, plan: &TexturePlan, store: Option<&TemplateStore>) -> Result<RasterImage, TextureError> {
    let partition = fill_partition(c, plan, store)?;
    let mut img = partition.clone();
    for (e, source) in c.elements.iter().zip(&plan.sources) {
        let FillSource::KernelStack(spec) = source else {
            continue;
        };
        for &p in &e.points {
            let (col, row) = c.extent.pixel_of(p);
            let stats = local_sea_stats(&partition, col, row, spec.radius);
            if spec.kind == KernelKind::Gaussian && e.point_entity.as_deref() == Some("Rig") {
                render_rig(&mut img, col, row, spec, stats)?;
            } else {
                render_turbine(&mut img, col, row, spec, stats)?;
            }
        }
    }
    Ok(img)
}
