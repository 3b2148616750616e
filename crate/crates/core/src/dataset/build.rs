use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{export_annotation, generate_example, DatasetError, DatasetRecipe, GenerationContext, TrainingExample};
use crate::ontology::write_snapshot;
use crate::scene::composition_to_geojson;

pub const TRAIN_SHARDS: usize = 8;
pub const VAL_FRACTION: f64 = 0.05;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShardRole {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shard {
    pub shard_id: String,
    pub role: ShardRole,
    pub example_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub shards: Vec<Shard>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub class: String,
    pub seed: u64,
    pub attempt: u32,
    pub boxes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub recipe: DatasetRecipe,
    /// False when the build was interrupted or examples failed.
    pub complete: bool,
    pub exported: usize,
    pub class_counts: BTreeMap<String, usize>,
    pub examples: Vec<ManifestEntry>,
    pub failed: Vec<String>,
    pub split: ShardManifest,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions<'a> {
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Polled before each example; set it to stop early.
    pub cancel: Option<&'a AtomicBool>,
    /// Also write `debug/<id>.geojson` with the composition geometry.
    pub debug_geojson: bool,
}

/// Zero-padded decimal id, at least six digits and wide enough for `total`.
pub fn example_id(index: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len().max(6);
    format!("{index:0width$}")
}

fn hash_id(seed: u64, id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    h.finalize().into()
}

/// Splits `ids` into [`TRAIN_SHARDS`] training shards and one validation
/// shard.
///
/// The `round(5 %)` ids with the smallest seeded hash form the validation
/// shard; each training id goes to shard `hash mod 8`.
pub fn make_shards(ids: &[String], seed: u64) -> ShardManifest {
    let mut keyed: Vec<([u8; 32], &String)> = ids.iter().map(|id| (hash_id(seed, id), id)).collect();
    keyed.sort();
    let n_val = (ids.len() as f64 * VAL_FRACTION).round() as usize;
    let mut val: Vec<String> = keyed[..n_val].iter().map(|(_, id)| (*id).clone()).collect();
    let mut train: Vec<Vec<String>> = vec![Vec::new(); TRAIN_SHARDS];
    for (h, id) in &keyed[n_val..] {
        let k = u64::from_le_bytes(h[8..16].try_into().expect("8 bytes"));
        train[(k % TRAIN_SHARDS as u64) as usize].push((*id).clone());
    }
    val.sort();
    let mut shards: Vec<Shard> = train
        .into_iter()
        .enumerate()
        .map(|(i, mut ids)| {
            ids.sort();
            Shard {
                shard_id: format!("train-{i:02}"),
                role: ShardRole::Train,
                example_ids: ids,
            }
        })
        .collect();
    shards.push(Shard {
        shard_id: "val-00".into(),
        role: ShardRole::Val,
        example_ids: val,
    });
    ShardManifest {
        train_fraction: 1.0 - VAL_FRACTION,
        val_fraction: VAL_FRACTION,
        shards,
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), DatasetError> {
    fs::write(path, bytes).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn export(out: &Path, ex: &TrainingExample, debug: bool) -> Result<(), DatasetError> {
    write(&out.join("images").join(format!("{}.png", ex.id)), ex.image.to_png()?)?;
    write(&out.join("annotations").join(format!("{}.xml", ex.id)), export_annotation(&ex.voc()))?;
    write(
        &out.join("snapshots").join(format!("{}.snapshot.xml", ex.id)),
        write_snapshot(&ex.snapshot),
    )?;
    if debug {
        let text = serde_json::to_string_pretty(&composition_to_geojson(&ex.composition)).expect("GeoJSON serializes");
        write(&out.join("debug").join(format!("{}.geojson", ex.id)), text)?;
    }
    Ok(())
}

enum Slot {
    Done(ManifestEntry),
    Failed(String),
    Skipped,
}

/// Generates, exports and shards a whole recipe into `out`.
///
/// Example `i` depends only on the recipe seed and `i`, so the tree is
/// identical for any worker count. The manifest is written last; it is
/// marked incomplete when the build was cancelled or examples failed. More
/// than 1 % failed slots is an error (the manifest is still written).
pub fn build_dataset(
    recipe: &DatasetRecipe,
    ctx: &GenerationContext,
    out: &Path,
    options: &BuildOptions,
) -> Result<DatasetManifest, DatasetError> {
    recipe.validate()?;
    let mut dirs = vec!["images", "annotations", "snapshots"];
    if options.debug_geojson {
        dirs.push("debug");
    }
    for d in dirs {
        fs::create_dir_all(out.join(d)).map_err(|source| DatasetError::Io {
            path: out.join(d).display().to_string(),
            source,
        })?;
    }
    let classes = recipe.slot_classes();
    let total = classes.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| DatasetError::Recipe(format!("cannot start workers: {e}")))?;
    let run = |i: usize| -> Result<Slot, DatasetError> {
        if options.cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
            return Ok(Slot::Skipped);
        }
        let id = example_id(i, total);
        match generate_example(ctx, recipe, classes[i], &id, i as u64) {
            Ok(ex) => {
                export(out, &ex, options.debug_geojson)?;
                Ok(Slot::Done(ManifestEntry {
                    id: ex.id,
                    class: ex.class.key().to_string(),
                    seed: ex.snapshot.rng_seed,
                    attempt: ex.attempt,
                    boxes: ex.annotations.len(),
                }))
            }
            Err(e @ DatasetError::ExampleFailed { .. }) => {
                log::warn!("{e}");
                Ok(Slot::Failed(id))
            }
            Err(e) => Err(e),
        }
    };
    let slots: Vec<Slot> = pool.install(|| (0..total).into_par_iter().map(run).collect::<Result<_, _>>())?;

    let mut examples = Vec::new();
    let mut failed = Vec::new();
    let mut skipped = 0;
    for s in slots {
        match s {
            Slot::Done(e) => examples.push(e),
            Slot::Failed(id) => failed.push(id),
            Slot::Skipped => skipped += 1,
        }
    }
    let mut class_counts: BTreeMap<String, usize> = recipe.counts().iter().map(|(c, _)| (c.key().to_string(), 0)).collect();
    for e in &examples {
        *class_counts.entry(e.class.clone()).or_default() += 1;
    }
    let ids: Vec<String> = examples.iter().map(|e| e.id.clone()).collect();
    let manifest = DatasetManifest {
        recipe: recipe.clone(),
        complete: skipped == 0 && failed.is_empty(),
        exported: examples.len(),
        class_counts,
        split: make_shards(&ids, recipe.seed),
        examples,
        failed,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&out.join(MANIFEST_FILE), text + "\n")?;
    if manifest.failed.len() * 100 > total {
        return Err(DatasetError::BuildFailed {
            failed: manifest.failed.len(),
            total,
        });
    }
    Ok(manifest)
}
