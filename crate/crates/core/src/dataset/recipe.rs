use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::rng::rng_from_seed;
use crate::scene::{CompositionClass, CompositionRequest};

pub const DEFAULT_SEED: u64 = 7;

/// What to generate: size, class mix and the switches that select scene
/// elements and texture sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecipe {
    pub name: String,
    pub total_examples: usize,
    pub class_mix: BTreeMap<CompositionClass, f64>,
    #[serde(default)]
    pub coast_enabled: bool,
    #[serde(default)]
    pub template_sea_enabled: bool,
    #[serde(default)]
    pub tidal_turbine_enabled: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output pixels per side; `None` keeps the native image size.
    #[serde(default)]
    pub export_scale: Option<usize>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl DatasetRecipe {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let sum: f64 = self.class_mix.values().sum();
        if self.class_mix.is_empty() || (sum - 1.0).abs() > 1e-9 || self.class_mix.values().any(|f| !(*f >= 0.0)) {
            return Err(DatasetError::Recipe(format!(
                "class fractions of {} must be non-negative and sum to 1, got {sum}",
                self.name
            )));
        }
        if self.export_scale == Some(0) {
            return Err(DatasetError::Recipe("export scale must be positive".into()));
        }
        Ok(())
    }

    pub fn request(&self, class: CompositionClass) -> CompositionRequest {
        CompositionRequest {
            class,
            coast: self.coast_enabled,
            template_sea: self.template_sea_enabled,
            tidal_turbines: self.tidal_turbine_enabled,
        }
    }

    /// Per-class example counts; see [`class_counts`].
    pub fn counts(&self) -> Vec<(CompositionClass, usize)> {
        class_counts(&self.class_mix, self.total_examples)
    }

    /// Composition class of every example slot: the counts laid out in
    /// class order and shuffled with the recipe seed.
    pub fn slot_classes(&self) -> Vec<CompositionClass> {
        let mut slots: Vec<CompositionClass> = self
            .counts()
            .into_iter()
            .flat_map(|(c, n)| std::iter::repeat_n(c, n))
            .collect();
        slots.shuffle(&mut rng_from_seed(self.seed));
        slots
    }
}

/// Rounds `fraction × total` per class so the counts add up to `total`:
/// every count is floored, then the remainder goes one by one to the classes
/// with the largest fractional parts, ties broken by class name.
pub fn class_counts(mix: &BTreeMap<CompositionClass, f64>, total: usize) -> Vec<(CompositionClass, usize)> {
    let exact: Vec<(CompositionClass, f64)> = mix.iter().map(|(c, f)| (*c, f * total as f64)).collect();
    let mut counts: Vec<(CompositionClass, usize)> = exact.iter().map(|(c, x)| (*c, x.floor() as usize)).collect();
    let assigned: usize = counts.iter().map(|(_, n)| n).sum();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a].1 - exact[a].1.floor();
        let fb = exact[b].1 - exact[b].1.floor();
        fb.total_cmp(&fa).then_with(|| exact[a].0.key().cmp(exact[b].0.key()))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i].1 += 1;
    }
    counts
}

fn mix(pairs: &[(CompositionClass, f64)]) -> BTreeMap<CompositionClass, f64> {
    pairs.iter().copied().collect()
}

/// The four sequential recipes: small farms only; all farm sizes; farms
/// plus none-targets with coast and template sea; and the latter with tidal
/// turbine texture.
pub fn builtin_recipes() -> Vec<DatasetRecipe> {
    use CompositionClass::*;
    let base = |name: &str, total, class_mix, coast, template, tidal| DatasetRecipe {
        name: name.to_string(),
        total_examples: total,
        class_mix,
        coast_enabled: coast,
        template_sea_enabled: template,
        tidal_turbine_enabled: tidal,
        seed: DEFAULT_SEED,
        export_scale: None,
    };
    let third = mix(&[
        (OwfSmall, 1.0 / 6.0),
        (OwfMedium, 1.0 / 3.0),
        (OwfLarge, 1.0 / 6.0),
        (NoneTargetRigs, 1.0 / 6.0),
        (NoneTargetLand, 1.0 / 6.0),
    ]);
    vec![
        base("dataset-1", 45_000, mix(&[(OwfSmall, 1.0)]), false, false, false),
        base(
            "dataset-2",
            90_000,
            mix(&[(OwfSmall, 0.25), (OwfMedium, 0.5), (OwfLarge, 0.25)]),
            false,
            false,
            false,
        ),
        base("dataset-3", 90_000, third.clone(), true, true, false),
        base("dataset-3+", 90_000, third, true, true, true),
    ]
}

pub fn builtin_recipe(name: &str) -> Option<DatasetRecipe> {
    builtin_recipes().into_iter().find(|r| r.name == name)
}
