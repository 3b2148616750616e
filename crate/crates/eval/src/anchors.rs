use serde::{Deserialize, Serialize};

use crate::EvalError;

/// Sizes that enter the anchor scale computation, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorConfig {
    pub model_h: f64,
    pub model_w: f64,
    pub image_h: f64,
    pub image_w: f64,
    pub stride: f64,
    pub anchor_h: f64,
    pub anchor_w: f64,
}

impl Default for AnchorConfig {
    /// 2048 px images fed to a 1024 px model with stride 16 and 4 x 4 base
    /// anchors.
    fn default() -> Self {
        Self {
            model_h: 1024.0,
            model_w: 1024.0,
            image_h: 2048.0,
            image_w: 2048.0,
            stride: 16.0,
            anchor_h: 4.0,
            anchor_w: 4.0,
        }
    }
}

impl AnchorConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let fields = [
            ("model height", self.model_h),
            ("model width", self.model_w),
            ("image height", self.image_h),
            ("image width", self.image_w),
            ("stride", self.stride),
            ("anchor height", self.anchor_h),
            ("anchor width", self.anchor_w),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EvalError::InvalidAnchorConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Scale factor per square target size:
/// `sqrt(T_h T_w M_h M_w / (I_h I_w)) / (s A_h A_w)`.
pub fn anchor_scales(cfg: &AnchorConfig, sizes: &[f64]) -> Result<Vec<f64>, EvalError> {
    cfg.validate()?;
    sizes
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t.is_finite()) {
                return Err(EvalError::InvalidAnchorConfig(format!("target size must be positive, got {t}")));
            }
            let shrink = (cfg.model_h * cfg.model_w) / (cfg.image_h * cfg.image_w);
            Ok((t * t * shrink).sqrt() / (cfg.stride * cfg.anchor_h * cfg.anchor_w))
        })
        .collect()
}

/// Target sizes in pixels from farm extents in meters: each extent divided
/// by the resolution and rounded up to a multiple of `granularity`, sorted
/// and deduplicated.
pub fn ontology_target_sizes(extents_m: &[f64], resolution_m: f64, granularity: f64) -> Vec<f64> {
    let mut px: Vec<f64> = extents_m
        .iter()
        .map(|e| (e / resolution_m / granularity).ceil() * granularity)
        .collect();
    px.sort_by(f64::total_cmp);
    px.dedup();
    px
}
