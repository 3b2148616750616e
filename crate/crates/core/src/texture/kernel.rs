use serde::{Deserialize, Serialize};

use super::TextureError;
use crate::raster::RasterImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Gaussian,
    XPattern,
    TidalDamped,
}

impl KernelKind {
    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "gaussian" => Some(KernelKind::Gaussian),
            "x-pattern" => Some(KernelKind::XPattern),
            "tidal-damped" => Some(KernelKind::TidalDamped),
            _ => None,
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::XPattern => "x-pattern",
            KernelKind::TidalDamped => "tidal-damped",
        }
    }
}

/// A point-target brightness kernel. Lengths are in pixels, the amplitude
/// in digital numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub amplitude: f64,
    pub sigma: f64,
    /// Standard deviation along each diagonal arm.
    pub arm_sigma: f64,
    /// Standard deviation across each arm.
    pub arm_width: f64,
    /// Arm amplitude factor of the tidal variant.
    pub damping: f64,
    pub radius: usize,
}

/// Smallest radius at which the kernel of peak `amplitude` and widest
/// spread `spread` has dropped to half a digital number one pixel inside
/// the footprint edge.
fn footprint_radius(amplitude: f64, spread: f64) -> usize {
    if amplitude <= 0.5 {
        return 1;
    }
    let r = spread * (2.0 * (2.0 * amplitude).ln()).sqrt();
    (r.ceil() as usize + 1).max(1)
}

impl KernelSpec {
    pub fn gaussian(amplitude: f64, sigma: f64) -> Result<Self, TextureError> {
        Self::build(KernelKind::Gaussian, amplitude, sigma, sigma, sigma, 0.0)
    }

    pub fn x_pattern(amplitude: f64, sigma: f64, arm_sigma: f64, arm_width: f64) -> Result<Self, TextureError> {
        Self::build(KernelKind::XPattern, amplitude, sigma, arm_sigma, arm_width, 1.0)
    }

    pub fn tidal_damped(amplitude: f64, sigma: f64, arm_sigma: f64, arm_width: f64, damping: f64) -> Result<Self, TextureError> {
        Self::build(KernelKind::TidalDamped, amplitude, sigma, arm_sigma, arm_width, damping)
    }

    fn build(kind: KernelKind, amplitude: f64, sigma: f64, arm_sigma: f64, arm_width: f64, damping: f64) -> Result<Self, TextureError> {
        let params = [amplitude, sigma, arm_sigma, arm_width, damping];
        if params.iter().any(|v| !v.is_finite()) || amplitude < 0.0 || sigma <= 0.0 || arm_sigma <= 0.0 || arm_width <= 0.0 {
            return Err(TextureError::InvalidKernel(format!(
                "{}: amplitude {amplitude}, sigma {sigma}, arm {arm_sigma}/{arm_width}",
                kind.key()
            )));
        }
        if !(0.0..=1.0).contains(&damping) {
            return Err(TextureError::InvalidKernel(format!("damping {damping} outside [0, 1]")));
        }
        let spread = match kind {
            KernelKind::Gaussian => sigma,
            _ => sigma.max(arm_sigma).max(arm_width),
        };
        Ok(Self {
            kind,
            amplitude,
            sigma,
            arm_sigma,
            arm_width,
            damping,
            radius: footprint_radius(amplitude, spread),
        })
    }

    /// Kernel value at pixel offset (`dx`, `dy`) from the center.
    pub fn value(&self, dx: f64, dy: f64) -> f64 {
        let center = (-(dx * dx + dy * dy) / (2.0 * self.sigma * self.sigma)).exp();
        let shape = match self.kind {
            KernelKind::Gaussian => center,
            KernelKind::XPattern | KernelKind::TidalDamped => {
                let arm = |along: f64, across: f64| {
                    (-(along * along) / (2.0 * self.arm_sigma * self.arm_sigma)
                        - (across * across) / (2.0 * self.arm_width * self.arm_width))
                        .exp()
                };
                let (u, v) = ((dx + dy) / std::f64::consts::SQRT_2, (dx - dy) / std::f64::consts::SQRT_2);
                center.max(self.damping * arm(u, v)).max(self.damping * arm(v, u))
            }
        };
        self.amplitude * shape
    }

    /// Whether an offset lies in the circular footprint.
    pub fn covers(&self, dx: i64, dy: i64) -> bool {
        let r = self.radius as i64;
        dx * dx + dy * dy <= r * r
    }
}

/// Background statistics around a point target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSeaStats {
    pub mean: f64,
}

/// Mean over the `(4·radius)²` window centred on (`col`, `row`), clamped to
/// the image.
pub fn local_sea_stats(img: &RasterImage, col: i64, row: i64, radius: usize) -> LocalSeaStats {
    let half = 2 * radius as i64;
    let c0 = (col - half).clamp(0, img.width as i64) as usize;
    let c1 = (col + half).clamp(0, img.width as i64) as usize;
    let r0 = (row - half).clamp(0, img.height as i64) as usize;
    let r1 = (row + half).clamp(0, img.height as i64) as usize;
    let mut sum = 0u64;
    for r in r0..r1 {
        sum += img.data[r * img.width + c0..r * img.width + c1].iter().map(|&v| v as u64).sum::<u64>();
    }
    let n = ((c1 - c0) * (r1 - r0)) as f64;
    LocalSeaStats {
        mean: if n > 0.0 { sum as f64 / n } else { 0.0 },
    }
}

fn composite(img: &mut RasterImage, col: i64, row: i64, spec: &KernelSpec, stats: LocalSeaStats) -> Result<(), TextureError> {
    if !img.contains(col, row) {
        return Err(TextureError::OutOfImage { col, row });
    }
    let r = spec.radius as i64;
    for y in (row - r).max(0)..=(row + r).min(img.height as i64 - 1) {
        for x in (col - r).max(0)..=(col + r).min(img.width as i64 - 1) {
            let (dx, dy) = (x - col, y - row);
            if !spec.covers(dx, dy) {
                continue;
            }
            let k = spec.value(dx as f64, dy as f64);
            let (ux, uy) = (x as usize, y as usize);
            let cur = img.get(ux, uy) as f64;
            // The kernel rides on the local mean near its center and fades
            // into the existing texture towards the footprint edge.
            let w = if spec.amplitude > 0.0 { (k / spec.amplitude).min(1.0) } else { 0.0 };
            let out = cur + w * (stats.mean - cur) + k;
            img.set(ux, uy, out.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(())
}

/// Composites a turbine kernel centred on pixel (`col`, `row`).
pub fn render_turbine(img: &mut RasterImage, col: i64, row: i64, spec: &KernelSpec, stats: LocalSeaStats) -> Result<(), TextureError> {
    composite(img, col, row, spec, stats)
}

/// Composites a rig kernel; rigs only take the gaussian kind.
pub fn render_rig(img: &mut RasterImage, col: i64, row: i64, spec: &KernelSpec, stats: LocalSeaStats) -> Result<(), TextureError> {
    if spec.kind != KernelKind::Gaussian {
        return Err(TextureError::InvalidKernel(format!("rig kernel must be gaussian, got {}", spec.kind.key())));
    }
    composite(img, col, row, spec, stats)
}
