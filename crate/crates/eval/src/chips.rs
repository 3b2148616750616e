use serde::{Deserialize, Serialize};

pub const DEFAULT_CHIP: usize = 2048;
pub const DEFAULT_OVERLAP: f64 = 0.5;

/// Pixel window of a large image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChipWindow {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl ChipWindow {
    /// Maps a box predicted on the chip resized to `model_size` pixels back to
    /// image pixel coordinates.
    pub fn to_image(&self, model_size: usize, b: [f64; 4]) -> [f64; 4] {
        let sx = self.width as f64 / model_size as f64;
        let sy = self.height as f64 / model_size as f64;
        [
            self.x as f64 + b[0] * sx,
            self.y as f64 + b[1] * sy,
            self.x as f64 + b[2] * sx,
            self.y as f64 + b[3] * sy,
        ]
    }
}

fn offsets(size: usize, chip: usize, stride: usize) -> Vec<usize> {
    if size <= chip {
        return vec![0];
    }
    let mut out: Vec<usize> = (0..).map(|i| i * stride).take_while(|&o| o + chip < size).collect();
    out.push(size - chip);
    out.dedup();
    out
}

/// Row-major chip windows at stride `chip * (1 - overlap)`; the last row and
/// column are shifted back to end at the image edge. Images smaller than a
/// chip yield one window clamped to the image.
pub fn chip_plan(width: usize, height: usize, chip: usize, overlap: f64) -> Vec<ChipWindow> {
    let stride = ((chip as f64 * (1.0 - overlap)).round() as usize).max(1);
    let xs = offsets(width, chip, stride);
    let ys = offsets(height, chip, stride);
    ys.iter()
        .flat_map(|&y| {
            xs.iter().map(move |&x| ChipWindow {
                x,
                y,
                width: chip.min(width),
                height: chip.min(height),
            })
        })
        .collect()
}
