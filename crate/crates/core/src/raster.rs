//! Single-band 8-bit rasters and their PNG encoding.

use std::io::Cursor;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("PNG decode failed: {0}")]
    Decode(String),
    #[error("PNG encode failed: {0}")]
    Encode(String),
    #[error("expected an 8-bit grayscale PNG, found {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Row-major single-band image; `pixel_size` is in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
    pub data: Vec<u8>,
}

impl RasterImage {
    pub fn filled(width: usize, height: usize, pixel_size: f64, value: u8) -> Self {
        Self {
            width,
            height,
            pixel_size,
            data: vec![value; width * height],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: u8) {
        self.data[row * self.width + col] = v;
    }

    pub fn contains(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height
    }

    /// Copy of the `width × height` block starting at (`col`, `row`).
    pub fn window(&self, col: usize, row: usize, width: usize, height: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(width * height);
        for r in row..row + height {
            let start = r * self.width + col;
            out.extend_from_slice(&self.data[start..start + width]);
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>, RasterError> {
        let mut buf = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut buf, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_compression(png::Compression::Fast);
            let mut w = enc.write_header().map_err(|e| RasterError::Encode(e.to_string()))?;
            w.write_image_data(&self.data).map_err(|e| RasterError::Encode(e.to_string()))?;
        }
        Ok(buf)
    }

    pub fn from_png(bytes: &[u8], pixel_size: f64) -> Result<Self, RasterError> {
        let decoder = png::Decoder::new(Cursor::new(bytes));
        let mut reader = decoder.read_info().map_err(|e| RasterError::Decode(e.to_string()))?;
        let info = reader.info();
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
            return Err(RasterError::Format(format!("{:?} {:?}", info.color_type, info.bit_depth)));
        }
        let (width, height) = (info.width as usize, info.height as usize);
        let mut data = vec![0; width * height];
        reader.next_frame(&mut data).map_err(|e| RasterError::Decode(e.to_string()))?;
        Ok(Self {
            width,
            height,
            pixel_size,
            data,
        })
    }

    pub fn write_png(&self, path: &Path) -> Result<(), RasterError> {
        std::fs::write(path, self.to_png()?).map_err(|source| RasterError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_png(path: &Path, pixel_size: f64) -> Result<Self, RasterError> {
        let bytes = std::fs::read(path).map_err(|source| RasterError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_png(&bytes, pixel_size)
    }
}

/// Width and height of a PNG without decoding its pixels.
pub fn png_dimensions(bytes: &[u8]) -> Result<(usize, usize), RasterError> {
    let reader = png::Decoder::new(Cursor::new(bytes))
        .read_info()
        .map_err(|e| RasterError::Decode(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(RasterError::Format(format!("{:?} {:?}", info.color_type, info.bit_depth)));
    }
    Ok((info.width as usize, info.height as usize))
}
