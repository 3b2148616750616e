use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::raster::RasterImage;
use crate::scene::SceneComposition;
use crate::texture::{kernel_from_spec, TextureError};
use crate::xml::{self, XmlWriter};

/// Label of every wind-farm box.
pub const TARGET_LABEL: &str = "owf";

/// Axis-aligned box in inclusive pixel indices, as in VOC files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxAnnotation {
    pub label: String,
    pub xmin: i64,
    pub ymin: i64,
    pub xmax: i64,
    pub ymax: i64,
}

/// One box per wind farm: the pixel hull of its turbines dilated by the
/// turbine kernel radius and clamped to the image. None-targets yield none.
pub fn derive_annotation(c: &SceneComposition) -> Result<Vec<BoxAnnotation>, TextureError> {
    let n = c.extent.image_size() as i64;
    let mut boxes = Vec::new();
    for farm in c.elements_of("WindFarm") {
        if farm.points.is_empty() {
            continue;
        }
        let turbine = farm.part("WindTurbine").ok_or_else(|| TextureError::MissingValue {
            entity: "WindTurbine".into(),
            characteristic: "kernel".into(),
        })?;
        let r = kernel_from_spec(turbine)?.radius as i64;
        let pixels: Vec<(i64, i64)> = farm.points.iter().map(|&p| c.extent.pixel_of(p)).collect();
        let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for &(x, y) in &pixels {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        boxes.push(BoxAnnotation {
            label: TARGET_LABEL.to_string(),
            xmin: (x0 - r).max(0),
            ymin: (y0 - r).max(0),
            xmax: (x1 + r).min(n - 1),
            ymax: (y1 + r).min(n - 1),
        });
    }
    Ok(boxes)
}

/// Contents of a VOC annotation file.
#[derive(Debug, Clone, PartialEq)]
pub struct VocAnnotation {
    pub filename: String,
    pub width: usize,
    pub height: usize,
    pub objects: Vec<BoxAnnotation>,
}

pub fn export_annotation(a: &VocAnnotation) -> String {
    let mut w = XmlWriter::new();
    w.open("annotation", &[]);
    w.text_element("folder", "images");
    w.text_element("filename", &a.filename);
    w.open("size", &[]);
    w.text_element("width", &a.width.to_string());
    w.text_element("height", &a.height.to_string());
    w.text_element("depth", "1");
    w.close("size");
    w.text_element("segmented", "0");
    for o in &a.objects {
        w.open("object", &[]);
        w.text_element("name", &o.label);
        w.text_element("pose", "Unspecified");
        w.text_element("truncated", "0");
        w.text_element("difficult", "0");
        w.open("bndbox", &[]);
        w.text_element("xmin", &o.xmin.to_string());
        w.text_element("ymin", &o.ymin.to_string());
        w.text_element("xmax", &o.xmax.to_string());
        w.text_element("ymax", &o.ymax.to_string());
        w.close("bndbox");
        w.close("object");
    }
    w.close("annotation");
    w.finish()
}

pub fn parse_annotation(text: &str) -> Result<VocAnnotation, DatasetError> {
    let root = xml::parse(text)?;
    if root.name != "annotation" {
        return Err(root.error(format!("expected <annotation>, found <{}>", root.name)).into());
    }
    let int = |e: &xml::Element, name: &str| -> Result<i64, DatasetError> {
        let t = e.child_text(name)?;
        t.parse::<i64>().map_err(|_| e.error(format!("<{name}> is not an integer: {t:?}")).into())
    };
    let size = root.child("size").ok_or_else(|| root.error("missing <size>"))?;
    let objects = root
        .children_named("object")
        .map(|o| {
            let b = o.child("bndbox").ok_or_else(|| o.error("missing <bndbox>"))?;
            Ok(BoxAnnotation {
                label: o.child_text("name")?.to_string(),
                xmin: int(b, "xmin")?,
                ymin: int(b, "ymin")?,
                xmax: int(b, "xmax")?,
                ymax: int(b, "ymax")?,
            })
        })
        .collect::<Result<_, DatasetError>>()?;
    Ok(VocAnnotation {
        filename: root.child_text("filename")?.to_string(),
        width: int(size, "width")?.max(0) as usize,
        height: int(size, "height")?.max(0) as usize,
        objects,
    })
}

/// Area-average downscale or nearest-neighbour upscale to `target` pixels
/// per side. Block means round half up.
pub fn rescale_for_training(img: &RasterImage, target: usize) -> Result<RasterImage, DatasetError> {
    let (w, h) = (img.width, img.height);
    let incompatible = || DatasetError::Rescale { from: w, to: target };
    if w != h || target == 0 {
        return Err(incompatible());
    }
    if target == w {
        return Ok(img.clone());
    }
    let pixel_size = img.pixel_size * w as f64 / target as f64;
    if w % target == 0 {
        let f = w / target;
        let n = (f * f) as u32;
        let mut data = Vec::with_capacity(target * target);
        for r in 0..target {
            for c in 0..target {
                let mut sum = 0u32;
                for rr in r * f..(r + 1) * f {
                    sum += img.data[rr * w + c * f..rr * w + (c + 1) * f].iter().map(|&v| v as u32).sum::<u32>();
                }
                data.push(((sum + n / 2) / n) as u8);
            }
        }
        return Ok(RasterImage {
            width: target,
            height: target,
            pixel_size,
            data,
        });
    }
    if target % w == 0 {
        let f = target / w;
        let mut data = Vec::with_capacity(target * target);
        for r in 0..target {
            for c in 0..target {
                data.push(img.data[(r / f) * w + c / f]);
            }
        }
        return Ok(RasterImage {
            width: target,
            height: target,
            pixel_size,
            data,
        });
    }
    Err(incompatible())
}

/// Scales a box from `from` to `to` pixels per side, keeping every source
/// pixel it covers covered.
pub fn rescale_box(b: &BoxAnnotation, from: usize, to: usize) -> BoxAnnotation {
    let (from, to) = (from as i64, to as i64);
    let lo = |v: i64| (v * to).div_euclid(from);
    let hi = |v: i64| ((v + 1) * to + from - 1).div_euclid(from) - 1;
    BoxAnnotation {
        label: b.label.clone(),
        xmin: lo(b.xmin),
        ymin: lo(b.ymin),
        xmax: hi(b.xmax),
        ymax: hi(b.ymax),
    }
}
