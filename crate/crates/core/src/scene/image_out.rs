use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Final RGB image with channels clamped to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputImage {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<[f64; 3]>,
}

impl OutputImage {
    /// Clamps every channel on construction.
    pub fn new(width: u32, height: u32, rgb: Vec<[f64; 3]>) -> Self {
        assert_eq!(rgb.len(), width as usize * height as usize);
        let rgb = rgb
            .into_iter()
            .map(|p| p.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }))
            .collect();
        OutputImage { width, height, rgb }
    }

    pub fn filled(width: u32, height: u32, color: [f64; 3]) -> Self {
        Self::new(width, height, vec![color; width as usize * height as usize])
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        self.rgb[y as usize * self.width as usize + x as usize]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.rgb.iter().flat_map(|p| p.map(quantize)).collect()
    }
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary PPM (P6, maxval 255).
pub fn encode_ppm(img: &OutputImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.to_bytes());
    out
}

/// Writes PPM, or PNG when the path ends in `.png`.
pub fn write_image(img: &OutputImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        image::save_buffer(
            path,
            &img.to_bytes(),
            img.width,
            img.height,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Encode {
                path: path.to_path_buf(),
                msg: other.to_string(),
            },
        })
    } else {
        fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
    }
}
