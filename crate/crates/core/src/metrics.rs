//! Image comparison and footprint coverage.

use serde::{Deserialize, Serialize};

use crate::cost::TrafficLedger;
use crate::error::{Error, Result};
use crate::scene::{Camera, GaussianModel, OutputImage};
use crate::tile::{coverage_counts, preprocess_all, Coverage, RenderConfig};

/// PSNR in dB over all channels, with peak value 1. Identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &OutputImage, b: &OutputImage) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * mse.log10())
}

pub fn mse(a: &OutputImage, b: &OutputImage) -> Result<f64> {
    check_dims(a, b)?;
    if a.rgb.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .rgb
        .iter()
        .zip(&b.rgb)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]).powi(2)))
        .sum();
    Ok(sum / (3 * a.rgb.len()) as f64)
}

pub fn max_abs_diff(a: &OutputImage, b: &OutputImage) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a
        .rgb
        .iter()
        .zip(&b.rgb)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]).abs()))
        .fold(0.0, f64::max))
}

fn check_dims(a: &OutputImage, b: &OutputImage) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Validation(format!(
            "image size mismatch: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Comparison of a rendered image against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// `None` when the images are identical.
    pub psnr_db: Option<f64>,
    pub max_abs_err: f64,
    pub pixel_count: usize,
    pub exact_match: bool,
}

pub fn compare(reference: &OutputImage, test: &OutputImage) -> Result<QualityReport> {
    let p = psnr(reference, test)?;
    let max_abs_err = max_abs_diff(reference, test)?;
    Ok(QualityReport {
        psnr_db: p.is_finite().then_some(p),
        max_abs_err,
        pixel_count: reference.rgb.len(),
        exact_match: max_abs_err == 0.0,
    })
}

/// Pixel-count totals over every on-screen Gaussian.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageTotals {
    pub gaussians: u64,
    pub aabb_px: u64,
    pub obb_px: u64,
    pub alpha_px: u64,
}

impl CoverageTotals {
    pub fn add(&mut self, c: &Coverage) {
        self.gaussians += 1;
        self.aabb_px += c.aabb_px;
        self.obb_px += c.obb_px;
        self.alpha_px += c.alpha_px;
    }
}

/// Per-Gaussian coverage of the Gaussians surviving preprocessing, and
/// their totals.
pub fn coverage_report(model: &GaussianModel, cam: &Camera, cfg: &RenderConfig) -> (CoverageTotals, Vec<Coverage>) {
    let projected = preprocess_all(model, cam, cfg, &mut TrafficLedger::new());
    let per = coverage_counts(&projected, cam);
    let mut totals = CoverageTotals::default();
    for c in &per {
        totals.add(c);
    }
    (totals, per)
}
