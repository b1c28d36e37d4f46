//! Scene data: trained Gaussians, cameras, output images, and their file formats.

mod camera_file;
mod generate;
mod image_out;
mod ply;

pub use camera_file::{load_cameras, save_cameras, CameraRecord};
pub use generate::{gen_scene, occluded_scene, SceneSpec};
pub use image_out::{encode_ppm, write_image, OutputImage};
pub use ply::{load_model, read_model, save_model, write_model};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of SH coefficients per color channel (degree 3).
pub const SH_PER_CHANNEL: usize = 16;
pub const SH_COEFFS: usize = 3 * SH_PER_CHANNEL;
/// Scalars in one stored Gaussian record: position, SH, opacity, scale, rotation.
pub const GAUSSIAN_SCALARS: usize = 3 + SH_COEFFS + 1 + 3 + 4;

/// One trained splat with activations applied.
///
/// `sh` is laid out channel-major: `sh[ch * 16 + k]` is the k-th basis
/// coefficient of channel `ch`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian3D {
    pub position: [f64; 3],
    pub sh: [f64; SH_COEFFS],
    pub opacity: f64,
    pub log_opacity: f64,
    pub scale: [f64; 3],
    /// Unit quaternion (w, x, y, z).
    pub rotation: [f64; 4],
}

/// Stored (pre-activation) parameters as they appear in a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGaussian {
    pub position: [f32; 3],
    pub f_dc: [f32; 3],
    pub f_rest: [f32; 45],
    pub opacity_logit: f32,
    pub log_scale: [f32; 3],
    pub rotation: [f32; 4],
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Gaussian3D {
    /// Builds a Gaussian from activated parameters, normalizing the quaternion.
    pub fn new(
        position: [f64; 3],
        sh: [f64; SH_COEFFS],
        opacity: f64,
        scale: [f64; 3],
        rotation: [f64; 4],
    ) -> Result<Self> {
        let g = Gaussian3D {
            position,
            sh,
            opacity,
            log_opacity: opacity.ln(),
            scale,
            rotation: normalize_quat(rotation)
                .ok_or_else(|| Error::Validation("zero-length rotation quaternion".into()))?,
        };
        g.validate()?;
        Ok(g)
    }

    /// Applies the storage activations: sigmoid opacity, exponential scale,
    /// normalized quaternion, and SH reordering to 16-per-channel.
    pub fn from_raw(raw: &RawGaussian) -> Result<Self> {
        let mut sh = [0.0; SH_COEFFS];
        for ch in 0..3 {
            sh[ch * SH_PER_CHANNEL] = raw.f_dc[ch] as f64;
            for k in 0..15 {
                sh[ch * SH_PER_CHANNEL + 1 + k] = raw.f_rest[ch * 15 + k] as f64;
            }
        }
        let logit = raw.opacity_logit as f64;
        // ln(sigmoid(x)) = -ln(1 + e^-x), kept accurate for large |x|
        let log_opacity = -(-logit).exp().ln_1p();
        let rotation = raw.rotation.map(f64::from);
        let g = Gaussian3D {
            position: raw.position.map(f64::from),
            sh,
            opacity: sigmoid(logit),
            log_opacity,
            scale: raw.log_scale.map(|s| (s as f64).exp()),
            rotation: normalize_quat(rotation)
                .ok_or_else(|| Error::Validation("zero-length rotation quaternion".into()))?,
        };
        g.validate()?;
        Ok(g)
    }

    /// Inverse of [`Gaussian3D::from_raw`], rounded to storage precision.
    pub fn to_raw(&self) -> RawGaussian {
        let mut f_dc = [0.0f32; 3];
        let mut f_rest = [0.0f32; 45];
        for ch in 0..3 {
            f_dc[ch] = self.sh[ch * SH_PER_CHANNEL] as f32;
            for k in 0..15 {
                f_rest[ch * 15 + k] = self.sh[ch * SH_PER_CHANNEL + 1 + k] as f32;
            }
        }
        RawGaussian {
            position: self.position.map(|v| v as f32),
            f_dc,
            f_rest,
            opacity_logit: (self.log_opacity - (-self.opacity).ln_1p()) as f32,
            log_scale: self.scale.map(|s| s.ln() as f32),
            rotation: self.rotation.map(|v| v as f32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.position.iter().all(|v| v.is_finite())
            && self.sh.iter().all(|v| v.is_finite())
            && self.scale.iter().all(|v| v.is_finite())
            && self.rotation.iter().all(|v| v.is_finite())
            && self.log_opacity.is_finite();
        if !finite {
            return Err(Error::Validation("non-finite Gaussian parameter".into()));
        }
        if !(self.opacity > 0.0 && self.opacity < 1.0) {
            return Err(Error::Validation(format!(
                "opacity {} outside (0, 1)",
                self.opacity
            )));
        }
        if self.scale.iter().any(|&s| s <= 0.0) {
            return Err(Error::Validation(format!(
                "non-positive scale {:?}",
                self.scale
            )));
        }
        Ok(())
    }
}

fn normalize_quat(q: [f64; 4]) -> Option<[f64; 4]> {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 && n.is_finite() {
        Some(q.map(|v| v / n))
    } else {
        None
    }
}

/// An ordered set of Gaussians. The index of a Gaussian is its identity,
/// used as the tie-breaker in every depth sort.
#[derive(Debug, Clone, Default)]
pub struct GaussianModel {
    pub gaussians: Vec<Gaussian3D>,
    pub source_path: String,
}

impl GaussianModel {
    pub fn new(gaussians: Vec<Gaussian3D>, source_path: impl Into<String>) -> Self {
        GaussianModel {
            gaussians,
            source_path: source_path.into(),
        }
    }

    pub fn count(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }
}

/// Pinhole camera with a rigid world-to-camera transform.
///
/// Camera space looks down +z with +y pointing down the image, so a point
/// `(x, y, z)` lands on pixel `(fx * x / z + cx, fy * y / z + cy)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major 4x4 world-to-camera matrix.
    pub view: [[f64; 4]; 4],
    pub znear: f64,
}

impl Camera {
    pub const ORTHONORMAL_TOL: f64 = 1e-5;

    /// Camera at the origin looking down +z with a centered principal point.
    pub fn looking_down_z(width: u32, height: u32, focal: f64) -> Self {
        Camera {
            width,
            height,
            fx: focal,
            fy: focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            view: IDENTITY4,
            znear: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Validation(format!(
                "image size {}x{} must be at least 1x1",
                self.width, self.height
            )));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::Validation(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.znear > 0.0) {
            return Err(Error::Validation(format!(
                "znear must be positive, got {}",
                self.znear
            )));
        }
        if self.view.iter().flatten().any(|v| !v.is_finite()) || !self.cx.is_finite() || !self.cy.is_finite()
        {
            return Err(Error::Validation("non-finite camera parameter".into()));
        }
        let r = self.rotation();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > Self::ORTHONORMAL_TOL {
                    return Err(Error::Validation(format!(
                        "view rotation block is not orthonormal (R^T R [{i}][{j}] = {dot})"
                    )));
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if det < 0.0 {
            return Err(Error::Validation("view rotation block is a reflection".into()));
        }
        Ok(())
    }

    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let v = &self.view;
        [
            [v[0][0], v[0][1], v[0][2]],
            [v[1][0], v[1][1], v[1][2]],
            [v[2][0], v[2][1], v[2][2]],
        ]
    }

    pub fn translation(&self) -> [f64; 3] {
        [self.view[0][3], self.view[1][3], self.view[2][3]]
    }

    /// Camera center in world coordinates, `-R^T t`.
    pub fn center(&self) -> [f64; 3] {
        let r = self.rotation();
        let t = self.translation();
        let mut c = [0.0; 3];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = -(r[0][i] * t[0] + r[1][i] * t[1] + r[2][i] * t[2]);
        }
        c
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

pub const IDENTITY4: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];
