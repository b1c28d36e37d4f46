//! Per-Gaussian numeric kernels shared by both dataflows.

mod exp_lut;
mod projected;
mod sh;

pub use exp_lut::ExpLut;
pub use projected::{project_gaussian, Cull, PixelRect, ProjectedGaussian};
pub use sh::{eval_sh, sh_basis, SH_C0};

use serde::{Deserialize, Serialize};

use crate::error::MathError;
use crate::scene::Camera;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];
pub type Mat2x3 = [[f64; 3]; 2];

/// Alphas are clamped to this ceiling before blending.
pub const ALPHA_MAX: f64 = 0.99;
/// Smallest determinant accepted when inverting a projected covariance.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Symmetric 2x2 matrix `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2 {
        a: 1.0,
        b: 0.0,
        c: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        SymMat2 { a, b, c }
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    /// `d^T M d` for the offset `(dx, dy)`.
    #[inline]
    pub fn quad_form(&self, dx: f64, dy: f64) -> f64 {
        self.a * dx * dx + 2.0 * self.b * dx * dy + self.c * dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExpMode {
    #[default]
    Exact,
    Lut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusLaw {
    /// `ceil(3 sqrt(lambda_max))`
    ThreeSigma,
    /// `ceil(sqrt(2 ln(255 w) lambda_max))`
    OmegaSigma,
}

/// World to camera space.
pub fn view_transform(mu: Vec3, cam: &Camera) -> Vec3 {
    let v = &cam.view;
    std::array::from_fn(|i| v[i][0] * mu[0] + v[i][1] * mu[1] + v[i][2] * mu[2] + v[i][3])
}

/// Camera space to pixel coordinates.
pub fn project_to_screen(mu_cam: Vec3, cam: &Camera) -> Result<[f64; 2], MathError> {
    let [x, y, z] = mu_cam;
    if !(z > 0.0) {
        return Err(MathError::BehindCamera(z));
    }
    Ok([cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy])
}

pub fn quat_to_rotation(q: [f64; 4]) -> Mat3 {
    let [w, x, y, z] = q;
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// `R S S^T R^T` for a unit quaternion `q = (w, x, y, z)`.
pub fn build_covariance3d(scale: Vec3, q: [f64; 4]) -> Mat3 {
    let r = quat_to_rotation(q);
    // M = R S, so Sigma = M M^T
    let m: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| r[i][j] * scale[j]));
    std::array::from_fn(|i| {
        std::array::from_fn(|j| m[i][0] * m[j][0] + m[i][1] * m[j][1] + m[i][2] * m[j][2])
    })
}

/// Affine approximation of the perspective projection at `mu_cam`.
pub fn jacobian(mu_cam: Vec3, cam: &Camera) -> Result<Mat2x3, MathError> {
    let [x, y, z] = mu_cam;
    if !(z > 0.0) {
        return Err(MathError::BehindCamera(z));
    }
    let z2 = z * z;
    Ok([
        [cam.fx / z, 0.0, -cam.fx * x / z2],
        [0.0, cam.fy / z, -cam.fy * y / z2],
    ])
}

/// `J W Sigma W^T J^T` with `dilation` added to both diagonal entries.
pub fn project_covariance(cov3d: &Mat3, view_rot: &Mat3, j: &Mat2x3, dilation: f64) -> SymMat2 {
    // T = J W (2x3)
    let t: Mat2x3 = std::array::from_fn(|i| {
        std::array::from_fn(|k| (0..3).map(|m| j[i][m] * view_rot[m][k]).sum())
    });
    // U = T Sigma (2x3)
    let u: Mat2x3 = std::array::from_fn(|i| {
        std::array::from_fn(|k| (0..3).map(|m| t[i][m] * cov3d[m][k]).sum())
    });
    let entry = |i: usize, k: usize| -> f64 { (0..3).map(|m| u[i][m] * t[k][m]).sum() };
    SymMat2 {
        a: entry(0, 0) + dilation,
        b: 0.5 * (entry(0, 1) + entry(1, 0)),
        c: entry(1, 1) + dilation,
    }
}

/// Eigenvalues `(l1, l2)` with `l1 >= l2`.
pub fn eigenvalues_2x2(m: &SymMat2) -> (f64, f64) {
    let mid = 0.5 * (m.a + m.c);
    let half = 0.5 * (m.a - m.c);
    let disc = (half * half + m.b * m.b).sqrt();
    (mid + disc, mid - disc)
}

pub fn invert_2x2(m: &SymMat2) -> Result<SymMat2, MathError> {
    let det = m.det();
    if !(det > SINGULAR_EPS) {
        return Err(MathError::Singular(det));
    }
    let inv = 1.0 / det;
    Ok(SymMat2 {
        a: m.c * inv,
        b: -m.b * inv,
        c: m.a * inv,
    })
}

pub fn radius_3sigma(lambda_max: f64) -> u32 {
    (3.0 * lambda_max.max(0.0).sqrt()).ceil() as u32
}

/// Opacity-aware radius: the extent of the region where the alpha can reach
/// 1/255. Zero when `255 * opacity <= 1`.
pub fn radius_omega_sigma(lambda_max: f64, opacity: f64) -> u32 {
    let scaled = 255.0 * opacity;
    if !(scaled > 1.0) {
        return 0;
    }
    (2.0 * scaled.ln() * lambda_max.max(0.0)).sqrt().ceil() as u32
}

pub fn radius(law: RadiusLaw, lambda_max: f64, opacity: f64) -> u32 {
    match law {
        RadiusLaw::ThreeSigma => radius_3sigma(lambda_max),
        RadiusLaw::OmegaSigma => radius_omega_sigma(lambda_max, opacity),
    }
}

/// `min(0.99, exp(exponent))` under the selected exponential.
#[inline]
pub fn alpha_from_exponent(exponent: f64, mode: ExpMode) -> f64 {
    let e = match mode {
        ExpMode::Exact => exponent.exp(),
        ExpMode::Lut => ExpLut::shared().eval(exponent),
    };
    e.min(ALPHA_MAX)
}

/// Alpha of `g` at pixel `(x, y)`, sampled at the pixel center.
#[inline]
pub fn alpha(x: u32, y: u32, g: &ProjectedGaussian, mode: ExpMode) -> f64 {
    alpha_at([x as f64 + 0.5, y as f64 + 0.5], g, mode)
}

/// Alpha of `g` at an arbitrary image-plane point.
#[inline]
pub fn alpha_at(p: [f64; 2], g: &ProjectedGaussian, mode: ExpMode) -> f64 {
    let dx = p[0] - g.mean2d[0];
    let dy = p[1] - g.mean2d[1];
    alpha_from_exponent(g.log_opacity - 0.5 * g.inv_cov.quad_form(dx, dy), mode)
}

/// Upper bound on the quadratic form of any point whose alpha reaches
/// `alpha_min`, or `None` if no point can.
pub fn effective_quad_bound(log_opacity: f64, alpha_min: f64, mode: ExpMode) -> Option<f64> {
    if alpha_min > ALPHA_MAX {
        return None;
    }
    let min_exponent = match mode {
        ExpMode::Exact => alpha_min.ln(),
        ExpMode::Lut => ExpLut::shared().inverse(alpha_min)?,
    };
    let bound = 2.0 * (log_opacity - min_exponent);
    (bound >= 0.0).then_some(bound)
}

/// One front-to-back compositing step: returns `(T', accum')`.
#[inline]
pub fn blend_step(t: f64, alpha: f64, color: [f64; 3], accum: [f64; 3]) -> (f64, [f64; 3]) {
    let w = t * alpha;
    (
        t * (1.0 - alpha),
        [
            accum[0] + w * color[0],
            accum[1] + w * color[1],
            accum[2] + w * color[2],
        ],
    )
}
