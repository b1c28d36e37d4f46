use serde::{Deserialize, Serialize};

use super::{
    build_covariance3d, eigenvalues_2x2, invert_2x2, jacobian, project_covariance,
    project_to_screen, radius, RadiusLaw, SymMat2, Vec3,
};
use crate::scene::{Camera, Gaussian3D};

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        PixelRect { x0, y0, x1, y1 }
    }

    pub fn full(width: u32, height: u32) -> Self {
        PixelRect::new(0, 0, width, height)
    }

    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn area(&self) -> usize {
        self.width() as usize * self.height() as usize
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn intersect(&self, other: &PixelRect) -> Option<PixelRect> {
        let r = PixelRect::new(
            self.x0.max(other.x0),
            self.y0.max(other.y0),
            self.x1.min(other.x1),
            self.y1.min(other.y1),
        );
        (!r.is_empty()).then_some(r)
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| (x, y)))
    }
}

/// Screen-space splat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedGaussian {
    pub mean2d: [f64; 2],
    /// Camera-space z.
    pub depth: f64,
    /// Projected covariance (after dilation).
    pub cov: SymMat2,
    pub inv_cov: SymMat2,
    /// Footprint half-width in pixels under the active radius law.
    pub radius: u32,
    pub color: [f64; 3],
    pub log_opacity: f64,
    pub opacity: f64,
    /// Index into the source model.
    pub src: u32,
}

/// Why a Gaussian was dropped during projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cull {
    BehindCamera,
    Singular,
}

impl ProjectedGaussian {
    /// Continuous footprint square `[x_lo, x_hi, y_lo, y_hi]`.
    pub fn footprint_bounds(&self) -> [f64; 4] {
        let r = self.radius as f64;
        [
            self.mean2d[0] - r,
            self.mean2d[0] + r,
            self.mean2d[1] - r,
            self.mean2d[1] + r,
        ]
    }

    /// Whether the footprint square touches `bounds`; the screen-culling test.
    pub fn overlaps(&self, bounds: &PixelRect) -> bool {
        let [xl, xh, yl, yh] = self.footprint_bounds();
        xh >= bounds.x0 as f64 && xl < bounds.x1 as f64 && yh >= bounds.y0 as f64 && yl < bounds.y1 as f64
    }

    /// Pixels of `bounds` whose centers lie inside the footprint square.
    /// A Gaussian contributes to no pixel outside this set.
    pub fn footprint_pixels(&self, bounds: &PixelRect) -> Option<PixelRect> {
        let [xl, xh, yl, yh] = self.footprint_bounds();
        let lo = |v: f64, min: u32| ((v - 0.5).ceil().max(min as f64)) as u32;
        let hi = |v: f64, max: u32| {
            let f = (v - 0.5).floor() + 1.0;
            if f <= 0.0 {
                0
            } else {
                (f.min(max as f64)) as u32
            }
        };
        let r = PixelRect::new(
            lo(xl, bounds.x0),
            lo(yl, bounds.y0),
            hi(xh, bounds.x1),
            hi(yh, bounds.y1),
        );
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }
}

/// Projects one Gaussian already transformed to camera space. Color is left
/// at zero; screen culling and radius-zero culling are the caller's policy.
pub fn project_gaussian(
    g: &Gaussian3D,
    src: u32,
    mu_cam: Vec3,
    cam: &Camera,
    law: RadiusLaw,
    dilation: f64,
) -> Result<ProjectedGaussian, Cull> {
    let mean2d = project_to_screen(mu_cam, cam).map_err(|_| Cull::BehindCamera)?;
    let j = jacobian(mu_cam, cam).map_err(|_| Cull::BehindCamera)?;
    let cov3d = build_covariance3d(g.scale, g.rotation);
    let cov = project_covariance(&cov3d, &cam.rotation(), &j, dilation);
    let inv_cov = invert_2x2(&cov).map_err(|_| Cull::Singular)?;
    let (lambda_max, _) = eigenvalues_2x2(&cov);
    Ok(ProjectedGaussian {
        mean2d,
        depth: mu_cam[2],
        cov,
        inv_cov,
        radius: radius(law, lambda_max, g.opacity),
        color: [0.0; 3],
        log_opacity: g.log_opacity,
        opacity: g.opacity,
        src,
    })
}
