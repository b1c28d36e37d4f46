//! Deterministic synthetic scenes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Camera, Gaussian3D, GaussianModel, RawGaussian};
use crate::error::{Error, Result};

/// Distribution of a synthetic scene inside a camera frustum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub camera: Camera,
    /// Camera-space depth range of Gaussian centers.
    pub depth_range: (f64, f64),
    /// Activated opacity range, upper bound may be 1.0 (exclusive in practice).
    pub opacity_range: (f64, f64),
    /// World-space per-axis scale range, sampled log-uniformly.
    pub scale_range: (f64, f64),
    /// Fraction of the image size by which centers may fall outside the frame.
    pub margin: f64,
    /// Amplitude of the higher-order SH coefficients.
    pub sh_rest_amplitude: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            camera: Camera::looking_down_z(256, 256, 256.0),
            depth_range: (2.0, 12.0),
            opacity_range: (0.05, 0.99),
            scale_range: (0.005, 0.05),
            margin: 0.1,
            sh_rest_amplitude: 0.1,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        let (dlo, dhi) = self.depth_range;
        if !(dlo > 0.0 && dhi >= dlo && dhi.is_finite()) {
            return Err(Error::Config(format!("invalid depth range {:?}", self.depth_range)));
        }
        let (olo, ohi) = self.opacity_range;
        if !(olo > 0.0 && ohi >= olo && ohi <= 1.0) {
            return Err(Error::Config(format!(
                "invalid opacity range {:?}",
                self.opacity_range
            )));
        }
        let (slo, shi) = self.scale_range;
        if !(slo > 0.0 && shi >= slo && shi.is_finite()) {
            return Err(Error::Config(format!("invalid scale range {:?}", self.scale_range)));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::Config(format!("invalid margin {}", self.margin)));
        }
        if !(self.sh_rest_amplitude >= 0.0 && self.sh_rest_amplitude.is_finite()) {
            return Err(Error::Config("invalid SH amplitude".into()));
        }
        Ok(())
    }
}

fn camera_to_world(cam: &Camera, p: [f64; 3]) -> [f64; 3] {
    let r = cam.rotation();
    let t = cam.translation();
    let d = [p[0] - t[0], p[1] - t[1], p[2] - t[2]];
    std::array::from_fn(|i| r[0][i] * d[0] + r[1][i] * d[1] + r[2][i] * d[2])
}

fn unproject(cam: &Camera, u: f64, v: f64, z: f64) -> [f64; 3] {
    camera_to_world(cam, [(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z])
}

fn logit(o: f64) -> f64 {
    (o / (1.0 - o)).ln()
}

/// Stored logit whose activated opacity lies inside `[lo, hi]` despite f32 rounding.
fn opacity_logit_in_range(o: f64, lo: f64, hi: f64) -> f32 {
    let hi = hi.min(1.0 - 1e-6);
    let mut x = logit(o.clamp(lo, hi)) as f32;
    for _ in 0..8 {
        let act = 1.0 / (1.0 + (-(x as f64)).exp());
        if act < lo {
            x = f32::from_bits(if x >= 0.0 { x.to_bits() + 1 } else { x.to_bits() - 1 });
        } else if act > hi {
            x = f32::from_bits(if x > 0.0 { x.to_bits() - 1 } else { x.to_bits() + 1 });
        } else {
            break;
        }
    }
    x
}

fn random_quat(rng: &mut ChaCha8Rng) -> [f32; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n2: f64 = q.iter().map(|v| v * v).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return q.map(|v| (v / n) as f32);
        }
    }
}

fn random_raw(rng: &mut ChaCha8Rng, spec: &SceneSpec) -> RawGaussian {
    let cam = &spec.camera;
    let (w, h) = (cam.width as f64, cam.height as f64);
    let u = rng.gen_range(-spec.margin * w..=(1.0 + spec.margin) * w);
    let v = rng.gen_range(-spec.margin * h..=(1.0 + spec.margin) * h);
    let z = rng.gen_range(spec.depth_range.0..=spec.depth_range.1);
    let position = unproject(cam, u, v, z).map(|c| c as f32);

    let f_dc = std::array::from_fn(|_| rng.gen_range(-1.5f32..1.5));
    let amp = spec.sh_rest_amplitude as f32;
    let f_rest = std::array::from_fn(|_| if amp > 0.0 { rng.gen_range(-amp..=amp) } else { 0.0 });

    let (olo, ohi) = spec.opacity_range;
    let o = rng.gen_range(olo..=ohi);
    let opacity_logit = opacity_logit_in_range(o, olo, ohi);

    let (slo, shi) = (spec.scale_range.0.ln(), spec.scale_range.1.ln());
    let log_scale = std::array::from_fn(|_| rng.gen_range(slo..=shi) as f32);

    RawGaussian {
        position,
        f_dc,
        f_rest,
        opacity_logit,
        log_scale,
        rotation: random_quat(rng),
    }
}

/// Generates `n` Gaussians; identical `(seed, n, spec)` always yields the same model.
///
/// Parameters are drawn in storage precision, so a model written to disk and
/// loaded back reproduces the in-memory values.
pub fn gen_scene(seed: u64, n: usize, spec: &SceneSpec) -> Result<GaussianModel> {
    if n == 0 {
        return Err(Error::Config("scene must contain at least one Gaussian".into()));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussians = (0..n)
        .map(|_| Gaussian3D::from_raw(&random_raw(&mut rng, spec)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianModel::new(gaussians, format!("synthetic:seed={seed},n={n}")))
}

/// Three layers of large near-opaque splats covering the whole frame at the
/// front of `spec.depth_range`, followed by `n_far` random Gaussians behind
/// them. The wall saturates every pixel well below a transmittance of 1e-4.
pub fn occluded_scene(seed: u64, n_far: usize, spec: &SceneSpec) -> Result<GaussianModel> {
    spec.validate()?;
    let cam = &spec.camera;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0ff5);
    const SPACING_PX: f64 = 32.0;
    let wall_depth = spec.depth_range.0;
    let nx = (cam.width as f64 / SPACING_PX).ceil() as i64 + 3;
    let ny = (cam.height as f64 / SPACING_PX).ceil() as i64 + 3;
    let mut gaussians = Vec::new();
    for layer in 0..3 {
        let z = wall_depth + 0.05 * layer as f64;
        let sigma_world = SPACING_PX * z / cam.fx;
        for j in -1..ny - 1 {
            for i in -1..nx - 1 {
                let u = i as f64 * SPACING_PX + 0.37 * layer as f64;
                let v = j as f64 * SPACING_PX + 0.61 * layer as f64;
                let mut sh = [0.0; super::SH_COEFFS];
                for ch in 0..3 {
                    sh[ch * 16] = rng.gen_range(-1.5..1.5) as f32 as f64;
                }
                gaussians.push(Gaussian3D::new(
                    unproject(cam, u, v, z),
                    sh,
                    0.9999,
                    [sigma_world; 3],
                    [1.0, 0.0, 0.0, 0.0],
                )?);
            }
        }
    }
    let mut far_spec = spec.clone();
    far_spec.depth_range = (wall_depth + 1.0, spec.depth_range.1.max(wall_depth + 2.0));
    if n_far > 0 {
        gaussians.extend(gen_scene(seed, n_far, &far_spec)?.gaussians);
    }
    Ok(GaussianModel::new(
        gaussians,
        format!("synthetic-occluded:seed={seed},n_far={n_far}"),
    ))
}
