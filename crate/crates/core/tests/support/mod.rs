//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use splatflow::gcc::nearest_in_bounds;
use splatflow::math::{alpha, eigenvalues_2x2, invert_2x2, radius, SymMat2};
use splatflow::scene::{gen_scene, SceneSpec};
use splatflow::{Camera, ExpMode, GaussianModel, PixelRect, ProjectedGaussian, RadiusLaw};

pub fn cov3d_oracle(scale: [f64; 3], q: [f64; 4]) -> Matrix3<f64> {
    let r = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3])).to_rotation_matrix();
    let s = Matrix3::from_diagonal(&Vector3::new(scale[0], scale[1], scale[2]));
    let m = r.matrix() * s;
    m * m.transpose()
}

fn pixel_of(cam: &Camera, p: Vector3<f64>) -> [f64; 2] {
    [cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy]
}

/// Central-difference Jacobian of the pinhole projection at `mu_cam`.
pub fn jacobian_fd(cam: &Camera, mu_cam: [f64; 3]) -> Matrix2x3<f64> {
    let p = Vector3::from(mu_cam);
    let mut j = Matrix2x3::zeros();
    for k in 0..3 {
        let h = 1e-5 * p.norm().max(1.0);
        let mut e = Vector3::zeros();
        e[k] = h;
        let a = pixel_of(cam, p + e);
        let b = pixel_of(cam, p - e);
        j[(0, k)] = (a[0] - b[0]) / (2.0 * h);
        j[(1, k)] = (a[1] - b[1]) / (2.0 * h);
    }
    j
}

pub fn view_rotation(cam: &Camera) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| cam.view[r][c])
}

pub fn cam_point(cam: &Camera, p: [f64; 3]) -> Vector3<f64> {
    view_rotation(cam) * Vector3::from(p) + Vector3::new(cam.view[0][3], cam.view[1][3], cam.view[2][3])
}

pub fn cov2d_oracle(cam: &Camera, pos: [f64; 3], scale: [f64; 3], q: [f64; 4], dilation: f64) -> Matrix2<f64> {
    let mu = cam_point(cam, pos);
    let j = jacobian_fd(cam, [mu.x, mu.y, mu.z]);
    let w = view_rotation(cam);
    j * w * cov3d_oracle(scale, q) * w.transpose() * j.transpose() + Matrix2::identity() * dilation
}

pub fn sym(m: &SymMat2) -> Matrix2<f64> {
    Matrix2::new(m.a, m.b, m.b, m.c)
}

pub fn eig_oracle(m: &SymMat2) -> (f64, f64) {
    let e = sym(m).symmetric_eigen().eigenvalues;
    (e[0].max(e[1]), e[0].min(e[1]))
}

/// Associated Legendre function with the Condon-Shortley phase.
fn legendre(l: i32, m: i32, x: f64) -> f64 {
    let mut pmm = 1.0;
    let s = (1.0 - x * x).max(0.0).sqrt();
    for i in 1..=m {
        pmm *= -((2 * i - 1) as f64) * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut pm2 = pmm;
    for ll in m + 2..=l {
        let p = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pm2) / (ll - m) as f64;
        pm2 = pm1;
        pm1 = p;
    }
    pm1
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Real spherical harmonic in the `l^2 + l + m` ordering.
pub fn real_sh(l: i32, m: i32, dir: [f64; 3]) -> f64 {
    let theta = dir[2].clamp(-1.0, 1.0).acos();
    let phi = dir[1].atan2(dir[0]);
    let am = m.abs();
    let k = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * factorial(l - am) / factorial(l + am)).sqrt();
    let p = legendre(l, am, theta.cos());
    match m.signum() {
        0 => k * p,
        1 => std::f64::consts::SQRT_2 * k * (m as f64 * phi).cos() * p,
        _ => std::f64::consts::SQRT_2 * k * (am as f64 * phi).sin() * p,
    }
}

pub fn sh_oracle(sh: &[f64; 48], dir: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|ch| {
        let mut s = 0.0;
        for l in 0..4 {
            for m in -l..=l {
                s += sh[ch * 16 + (l * l + l + m) as usize] * real_sh(l, m, dir);
            }
        }
        (s + 0.5).max(0.0)
    })
}

/// Pixels of `bounds` inside the footprint square whose alpha reaches `alpha_min`.
pub fn brute_effective(g: &ProjectedGaussian, bounds: &PixelRect, alpha_min: f64, mode: ExpMode) -> Vec<(u32, u32)> {
    bounds
        .pixels()
        .filter(|&(x, y)| {
            let r = g.radius as f64;
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            (cx - g.mean2d[0]).abs() <= r
                && (cy - g.mean2d[1]).abs() <= r
                && alpha(x, y, g, mode) >= alpha_min
        })
        .collect()
}

/// 8-connected component of the brute-force effective set that contains
/// the in-bounds pixel nearest the center.
pub fn brute_component(g: &ProjectedGaussian, bounds: &PixelRect, alpha_min: f64, mode: ExpMode) -> Vec<(u32, u32)> {
    let set: std::collections::HashSet<_> = brute_effective(g, bounds, alpha_min, mode).into_iter().collect();
    let seed = nearest_in_bounds(g.mean2d, bounds);
    if !set.contains(&seed) {
        return Vec::new();
    }
    let mut seen = std::collections::HashSet::from([seed]);
    let mut stack = vec![seed];
    while let Some((x, y)) = stack.pop() {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 {
                    continue;
                }
                let n = (nx as u32, ny as u32);
                if set.contains(&n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort();
    out
}

/// Random screen-space Gaussian with covariance built from random axes and
/// angle, some centered off screen.
pub fn random_projected<R: Rng>(rng: &mut R, width: u32, height: u32, law: RadiusLaw) -> ProjectedGaussian {
    let s1: f64 = rng.gen_range(0.3f64..12.0);
    let s2: f64 = rng.gen_range(0.3f64..12.0);
    let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (c, s) = (th.cos(), th.sin());
    let cov = SymMat2::new(
        c * c * s1 * s1 + s * s * s2 * s2,
        c * s * (s1 * s1 - s2 * s2),
        s * s * s1 * s1 + c * c * s2 * s2,
    );
    let opacity: f64 = rng.gen_range(0.01..1.0);
    let mx = rng.gen_range(-0.2..1.2) * width as f64;
    let my = rng.gen_range(-0.2..1.2) * height as f64;
    ProjectedGaussian {
        mean2d: [mx, my],
        depth: 1.0,
        cov,
        inv_cov: invert_2x2(&cov).unwrap(),
        radius: radius(law, eigenvalues_2x2(&cov).0, opacity),
        color: [rng.gen(), rng.gen(), rng.gen()],
        log_opacity: opacity.ln(),
        opacity,
        src: 0,
    }
}

pub fn scene(seed: u64, n: usize, size: u32) -> GaussianModel {
    let spec = SceneSpec {
        camera: Camera::looking_down_z(size, size, size as f64),
        ..SceneSpec::default()
    };
    gen_scene(seed, n, &spec).unwrap()
}

/// Scene with larger splats so footprints span many blocks and tiles.
pub fn large_splat_scene(seed: u64, n: usize, size: u32) -> GaussianModel {
    let spec = SceneSpec {
        camera: Camera::looking_down_z(size, size, size as f64),
        scale_range: (0.05, 0.2),
        opacity_range: (0.01, 0.99),
        ..SceneSpec::default()
    };
    gen_scene(seed, n, &spec).unwrap()
}
