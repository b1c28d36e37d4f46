//! Degree-3 real spherical harmonics, in the basis order used by trained 3DGS
//! models (index `l^2 + l + m`).

use crate::scene::{SH_COEFFS, SH_PER_CHANNEL};

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// The 16 basis values at unit direction `d`.
pub fn sh_basis(d: [f64; 3]) -> [f64; SH_PER_CHANNEL] {
    let [x, y, z] = d;
    let (xx, yy, zz) = (x * x, y * y, z * z);
    [
        SH_C0,
        -SH_C1 * y,
        SH_C1 * z,
        -SH_C1 * x,
        SH_C2[0] * x * y,
        SH_C2[1] * y * z,
        SH_C2[2] * (2.0 * zz - xx - yy),
        SH_C2[3] * x * z,
        SH_C2[4] * (xx - yy),
        SH_C3[0] * y * (3.0 * xx - yy),
        SH_C3[1] * x * y * z,
        SH_C3[2] * y * (4.0 * zz - xx - yy),
        SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        SH_C3[4] * x * (4.0 * zz - xx - yy),
        SH_C3[5] * z * (xx - yy),
        SH_C3[6] * x * (xx - 3.0 * yy),
    ]
}

/// View-dependent RGB: basis-weighted sum plus a 0.5 offset, clamped below at 0.
pub fn eval_sh(sh: &[f64; SH_COEFFS], dir: [f64; 3]) -> [f64; 3] {
    let basis = sh_basis(dir);
    std::array::from_fn(|ch| {
        let coeffs = &sh[ch * SH_PER_CHANNEL..(ch + 1) * SH_PER_CHANNEL];
        let sum: f64 = basis.iter().zip(coeffs).map(|(b, c)| b * c).sum();
        (sum + 0.5).max(0.0)
    })
}
