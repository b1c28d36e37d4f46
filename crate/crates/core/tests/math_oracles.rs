mod support;

use proptest::prelude::*;
use splatflow::math::{
    blend_step, build_covariance3d, eigenvalues_2x2, eval_sh, invert_2x2, jacobian, project_covariance,
    quat_to_rotation, radius_3sigma, radius_omega_sigma, view_transform, SymMat2,
};
use splatflow::scene::IDENTITY4;
use splatflow::{Camera, ExpLut};
use support::*;

fn camera_with(rot: [f64; 4], t: [f64; 3]) -> Camera {
    let r = quat_to_rotation(rot);
    let mut view = IDENTITY4;
    for i in 0..3 {
        for j in 0..3 {
            view[i][j] = r[i][j];
        }
        view[i][3] = t[i];
    }
    Camera {
        view,
        ..Camera::looking_down_z(320, 240, 300.0)
    }
}

fn quat() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0f64..1.0).prop_filter("nonzero", |q| q.iter().map(|v| v * v).sum::<f64>() > 0.01)
}

fn normalized(q: [f64; 4]) -> [f64; 4] {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.map(|v| v / n)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn covariance_matches_nalgebra(scale in prop::array::uniform3(0.001f64..3.0), q in quat()) {
        let q = normalized(q);
        let got = build_covariance3d(scale, q);
        let want = cov3d_oracle(scale, q);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!(close(got[i][j], want[(i, j)], 1e-9));
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_difference(
        x in -3.0f64..3.0, y in -3.0f64..3.0, z in 0.5f64..20.0,
    ) {
        let cam = Camera::looking_down_z(320, 240, 300.0);
        let j = jacobian([x, y, z], &cam).unwrap();
        let fd = jacobian_fd(&cam, [x, y, z]);
        for r in 0..2 {
            for c in 0..3 {
                prop_assert!(close(j[r][c], fd[(r, c)], 1e-6), "{r},{c}: {} vs {}", j[r][c], fd[(r, c)]);
            }
        }
    }

    #[test]
    fn projected_covariance_matches_oracle(
        pos in prop::array::uniform3(-1.0f64..1.0),
        scale in prop::array::uniform3(0.005f64..0.5),
        q in quat(),
        cq in quat(),
    ) {
        let q = normalized(q);
        let cam = camera_with(normalized(cq), [0.0, 0.0, 6.0]);
        let mu = view_transform(pos, &cam);
        let j = jacobian(mu, &cam).unwrap();
        let got = project_covariance(&build_covariance3d(scale, q), &cam.rotation(), &j, 0.3);
        let want = cov2d_oracle(&cam, pos, scale, q, 0.3);
        prop_assert!(close(got.a, want[(0, 0)], 1e-6));
        prop_assert!(close(got.b, want[(0, 1)], 1e-6));
        prop_assert!(close(got.c, want[(1, 1)], 1e-6));
    }

    #[test]
    fn eigen_and_inverse_match(a in 0.01f64..100.0, c in 0.01f64..100.0, f in -0.99f64..0.99) {
        let m = SymMat2::new(a, f * (a * c).sqrt(), c);
        let (l1, l2) = eigenvalues_2x2(&m);
        let (o1, o2) = eig_oracle(&m);
        prop_assert!(close(l1, o1, 1e-9) && close(l2, o2, 1e-6));
        let inv = invert_2x2(&m).unwrap();
        let want = sym(&m).try_inverse().unwrap();
        prop_assert!(close(inv.a, want[(0, 0)], 1e-8));
        prop_assert!(close(inv.b, want[(0, 1)], 1e-8));
        prop_assert!(close(inv.c, want[(1, 1)], 1e-8));
    }

    #[test]
    fn sh_matches_legendre(coeffs in prop::collection::vec(-1.0f64..1.0, 48), d in prop::array::uniform3(-1.0f64..1.0)) {
        let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let dir = d.map(|v| v / n);
        let mut sh = [0.0; 48];
        sh.copy_from_slice(&coeffs);
        let got = eval_sh(&sh, dir);
        let want = sh_oracle(&sh, dir);
        for ch in 0..3 {
            prop_assert!((got[ch] - want[ch]).abs() < 1e-9);
        }
    }

    #[test]
    fn blending_conserves_weight(alphas in prop::collection::vec(0.0f64..0.99, 0..60)) {
        let mut t = 1.0;
        let mut acc = [0.0; 3];
        let mut weights = 0.0;
        for a in &alphas {
            weights += t * a;
            let (tn, cn) = blend_step(t, *a, [1.0, 0.0, 0.0], acc);
            prop_assert!(tn <= t);
            t = tn;
            acc = cn;
        }
        prop_assert!((1.0 - t - weights).abs() < 1e-12);
        prop_assert!((acc[0] - weights).abs() < 1e-12);
    }

    #[test]
    fn omega_radius_never_exceeds_three_sigma_below_cutoff(l in 0.01f64..1e4, o in 0.004f64..0.35) {
        // 255 * 0.35 < e^4.5
        prop_assert!(radius_omega_sigma(l, o) <= radius_3sigma(l));
    }

    #[test]
    fn lut_relative_error(x in -5.54f64..0.0) {
        let e = x.exp();
        prop_assert!((ExpLut::shared().eval(x) - e).abs() / e < 0.01);
    }
}

#[test]
fn radius_spot_values() {
    assert_eq!(radius_omega_sigma(4.0, 1.0), 7);
    assert_eq!(radius_3sigma(4.0), 6);
    for l in [0.3, 1.0, 4.0, 1e3, 1e6] {
        assert_eq!(radius_omega_sigma(l, 1.0 / 255.0), 0);
    }
}

#[test]
fn legendre_oracle_agrees_on_axes() {
    // Sanity of the oracle itself against closed forms.
    let c1 = (3.0 / (4.0 * std::f64::consts::PI)).sqrt();
    assert!((real_sh(1, 1, [1.0, 0.0, 0.0]) + c1).abs() < 1e-12);
    assert!((real_sh(1, 0, [0.0, 0.0, 1.0]) - c1).abs() < 1e-12);
    assert!((real_sh(1, -1, [0.0, 1.0, 0.0]) + c1).abs() < 1e-12);
}
