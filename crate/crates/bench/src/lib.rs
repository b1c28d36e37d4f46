//! Fixed scenes shared by the benchmarks.

use splatflow::scene::{gen_scene, SceneSpec};
use splatflow::{Camera, GaussianModel};

/// Seeded random scene viewed by a `size`x`size` camera.
pub fn fixture(seed: u64, n: usize, size: u32) -> (GaussianModel, Camera) {
    let spec = SceneSpec {
        camera: Camera::looking_down_z(size, size, size as f64),
        ..SceneSpec::default()
    };
    let model = gen_scene(seed, n, &spec).expect("fixture scene");
    (model, spec.camera)
}
