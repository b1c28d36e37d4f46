//! Baseline tile-wise dataflow: preprocess every Gaussian, bind Gaussians to
//! the tiles their footprint touches, sort each tile's list by depth, then
//! blend each tile's pixels front to back.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{Category, TrafficLedger, ELLIPSE_SCALARS, GAUSS3D_SCALARS, KV_SCALARS};
use crate::error::{Error, Result};
use crate::math::{
    alpha, blend_step, eigenvalues_2x2, eval_sh, project_gaussian, radius_3sigma, view_transform,
    Cull, ExpMode, PixelRect, ProjectedGaussian, RadiusLaw,
};
use crate::scene::{Camera, Gaussian3D, GaussianModel, OutputImage};

/// Settings shared by the baseline renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub tile_size: u32,
    pub radius_law: RadiusLaw,
    pub exp_mode: ExpMode,
    pub alpha_min: f64,
    pub term_threshold: f64,
    pub dilation: f64,
    pub background: [f64; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            tile_size: 16,
            radius_law: RadiusLaw::ThreeSigma,
            exp_mode: ExpMode::Exact,
            alpha_min: 1.0 / 255.0,
            term_threshold: 1e-4,
            dilation: 0.3,
            background: [0.0; 3],
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 {
            return Err(Error::Config("tile size must be positive".into()));
        }
        check_unit_open("alpha_min", self.alpha_min)?;
        check_unit_open("term_threshold", self.term_threshold)?;
        if !(self.dilation >= 0.0 && self.dilation.is_finite()) {
            return Err(Error::Config(format!("invalid dilation {}", self.dilation)));
        }
        Ok(())
    }
}

pub(crate) fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Unit vector from the camera center towards `position`.
pub fn view_direction(position: [f64; 3], cam: &Camera) -> [f64; 3] {
    let c = cam.center();
    let d = [position[0] - c[0], position[1] - c[1], position[2] - c[2]];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if n > 0.0 {
        d.map(|v| v / n)
    } else {
        [0.0, 0.0, 1.0]
    }
}

pub(crate) fn shade(g: &Gaussian3D, cam: &Camera) -> [f64; 3] {
    eval_sh(&g.sh, view_direction(g.position, cam))
}

enum Preprocessed {
    NearCulled,
    Culled,
    Kept(ProjectedGaussian),
}

/// Projects and shades every Gaussian in front of the near plane, whether or
/// not it ends up on screen.
pub fn preprocess_all(
    model: &GaussianModel,
    cam: &Camera,
    cfg: &RenderConfig,
    ledger: &mut TrafficLedger,
) -> Vec<ProjectedGaussian> {
    let full = PixelRect::full(cam.width, cam.height);
    let results: Vec<Preprocessed> = model
        .gaussians
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mu_cam = view_transform(g.position, cam);
            if mu_cam[2] <= cam.znear {
                return Preprocessed::NearCulled;
            }
            let projected = project_gaussian(g, i as u32, mu_cam, cam, cfg.radius_law, cfg.dilation);
            let color = shade(g, cam);
            match projected {
                Ok(mut p) if p.overlaps(&full) => {
                    p.color = color;
                    Preprocessed::Kept(p)
                }
                Ok(_) | Err(Cull::Singular) | Err(Cull::BehindCamera) => Preprocessed::Culled,
            }
        })
        .collect();

    ledger.record(Category::Gauss3dAttr, GAUSS3D_SCALARS * model.count() as u64);
    let mut out = Vec::new();
    for r in results {
        match r {
            Preprocessed::NearCulled => {}
            Preprocessed::Culled => {
                ledger.ops.projections += 1;
                ledger.ops.sh_evals += 1;
            }
            Preprocessed::Kept(p) => {
                ledger.ops.projections += 1;
                ledger.ops.sh_evals += 1;
                ledger.record(Category::Ellipse2d, ELLIPSE_SCALARS);
                out.push(p);
            }
        }
    }
    out
}

/// Gaussian-to-tile bindings with per-tile depth-sorted lists.
#[derive(Debug, Clone, PartialEq)]
pub struct TileBinning {
    pub tile_size: u32,
    pub tiles_x: u32,
    pub tiles_y: u32,
    /// `(tile id, index into the projected list, depth)` in emission order.
    pub kv: Vec<(u32, u32, f64)>,
    /// Per tile, indices into the projected list sorted by (depth, source index).
    pub lists: Vec<Vec<u32>>,
}

impl TileBinning {
    pub fn tile_rect(&self, tile: u32, width: u32, height: u32) -> PixelRect {
        let tx = tile % self.tiles_x;
        let ty = tile / self.tiles_x;
        PixelRect::new(
            tx * self.tile_size,
            ty * self.tile_size,
            ((tx + 1) * self.tile_size).min(width),
            ((ty + 1) * self.tile_size).min(height),
        )
    }
}

/// Inclusive tile index range covered by the footprint of `g` along one axis.
fn tile_span(center: f64, radius: u32, tile: u32, tiles: u32) -> (u32, u32) {
    let r = radius as f64;
    let t = tile as f64;
    let lo = ((center - r) / t).floor().max(0.0);
    let hi = ((center + r) / t).floor().min(tiles as f64 - 1.0);
    (lo as u32, hi as u32)
}

pub fn bin_to_tiles(
    projected: &[ProjectedGaussian],
    cam: &Camera,
    cfg: &RenderConfig,
    ledger: &mut TrafficLedger,
) -> TileBinning {
    let ts = cfg.tile_size;
    let tiles_x = cam.width.div_ceil(ts);
    let tiles_y = cam.height.div_ceil(ts);
    let full = PixelRect::full(cam.width, cam.height);
    let mut kv = Vec::new();
    for (i, g) in projected.iter().enumerate() {
        if !g.overlaps(&full) {
            continue;
        }
        let (x0, x1) = tile_span(g.mean2d[0], g.radius, ts, tiles_x);
        let (y0, y1) = tile_span(g.mean2d[1], g.radius, ts, tiles_y);
        for ty in y0..=y1 {
            for tx in x0..=x1 {
                kv.push((ty * tiles_x + tx, i as u32, g.depth));
            }
        }
    }
    ledger.record(Category::KvPair, KV_SCALARS * kv.len() as u64);

    let mut sorted = kv.clone();
    sorted.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.2.total_cmp(&b.2))
            .then(projected[a.1 as usize].src.cmp(&projected[b.1 as usize].src))
    });
    let mut lists = vec![Vec::new(); (tiles_x * tiles_y) as usize];
    for (tile, idx, _) in sorted {
        lists[tile as usize].push(idx);
    }
    TileBinning {
        tile_size: ts,
        tiles_x,
        tiles_y,
        kv,
        lists,
    }
}

fn render_tile(
    list: &[u32],
    projected: &[ProjectedGaussian],
    rect: PixelRect,
    cfg: &RenderConfig,
) -> (Vec<[f64; 3]>, TrafficLedger) {
    let mut ledger = TrafficLedger::new();
    let n = rect.area();
    let w = rect.width() as usize;
    let mut t = vec![1.0f64; n];
    let mut c = vec![[0.0f64; 3]; n];
    let mut done = 0;
    for &gi in list {
        if done == n {
            break;
        }
        let g = &projected[gi as usize];
        ledger.record(Category::Ellipse2d, ELLIPSE_SCALARS);
        ledger.record_load(g.src);
        let Some(fp) = g.footprint_pixels(&rect) else {
            continue;
        };
        for (x, y) in fp.pixels() {
            let k = (y - rect.y0) as usize * w + (x - rect.x0) as usize;
            if t[k] < cfg.term_threshold {
                continue;
            }
            ledger.ops.alpha_evals += 1;
            let a = alpha(x, y, g, cfg.exp_mode);
            if a < cfg.alpha_min {
                continue;
            }
            let (tn, cn) = blend_step(t[k], a, g.color, c[k]);
            t[k] = tn;
            c[k] = cn;
            ledger.ops.blend_steps += 1;
            if tn < cfg.term_threshold {
                done += 1;
            }
        }
    }
    let bg = cfg.background;
    let out = c
        .iter()
        .zip(&t)
        .map(|(c, &t)| [c[0] + t * bg[0], c[1] + t * bg[1], c[2] + t * bg[2]])
        .collect();
    (out, ledger)
}

/// Renders every tile independently; the image does not depend on tile
/// scheduling.
pub fn render_tiles(
    bins: &TileBinning,
    projected: &[ProjectedGaussian],
    cam: &Camera,
    cfg: &RenderConfig,
    ledger: &mut TrafficLedger,
) -> OutputImage {
    let tiles: Vec<_> = (0..bins.tiles_x * bins.tiles_y)
        .into_par_iter()
        .map(|tile| {
            let rect = bins.tile_rect(tile, cam.width, cam.height);
            let (pixels, l) = render_tile(&bins.lists[tile as usize], projected, rect, cfg);
            (rect, pixels, l)
        })
        .collect();

    let mut rgb = vec![[0.0; 3]; cam.pixel_count()];
    for (rect, pixels, l) in tiles {
        ledger.merge(&l);
        let w = rect.width() as usize;
        for (i, p) in pixels.into_iter().enumerate() {
            let x = rect.x0 as usize + i % w;
            let y = rect.y0 as usize + i / w;
            rgb[y * cam.width as usize + x] = p;
        }
    }
    OutputImage::new(cam.width, cam.height, rgb)
}

/// Preprocess, bin and render in one call.
pub fn render(model: &GaussianModel, cam: &Camera, cfg: &RenderConfig, ledger: &mut TrafficLedger) -> OutputImage {
    let projected = preprocess_all(model, cam, cfg, ledger);
    let bins = bin_to_tiles(&projected, cam, cfg, ledger);
    render_tiles(&bins, &projected, cam, cfg, ledger)
}

/// Per-Gaussian pixel counts under three footprint estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Coverage {
    pub src: u32,
    /// Axis-aligned square of half-width `ceil(3 sqrt(lambda_max))`.
    pub aabb_px: u64,
    /// Oriented rectangle with half-extents `3 sqrt(lambda_i)` along the eigenvectors.
    pub obb_px: u64,
    /// Pixels whose exact alpha reaches 1/255.
    pub alpha_px: u64,
}

/// Unit eigenvectors of `cov` for `(l1, l2)`.
fn eigenvectors(cov: &crate::math::SymMat2, l1: f64) -> ([f64; 2], [f64; 2]) {
    let (a, b, c) = (cov.a, cov.b, cov.c);
    let v = if b.abs() > 1e-12 * (a.abs() + c.abs()).max(f64::MIN_POSITIVE) {
        if (l1 - a).abs() > (l1 - c).abs() {
            [b, l1 - a]
        } else {
            [l1 - c, b]
        }
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let v1 = [v[0] / n, v[1] / n];
    (v1, [-v1[1], v1[0]])
}

pub fn coverage_of(g: &ProjectedGaussian, bounds: &PixelRect) -> Coverage {
    let (l1, l2) = eigenvalues_2x2(&g.cov);
    let r = radius_3sigma(l1);
    let square = ProjectedGaussian { radius: r, ..g.clone() };
    let mut cov = Coverage {
        src: g.src,
        ..Coverage::default()
    };
    let threshold = 1.0 / 255.0;
    if let Some(fp) = square.footprint_pixels(bounds) {
        cov.aabb_px = fp.area() as u64;
        cov.alpha_px = fp
            .pixels()
            .filter(|&(x, y)| alpha(x, y, g, ExpMode::Exact) >= threshold)
            .count() as u64;
    }

    let (v1, v2) = eigenvectors(&g.cov, l1);
    let (h1, h2) = (3.0 * l1.max(0.0).sqrt(), 3.0 * l2.max(0.0).sqrt());
    let ex = h1 * v1[0].abs() + h2 * v2[0].abs();
    let ey = h1 * v1[1].abs() + h2 * v2[1].abs();
    let reach = ex.max(ey).ceil() as u32;
    let outer = ProjectedGaussian { radius: reach, ..g.clone() };
    if let Some(fp) = outer.footprint_pixels(bounds) {
        cov.obb_px = fp
            .pixels()
            .filter(|&(x, y)| {
                let dx = x as f64 + 0.5 - g.mean2d[0];
                let dy = y as f64 + 0.5 - g.mean2d[1];
                (dx * v1[0] + dy * v1[1]).abs() <= h1 && (dx * v2[0] + dy * v2[1]).abs() <= h2
            })
            .count() as u64;
    }
    cov
}

pub fn coverage_counts(projected: &[ProjectedGaussian], cam: &Camera) -> Vec<Coverage> {
    let bounds = PixelRect::full(cam.width, cam.height);
    projected.par_iter().map(|g| coverage_of(g, &bounds)).collect()
}
