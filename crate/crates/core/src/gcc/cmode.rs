//! Sub-view partitioning for bounded on-chip framebuffers.

use rayon::prelude::*;

use super::{group_by_depth, render_gcc_with_stats, render_region, GccConfig, GccStats, DEFAULT_SUBVIEW};
use crate::cost::{Category, TrafficLedger, DEPTH_ID_SCALARS, POSITION_SCALARS, SHAPE_SCALARS};
use crate::error::{Error, Result};
use crate::math::{project_gaussian, view_transform, PixelRect};
use crate::scene::{Camera, GaussianModel, OutputImage};

/// Sub-view rectangles in row-major order.
pub fn subview_rects(width: u32, height: u32, size: u32) -> Vec<PixelRect> {
    let mut out = Vec::new();
    for y in (0..height).step_by(size as usize) {
        for x in (0..width).step_by(size as usize) {
            out.push(PixelRect::new(x, y, (x + size).min(width), (y + size).min(height)));
        }
    }
    out
}

/// Renders each sub-view independently over the Gaussians whose footprint
/// overlaps it. A single sub-view is the full-frame render.
pub fn render_cmode(model: &GaussianModel, cam: &Camera, cfg: &GccConfig, ledger: &mut TrafficLedger) -> Result<OutputImage> {
    if cfg.cmode.is_none() {
        return Err(Error::Config("compatibility mode requires a sub-view size".into()));
    }
    cfg.validate()?;
    Ok(render_cmode_with_stats(model, cam, cfg, ledger).0)
}

pub(super) fn render_cmode_with_stats(
    model: &GaussianModel,
    cam: &Camera,
    cfg: &GccConfig,
    ledger: &mut TrafficLedger,
) -> (OutputImage, GccStats) {
    let size = cfg.cmode.unwrap_or(DEFAULT_SUBVIEW);
    if size >= cam.width && size >= cam.height {
        let full = GccConfig {
            cmode: None,
            ..cfg.clone()
        };
        return render_gcc_with_stats(model, cam, &full, ledger);
    }

    let rects = subview_rects(cam.width, cam.height, size);
    let per_row = cam.width.div_ceil(size);

    // Spatial binning: position and shape fetch (counted as one load),
    // projection, and one depth/id record per (sub-view, Gaussian) assignment.
    let assigned: Vec<Vec<u32>> = model
        .gaussians
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mu_cam = view_transform(g.position, cam);
            if mu_cam[2] < cfg.depth_threshold || mu_cam[2] <= cam.znear {
                return Vec::new();
            }
            let Ok(p) = project_gaussian(g, i as u32, mu_cam, cam, cfg.radius_law, cfg.dilation) else {
                return Vec::new();
            };
            if p.radius == 0 {
                return Vec::new();
            }
            let [xl, xh, yl, yh] = p.footprint_bounds();
            let span = |lo: f64, hi: f64, n: u32| {
                let a = (lo / size as f64).floor().max(0.0);
                let b = (hi / size as f64).floor().min(n as f64 - 1.0);
                (a as i64, b as i64)
            };
            let (sx0, sx1) = span(xl, xh, per_row);
            let (sy0, sy1) = span(yl, yh, rects.len() as u32 / per_row);
            let mut out = Vec::new();
            for sy in sy0..=sy1 {
                for sx in sx0..=sx1 {
                    let v = (sy as u32) * per_row + sx as u32;
                    if p.overlaps(&rects[v as usize]) {
                        out.push(v);
                    }
                }
            }
            out
        })
        .collect();

    let mut members: Vec<Vec<(u32, f64)>> = vec![Vec::new(); rects.len()];
    let mut projected = 0u64;
    let mut assignments = 0u64;
    for (i, views) in assigned.iter().enumerate() {
        let g = &model.gaussians[i];
        let z = view_transform(g.position, cam)[2];
        if z >= cfg.depth_threshold && z > cam.znear {
            projected += 1;
            ledger.record_load(i as u32);
        }
        for &v in views {
            members[v as usize].push((i as u32, z));
            assignments += 1;
        }
    }
    ledger.record(Category::GaussPosition, POSITION_SCALARS * model.count() as u64);
    ledger.record(Category::GaussShape, SHAPE_SCALARS * projected);
    ledger.ops.projections += projected;
    ledger.record(Category::DepthId, DEPTH_ID_SCALARS * assignments);

    let results: Vec<_> = rects
        .par_iter()
        .zip(members)
        .map(|(rect, m)| {
            let mut local = TrafficLedger::new();
            let groups = group_by_depth(m, cfg);
            let (fb, stats) = render_region(&groups, model, cam, *rect, cfg, &mut local);
            (*rect, fb.finalize(cfg.background), stats, local)
        })
        .collect();

    let mut rgb = vec![[0.0; 3]; cam.pixel_count()];
    let mut stats = GccStats::default();
    for (rect, pixels, s, local) in results {
        ledger.merge(&local);
        stats.merge(&s);
        let w = rect.width() as usize;
        for (k, p) in pixels.into_iter().enumerate() {
            let x = rect.x0 as usize + k % w;
            let y = rect.y0 as usize + k / w;
            rgb[y * cam.width as usize + x] = p;
        }
    }
    (OutputImage::new(cam.width, cam.height, rgb), stats)
}
