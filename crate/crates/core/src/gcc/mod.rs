//! Gaussian-wise dataflow with depth grouping and cross-stage conditional
//! processing.
//!
//! Gaussians are grouped by depth from their positions alone. Groups are
//! then processed near to far: project (stage 2), shade and sort the
//! survivors (stage 3), and blend each Gaussian into the framebuffer over
//! only the pixels it influences (stage 4). Once every block of the
//! framebuffer has terminated, the remaining groups are never fetched.

mod boundary;
mod cmode;
mod framebuffer;
mod group;

pub use boundary::{
    identify_boundary_pixels, nearest_in_bounds, traverse_blocks, BlockTraversal, BoundaryPixels,
};
pub use cmode::{render_cmode, subview_rects};
pub use framebuffer::FrameBuffer;
pub use group::{group_by_depth, stage1_group, DepthGroup};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{Category, TrafficLedger, POSITION_SCALARS, SHAPE_SCALARS, SH_SCALARS};
use crate::error::{Error, Result};
use crate::math::{
    alpha, project_gaussian, view_transform, ExpMode, PixelRect, ProjectedGaussian, RadiusLaw,
};
use crate::scene::{Camera, GaussianModel, OutputImage};
use crate::tile::{check_unit_open, shade, RenderConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Pixel-level flood fill from the center.
    PixelBfs,
    /// Block-level search with direction pruning and termination masks.
    #[default]
    BlockOctant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GccConfig {
    /// Maximum members per depth group.
    pub group_cap: u32,
    /// Gaussians nearer than this camera depth are dropped.
    pub depth_threshold: f64,
    /// Uniform depth bins before capacity splitting.
    pub bin_count: u32,
    pub block_size: u32,
    pub boundary_mode: BoundaryMode,
    pub radius_law: RadiusLaw,
    pub exp_mode: ExpMode,
    pub alpha_min: f64,
    pub term_threshold: f64,
    pub dilation: f64,
    /// Sub-view edge length; `None` renders the frame as one view.
    pub cmode: Option<u32>,
    pub background: [f64; 3],
}

impl Default for GccConfig {
    fn default() -> Self {
        GccConfig {
            group_cap: 256,
            depth_threshold: 0.2,
            bin_count: 1024,
            block_size: 8,
            boundary_mode: BoundaryMode::default(),
            radius_law: RadiusLaw::OmegaSigma,
            exp_mode: ExpMode::Exact,
            alpha_min: 1.0 / 255.0,
            term_threshold: 1e-4,
            dilation: 0.3,
            cmode: None,
            background: [0.0; 3],
        }
    }
}

pub const DEFAULT_SUBVIEW: u32 = 128;

impl GccConfig {
    /// Configuration whose per-pixel blend sequences match the tile renderer
    /// under `tile`.
    pub fn matching(tile: &RenderConfig) -> Self {
        GccConfig {
            radius_law: tile.radius_law,
            exp_mode: tile.exp_mode,
            alpha_min: tile.alpha_min,
            term_threshold: tile.term_threshold,
            dilation: tile.dilation,
            background: tile.background,
            ..GccConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_cap == 0 {
            return Err(Error::Config("group cap must be at least 1".into()));
        }
        if self.bin_count == 0 {
            return Err(Error::Config("bin count must be at least 1".into()));
        }
        if self.block_size == 0 {
            return Err(Error::Config("block size must be positive".into()));
        }
        if !self.depth_threshold.is_finite() {
            return Err(Error::Config("depth threshold must be finite".into()));
        }
        check_unit_open("alpha_min", self.alpha_min)?;
        check_unit_open("term_threshold", self.term_threshold)?;
        if !(self.dilation >= 0.0 && self.dilation.is_finite()) {
            return Err(Error::Config(format!("invalid dilation {}", self.dilation)));
        }
        if let Some(s) = self.cmode {
            if s < self.block_size {
                return Err(Error::Config(format!(
                    "sub-view size {s} is smaller than block size {}",
                    self.block_size
                )));
            }
        }
        Ok(())
    }
}

/// Fetches position and shape of each group member and projects it.
/// Survivors are on screen within `region`, in front of the near plane and
/// have a nonzero radius.
pub fn stage2_project(
    group: &DepthGroup,
    model: &GaussianModel,
    cam: &Camera,
    region: &PixelRect,
    cfg: &GccConfig,
    ledger: &mut TrafficLedger,
) -> Vec<ProjectedGaussian> {
    let n = group.len() as u64;
    ledger.record(Category::GaussPosition, POSITION_SCALARS * n);
    ledger.record(Category::GaussShape, SHAPE_SCALARS * n);
    ledger.ops.projections += n;
    for &(src, _) in &group.members {
        ledger.record_load(src);
    }
    let project = |&(src, _): &(u32, f64)| {
        let g = &model.gaussians[src as usize];
        let mu_cam = view_transform(g.position, cam);
        if mu_cam[2] <= cam.znear {
            return None;
        }
        project_gaussian(g, src, mu_cam, cam, cfg.radius_law, cfg.dilation)
            .ok()
            .filter(|p| p.radius > 0 && p.overlaps(region))
    };
    if group.len() >= 64 {
        group.members.par_iter().filter_map(project).collect()
    } else {
        group.members.iter().filter_map(project).collect()
    }
}

/// Fetches SH for the survivors only, shades them and sorts by depth, then
/// source index.
pub fn stage3_color_sort(
    mut projected: Vec<ProjectedGaussian>,
    model: &GaussianModel,
    cam: &Camera,
    ledger: &mut TrafficLedger,
) -> Vec<ProjectedGaussian> {
    let n = projected.len() as u64;
    ledger.record(Category::ShCoeff, SH_SCALARS * n);
    ledger.ops.sh_evals += n;
    for p in &mut projected {
        p.color = shade(&model.gaussians[p.src as usize], cam);
    }
    projected.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.src.cmp(&b.src)));
    projected
}

/// Blends one Gaussian into the framebuffer over the pixels selected by the
/// configured boundary mode, then refreshes the termination masks.
pub fn stage4_blend(g: &ProjectedGaussian, fb: &mut FrameBuffer, cfg: &GccConfig, ledger: &mut TrafficLedger) {
    match cfg.boundary_mode {
        BoundaryMode::PixelBfs => {
            let found = identify_boundary_pixels(g, &fb.rect, cfg);
            ledger.ops.alpha_evals += found.evaluated as u64;
            for (&(x, y), &a) in found.pixels.iter().zip(&found.alphas) {
                let (bx, by) = fb.block_of(x, y);
                if fb.is_masked(bx, by) || !fb.is_active(x, y) {
                    continue;
                }
                fb.blend(x, y, a, g.color);
                ledger.ops.blend_steps += 1;
            }
        }
        BoundaryMode::BlockOctant => {
            let traversal = traverse_blocks(g, fb, cfg);
            let Some(fp) = g.footprint_pixels(&fb.rect) else {
                return;
            };
            for &(bx, by) in &traversal.blocks {
                let Some(px) = fb.block_rect(bx, by).intersect(&fp) else {
                    continue;
                };
                for (x, y) in px.pixels() {
                    if !fb.is_active(x, y) {
                        continue;
                    }
                    ledger.ops.alpha_evals += 1;
                    let a = alpha(x, y, g, cfg.exp_mode);
                    if a < cfg.alpha_min {
                        continue;
                    }
                    fb.blend(x, y, a, g.color);
                    ledger.ops.blend_steps += 1;
                }
            }
        }
    }
    fb.update_masks();
}

/// Group-level progress of one render.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GccStats {
    pub groups: usize,
    pub groups_processed: usize,
    /// Groups bypassed once the whole region had terminated.
    pub groups_skipped: usize,
    pub gaussians_blended: usize,
    pub masked_blocks: usize,
}

impl GccStats {
    pub fn merge(&mut self, o: &GccStats) {
        self.groups += o.groups;
        self.groups_processed += o.groups_processed;
        self.groups_skipped += o.groups_skipped;
        self.gaussians_blended += o.gaussians_blended;
        self.masked_blocks += o.masked_blocks;
    }
}

/// Runs stages 2 to 4 over `groups` for the pixels of `region`.
pub(crate) fn render_region(
    groups: &[DepthGroup],
    model: &GaussianModel,
    cam: &Camera,
    region: PixelRect,
    cfg: &GccConfig,
    ledger: &mut TrafficLedger,
) -> (FrameBuffer, GccStats) {
    let mut fb = FrameBuffer::new(region, cfg.block_size, cfg.term_threshold);
    let mut stats = GccStats {
        groups: groups.len(),
        ..GccStats::default()
    };
    for group in groups {
        if fb.all_masked() {
            stats.groups_skipped += 1;
            continue;
        }
        stats.groups_processed += 1;
        let projected = stage2_project(group, model, cam, &region, cfg, ledger);
        let sorted = stage3_color_sort(projected, model, cam, ledger);
        for g in &sorted {
            stage4_blend(g, &mut fb, cfg, ledger);
        }
        stats.gaussians_blended += sorted.len();
    }
    stats.masked_blocks = fb.masked_count();
    (fb, stats)
}

/// Renders the frame Gaussian by Gaussian; with `cmode` set, delegates to
/// [`render_cmode`].
pub fn render_gcc(model: &GaussianModel, cam: &Camera, cfg: &GccConfig, ledger: &mut TrafficLedger) -> OutputImage {
    render_gcc_with_stats(model, cam, cfg, ledger).0
}

pub fn render_gcc_with_stats(
    model: &GaussianModel,
    cam: &Camera,
    cfg: &GccConfig,
    ledger: &mut TrafficLedger,
) -> (OutputImage, GccStats) {
    if cfg.cmode.is_some() {
        return cmode::render_cmode_with_stats(model, cam, cfg, ledger);
    }
    let groups = stage1_group(model, cam, cfg, ledger);
    let region = PixelRect::full(cam.width, cam.height);
    let (fb, stats) = render_region(&groups, model, cam, region, cfg, ledger);
    (
        OutputImage::new(cam.width, cam.height, fb.finalize(cfg.background)),
        stats,
    )
}
