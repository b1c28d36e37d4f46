use serde::{Deserialize, Serialize};

use super::GccConfig;
use crate::cost::{Category, TrafficLedger, DEPTH_ID_SCALARS, POSITION_SCALARS};
use crate::math::view_transform;
use crate::scene::{Camera, GaussianModel};

/// A run of Gaussians contiguous in depth, processed as one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthGroup {
    /// Smallest and largest member depth.
    pub depth_range: (f64, f64),
    /// `(source index, depth)` sorted by depth, then index.
    pub members: Vec<(u32, f64)>,
}

impl DepthGroup {
    fn from_members(members: Vec<(u32, f64)>) -> Self {
        let lo = members.first().map_or(0.0, |m| m.1);
        let hi = members.last().map_or(0.0, |m| m.1);
        DepthGroup {
            depth_range: (lo, hi),
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Depth-only pass: computes camera-space depth from positions, drops
/// Gaussians nearer than the visibility threshold and groups the rest.
pub fn stage1_group(
    model: &GaussianModel,
    cam: &Camera,
    cfg: &GccConfig,
    ledger: &mut TrafficLedger,
) -> Vec<DepthGroup> {
    ledger.record(Category::GaussPosition, POSITION_SCALARS * model.count() as u64);
    let retained: Vec<(u32, f64)> = model
        .gaussians
        .iter()
        .enumerate()
        .map(|(i, g)| (i as u32, view_transform(g.position, cam)[2]))
        .filter(|&(_, z)| z >= cfg.depth_threshold)
        .collect();
    ledger.record(Category::DepthId, DEPTH_ID_SCALARS * retained.len() as u64);
    group_by_depth(retained, cfg)
}

/// Uniform binning over `[threshold, max depth]` followed by splitting of
/// every bin holding more than `group_cap` members.
pub fn group_by_depth(members: Vec<(u32, f64)>, cfg: &GccConfig) -> Vec<DepthGroup> {
    if members.is_empty() {
        return Vec::new();
    }
    let lo = cfg.depth_threshold;
    let hi = members.iter().map(|m| m.1).fold(lo, f64::max);
    let nb = cfg.bin_count.max(1) as usize;
    let span = hi - lo;
    let mut bins: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nb];
    for m in members {
        let b = if span > 0.0 {
            (((m.1 - lo) / span * nb as f64) as usize).min(nb - 1)
        } else {
            0
        };
        bins[b].push(m);
    }

    let cap = cfg.group_cap.max(1) as usize;
    let mut groups = Vec::new();
    for mut bin in bins {
        if bin.is_empty() {
            continue;
        }
        bin.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        split(&bin, cap, &mut groups);
    }
    groups
}

fn split(members: &[(u32, f64)], cap: usize, out: &mut Vec<DepthGroup>) {
    if members.len() <= cap {
        out.push(DepthGroup::from_members(members.to_vec()));
        return;
    }
    let mid = members.len() / 2;
    let change = |k: usize| members[k].1 != members[k - 1].1;
    let at = (0..members.len())
        .flat_map(|d| [mid.checked_sub(d), Some(mid + d)])
        .flatten()
        .filter(|&k| k >= 1 && k < members.len())
        .find(|&k| change(k))
        .unwrap_or(mid);
    split(&members[..at], cap, out);
    split(&members[at..], cap, out);
}
