//! Locating the pixels a Gaussian actually influences without scanning its
//! whole bounding square.

use std::collections::VecDeque;

use super::{FrameBuffer, GccConfig};
use crate::math::{alpha, effective_quad_bound, PixelRect, ProjectedGaussian};

/// Result of the pixel flood fill.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryPixels {
    /// Passing pixels in visit order.
    pub pixels: Vec<(u32, u32)>,
    /// Alpha of each passing pixel.
    pub alphas: Vec<f64>,
    /// Number of alpha evaluations performed.
    pub evaluated: usize,
}

/// In-bounds pixel nearest to the projected center.
pub fn nearest_in_bounds(p: [f64; 2], bounds: &PixelRect) -> (u32, u32) {
    let clamp = |v: f64, lo: u32, hi: u32| v.floor().clamp(lo as f64, (hi - 1) as f64) as u32;
    (clamp(p[0], bounds.x0, bounds.x1), clamp(p[1], bounds.y0, bounds.y1))
}

const NEIGHBORS: [(i32, i32); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Breadth-first search over 8-connected pixels from the in-bounds pixel
/// nearest the center. A pixel passes when it lies in the footprint square
/// and its alpha reaches `alpha_min`; only passing pixels are expanded.
pub fn identify_boundary_pixels(g: &ProjectedGaussian, bounds: &PixelRect, cfg: &GccConfig) -> BoundaryPixels {
    let mut out = BoundaryPixels::default();
    let Some(fp) = g.footprint_pixels(bounds) else {
        return out;
    };
    let w = fp.width() as usize;
    let mut visited = vec![false; fp.area()];
    let mut queue = VecDeque::new();
    let seed = nearest_in_bounds(g.mean2d, bounds);
    if !fp.contains(seed.0, seed.1) {
        return out;
    }
    let key = |(x, y): (u32, u32)| (y - fp.y0) as usize * w + (x - fp.x0) as usize;
    visited[key(seed)] = true;
    queue.push_back(seed);
    while let Some(p) = queue.pop_front() {
        out.evaluated += 1;
        let a = alpha(p.0, p.1, g, cfg.exp_mode);
        if a < cfg.alpha_min {
            continue;
        }
        out.pixels.push(p);
        out.alphas.push(a);
        for (dx, dy) in NEIGHBORS {
            let nx = p.0 as i64 + dx as i64;
            let ny = p.1 as i64 + dy as i64;
            if nx < fp.x0 as i64 || ny < fp.y0 as i64 || nx >= fp.x1 as i64 || ny >= fp.y1 as i64 {
                continue;
            }
            let n = (nx as u32, ny as u32);
            let k = key(n);
            if !visited[k] {
                visited[k] = true;
                queue.push_back(n);
            }
        }
    }
    out
}

/// Blocks selected for one Gaussian.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockTraversal {
    /// Unmasked blocks that may hold passing pixels, in visit order.
    pub blocks: Vec<(u32, u32)>,
    /// Blocks dequeued and tested.
    pub evaluated: usize,
    /// Blocks marked visited by direction pruning without a test.
    pub pruned: usize,
}

/// Closed rectangle of pixel-center coordinates.
#[derive(Debug, Clone, Copy)]
struct Span {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Span {
    fn intersect(&self, o: &Span) -> Option<Span> {
        let s = Span {
            x0: self.x0.max(o.x0),
            x1: self.x1.min(o.x1),
            y0: self.y0.max(o.y0),
            y1: self.y1.min(o.y1),
        };
        (s.x0 <= s.x1 && s.y0 <= s.y1).then_some(s)
    }
}

/// Minimum of the Mahalanobis quadratic form over a closed rectangle, and
/// the point where it is attained.
struct QuadForm {
    mean: [f64; 2],
    a: f64,
    b: f64,
    c: f64,
}

impl QuadForm {
    fn eval(&self, dx: f64, dy: f64) -> f64 {
        self.a * dx * dx + 2.0 * self.b * dx * dy + self.c * dy * dy
    }

    /// Minimum along `x = const`, `y` in `[y0, y1]`.
    fn min_vertical(&self, x: f64, y0: f64, y1: f64) -> (f64, [f64; 2]) {
        let dx = x - self.mean[0];
        let dy = (-self.b * dx / self.c).clamp(y0 - self.mean[1], y1 - self.mean[1]);
        (self.eval(dx, dy), [x, self.mean[1] + dy])
    }

    fn min_horizontal(&self, y: f64, x0: f64, x1: f64) -> (f64, [f64; 2]) {
        let dy = y - self.mean[1];
        let dx = (-self.b * dy / self.a).clamp(x0 - self.mean[0], x1 - self.mean[0]);
        (self.eval(dx, dy), [self.mean[0] + dx, y])
    }

    fn min_rect(&self, s: &Span) -> (f64, [f64; 2]) {
        let [mx, my] = self.mean;
        if mx >= s.x0 && mx <= s.x1 && my >= s.y0 && my <= s.y1 {
            return (0.0, self.mean);
        }
        [
            self.min_vertical(s.x0, s.y0, s.y1),
            self.min_vertical(s.x1, s.y0, s.y1),
            self.min_horizontal(s.y0, s.x0, s.x1),
            self.min_horizontal(s.y1, s.x0, s.x1),
        ]
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
    }
}

const DIRECTIONS: [(i32, i32); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Breadth-first search over the block grid, restricted to blocks touching
/// the footprint square.
///
/// The region searched is the set of points inside the footprint square whose
/// quadratic form is small enough for alpha to reach `alpha_min`; it is
/// convex, so the blocks meeting it are 8-connected and the search starts in
/// the block holding its point of minimum quadratic form. A block is live
/// when its area meets the region. From each live block, a direction whose
/// outward edges the region does not cross cannot reach a live block, and the
/// whole ray of blocks in that direction is marked visited. Masked live
/// blocks keep the search connected but are not returned.
pub fn traverse_blocks(g: &ProjectedGaussian, fb: &FrameBuffer, cfg: &GccConfig) -> BlockTraversal {
    let mut out = BlockTraversal::default();
    let Some(qmax) = effective_quad_bound(g.log_opacity, cfg.alpha_min, cfg.exp_mode) else {
        return out;
    };
    let qmax = qmax * (1.0 + 1e-5) + 1e-4;
    let Some(fp) = g.footprint_pixels(&fb.rect) else {
        return out;
    };
    let q = QuadForm {
        mean: g.mean2d,
        a: g.inv_cov.a,
        b: g.inv_cov.b,
        c: g.inv_cov.c,
    };
    let centers = Span {
        x0: fp.x0 as f64 + 0.5,
        x1: fp.x1 as f64 - 0.5,
        y0: fp.y0 as f64 + 0.5,
        y1: fp.y1 as f64 - 0.5,
    };
    let (qmin, start) = q.min_rect(&centers);
    if qmin > qmax {
        return out;
    }

    // Block grid restricted to the footprint.
    let (bx0, by0) = fb.block_of(fp.x0, fp.y0);
    let (bx1, by1) = fb.block_of(fp.x1 - 1, fp.y1 - 1);
    let nx = (bx1 - bx0 + 1) as i32;
    let ny = (by1 - by0 + 1) as i32;
    let bs = fb.block_size as f64;
    let cell = |i: i32, j: i32| -> Span {
        let x = fb.rect.x0 as f64 + (bx0 as i32 + i) as f64 * bs;
        let y = fb.rect.y0 as f64 + (by0 as i32 + j) as f64 * bs;
        Span {
            x0: x,
            x1: x + bs,
            y0: y,
            y1: y + bs,
        }
    };
    let crosses = |s: Span| centers.intersect(&s).is_some_and(|s| q.min_rect(&s).0 <= qmax);

    let mut visited = vec![false; (nx * ny) as usize];
    let idx = |i: i32, j: i32| (j * nx + i) as usize;
    let si = (((start[0] - fb.rect.x0 as f64) / bs).floor() as i32 - bx0 as i32).clamp(0, nx - 1);
    let sj = (((start[1] - fb.rect.y0 as f64) / bs).floor() as i32 - by0 as i32).clamp(0, ny - 1);
    let mut queue = VecDeque::from([(si, sj)]);
    visited[idx(si, sj)] = true;
    let mut any_unmasked = false;

    while let Some((i, j)) = queue.pop_front() {
        out.evaluated += 1;
        let c = cell(i, j);
        if !crosses(c) {
            continue;
        }
        let block = (bx0 + i as u32, by0 + j as u32);
        if !fb.is_masked(block.0, block.1) {
            any_unmasked = true;
            out.blocks.push(block);
        }
        for (di, dj) in DIRECTIONS {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= nx || nj >= ny || visited[idx(ni, nj)] {
                continue;
            }
            let east_west = (di != 0).then(|| {
                let x = if di > 0 { c.x1 } else { c.x0 };
                Span { x0: x, x1: x, ..c }
            });
            let north_south = (dj != 0).then(|| {
                let y = if dj > 0 { c.y1 } else { c.y0 };
                Span { y0: y, y1: y, ..c }
            });
            let open = east_west.is_some_and(&crosses) || north_south.is_some_and(&crosses);
            if open {
                visited[idx(ni, nj)] = true;
                queue.push_back((ni, nj));
            } else {
                let (mut ri, mut rj) = (ni, nj);
                while ri >= 0 && rj >= 0 && ri < nx && rj < ny {
                    if !visited[idx(ri, rj)] {
                        visited[idx(ri, rj)] = true;
                        out.pruned += 1;
                    }
                    ri += di;
                    rj += dj;
                }
            }
        }
    }
    if !any_unmasked {
        out.blocks.clear();
    }
    out
}
