use crate::math::{blend_step, PixelRect};

/// Transmittance and color accumulators for one rendering region, with a
/// grid of square blocks carrying a termination mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    /// Region covered, in image pixel coordinates.
    pub rect: PixelRect,
    pub block_size: u32,
    pub blocks_x: u32,
    pub blocks_y: u32,
    pub term_threshold: f64,
    t: Vec<f64>,
    color: Vec<[f64; 3]>,
    t_mask: Vec<bool>,
    /// Per block, pixels whose T is still at or above the threshold.
    live: Vec<u32>,
}

impl FrameBuffer {
    pub fn new(rect: PixelRect, block_size: u32, term_threshold: f64) -> Self {
        let blocks_x = rect.width().div_ceil(block_size);
        let blocks_y = rect.height().div_ceil(block_size);
        let mut fb = FrameBuffer {
            rect,
            block_size,
            blocks_x,
            blocks_y,
            term_threshold,
            t: vec![1.0; rect.area()],
            color: vec![[0.0; 3]; rect.area()],
            t_mask: vec![false; (blocks_x * blocks_y) as usize],
            live: vec![0; (blocks_x * blocks_y) as usize],
        };
        for by in 0..blocks_y {
            for bx in 0..blocks_x {
                fb.live[(by * blocks_x + bx) as usize] = fb.block_rect(bx, by).area() as u32;
            }
        }
        fb
    }

    pub fn width(&self) -> u32 {
        self.rect.width()
    }

    pub fn height(&self) -> u32 {
        self.rect.height()
    }

    /// Pixel rectangle of block `(bx, by)` in image coordinates.
    pub fn block_rect(&self, bx: u32, by: u32) -> PixelRect {
        let b = self.block_size;
        PixelRect::new(
            self.rect.x0 + bx * b,
            self.rect.y0 + by * b,
            (self.rect.x0 + (bx + 1) * b).min(self.rect.x1),
            (self.rect.y0 + (by + 1) * b).min(self.rect.y1),
        )
    }

    pub fn block_of(&self, x: u32, y: u32) -> (u32, u32) {
        (
            (x - self.rect.x0) / self.block_size,
            (y - self.rect.y0) / self.block_size,
        )
    }

    fn index(&self, x: u32, y: u32) -> usize {
        (y - self.rect.y0) as usize * self.rect.width() as usize + (x - self.rect.x0) as usize
    }

    pub fn t_at(&self, x: u32, y: u32) -> f64 {
        self.t[self.index(x, y)]
    }

    pub fn color_at(&self, x: u32, y: u32) -> [f64; 3] {
        self.color[self.index(x, y)]
    }

    pub fn is_masked(&self, bx: u32, by: u32) -> bool {
        self.t_mask[(by * self.blocks_x + bx) as usize]
    }

    pub fn all_masked(&self) -> bool {
        self.t_mask.iter().all(|&m| m)
    }

    pub fn masked_count(&self) -> usize {
        self.t_mask.iter().filter(|&&m| m).count()
    }

    /// Whether pixel `(x, y)` still accepts contributions.
    pub fn is_active(&self, x: u32, y: u32) -> bool {
        self.t_at(x, y) >= self.term_threshold
    }

    /// Blends one contribution into an active pixel.
    pub fn blend(&mut self, x: u32, y: u32, alpha: f64, color: [f64; 3]) {
        let i = self.index(x, y);
        let (t, c) = blend_step(self.t[i], alpha, color, self.color[i]);
        self.t[i] = t;
        self.color[i] = c;
        if t < self.term_threshold {
            let (bx, by) = self.block_of(x, y);
            self.live[(by * self.blocks_x + bx) as usize] -= 1;
        }
    }

    /// Sets the mask on every block with no active pixel left.
    pub fn update_masks(&mut self) {
        for (m, &l) in self.t_mask.iter_mut().zip(&self.live) {
            if l == 0 {
                *m = true;
            }
        }
    }

    /// Final colors, row-major over the region: accumulated color plus the
    /// background weighted by the remaining transmittance.
    pub fn finalize(&self, background: [f64; 3]) -> Vec<[f64; 3]> {
        self.color
            .iter()
            .zip(&self.t)
            .map(|(c, &t)| {
                [
                    c[0] + t * background[0],
                    c[1] + t * background[1],
                    c[2] + t * background[2],
                ]
            })
            .collect()
    }
}
