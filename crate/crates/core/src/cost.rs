//! Memory-traffic and operation accounting, plus a roofline-style time model.
//!
//! Every scalar is accounted as 4 bytes. Record layouts:
//!
//! | category        | scalars | contents                                         |
//! |-----------------|---------|--------------------------------------------------|
//! | `gauss3d_attr`  | 59      | full stored Gaussian (position, SH, opacity, scale, rotation) |
//! | `gauss_position`| 3       | position only                                    |
//! | `gauss_shape`   | 8       | scale, rotation, opacity                         |
//! | `sh_coeff`      | 48      | SH coefficients                                  |
//! | `ellipse2d`     | 11      | mean (2), conic (3), depth, radius, log-opacity, color (3) |
//! | `kv_pair`       | 2       | tile id, Gaussian reference                      |
//! | `depth_id`      | 2       | depth, Gaussian id                               |
//! | `image_rw`      | 4       | per-pixel color and transmittance                |
//!
//! Categories are disjoint: the Gaussian-wise dataflow fetches the position,
//! shape and SH parts separately, while the tile-wise preprocessing fetches the
//! whole record at once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::MathError;

pub const SCALAR_BYTES: u64 = 4;
pub const ELLIPSE_SCALARS: u64 = 11;
pub const KV_SCALARS: u64 = 2;
pub const DEPTH_ID_SCALARS: u64 = 2;
pub const POSITION_SCALARS: u64 = 3;
pub const SHAPE_SCALARS: u64 = 8;
pub const SH_SCALARS: u64 = 48;
pub const GAUSS3D_SCALARS: u64 = 59;
pub const PIXEL_SCALARS: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Gauss3dAttr,
    GaussPosition,
    GaussShape,
    ShCoeff,
    Ellipse2d,
    KvPair,
    DepthId,
    ImageRw,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Gauss3dAttr,
        Category::GaussPosition,
        Category::GaussShape,
        Category::ShCoeff,
        Category::Ellipse2d,
        Category::KvPair,
        Category::DepthId,
        Category::ImageRw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Gauss3dAttr => "gauss3d_attr",
            Category::GaussPosition => "gauss_position",
            Category::GaussShape => "gauss_shape",
            Category::ShCoeff => "sh_coeff",
            Category::Ellipse2d => "ellipse2d",
            Category::KvPair => "kv_pair",
            Category::DepthId => "depth_id",
            Category::ImageRw => "image_rw",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub projections: u64,
    pub sh_evals: u64,
    pub alpha_evals: u64,
    pub blend_steps: u64,
}

impl OpCounters {
    pub fn total(&self) -> u64 {
        self.projections + self.sh_evals + self.alpha_evals + self.blend_steps
    }
}

/// Byte and operation counters for one frame.
///
/// `loads` counts, per source Gaussian, how many times its attributes were
/// brought into the compute pipeline: once per visited tile in the tile-wise
/// renderer, once per geometry fetch in the Gaussian-wise renderer.
/// Ledgers from parallel workers combine with [`TrafficLedger::merge`], which
/// is commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrafficLedger {
    bytes: [u64; 8],
    pub ops: OpCounters,
    loads: BTreeMap<u32, u32>,
}

impl TrafficLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, category: Category, scalars: u64) {
        self.bytes[category as usize] += scalars * SCALAR_BYTES;
    }

    pub fn record_load(&mut self, src: u32) {
        *self.loads.entry(src).or_insert(0) += 1;
    }

    pub fn bytes(&self, category: Category) -> u64 {
        self.bytes[category as usize]
    }

    pub fn bytes_total(&self) -> u64 {
        self.bytes.iter().sum()
    }

    /// SH scalars brought on chip, whether fetched alone or inside a full record.
    pub fn sh_scalars_loaded(&self) -> u64 {
        (self.bytes(Category::ShCoeff) + self.bytes(Category::Gauss3dAttr) / GAUSS3D_SCALARS * SH_SCALARS)
            / SCALAR_BYTES
    }

    pub fn load_count(&self, src: u32) -> u32 {
        self.loads.get(&src).copied().unwrap_or(0)
    }

    pub fn loads(&self) -> &BTreeMap<u32, u32> {
        &self.loads
    }

    /// Sum of per-Gaussian load counts.
    pub fn total_loads(&self) -> u64 {
        self.loads.values().map(|&v| v as u64).sum()
    }

    pub fn merge(&mut self, other: &TrafficLedger) {
        for (a, b) in self.bytes.iter_mut().zip(other.bytes) {
            *a += b;
        }
        self.ops.projections += other.ops.projections;
        self.ops.sh_evals += other.ops.sh_evals;
        self.ops.alpha_evals += other.ops.alpha_evals;
        self.ops.blend_steps += other.ops.blend_steps;
        for (&k, &v) in &other.loads {
            *self.loads.entry(k).or_insert(0) += v;
        }
    }

    pub fn load_stats(&self) -> LoadStats {
        per_gaussian_load_stats(self)
    }

    pub fn report(&self) -> LedgerReport {
        LedgerReport {
            bytes: Category::ALL
                .iter()
                .map(|&c| (c.name().to_string(), self.bytes(c)))
                .collect(),
            bytes_total: self.bytes_total(),
            sh_scalars_loaded: self.sh_scalars_loaded(),
            ops: self.ops,
            ops_total: self.ops.total(),
            load_histogram: self.load_stats().histogram,
        }
    }
}

/// JSON form of a ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub bytes: BTreeMap<String, u64>,
    pub bytes_total: u64,
    pub sh_scalars_loaded: u64,
    pub ops: OpCounters,
    pub ops_total: u64,
    /// load count -> number of Gaussians loaded that many times
    pub load_histogram: BTreeMap<u32, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadStats {
    pub gaussians: u64,
    pub mean: f64,
    pub max: u32,
    pub histogram: BTreeMap<u32, u64>,
}

/// Statistics over Gaussians loaded at least once.
pub fn per_gaussian_load_stats(ledger: &TrafficLedger) -> LoadStats {
    let mut histogram = BTreeMap::new();
    for &count in ledger.loads.values() {
        *histogram.entry(count).or_insert(0u64) += 1;
    }
    let gaussians = ledger.loads.len() as u64;
    let mean = if gaussians == 0 {
        0.0
    } else {
        ledger.total_loads() as f64 / gaussians as f64
    };
    LoadStats {
        gaussians,
        mean,
        max: ledger.loads.values().copied().max().unwrap_or(0),
        histogram,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnusedPreprocess {
    /// `1 - sh_evals(gcc) / sh_evals(tile)`
    pub fraction: f64,
    pub sh_bytes_tile: u64,
    pub sh_bytes_gcc: u64,
    pub sh_bytes_saved: i64,
}

/// Share of the baseline's color evaluations that the conditional dataflow
/// never performs. `None` when the baseline evaluated nothing.
pub fn unused_preprocess_fraction(base: &TrafficLedger, gcc: &TrafficLedger) -> Option<UnusedPreprocess> {
    if base.ops.sh_evals == 0 {
        return None;
    }
    let sh_bytes_tile = base.sh_scalars_loaded() * SCALAR_BYTES;
    let sh_bytes_gcc = gcc.sh_scalars_loaded() * SCALAR_BYTES;
    Some(UnusedPreprocess {
        fraction: 1.0 - gcc.ops.sh_evals as f64 / base.ops.sh_evals as f64,
        sh_bytes_tile,
        sh_bytes_gcc,
        sh_bytes_saved: sh_bytes_tile as i64 - sh_bytes_gcc as i64,
    })
}

/// Roofline estimate: the slower of compute and memory time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub bytes_total: u64,
    pub ops_total: u64,
    pub compute_rate: f64,
    pub bandwidth: f64,
    pub compute_time: f64,
    pub memory_time: f64,
    pub est_time: f64,
}

impl CostEstimate {
    pub fn new(bytes_total: u64, ops_total: u64, compute_rate: f64, bandwidth: f64) -> Result<Self, MathError> {
        if !(compute_rate > 0.0) {
            return Err(MathError::NonPositiveRate(compute_rate));
        }
        if !(bandwidth > 0.0) {
            return Err(MathError::NonPositiveRate(bandwidth));
        }
        let compute_time = ops_total as f64 / compute_rate;
        let memory_time = bytes_total as f64 / bandwidth;
        Ok(CostEstimate {
            bytes_total,
            ops_total,
            compute_rate,
            bandwidth,
            compute_time,
            memory_time,
            est_time: compute_time.max(memory_time),
        })
    }

    pub fn from_ledger(ledger: &TrafficLedger, compute_rate: f64, bandwidth: f64) -> Result<Self, MathError> {
        Self::new(ledger.bytes_total(), ledger.ops.total(), compute_rate, bandwidth)
    }

    pub fn is_compute_bound(&self) -> bool {
        self.compute_time >= self.memory_time
    }
}

/// Bandwidth at which a workload turns compute-bound.
pub fn plateau_bandwidth(ledger: &TrafficLedger, compute_rate: f64) -> f64 {
    let ops = ledger.ops.total();
    if ops == 0 {
        return 0.0;
    }
    ledger.bytes_total() as f64 * compute_rate / ops as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pipeline: String,
    pub bandwidth: f64,
    pub est_time: f64,
    pub compute_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub compute_rate: f64,
    pub rows: Vec<SweepRow>,
    /// Per pipeline, the bandwidth beyond which it is compute-bound.
    pub plateau: BTreeMap<String, f64>,
}

impl SweepTable {
    pub fn times(&self, pipeline: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.pipeline == pipeline)
            .map(|r| r.est_time)
            .collect()
    }

    /// Whether every pipeline's time is non-increasing as bandwidth grows.
    pub fn is_monotone(&self) -> bool {
        let mut by_pipeline: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for r in &self.rows {
            by_pipeline
                .entry(&r.pipeline)
                .or_default()
                .push((r.bandwidth, r.est_time));
        }
        by_pipeline.values_mut().all(|v| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v.windows(2).all(|w| w[1].1 <= w[0].1)
        })
    }
}

pub fn sweep_bandwidth(
    ledgers: &[(&str, &TrafficLedger)],
    compute_rate: f64,
    bandwidths: &[f64],
) -> Result<SweepTable, MathError> {
    let mut rows = Vec::with_capacity(ledgers.len() * bandwidths.len());
    for &(name, ledger) in ledgers {
        for &bw in bandwidths {
            let est = CostEstimate::from_ledger(ledger, compute_rate, bw)?;
            rows.push(SweepRow {
                pipeline: name.to_string(),
                bandwidth: bw,
                est_time: est.est_time,
                compute_bound: est.is_compute_bound(),
            });
        }
    }
    if !(compute_rate > 0.0) {
        return Err(MathError::NonPositiveRate(compute_rate));
    }
    Ok(SweepTable {
        compute_rate,
        plateau: ledgers
            .iter()
            .map(|&(name, l)| (name.to_string(), plateau_bandwidth(l, compute_rate)))
            .collect(),
        rows,
    })
}
