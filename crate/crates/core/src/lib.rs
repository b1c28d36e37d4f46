//! CPU simulation of two 3D Gaussian Splatting dataflows: the conventional
//! tile-wise renderer and a Gaussian-wise renderer with depth grouping,
//! cross-stage conditional processing and block-level boundary search. Both
//! render bit-comparable images and account for memory traffic and
//! operation counts in a [`TrafficLedger`].

pub mod cost;
pub mod error;
pub mod gcc;
pub mod math;
pub mod metrics;
pub mod scene;
pub mod tile;

pub use cost::{Category, CostEstimate, OpCounters, TrafficLedger};
pub use error::{Error, MathError, Result};
pub use gcc::{render_cmode, render_gcc, BoundaryMode, GccConfig};
pub use math::{ExpLut, ExpMode, PixelRect, ProjectedGaussian, RadiusLaw};
pub use metrics::{coverage_report, psnr, CoverageTotals, QualityReport};
pub use scene::{Camera, Gaussian3D, GaussianModel, OutputImage};
pub use tile::{render as render_tiles_full, RenderConfig};
