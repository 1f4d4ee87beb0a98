//! Block-based adaptive compressive sensing.
//!
//! Images are cut into `B×B` blocks, each measured with prefixes of one shared
//! orthogonal matrix. A multi-stage scheduler probes every block with a few
//! extra rows, scores how much the reconstruction moved, and spends the
//! adaptive budget where the reconstruction is still changing. Blocks are
//! recovered with a proximal-gradient solver that soft-thresholds DCT
//! coefficients.
//!
//! ```no_run
//! use acs_core::{load_pgm, psnr, Pipeline, RunConfig};
//!
//! let img = load_pgm("scene.pgm")?;
//! let pipeline = Pipeline::new(RunConfig::new(0.25))?;
//! let run = pipeline.run_acs(&img)?;
//! println!("{:.2} dB", psnr(&img, &run.reconstruction)?);
//! # Ok::<(), acs_core::Error>(())
//! ```

pub mod allocator;
pub mod dct;
pub mod error;
pub mod image;
pub mod ledger;
mod linalg;
pub mod metrics;
pub mod pgm;
pub mod pipeline;
pub mod sensing;
pub mod solver;

pub use allocator::{
    apportion, innovation_scores, measurement_error_scores, saliency_scores, Criterion, ScoreVector,
};
pub use dct::Dct2;
pub use error::{Error, Result};
pub use image::{assemble, partition, BlockGrid, BlockLayout, Image};
pub use ledger::{make_ledger, BudgetLedger};
pub use metrics::{mse, psnr, ssim, QualityReport, PSNR_CAP_DB};
pub use pgm::{decode_pgm, encode_pgm, load_pgm, save_pgm, PgmError};
pub use pipeline::{
    run_acs, run_comparison, run_uniform, AcsRun, AllocationPlan, CriterionRun, Pipeline,
    RunConfig, StageTrace, UniformRun,
};
pub use sensing::{MeasurementSet, SensingMatrix};
pub use solver::{gradient_step, objective, prox_dct, reconstruct, BlockSolver, SolverConfig};
