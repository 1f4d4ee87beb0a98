//! The multi-stage adaptive sampling loop and the uniform-sampling baseline.
//!
//! Every block first receives `round(SR_init·B²)` measurements. Each of the
//! `S` stages then
//!
//! 1. adds the same number of innovation-sampling rows to every block,
//! 2. reconstructs the image from the measurements before and after those rows
//!    with the lightweight solver and scores every block, and
//! 3. spends the stage budget in proportion to the scores, never letting a
//!    block's cumulative count exceed `floor(s·B²/S)`.
//!
//! The final image comes from the full solver on all measurements. Ground
//! truth is only read to fill the PSNR field of the stage traces.

use std::sync::Arc;

use crate::allocator::{
    apportion, innovation_scores, measurement_error_scores, saliency_scores, Criterion, ScoreVector,
};
use crate::error::{Error, Result};
use crate::image::{partition, Image};
use crate::ledger::{make_ledger, BudgetLedger};
use crate::metrics::{psnr, QualityReport};
use crate::sensing::{MeasurementSet, SensingMatrix};
use crate::solver::{BlockSolver, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sr: f64,
    pub sr_init: f64,
    pub stages: usize,
    /// Innovation sampling rate; `(SR − SR_init)/(2S)` when `None`.
    pub sr_is: Option<f64>,
    pub block_size: usize,
    pub allocator: Criterion,
    pub ie_solver: SolverConfig,
    pub final_solver: SolverConfig,
    pub seed: u64,
}

impl RunConfig {
    pub const DEFAULT_SR_INIT: f64 = 0.02;
    pub const DEFAULT_STAGES: usize = 4;
    pub const DEFAULT_BLOCK_SIZE: usize = 32;
    pub const DEFAULT_SEED: u64 = 42;

    pub fn new(sr: f64) -> Self {
        Self {
            sr,
            sr_init: Self::DEFAULT_SR_INIT,
            stages: Self::DEFAULT_STAGES,
            sr_is: None,
            block_size: Self::DEFAULT_BLOCK_SIZE,
            allocator: Criterion::Innovation,
            ie_solver: SolverConfig::lightweight(),
            final_solver: SolverConfig::full(),
            seed: Self::DEFAULT_SEED,
        }
    }

    pub fn ledger(&self, height: usize, width: usize) -> Result<BudgetLedger> {
        make_ledger(
            height,
            width,
            self.block_size,
            self.sr,
            self.sr_init,
            self.stages,
            self.sr_is,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.ie_solver.validate()?;
        self.final_solver.validate()?;
        // a 1x1 probe checks the rate relations independently of image size
        self.ledger(1, 1).map(|_| ())
    }
}

/// Sample counts committed by a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationPlan {
    pub block_area: usize,
    /// Samples per block before the first stage.
    pub initial: Vec<usize>,
    /// Innovation-sampling rows per stage and block.
    pub innovation: Vec<Vec<usize>>,
    /// Adaptive samples `M_{n,s}` per stage and block.
    pub adaptive: Vec<Vec<usize>>,
    /// Cumulative samples per block after each stage.
    pub cumulative: Vec<Vec<usize>>,
    /// Per-block cumulative cap in force at each stage.
    pub caps: Vec<usize>,
    /// Adaptive budget actually spent at each stage.
    pub budgets: Vec<usize>,
}

impl AllocationPlan {
    pub fn stage_count(&self) -> usize {
        self.cumulative.len()
    }

    pub fn final_counts(&self) -> &[usize] {
        self.cumulative.last().map_or(&self.initial[..], |c| &c[..])
    }

    pub fn total(&self) -> usize {
        self.final_counts().iter().sum()
    }
}

/// What happened at one adaptive stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    /// 1-based stage index.
    pub stage: usize,
    pub criterion: Criterion,
    /// Allocation score per block (innovation `α_{n,s}` for the default
    /// criterion).
    pub scores: Vec<f64>,
    pub innovation_sampled: Vec<usize>,
    pub allocated: Vec<usize>,
    pub cumulative: Vec<usize>,
    pub cap: usize,
    /// Adaptive budget available at this stage, including any carried-over
    /// samples that earlier caps could not absorb.
    pub budget: usize,
    /// Samples deferred to the next stage because of the cap.
    pub deferred: usize,
    /// PSNR of the post-innovation lightweight reconstruction.
    pub psnr_is: f64,
}

impl StageTrace {
    pub fn total_score(&self) -> f64 {
        self.scores.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct AcsRun {
    pub reconstruction: Image,
    pub plan: AllocationPlan,
    pub traces: Vec<StageTrace>,
    pub ledger: BudgetLedger,
    pub measurements: MeasurementSet,
}

#[derive(Debug, Clone)]
pub struct UniformRun {
    pub reconstruction: Image,
    pub plan: AllocationPlan,
    pub measurements: MeasurementSet,
}

/// Outcome of one criterion in a comparison.
#[derive(Debug, Clone)]
pub struct CriterionRun {
    pub criterion: Criterion,
    pub reconstruction: Image,
    pub plan: AllocationPlan,
    /// Empty for the uniform baseline.
    pub traces: Vec<StageTrace>,
    pub quality: QualityReport,
}

impl CriterionRun {
    pub fn total_samples(&self) -> usize {
        self.plan.total()
    }
}

/// A run configuration bound to its (shared) sensing matrix.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: RunConfig,
    matrix: Arc<SensingMatrix>,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let matrix = Arc::new(SensingMatrix::build(cfg.seed, cfg.block_size)?);
        Ok(Self { cfg, matrix })
    }

    /// Reuses an already generated matrix, which must match the seed and block
    /// size of `cfg`.
    pub fn with_matrix(cfg: RunConfig, matrix: Arc<SensingMatrix>) -> Result<Self> {
        cfg.validate()?;
        if matrix.seed() != cfg.seed || matrix.block_size() != cfg.block_size {
            return Err(Error::InvalidConfig(format!(
                "matrix (seed {}, B = {}) does not match the configuration (seed {}, B = {})",
                matrix.seed(),
                matrix.block_size(),
                cfg.seed,
                cfg.block_size
            )));
        }
        Ok(Self { cfg, matrix })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn matrix(&self) -> &Arc<SensingMatrix> {
        &self.matrix
    }

    /// Multi-stage run with the configured allocation criterion.
    pub fn run_acs(&self, img: &Image) -> Result<AcsRun> {
        self.run_adaptive(img, self.cfg.allocator)
    }

    pub fn run_adaptive(&self, img: &Image, criterion: Criterion) -> Result<AcsRun> {
        let cfg = &self.cfg;
        let matrix = &*self.matrix;
        let ledger = cfg.ledger(img.height(), img.width())?;
        let grid = partition(img, cfg.block_size);
        let layout = *grid.layout();
        let blocks = grid.len();
        let solver = BlockSolver::new(matrix);

        let mut ms = MeasurementSet::new(blocks, matrix);
        for n in 0..blocks {
            ms.sample_more(n, grid.block(n), matrix, ledger.init_per_block)?;
        }
        let initial = ms.counts();
        let mut plan = AllocationPlan {
            block_area: ledger.block_area,
            initial: initial.clone(),
            innovation: Vec::with_capacity(ledger.stages),
            adaptive: Vec::with_capacity(ledger.stages),
            cumulative: Vec::with_capacity(ledger.stages),
            caps: Vec::with_capacity(ledger.stages),
            budgets: Vec::with_capacity(ledger.stages),
        };
        let mut traces = Vec::with_capacity(ledger.stages);
        let mut carry = 0usize;

        for stage in 1..=ledger.stages {
            let cap = ledger.stage_cap(stage);
            let before = ms.counts();

            // innovation sampling, clipped so no block passes this stage's cap
            let mut spill = 0;
            let mut probe = Vec::with_capacity(blocks);
            for (n, &had) in before.iter().enumerate() {
                let rows = ledger.is_per_block.min(cap - had);
                spill += ledger.is_per_block - rows;
                ms.sample_more(n, grid.block(n), matrix, rows)?;
                probe.push(rows);
            }

            let x_prev = solver.reconstruct(&ms.truncated(&before), &layout, &cfg.ie_solver)?;
            let x_is = solver.reconstruct(&ms, &layout, &cfg.ie_solver)?;
            let scores = match criterion {
                Criterion::Innovation => innovation_scores(&x_prev, &x_is, &layout)?,
                Criterion::MeasurementError => measurement_error_scores(&ms, matrix, &x_prev)?,
                Criterion::Saliency => saliency_scores(&x_is, &layout)?,
                Criterion::Uniform => ScoreVector::uniform(blocks),
            };

            let room: Vec<usize> = ms.counts().iter().map(|&c| cap - c).collect();
            let budget = ledger.stage_budgets[stage - 1] + carry + spill;
            let spend = budget.min(room.iter().sum());
            carry = budget - spend;
            let allocated = apportion(&scores, spend, &room)?;
            for (n, &extra) in allocated.iter().enumerate() {
                ms.sample_more(n, grid.block(n), matrix, extra)?;
            }
            let cumulative = ms.counts();

            traces.push(StageTrace {
                stage,
                criterion,
                scores: scores.values().to_vec(),
                innovation_sampled: probe.clone(),
                allocated: allocated.clone(),
                cumulative: cumulative.clone(),
                cap,
                budget,
                deferred: carry,
                psnr_is: psnr(img, &x_is)?,
            });
            plan.innovation.push(probe);
            plan.adaptive.push(allocated);
            plan.cumulative.push(cumulative);
            plan.caps.push(cap);
            plan.budgets.push(spend);
        }
        if carry != 0 || ms.total() != ledger.total {
            return Err(Error::InvalidConfig(format!(
                "sample budget not conserved: spent {} of {} ({} undeliverable)",
                ms.total(),
                ledger.total,
                carry
            )));
        }

        let reconstruction = solver.reconstruct(&ms, &layout, &cfg.final_solver)?;
        Ok(AcsRun {
            reconstruction,
            plan,
            traces,
            ledger,
            measurements: ms,
        })
    }

    /// Same number of samples for every block (up to a ±1 correction that
    /// makes the total exactly `round(N·B²·SR)`), reconstructed with the full
    /// solver.
    pub fn run_uniform(&self, img: &Image) -> Result<UniformRun> {
        let cfg = &self.cfg;
        let matrix = &*self.matrix;
        let ledger = cfg.ledger(img.height(), img.width())?;
        let grid = partition(img, cfg.block_size);
        let blocks = grid.len();
        let area = ledger.block_area;

        let counts = apportion(
            &ScoreVector::uniform(blocks),
            ledger.total,
            &vec![area; blocks],
        )?;
        let mut ms = MeasurementSet::new(blocks, matrix);
        for (n, &m) in counts.iter().enumerate() {
            ms.sample_more(n, grid.block(n), matrix, m)?;
        }
        let reconstruction =
            BlockSolver::new(matrix).reconstruct(&ms, grid.layout(), &cfg.final_solver)?;
        let plan = AllocationPlan {
            block_area: area,
            initial: vec![0; blocks],
            innovation: vec![vec![0; blocks]],
            adaptive: vec![counts.clone()],
            cumulative: vec![counts],
            caps: vec![area],
            budgets: vec![ledger.total],
        };
        Ok(UniformRun {
            reconstruction,
            plan,
            measurements: ms,
        })
    }

    /// Runs one criterion; `Uniform` maps to the single-shot baseline.
    pub fn run_criterion(&self, img: &Image, criterion: Criterion) -> Result<CriterionRun> {
        let (reconstruction, plan, traces) = match criterion {
            Criterion::Uniform => {
                let run = self.run_uniform(img)?;
                (run.reconstruction, run.plan, Vec::new())
            }
            other => {
                let run = self.run_adaptive(img, other)?;
                (run.reconstruction, run.plan, run.traces)
            }
        };
        let quality = QualityReport::compare(img, &reconstruction)?;
        Ok(CriterionRun {
            criterion,
            reconstruction,
            plan,
            traces,
            quality,
        })
    }

    /// One run per criterion with the same seed and budget.
    pub fn run_comparison(&self, img: &Image, criteria: &[Criterion]) -> Result<Vec<CriterionRun>> {
        criteria
            .iter()
            .map(|&c| self.run_criterion(img, c))
            .collect()
    }
}

pub fn run_acs(img: &Image, cfg: &RunConfig) -> Result<AcsRun> {
    Pipeline::new(cfg.clone())?.run_acs(img)
}

pub fn run_uniform(img: &Image, cfg: &RunConfig) -> Result<UniformRun> {
    Pipeline::new(cfg.clone())?.run_uniform(img)
}

/// Like [`Pipeline::run_comparison`], with criteria given by name.
pub fn run_comparison(
    img: &Image,
    cfg: &RunConfig,
    criteria: &[&str],
) -> Result<Vec<CriterionRun>> {
    let parsed = criteria
        .iter()
        .map(|name| name.parse())
        .collect::<Result<Vec<Criterion>>>()?;
    Pipeline::new(cfg.clone())?.run_comparison(img, &parsed)
}
