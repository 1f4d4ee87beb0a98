//! Sample budget bookkeeping for a multi-stage run.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// How a total sampling rate is split between initial sampling, per-stage
/// innovation sampling and per-stage adaptive budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLedger {
    pub sr: f64,
    pub sr_init: f64,
    pub sr_is: f64,
    pub stages: usize,
    pub blocks: usize,
    pub block_area: usize,
    /// Samples every block receives before the first stage.
    pub init_per_block: usize,
    /// Innovation-sampling rows every block receives at each stage.
    pub is_per_block: usize,
    /// Adaptive budget `M_ASR,s` for `s = 1..=S`.
    pub stage_budgets: Vec<usize>,
    /// `T = round(N·B²·SR)`.
    pub total: usize,
}

pub(crate) fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Builds the ledger for an `height×width` image tiled into `block_size`
/// blocks.
///
/// Per-block counts are `round(SR_init·B²)` and `round(SR_IS·B²)`; the stage
/// budgets are `round(N·B²·((SR−SR_init)/S − SR_IS))` for `s < S`, and the last
/// stage takes whatever remains of `T`, so the grand total is exact. If
/// rounding leaves the last stage negative, the shortfall is taken back from
/// earlier stage budgets (latest first) and then from the innovation count.
pub fn make_ledger(
    height: usize,
    width: usize,
    block_size: usize,
    sr: f64,
    sr_init: f64,
    stages: usize,
    sr_is: Option<f64>,
) -> Result<BudgetLedger> {
    if height == 0 || width == 0 || block_size == 0 {
        return Err(Error::InvalidConfig(
            "image and block dimensions must be positive".into(),
        ));
    }
    if stages == 0 {
        return Err(Error::InvalidConfig(
            "stage count must be at least 1".into(),
        ));
    }
    if !(sr_init > 0.0 && sr_init < sr && sr <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "rates must satisfy 0 < sr_init < sr <= 1 (sr_init = {sr_init}, sr = {sr})"
        )));
    }
    let per_stage = (sr - sr_init) / stages as f64;
    let sr_is = sr_is.unwrap_or(per_stage / 2.0);
    if sr_is.is_nan() || sr_is < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "innovation sampling rate must be non-negative, got {sr_is}"
        )));
    }
    if sr_is >= per_stage {
        return Err(Error::NoAdaptiveBudget {
            sr_is,
            limit: per_stage,
        });
    }

    let blocks = height.div_ceil(block_size) * width.div_ceil(block_size);
    let area = block_size * block_size;
    let pixels = (blocks * area) as f64;
    let total = round_half_up(pixels * sr);
    let init = round_half_up(sr_init * area as f64);
    let mut is_count = round_half_up(sr_is * area as f64);
    let regular = round_half_up(pixels * (per_stage - sr_is));
    let mut budgets = vec![regular; stages];

    let n = blocks as i64;
    let s = stages as i64;
    loop {
        let committed = n * init + s * n * is_count + budgets[..stages - 1].iter().sum::<i64>();
        let mut last = total - committed;
        for b in budgets[..stages - 1].iter_mut().rev() {
            if last >= 0 {
                break;
            }
            let take = (-last).min(*b);
            *b -= take;
            last += take;
        }
        if last >= 0 {
            budgets[stages - 1] = last;
            break;
        }
        if is_count == 0 {
            return Err(Error::InvalidConfig(format!(
                "initial sampling ({} samples) exceeds the total budget {total}",
                n * init
            )));
        }
        is_count -= 1;
        budgets.iter_mut().for_each(|b| *b = regular);
    }

    Ok(BudgetLedger {
        sr,
        sr_init,
        sr_is,
        stages,
        blocks,
        block_area: area,
        init_per_block: init as usize,
        is_per_block: is_count as usize,
        stage_budgets: budgets.into_iter().map(|b| b as usize).collect(),
        total: total as usize,
    })
}

impl BudgetLedger {
    /// Sum of every planned sample; equals `total`.
    pub fn planned(&self) -> usize {
        self.blocks * self.init_per_block
            + self.stages * self.blocks * self.is_per_block
            + self.stage_budgets.iter().sum::<usize>()
    }

    /// Per-block cap on cumulative samples after stage `s` (1-based):
    /// `floor(s·B²/S)`.
    pub fn stage_cap(&self, stage: usize) -> usize {
        stage * self.block_area / self.stages
    }

    /// Plain-text `key=value` records, one per line.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sr={}", self.sr);
        let _ = writeln!(out, "sr_init={}", self.sr_init);
        let _ = writeln!(out, "sr_is={}", self.sr_is);
        let _ = writeln!(out, "stages={}", self.stages);
        let _ = writeln!(out, "blocks={}", self.blocks);
        let _ = writeln!(out, "block_area={}", self.block_area);
        let _ = writeln!(out, "init_per_block={}", self.init_per_block);
        let _ = writeln!(out, "is_per_block={}", self.is_per_block);
        for (s, b) in self.stage_budgets.iter().enumerate() {
            let _ = writeln!(out, "stage_budget_{}={}", s + 1, b);
        }
        let _ = writeln!(out, "total={}", self.total);
        out
    }
}
