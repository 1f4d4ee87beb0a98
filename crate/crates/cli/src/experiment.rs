//! Runs an experiment and writes its artifacts.
//!
//! Layout under the output directory:
//!
//! ```text
//! summary.csv
//! <image>/<criterion>/recon.pgm
//! <image>/<criterion>/trace.tsv
//! <image>/<criterion>/heatmap_stage<s>.csv
//! <image>/<criterion>/heatmap_stage<s>.pgm
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use acs_core::{encode_pgm, load_pgm, BlockLayout, Criterion, CriterionRun, Image, Pipeline};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Input};
use crate::corpus::make_synthetic_corpus;
use crate::CliError;

pub const TRACE_HEADER: &str = "stage\tpsnr_is\tblock_index\talpha\tallocated\tcumulative";
pub const SUMMARY_HEADER: &str = "image,criterion,psnr,ssim,total_samples";

#[derive(Debug, Clone)]
pub struct NamedImage {
    pub name: String,
    pub image: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub image: String,
    pub criterion: Criterion,
    pub psnr: f64,
    pub ssim: f64,
    pub total_samples: usize,
}

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.image,
            self.criterion,
            fmt_metric(self.psnr),
            fmt_metric(self.ssim),
            self.total_samples
        )
    }
}

pub fn load_inputs(input: &Input) -> Result<Vec<NamedImage>, CliError> {
    let images = match input {
        Input::Images(paths) => paths
            .iter()
            .map(|p| {
                let image = load_pgm(p).map_err(|e| CliError::Image {
                    path: p.clone(),
                    source: e,
                })?;
                let name = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "image".into());
                Ok(NamedImage { name, image })
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        Input::Corpus { name, seed } => make_synthetic_corpus(name, *seed)?
            .into_iter()
            .map(|c| NamedImage {
                name: c.name,
                image: c.image,
            })
            .collect(),
    };
    let mut seen = BTreeSet::new();
    for img in &images {
        if !seen.insert(img.name.as_str()) {
            return Err(CliError::DuplicateImageName(img.name.clone()));
        }
    }
    Ok(images)
}

/// Runs every criterion on every input image and writes all artifacts plus
/// `summary.csv`. Images are processed concurrently.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>, CliError> {
    let images = load_inputs(&cfg.input)?;
    let pipeline = Pipeline::new(cfg.run.clone()).map_err(CliError::Pipeline)?;
    create_dir(&cfg.out)?;

    let per_image = images
        .par_iter()
        .map(|img| run_image(&pipeline, cfg, img))
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows: Vec<SummaryRow> = per_image.into_iter().flatten().collect();

    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for row in &rows {
        summary.push_str(&row.to_csv());
        summary.push('\n');
    }
    write_file(&cfg.out.join("summary.csv"), summary.as_bytes())?;
    Ok(rows)
}

fn run_image(
    pipeline: &Pipeline,
    cfg: &ExperimentConfig,
    img: &NamedImage,
) -> Result<Vec<SummaryRow>, CliError> {
    let layout = BlockLayout::for_image(&img.image, cfg.run.block_size);
    let mut rows = Vec::with_capacity(cfg.criteria.len());
    for &criterion in &cfg.criteria {
        let run = pipeline
            .run_criterion(&img.image, criterion)
            .map_err(CliError::Pipeline)?;
        let dir = cfg.out.join(&img.name).join(criterion.name());
        create_dir(&dir)?;
        if cfg.emit.recon {
            write_file(&dir.join("recon.pgm"), &encode_pgm(&run.reconstruction))?;
        }
        if cfg.emit.traces {
            write_file(&dir.join("trace.tsv"), format_trace(&run).as_bytes())?;
        }
        if cfg.emit.heatmaps {
            for (s, counts) in run.plan.cumulative.iter().enumerate() {
                let stem = format!("heatmap_stage{}", s + 1);
                write_file(
                    &dir.join(format!("{stem}.csv")),
                    heatmap_csv(counts, &layout).as_bytes(),
                )?;
                write_file(
                    &dir.join(format!("{stem}.pgm")),
                    &encode_pgm(&heatmap_image(counts, &layout)),
                )?;
            }
        }
        rows.push(SummaryRow {
            image: img.name.clone(),
            criterion,
            psnr: run.quality.psnr,
            ssim: run.quality.ssim,
            total_samples: run.total_samples(),
        });
    }
    Ok(rows)
}

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

/// One header line, one line per stage, then
/// `final <tab> psnr <tab> ssim <tab> total_samples`.
///
/// A stage line is the stage number and the lightweight PSNR after innovation
/// sampling, followed by `block_index, alpha, allocated, cumulative` for every
/// block. The uniform baseline has a single stage with unit scores and `-` for
/// the PSNR.
pub fn format_trace(run: &CriterionRun) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    if run.traces.is_empty() {
        out.push_str("1\t-");
        for (n, &m) in run.plan.final_counts().iter().enumerate() {
            let _ = write!(out, "\t{n}\t{:.9e}\t{m}\t{m}", 1.0);
        }
        out.push('\n');
    }
    for t in &run.traces {
        let _ = write!(out, "{}\t{}", t.stage, fmt_metric(t.psnr_is));
        for n in 0..t.scores.len() {
            let _ = write!(
                out,
                "\t{n}\t{:.9e}\t{}\t{}",
                t.scores[n], t.allocated[n], t.cumulative[n]
            );
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "final\t{}\t{}\t{}",
        fmt_metric(run.quality.psnr),
        fmt_metric(run.quality.ssim),
        run.total_samples()
    );
    out
}

/// Block-grid rows of comma-separated cumulative counts.
pub fn heatmap_csv(counts: &[usize], layout: &BlockLayout) -> String {
    let mut out = String::new();
    for r in 0..layout.rows {
        let line: Vec<String> = counts[r * layout.cols..(r + 1) * layout.cols]
            .iter()
            .map(usize::to_string)
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Each block drawn as a `B×B` patch with brightness `count / B²`.
pub fn heatmap_image(counts: &[usize], layout: &BlockLayout) -> Image {
    let b = layout.block_size;
    let area = layout.block_area() as f64;
    let (h, w) = (layout.rows * b, layout.cols * b);
    let data = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            counts[(r / b) * layout.cols + c / b] as f64 / area
        })
        .collect();
    Image::new(h, w, data).expect("counts never exceed the block area")
}

/// Writes the corpus as `<name>.pgm` files plus a `corpus.tsv` manifest.
pub fn write_corpus(name: &str, seed: u64, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let corpus = make_synthetic_corpus(name, seed)?;
    create_dir(out)?;
    let mut manifest = String::from("name\ttexture\ttextured_quadrant\n");
    let mut paths = Vec::with_capacity(corpus.len());
    for item in &corpus {
        let path = out.join(format!("{}.pgm", item.name));
        write_file(&path, &encode_pgm(&item.image))?;
        let _ = writeln!(
            manifest,
            "{}\t{:?}\t{}",
            item.name, item.texture, item.textured_quadrant
        );
        paths.push(path);
    }
    write_file(&out.join("corpus.tsv"), manifest.as_bytes())?;
    Ok(paths)
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
