//! `key = value` experiment configuration.
//!
//! A config file holds one assignment per line; blank lines and lines starting
//! with `#` are skipped. Command-line flags are applied as further
//! assignments after the file, so they win.

use std::fmt;
use std::path::{Path, PathBuf};

use acs_core::{Criterion, RunConfig, SolverConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Images(Vec<PathBuf>),
    Corpus { name: String, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitFlags {
    pub recon: bool,
    pub heatmaps: bool,
    pub traces: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self {
            recon: true,
            heatmaps: true,
            traces: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: Input,
    pub run: RunConfig,
    pub criteria: Vec<Criterion>,
    pub out: PathBuf,
    pub emit: EmitFlags,
}

pub const KEYS: &[&str] = &[
    "image",
    "corpus",
    "corpus_seed",
    "sr",
    "sr_init",
    "sr_is",
    "stages",
    "block_size",
    "allocator",
    "criteria",
    "seed",
    "ie_iterations",
    "iterations",
    "out",
    "emit_recon",
    "emit_heatmaps",
    "emit_traces",
];

/// One `key = value` line, remembering where it came from for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

impl Assignment {
    pub fn flag(key: &str, value: impl ToString) -> Self {
        Self {
            key: key.to_string(),
            value: value.to_string(),
            origin: Origin::Flag,
        }
    }
}

pub fn parse_config_text(text: &str, path: &Path) -> Result<Vec<Assignment>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let origin = Origin::File {
            path: path.to_path_buf(),
            line: i + 1,
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Syntax {
                origin,
                line: raw.to_string(),
            });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::UnknownKey {
                key: key.to_string(),
                origin,
            });
        }
        out.push(Assignment {
            key: key.to_string(),
            value: value.trim().to_string(),
            origin,
        });
    }
    Ok(out)
}

pub fn load_config_file(path: &Path) -> Result<Vec<Assignment>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text, path)
}

/// Resolves file assignments followed by flag assignments into a full
/// configuration. `default_criteria` is used when no `criteria` key is given;
/// `None` means "just the allocator".
pub fn resolve(
    assignments: &[Assignment],
    default_criteria: Option<&[Criterion]>,
) -> Result<ExperimentConfig, CliError> {
    let mut images: Option<Vec<PathBuf>> = None;
    let mut corpus: Option<String> = None;
    let mut corpus_seed = 42u64;
    let mut sr: Option<f64> = None;
    let mut run = RunConfig::new(0.0);
    let mut criteria: Option<Vec<Criterion>> = None;
    let mut out = PathBuf::from("acs_out");
    let mut emit = EmitFlags::default();

    for a in assignments {
        let bad = |reason: String| CliError::Value {
            key: a.key.clone(),
            value: a.value.clone(),
            origin: a.origin.clone(),
            reason,
        };
        let v = a.value.as_str();
        match a.key.as_str() {
            "image" => {
                images = Some(
                    v.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(PathBuf::from)
                        .collect(),
                )
            }
            "corpus" => corpus = Some(v.to_string()),
            "corpus_seed" => corpus_seed = parse(v).map_err(bad)?,
            "sr" => {
                let x: f64 = parse(v).map_err(bad)?;
                if !(x > 0.0 && x <= 1.0) {
                    return Err(bad("sampling rate must lie in (0, 1]".into()));
                }
                sr = Some(x);
            }
            "sr_init" => run.sr_init = parse_rate(v).map_err(bad)?,
            "sr_is" => run.sr_is = Some(parse_rate(v).map_err(bad)?),
            "stages" => run.stages = parse_positive(v).map_err(bad)?,
            "block_size" => run.block_size = parse_positive(v).map_err(bad)?,
            "allocator" => run.allocator = v.parse().map_err(|e| bad(format!("{e}")))?,
            "criteria" => {
                let list = v
                    .split(',')
                    .map(|s| s.trim().parse::<Criterion>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| bad(format!("{e}")))?;
                if list.is_empty() {
                    return Err(bad("empty criteria list".into()));
                }
                criteria = Some(list);
            }
            "seed" => run.seed = parse(v).map_err(bad)?,
            "ie_iterations" => {
                run.ie_solver = SolverConfig::full().truncated(parse_positive(v).map_err(bad)?)
            }
            "iterations" => {
                run.final_solver = SolverConfig::with_iterations(parse_positive(v).map_err(bad)?)
            }
            "out" => out = PathBuf::from(v),
            "emit_recon" => emit.recon = parse_bool(v).map_err(bad)?,
            "emit_heatmaps" => emit.heatmaps = parse_bool(v).map_err(bad)?,
            "emit_traces" => emit.traces = parse_bool(v).map_err(bad)?,
            other => {
                return Err(CliError::UnknownKey {
                    key: other.to_string(),
                    origin: a.origin.clone(),
                })
            }
        }
    }

    let input = match (images, corpus) {
        (Some(_), Some(_)) => return Err(CliError::ConflictingInput),
        (Some(paths), None) if !paths.is_empty() => Input::Images(paths),
        (None, Some(name)) => Input::Corpus {
            name,
            seed: corpus_seed,
        },
        _ => return Err(CliError::MissingInput),
    };
    run.sr = sr.ok_or(CliError::MissingKey("sr"))?;
    run.validate().map_err(CliError::Pipeline)?;
    let criteria = criteria.unwrap_or_else(|| match default_criteria {
        Some(list) => list.to_vec(),
        None => vec![run.allocator],
    });
    Ok(ExperimentConfig {
        input,
        run,
        criteria,
        out,
        emit,
    })
}

fn parse<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

fn parse_rate(v: &str) -> Result<f64, String> {
    let x: f64 = parse(v)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err("rate must lie in [0, 1]".into())
    }
}

fn parse_positive(v: &str) -> Result<usize, String> {
    match parse::<usize>(v)? {
        0 => Err("must be at least 1".into()),
        n => Ok(n),
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> Result<Vec<Assignment>, CliError> {
        parse_config_text(text, Path::new("exp.conf"))
    }

    #[test]
    fn defaults_fill_an_empty_file() {
        let mut a = file("").unwrap();
        a.push(Assignment::flag("image", "a.pgm"));
        a.push(Assignment::flag("sr", 0.25));
        let cfg = resolve(&a, None).unwrap();
        assert_eq!(cfg.input, Input::Images(vec![PathBuf::from("a.pgm")]));
        assert_eq!(cfg.run.block_size, 32);
        assert_eq!(cfg.run.stages, 4);
        assert_eq!(cfg.run.sr_init, 0.02);
        assert_eq!(cfg.run.sr_is, None);
        assert_eq!(cfg.run.allocator, Criterion::Innovation);
        assert_eq!(cfg.run.sr, 0.25);
        assert_eq!(cfg.criteria, vec![Criterion::Innovation]);
        assert_eq!(cfg.emit, EmitFlags::default());
    }

    #[test]
    fn rate_out_of_range() {
        let a = file("image = a.pgm\nsr = 1.5\n").unwrap();
        let err = resolve(&a, None).unwrap_err();
        assert!(
            matches!(err, CliError::Value { ref key, .. } if key == "sr"),
            "{err}"
        );
        assert!(err.to_string().contains("exp.conf:2"));
        let a = file("image = a.pgm\nsr = 0\n").unwrap();
        assert!(resolve(&a, None).is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut a = file("# comment\n\ncorpus = heterogeneous16\nsr = 0.1\nseed = 42\n").unwrap();
        a.push(Assignment::flag("seed", 7));
        let cfg = resolve(&a, None).unwrap();
        assert_eq!(cfg.run.seed, 7);
        assert_eq!(
            cfg.input,
            Input::Corpus {
                name: "heterogeneous16".into(),
                seed: 42
            }
        );
    }

    #[test]
    fn unknown_and_malformed_lines() {
        assert!(matches!(
            file("sr = 0.1\nlearning_rate = 3\n"),
            Err(CliError::UnknownKey { ref key, .. }) if key == "learning_rate"
        ));
        assert!(matches!(file("sr 0.1\n"), Err(CliError::Syntax { .. })));
        let a = file("image = a.pgm\nsr = fast\n").unwrap();
        assert!(matches!(resolve(&a, None), Err(CliError::Value { .. })));
        let a = file("image = a.pgm\nsr = 0.1\nallocator = magic\n").unwrap();
        assert!(matches!(resolve(&a, None), Err(CliError::Value { .. })));
    }

    #[test]
    fn missing_or_conflicting_input() {
        let a = file("sr = 0.1\n").unwrap();
        assert!(matches!(resolve(&a, None), Err(CliError::MissingInput)));
        let a = file("image = a.pgm\ncorpus = heterogeneous16\nsr = 0.1\n").unwrap();
        assert!(matches!(resolve(&a, None), Err(CliError::ConflictingInput)));
        let a = file("image = a.pgm\n").unwrap();
        assert!(matches!(resolve(&a, None), Err(CliError::MissingKey("sr"))));
    }

    #[test]
    fn criteria_and_emit_flags() {
        let a = file(
            "image = a.pgm, b.pgm\nsr = 0.3\ncriteria = uniform, innovation\nemit_heatmaps = false\n",
        )
        .unwrap();
        let cfg = resolve(&a, Some(&Criterion::ALL)).unwrap();
        assert_eq!(
            cfg.criteria,
            vec![Criterion::Uniform, Criterion::Innovation]
        );
        assert!(!cfg.emit.heatmaps && cfg.emit.recon && cfg.emit.traces);
        assert_eq!(
            cfg.input,
            Input::Images(vec![PathBuf::from("a.pgm"), PathBuf::from("b.pgm")])
        );
        let a = file("image = a.pgm\nsr = 0.3\n").unwrap();
        assert_eq!(
            resolve(&a, Some(&Criterion::ALL)).unwrap().criteria,
            Criterion::ALL
        );
    }

    #[test]
    fn pipeline_relations_are_checked() {
        // SR_IS too large leaves no adaptive budget
        let a = file("image = a.pgm\nsr = 0.1\nsr_is = 0.5\n").unwrap();
        assert!(matches!(resolve(&a, None), Err(CliError::Pipeline(_))));
    }
}
