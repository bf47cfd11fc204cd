// SPDX-License-Identifier: MIT OR Apache-2.0

//! Resolution of command-line flags, config file values and defaults into a
//! single validated [`RunConfig`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seqar_core::model_select::validate_delta;
use seqar_core::{GammaGating, NoiseSpec, PipelineConfig, SignalSpec};

use crate::args::{Format, Gating, PipelineArgs};
use crate::error::{CliError, CliResult};

pub const VALID_SIGNALS: &str = "s1, s2, series:<file>";
pub const VALID_NOISES: &str = "gaussian, uniform, bounded:<R>, all";

const DEFAULT_TABLE_N: [usize; 4] = [200, 500, 10_000, 70_000];
const DEFAULT_N: usize = 1_000;
const DEFAULT_M: usize = 50;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_OUT: &str = "out";

/// Values accepted in a `--config` TOML file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub signal: Option<String>,
    pub noise: Option<String>,
    pub n: Option<OneOrMany>,
    #[serde(alias = "M")]
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub mu0: Option<f64>,
    pub gating: Option<Gating>,
    pub debug_noiseless: Option<bool>,
    pub k: Option<u32>,
    pub r: Option<f64>,
    pub i_max: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<usize> {
        match self {
            OneOrMany::One(n) => vec![n],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Fully resolved configuration, echoed into every artifact.
///
/// The output directory is not part of it: moving the output elsewhere does
/// not change the hash or the file contents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub signal_name: String,
    pub signal: SignalSpec,
    pub noises: Vec<NoiseSpec>,
    pub n: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub delta: Option<f64>,
    pub mu0: f64,
    pub gating: GammaGating,
    pub debug_noiseless: bool,
    pub k: Option<u32>,
    pub r: Option<f64>,
    pub i_max: Option<usize>,
    pub formats: Vec<Format>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            mu0: self.mu0,
            delta: self.delta,
            gating: self.gating,
            noiseless: self.debug_noiseless,
            ..PipelineConfig::default()
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    /// The single sample size of a non-table command.
    pub fn single_n(&self) -> CliResult<usize> {
        match self.n.as_slice() {
            [n] => Ok(*n),
            _ => Err(CliError::Validation(format!("{} takes a single --n, got {:?}", self.command, self.n))),
        }
    }

    pub fn single_noise(&self) -> CliResult<NoiseSpec> {
        match self.noises.as_slice() {
            [noise] => Ok(*noise),
            _ => Err(CliError::Validation(format!("{} takes a single noise family, not 'all'", self.command))),
        }
    }
}

pub fn load_file_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn parse_signal(name: &str) -> CliResult<SignalSpec> {
    match name {
        "s1" => Ok(SignalSpec::s1()),
        "s2" => Ok(SignalSpec::s2()),
        _ => match name.strip_prefix("series:") {
            Some(path) => load_signal_file(Path::new(path)),
            None => Err(CliError::Validation(format!("unknown signal '{name}'; valid signals: {VALID_SIGNALS}"))),
        },
    }
}

fn load_signal_file(path: &Path) -> CliResult<SignalSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Validation(format!("{}: invalid signal description: {e}", path.display())))
}

pub fn parse_noise(name: &str) -> CliResult<Vec<NoiseSpec>> {
    match name {
        "gaussian" => Ok(vec![NoiseSpec::gaussian()]),
        "uniform" => Ok(vec![NoiseSpec::uniform()]),
        "all" => Ok(vec![NoiseSpec::gaussian(), NoiseSpec::uniform()]),
        _ => {
            let radius = name
                .strip_prefix("bounded:")
                .and_then(|r| r.parse::<f64>().ok())
                .ok_or_else(|| CliError::Validation(format!("unknown noise '{name}'; valid noises: {VALID_NOISES}")))?;
            let spec = NoiseSpec::bounded_symmetric(radius);
            spec.validate()?;
            Ok(vec![spec])
        }
    }
}

/// Merges flags over file values over defaults and validates the result.
pub fn resolve(command: &str, args: &PipelineArgs) -> CliResult<RunConfig> {
    let file = match &args.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let signal_name = args.signal.clone().or(file.signal).unwrap_or_else(|| "s1".into());
    let signal = parse_signal(&signal_name)?;
    let noise_name = args.noise.clone().or(file.noise).unwrap_or_else(|| "gaussian".into());
    let noises = parse_noise(&noise_name)?;
    let n = args.n.clone().or(file.n.map(OneOrMany::into_vec)).unwrap_or_else(|| {
        if command == "risk-table" {
            DEFAULT_TABLE_N.to_vec()
        } else {
            vec![DEFAULT_N]
        }
    });
    if n.is_empty() {
        return Err(CliError::Validation("--n needs at least one value".into()));
    }
    if let Some(&small) = n.iter().find(|&&v| v < 100) {
        return Err(CliError::Validation(format!("n = {small} is too small, need n >= 100")));
    }
    let replications = args.replications.or(file.replications).unwrap_or(DEFAULT_M);
    if replications == 0 {
        return Err(CliError::Validation("--M must be at least 1".into()));
    }
    let delta = args.delta.or(file.delta);
    if let Some(d) = delta {
        validate_delta(d).map_err(|_| CliError::Validation(format!("--delta {d} must lie in (0, 1/12]")))?;
    }
    let mu0 = args.mu0.or(file.mu0).unwrap_or(0.5);
    if !(mu0 > 0.0 && mu0 < 1.0) {
        return Err(CliError::Validation(format!("--mu0 {mu0} must lie in (0, 1)")));
    }
    let gating = match args.gating.or(file.gating).unwrap_or(Gating::PerPoint) {
        Gating::PerPoint => GammaGating::PerPoint,
        Gating::Global => GammaGating::Global,
    };
    let k = args.k.or(file.k);
    let r = args.r.or(file.r);
    if k == Some(0) {
        return Err(CliError::Validation("--k must be at least 1".into()));
    }
    if let Some(r) = r {
        if r.is_nan() || r <= 0.0 {
            return Err(CliError::Validation(format!("--r {r} must be positive")));
        }
    }
    let i_max = args.i_max.or(file.i_max);
    if i_max == Some(0) {
        return Err(CliError::Validation("--i-max must be at least 1".into()));
    }
    let mut formats = args.format.clone().or(file.format).unwrap_or_else(|| vec![Format::Csv, Format::Json]);
    formats.sort_by_key(|f| *f as u8);
    formats.dedup();
    Ok(RunConfig {
        command: command.to_string(),
        signal_name,
        signal,
        noises,
        n,
        replications,
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        delta,
        mu0,
        gating,
        debug_noiseless: args.debug_noiseless || file.debug_noiseless.unwrap_or(false),
        k,
        r,
        i_max,
        formats,
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::stamp;

    #[test]
    fn flags_override_file_over_defaults() {
        let dir = std::env::temp_dir().join(format!("seqar-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "n = [300, 400]\nseed = 9\nM = 7\nmu0 = 0.4\n").unwrap();
        let args = PipelineArgs { config: Some(path), seed: Some(11), ..PipelineArgs::default() };
        let cfg = resolve("risk-table", &args).unwrap();
        assert_eq!(cfg.n, vec![300, 400]);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.replications, 7);
        assert_eq!(cfg.mu0, 0.4);
        assert_eq!(cfg.formats, vec![Format::Csv, Format::Json]);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn defaults_depend_on_command() {
        let args = PipelineArgs::default();
        assert_eq!(resolve("risk-table", &args).unwrap().n, DEFAULT_TABLE_N.to_vec());
        assert_eq!(resolve("estimate", &args).unwrap().n, vec![DEFAULT_N]);
    }

    #[test]
    fn rejects_large_delta_and_unknown_names() {
        let args = PipelineArgs { delta: Some(0.2), ..PipelineArgs::default() };
        assert_eq!(resolve("estimate", &args).unwrap_err().exit_code(), 2);
        let err = parse_signal("s3").unwrap_err().to_string();
        assert!(err.contains("s1") && err.contains("series:<file>"));
        assert!(parse_noise("cauchy").is_err());
        assert_eq!(parse_noise("bounded:2").unwrap()[0], NoiseSpec::bounded_symmetric(2.0));
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = resolve("estimate", &PipelineArgs { out: Some("x".into()), ..PipelineArgs::default() }).unwrap();
        let b = resolve("estimate", &PipelineArgs { out: Some("y".into()), ..PipelineArgs::default() }).unwrap();
        assert_eq!(stamp(&a).1, stamp(&b).1);
        let c = resolve("estimate", &PipelineArgs { seed: Some(2), ..PipelineArgs::default() }).unwrap();
        assert_ne!(stamp(&a).1, stamp(&c).1);
    }
}
