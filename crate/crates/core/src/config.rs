//! Plain-text `key=value` run configuration. Lines starting with `#` are
//! comments; unknown keys are hard errors so typos never silently fall
//! back to defaults.

use crate::params::BlowupParams;
use crate::{Error, Result};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Profiles,
    Ansatz,
    Residual,
    Nonlocal,
    Abel,
    Simulate,
    Report,
}

impl Subcommand {
    pub fn parse(s: &str) -> Result<Subcommand> {
        Ok(match s {
            "profiles" => Subcommand::Profiles,
            "ansatz" => Subcommand::Ansatz,
            "residual" => Subcommand::Residual,
            "nonlocal" => Subcommand::Nonlocal,
            "abel" => Subcommand::Abel,
            "simulate" => Subcommand::Simulate,
            "report" => Subcommand::Report,
            other => {
                return Err(Error::Config(format!("unknown subcommand '{other}'")));
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Profiles => "profiles",
            Subcommand::Ansatz => "ansatz",
            Subcommand::Residual => "residual",
            Subcommand::Nonlocal => "nonlocal",
            Subcommand::Abel => "abel",
            Subcommand::Simulate => "simulate",
            Subcommand::Report => "report",
        }
    }
}

/// Initial data selector for the simulate subcommand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimInitial {
    /// `amp · exp(-r²)`
    Gaussian { amp: f64 },
    /// The glued first approximation at `t = 0`.
    Ansatz,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: Option<Subcommand>,
    pub params: BlowupParams,
    pub waive_constraints: bool,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Radial grid resolution for profile dumps and probes.
    pub grid_n: usize,
    pub y_max: f64,
    pub sim_initial: SimInitial,
    pub sim_threshold: f64,
    pub sim_horizon: f64,
    pub sim_decay: f64,
    pub sim_max_steps: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            subcommand: None,
            params: BlowupParams::default(),
            waive_constraints: false,
            out_dir: PathBuf::from("out"),
            seed: 1,
            grid_n: 2000,
            y_max: 40.0,
            sim_initial: SimInitial::Gaussian { amp: 5.0 },
            sim_threshold: 1e8,
            sim_horizon: 1.0,
            sim_decay: 1e-6,
            sim_max_steps: 50_000_000,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("unparsable value '{value}' for key '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!(
            "unparsable boolean '{other}' for key '{key}'"
        ))),
    }
}

/// Parse a config text into a fully populated [`RunConfig`] (documented
/// defaults fill absent keys) and validate the parameter set.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut p = BlowupParams::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected key=value, got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "subcommand" => cfg.subcommand = Some(Subcommand::parse(value)?),
            "k" => p.k = parse_num(key, value)?,
            "A" => p.big_a = parse_num(key, value)?,
            "T" => p.t_end = parse_num(key, value)?,
            "r" => {
                p.r = parse_num(key, value)?;
                p.r1 = p.r;
            }
            "r1" => p.r1 = parse_num(key, value)?,
            "r2" => p.r2 = parse_num(key, value)?,
            "c0" => p.c0 = parse_num(key, value)?,
            "beta" => p.beta = parse_num(key, value)?,
            "nu" => p.nu = parse_num(key, value)?,
            "sigma" => p.sigma = parse_num(key, value)?,
            "a" => p.a = parse_num(key, value)?,
            "a2" => p.a2 = parse_num(key, value)?,
            "nu2" => p.nu2 = parse_num(key, value)?,
            "gamma" => p.gamma = parse_num(key, value)?,
            "eps" => p.eps = parse_num(key, value)?,
            "allow_constraint_violation" => cfg.waive_constraints = parse_bool(key, value)?,
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "seed" => cfg.seed = parse_num(key, value)?,
            "grid_n" => cfg.grid_n = parse_num(key, value)?,
            "y_max" => cfg.y_max = parse_num(key, value)?,
            "sim_initial" => {
                cfg.sim_initial = match value {
                    "ansatz" => SimInitial::Ansatz,
                    "gaussian" => SimInitial::Gaussian { amp: 5.0 },
                    other => {
                        return Err(Error::Config(format!(
                            "sim_initial must be 'gaussian' or 'ansatz', got '{other}'"
                        )))
                    }
                }
            }
            "sim_gaussian_amp" => {
                let amp = parse_num(key, value)?;
                cfg.sim_initial = SimInitial::Gaussian { amp };
            }
            "sim_threshold" => cfg.sim_threshold = parse_num(key, value)?,
            "sim_horizon" => cfg.sim_horizon = parse_num(key, value)?,
            "sim_decay" => cfg.sim_decay = parse_num(key, value)?,
            "sim_max_steps" => cfg.sim_max_steps = parse_num(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )));
            }
        }
    }
    cfg.params = p.validated(cfg.waive_constraints)?;
    if cfg.grid_n < 16 {
        return Err(Error::Config("grid_n must be at least 16".into()));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_and_constraints_checked() {
        let cfg = parse_config("k=2\nA=1.0\nT=0.01\n").unwrap();
        assert_eq!(cfg.params.k, 2);
        assert_eq!(cfg.params.big_a, 1.0);
        assert!(cfg.params.warnings.is_empty());
        assert_eq!(cfg.seed, 1);
    }

    #[test]
    fn rejects_k_zero_and_bad_beta() {
        assert!(parse_config("k=0\n").is_err());
        assert!(parse_config("beta=0.6\n").is_err());
    }

    #[test]
    fn unknown_key_is_hard_error() {
        let err = parse_config("kk=2\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unparsable_value_is_config_error() {
        assert!(parse_config("k=two\n").is_err());
    }

    #[test]
    fn k1_requires_override_flag() {
        let err = parse_config("k=1\n").unwrap_err();
        assert!(matches!(err, Error::Constraint(_)));
        assert_eq!(err.exit_code(), 4);
        let cfg = parse_config("k=1\nallow_constraint_violation=true\n").unwrap();
        assert_eq!(cfg.params.warnings.len(), 1);
        assert!(cfg.params.warnings[0].starts_with("G7"));
    }

    #[test]
    fn comments_and_blank_lines_ok() {
        let cfg = parse_config("# comment\n\nk = 3   # trailing\n").unwrap();
        assert_eq!(cfg.params.k, 3);
    }
}
