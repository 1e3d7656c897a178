//! Run configuration: TOML file, command-line overrides, validation, echo.
//!
//! A run is described by a [`RunConfig`]: which command to execute, the
//! chain parameters for point commands, the sweep spec for map commands,
//! where to write artifacts and how many workers to use. The precedence is
//! fixed: built-in defaults, then the config file, then command-line flags.
//! Parsing is strict — an unknown key is a fatal error carrying the key
//! path, because a silently ignored typo (`gamm = 0.5`) is worse than a
//! refused file.
//!
//! The effective configuration (after all overrides) is echoed into the
//! output directory as `effective_config.toml`; parsing that echo
//! reproduces the configuration exactly, so every artifact directory
//! records precisely what produced it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, ChainParams};
use crate::sweep::SweepSpec;

/// Environment variable consulted for the default worker count when neither
/// the config file nor the command line sets one.
pub const WORKERS_ENV_VAR: &str = "PTISING_WORKERS";

/// The seven commands the front end can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    /// Full spectrum at one point, or bands over a coupling sweep.
    Spectrum,
    /// Complex-gap map over the sweep grid.
    GapMap,
    /// Order-parameter and correlation-length map over the sweep grid.
    CorrMap,
    /// `xi/N` curves over one swept axis at several sizes.
    Scaling,
    /// Critical-line estimates from scaling-curve crossings.
    Crossing,
    /// Cluster mean-field phase boundaries.
    BethePeierls,
    /// Merged phase diagram: sweep, crossings and cluster boundaries.
    PhaseDiagram,
}

impl std::fmt::Display for CommandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::GapMap => "gap-map",
            CommandKind::CorrMap => "corr-map",
            CommandKind::Scaling => "scaling",
            CommandKind::Crossing => "crossing",
            CommandKind::BethePeierls => "bethe-peierls",
            CommandKind::PhaseDiagram => "phase-diagram",
        };
        write!(f, "{name}")
    }
}

/// Chain parameters used by the point commands, in dimensionless units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    /// Number of sites.
    pub n_sites: usize,
    /// Transverse field; the unit of energy.
    pub delta: f64,
    /// Ising coupling over the transverse field; sign selects the side.
    pub j_over_delta: f64,
    /// Gain amplitude over the transverse field.
    pub gamma_over_delta: f64,
    /// Boundary condition.
    pub boundary: Boundary,
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            n_sites: 10,
            delta: 1.0,
            j_over_delta: -0.4,
            gamma_over_delta: 0.0,
            boundary: Boundary::Periodic,
        }
    }
}

impl ChainSection {
    /// Materialize the section as solver parameters.
    pub fn params(&self) -> Result<ChainParams> {
        ChainParams::new(
            self.n_sites,
            self.delta,
            self.j_over_delta * self.delta,
            self.gamma_over_delta * self.delta,
            self.boundary,
        )
    }
}

/// Optional overrides for the tolerances that individual modules default.
///
/// `None` keeps the module default; the front end threads set values into
/// the options structs of the routines it calls.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Absolute imaginary-part tolerance of the PT classification in the
    /// spectrum command.
    pub pt_im_tol: Option<f64>,
    /// Residual magnitude below which a mean-field root counts as converged.
    pub bp_tol: Option<f64>,
    /// Bisection resolution of cluster boundary points, in `J/delta`.
    pub bp_bisect_tol: Option<f64>,
    /// Magnetization magnitude separating ordered from paramagnetic.
    pub bp_m_threshold: Option<f64>,
}

impl Tolerances {
    /// Reject non-positive or non-finite override values.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("pt_im_tol", self.pt_im_tol),
            ("bp_tol", self.bp_tol),
            ("bp_bisect_tol", self.bp_bisect_tol),
            ("bp_m_threshold", self.bp_m_threshold),
        ] {
            if let Some(v) = value {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::Config(format!(
                        "tolerances.{name} must be positive and finite, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Everything a run needs, assembled from defaults, file and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Command to execute; the command-line subcommand overrides this.
    pub command: Option<CommandKind>,
    /// Point-command parameters (`spectrum`, `bethe-peierls` seeds, ...).
    pub chain: ChainSection,
    /// Map-command grid and observables.
    pub sweep: SweepSpec,
    /// Directory that receives every artifact of the run.
    pub output_dir: PathBuf,
    /// Worker threads; `None` defers to [`WORKERS_ENV_VAR`], then to the
    /// runtime default.
    pub workers: Option<usize>,
    /// Tolerance overrides.
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            chain: ChainSection::default(),
            sweep: SweepSpec::default(),
            output_dir: PathBuf::from("ptising-out"),
            workers: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    /// Validate every section.
    ///
    /// The chain section is checked by constructing actual solver
    /// parameters, so the front end rejects for example an odd periodic
    /// ring (`n_sites = 11`) before any work starts, with the same message
    /// the solver would give.
    pub fn validate(&self) -> Result<()> {
        self.chain.params()?;
        self.sweep.validate()?;
        self.tolerances.validate()?;
        if let Some(workers) = self.workers {
            if workers == 0 {
                return Err(Error::Config("workers must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Resolved worker count: config value, else the environment variable,
    /// else `None` (let the pool pick).
    pub fn effective_workers(&self) -> Result<Option<usize>> {
        if self.workers.is_some() {
            return Ok(self.workers);
        }
        match std::env::var(WORKERS_ENV_VAR) {
            Ok(text) => {
                let parsed: usize = text.trim().parse().map_err(|_| {
                    Error::Config(format!(
                        "{WORKERS_ENV_VAR} must be a positive integer, got {text:?}"
                    ))
                })?;
                if parsed == 0 {
                    return Err(Error::Config(format!(
                        "{WORKERS_ENV_VAR} must be at least 1"
                    )));
                }
                Ok(Some(parsed))
            }
            Err(_) => Ok(None),
        }
    }

    /// Serialize the effective configuration as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Write the `effective_config.toml` echo into a directory.
    pub fn echo_into(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let path = dir.join("effective_config.toml");
        std::fs::write(&path, self.to_toml()?)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

/// Parse a configuration from TOML text, strictly.
///
/// Unknown keys, type mismatches and malformed values are all fatal; the
/// error message carries the offending key path and position as reported by
/// the TOML parser.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Load a configuration file from disk, strictly.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_config(&text)
}

/// Command-line values that take precedence over the file.
///
/// Only set fields override; the front end fills this from the flags the
/// user actually passed, keeping the precedence logic testable without a
/// terminal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliOverrides {
    /// Subcommand, always present when invoked through the binary.
    pub command: Option<CommandKind>,
    /// `--n-sites`.
    pub n_sites: Option<usize>,
    /// `--delta`.
    pub delta: Option<f64>,
    /// `--j` (coupling over delta).
    pub j_over_delta: Option<f64>,
    /// `--gamma` (gain over delta).
    pub gamma_over_delta: Option<f64>,
    /// `--boundary`.
    pub boundary: Option<Boundary>,
    /// `--j-range min:max:steps`.
    pub j_range: Option<(f64, f64, usize)>,
    /// `--gamma-range min:max:steps`.
    pub gamma_range: Option<(f64, f64, usize)>,
    /// `--sizes 8,10,12`.
    pub sizes: Option<Vec<usize>>,
    /// `--out`.
    pub output_dir: Option<PathBuf>,
    /// `--workers`.
    pub workers: Option<usize>,
}

/// Apply flag overrides on top of a parsed (or default) configuration.
pub fn apply_overrides(config: &mut RunConfig, overrides: &CliOverrides) {
    if overrides.command.is_some() {
        config.command = overrides.command;
    }
    if let Some(n) = overrides.n_sites {
        config.n_sites_override(n);
    }
    if let Some(delta) = overrides.delta {
        config.chain.delta = delta;
        config.sweep.delta = delta;
    }
    if let Some(j) = overrides.j_over_delta {
        config.chain.j_over_delta = j;
    }
    if let Some(gamma) = overrides.gamma_over_delta {
        config.chain.gamma_over_delta = gamma;
    }
    if let Some(boundary) = overrides.boundary {
        config.chain.boundary = boundary;
        config.sweep.boundary = boundary;
    }
    if let Some(range) = overrides.j_range {
        config.sweep.j_range = range;
    }
    if let Some(range) = overrides.gamma_range {
        config.sweep.gamma_range = range;
    }
    if let Some(sizes) = &overrides.sizes {
        config.sweep.sizes = sizes.clone();
    }
    if let Some(dir) = &overrides.output_dir {
        config.output_dir = dir.clone();
    }
    if overrides.workers.is_some() {
        config.workers = overrides.workers;
    }
}

impl RunConfig {
    /// `--n-sites` sets both the point chain and the single-size sweep; a
    /// multi-size sweep keeps its explicit list.
    fn n_sites_override(&mut self, n: usize) {
        self.chain.n_sites = n;
        if self.sweep.sizes.len() <= 1 {
            self.sweep.sizes = vec![n];
        }
    }
}

/// Parse a `min:max:steps` range flag.
pub fn parse_range_flag(text: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "range flag must look like min:max:steps, got {text:?}"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("range minimum {:?} is not a number", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("range maximum {:?} is not a number", parts[1])))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("range steps {:?} is not a count", parts[2])))?;
    Ok((lo, hi, steps))
}

/// Parse a comma-separated size list flag.
pub fn parse_sizes_flag(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Error::Config(format!("size {part:?} is not an integer")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let config = RunConfig::default();
        config.validate().unwrap();
        let text = config.to_toml().unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn file_values_override_defaults_and_flags_override_the_file() {
        let text = r#"
            command = "gap-map"
            [chain]
            n_sites = 8
            gamma_over_delta = 0.5
            [sweep]
            sizes = [8]
        "#;
        let mut config = parse_config(text).unwrap();
        assert_eq!(config.command, Some(CommandKind::GapMap));
        assert_eq!(config.chain.n_sites, 8);
        assert_eq!(config.chain.gamma_over_delta, 0.5);
        // Untouched fields keep their defaults.
        assert_eq!(config.chain.delta, 1.0);
        assert_eq!(config.sweep.j_range, SweepSpec::default().j_range);

        let overrides = CliOverrides {
            command: Some(CommandKind::Crossing),
            gamma_over_delta: Some(0.9),
            workers: Some(4),
            ..CliOverrides::default()
        };
        apply_overrides(&mut config, &overrides);
        assert_eq!(config.command, Some(CommandKind::Crossing));
        assert_eq!(config.chain.gamma_over_delta, 0.9);
        assert_eq!(config.workers, Some(4));
        assert_eq!(config.chain.n_sites, 8, "unrelated file value survives");
    }

    #[test]
    fn unknown_keys_are_fatal_and_name_the_key() {
        let err = parse_config("gamm = 0.5").unwrap_err();
        let message = err.to_string();
        assert!(message.contains("gamm"), "message was: {message}");
        assert_eq!(err.exit_code(), 1);

        let err = parse_config("[chain]\ncoupling = -0.4").unwrap_err();
        let message = err.to_string();
        assert!(message.contains("coupling"), "message was: {message}");

        let err = parse_config("[sweep]\nobservable = [\"gap\"]").unwrap_err();
        assert!(err.to_string().contains("observable"));
    }

    #[test]
    fn malformed_values_carry_the_position() {
        let err = parse_config("[chain]\nn_sites = \"ten\"").unwrap_err();
        let message = err.to_string();
        assert!(
            message.contains("n_sites") || message.contains("line"),
            "message was: {message}"
        );
    }

    #[test]
    fn odd_periodic_ring_is_rejected_at_validation() {
        let text = "[chain]\nn_sites = 11";
        let config = parse_config(text).unwrap();
        let err = config.validate().unwrap_err();
        assert!(matches!(err, Error::OddPeriodic(11)));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn tolerance_overrides_must_be_positive() {
        let config = parse_config("[tolerances]\nbp_tol = 0.0").unwrap();
        assert!(config.validate().is_err());
        let config = parse_config("[tolerances]\npt_im_tol = 1e-11").unwrap();
        config.validate().unwrap();
        assert_eq!(config.tolerances.pt_im_tol, Some(1e-11));
    }

    #[test]
    fn effective_config_echo_round_trips_exactly() {
        let mut config = RunConfig::default();
        config.command = Some(CommandKind::PhaseDiagram);
        config.chain.j_over_delta = -0.7071067811865476;
        config.sweep.j_range = (-1.25, 1.25, 51);
        config.workers = Some(3);
        let dir = tempfile::tempdir().unwrap();
        let path = config.echo_into(dir.path()).unwrap();
        assert!(path.ends_with("effective_config.toml"));
        let back = load_config(&path).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn range_and_size_flags_parse_strictly() {
        assert_eq!(parse_range_flag("0:2:81").unwrap(), (0.0, 2.0, 81));
        assert_eq!(
            parse_range_flag("-1.5 : 1.5 : 121").unwrap(),
            (-1.5, 1.5, 121)
        );
        assert!(parse_range_flag("0:2").is_err());
        assert!(parse_range_flag("a:2:3").is_err());
        assert_eq!(parse_sizes_flag("8,10,12").unwrap(), vec![8, 10, 12]);
        assert!(parse_sizes_flag("8,ten").is_err());
    }

    #[test]
    fn workers_resolution_prefers_the_config_value() {
        // Only the config-set path is exercised here: mutating the process
        // environment would race with other tests in the same binary.
        let mut config = RunConfig::default();
        config.workers = Some(2);
        assert_eq!(config.effective_workers().unwrap(), Some(2));
    }
}
