//! JSON configuration: schema, validation, and construction of the run
//! inputs.
//!
//! Unknown keys are rejected, every numeric range is validated against the
//! solver's invariants before any run starts, and the initial data is built
//! (and guard-checked) at parse time so a convexity-violating amplitude is a
//! named configuration error rather than a mid-run surprise.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use imcf_core::{CRef, FlowConfig, FlowError, GraphState, Guards, InitialFamily, Mode};

/// Errors surfaced by the command-line frontend.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed JSON syntax.
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        /// 1-based line of the syntax error.
        line: usize,
        /// 1-based column of the syntax error.
        column: usize,
        /// Parser message.
        message: String,
    },
    /// A well-formed document with an invalid value; names the offending key.
    #[error("invalid config: {key}: {message}")]
    Validation {
        /// The configuration key at fault.
        key: &'static str,
        /// What constraint was violated.
        message: String,
    },
    /// Solver-level error (guard violations, domain errors).
    #[error(transparent)]
    Flow(#[from] FlowError),
    /// Filesystem failure.
    #[error("io error on {path}: {source}")]
    Io {
        /// The path involved.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit code: 2 for configuration problems, 3 for guard-type
    /// solver failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Io { .. } => 2,
            CliError::Flow(e) => match e {
                FlowError::Domain(_) => 2,
                _ => 3,
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub alpha: f64,
    pub domain: DomainSpec,
    pub grid_n: usize,
    pub mode: ModeSpec,
    #[serde(default)]
    pub c_ref: CRefSpec,
    pub time: TimeSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Physical,
    Rescaled,
}

impl From<ModeSpec> for Mode {
    fn from(m: ModeSpec) -> Mode {
        match m {
            ModeSpec::Physical => Mode::Physical,
            ModeSpec::Rescaled => Mode::Rescaled,
        }
    }
}

/// `"auto"` (midpoint rule) or a fixed number.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CRefSpec {
    Keyword(CRefKeyword),
    Value(f64),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CRefKeyword {
    Auto,
}

impl Default for CRefSpec {
    fn default() -> Self {
        CRefSpec::Keyword(CRefKeyword::Auto)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: Option<f64>,
    pub s_end: Option<f64>,
    pub sigma_cfl: Option<f64>,
    pub dt_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub r: f64,
    pub amplitude: Option<f64>,
    pub mode_m: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Constant,
    Cosine,
    RandomCosineMix,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub convergence: Option<f64>,
    pub env: Option<f64>,
    pub grad: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub snapshot_stride: Option<usize>,
}

/// A fully validated configuration: solver config, the initial-data family,
/// the constructed (guard-checked) initial state, and the output directory.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub flow: FlowConfig,
    pub family: InitialFamily,
    pub initial: GraphState,
    pub out_dir: PathBuf,
}

/// Reads and syntax-checks the JSON document.
pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => CliError::Validation {
            key: "config",
            message: e.to_string(),
        },
        _ => CliError::Parse { line: e.line(), column: e.column(), message: e.to_string() },
    })
}

fn require(cond: bool, key: &'static str, message: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Validation { key, message: message.to_string() })
    }
}

/// Validates every range, builds the initial data (rejecting data that the
/// guards refuse, with the guard message attached), and resolves `"auto"`
/// `c_ref` to the midpoint `(phi1 + phi2)/2` of the constructed data.
pub fn finalize(file: ConfigFile) -> Result<ParsedConfig, CliError> {
    require(file.alpha.is_finite() && file.alpha <= 0.0, "alpha", "must be <= 0")?;
    require(
        file.domain.c.is_finite() && file.domain.d.is_finite() && file.domain.d > file.domain.c,
        "domain",
        "requires finite c < d",
    )?;
    require(file.grid_n >= 8, "grid_n", "must be at least 8")?;

    let end_time = match (file.mode, file.time.t_end, file.time.s_end) {
        (ModeSpec::Physical, Some(t), None) => t,
        (ModeSpec::Rescaled, None, Some(s)) => s,
        (ModeSpec::Physical, _, Some(_)) => {
            return Err(CliError::Validation {
                key: "time.s_end",
                message: "physical mode takes t_end, not s_end".into(),
            })
        }
        (ModeSpec::Rescaled, Some(_), _) => {
            return Err(CliError::Validation {
                key: "time.t_end",
                message: "rescaled mode takes s_end, not t_end".into(),
            })
        }
        (ModeSpec::Physical, None, None) => {
            return Err(CliError::Validation {
                key: "time.t_end",
                message: "physical mode requires t_end".into(),
            })
        }
        (ModeSpec::Rescaled, None, None) => {
            return Err(CliError::Validation {
                key: "time.s_end",
                message: "rescaled mode requires s_end".into(),
            })
        }
    };
    require(end_time > 0.0, "time", "end time must be positive")?;

    let sigma_cfl = file.time.sigma_cfl.unwrap_or(0.4);
    require(sigma_cfl > 0.0 && sigma_cfl < 1.0, "time.sigma_cfl", "must lie in (0, 1)")?;
    let dt_max = file.time.dt_max.unwrap_or(1.0);
    require(dt_max > 0.0, "time.dt_max", "must be positive")?;

    require(file.initial.r > 0.0 && file.initial.r.is_finite(), "initial.r", "must be positive")?;
    let amplitude = file.initial.amplitude.unwrap_or(0.05);
    require(amplitude.is_finite() && amplitude >= 0.0, "initial.amplitude", "must be >= 0")?;
    let mode_m = file.initial.mode_m.unwrap_or(1);
    require(mode_m >= 1, "initial.mode_m", "must be at least 1")?;
    let family = match file.initial.kind {
        InitialKind::Constant => InitialFamily::Constant { r: file.initial.r },
        InitialKind::Cosine => {
            InitialFamily::Cosine { r: file.initial.r, amplitude, mode_m }
        }
        InitialKind::RandomCosineMix => InitialFamily::RandomCosineMix {
            r: file.initial.r,
            amplitude,
            seed: file.initial.seed.unwrap_or(0),
        },
    };

    let guards = Guards::default();
    let initial = family
        .build(file.domain.c, file.domain.d, file.grid_n, guards)
        .map_err(|e| CliError::Validation {
            key: "initial",
            message: format!("initial data rejected by the admissibility guards: {e}"),
        })?;

    let c_ref = match file.c_ref {
        CRefSpec::Keyword(CRefKeyword::Auto) => {
            CRef::Fixed(0.5 * (initial.u_min().ln() + initial.u_max().ln()))
        }
        CRefSpec::Value(v) => {
            let (phi1, phi2) = (initial.u_min().ln(), initial.u_max().ln());
            require(
                v.is_finite() && v >= phi1 - 1e-12 && v <= phi2 + 1e-12,
                "c_ref",
                &format!("must lie in [inf phi0, sup phi0] = [{phi1}, {phi2}]"),
            )?;
            CRef::Fixed(v)
        }
    };

    let convergence_tol = file.tolerances.convergence.unwrap_or(1e-8);
    let tol_env = file.tolerances.env.unwrap_or(1e-4);
    let tol_grad = file.tolerances.grad.unwrap_or(1e-8);
    require(convergence_tol >= 0.0, "tolerances.convergence", "must be >= 0")?;
    require(tol_env >= 0.0, "tolerances.env", "must be >= 0")?;
    require(tol_grad >= 0.0, "tolerances.grad", "must be >= 0")?;

    let snapshot_stride = file.output.snapshot_stride.unwrap_or(100);
    require(snapshot_stride >= 1, "output.snapshot_stride", "must be at least 1")?;

    let flow = FlowConfig {
        alpha: file.alpha,
        c: file.domain.c,
        d: file.domain.d,
        n: file.grid_n,
        mode: file.mode.into(),
        c_ref,
        sigma_cfl,
        dt_max,
        end_time,
        guards,
        convergence_tol,
        snapshot_stride,
        tol_env,
        tol_grad,
    };
    flow.validate().map_err(CliError::Flow)?;

    Ok(ParsedConfig {
        flow,
        family,
        initial,
        out_dir: file.output.dir.unwrap_or_else(|| PathBuf::from("out")),
    })
}

/// Loads, applies overrides, and validates in one step.
pub fn parse_config(
    path: &Path,
    alpha: Option<f64>,
    grid_n: Option<usize>,
    mode: Option<ModeSpec>,
) -> Result<ParsedConfig, CliError> {
    let mut file = load_config(path)?;
    if let Some(a) = alpha {
        file.alpha = a;
    }
    if let Some(n) = grid_n {
        file.grid_n = n;
    }
    if let Some(m) = mode {
        file.mode = m;
    }
    finalize(file)
}
