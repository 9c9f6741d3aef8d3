//! Experiment configs, the dispatcher, and manifest verification for the
//! `fredrank` command-line runner.
//!
//! Every run produces a [`RunManifest`] embedding the exact config, the
//! library version and the result payload; re-running the config must
//! reproduce the payload byte for byte, which `verify` checks.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::time::Instant;

use fredrank::domains::{Domain, Point};
use fredrank::fredholm::{self, Method, TestFunction};
use fredrank::kernels::{parse_box, parse_kernel};
use fredrank::rank::{self, FunctionFamily, TolerancePolicy};
use fredrank::series::{finite_diff_check, SliceSpec};

/// One experiment; the JSON form of this enum is echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    RankMc {
        kernel: String,
        k: usize,
        trials: u64,
        seed: u64,
        rel_threshold: f64,
    },
    FiniteRank {
        kernel: String,
        k_max: usize,
        trials_per_k: u64,
        seed: u64,
        rel_threshold: f64,
    },
    LliProbe {
        family: String,
        window: String,
        k: usize,
        budget: usize,
        seed: u64,
        rel_threshold: f64,
    },
    Taylor {
        kernel: String,
        x: Vec<f64>,
        center: Vec<f64>,
        dir: Vec<f64>,
        order: usize,
        radius: f64,
        /// Sampling half-width of the derivative oracle.
        oracle_h: f64,
    },
    Invert {
        kernel: String,
        truth: String,
        window: String,
        k: usize,
        method: String,
        quad_nodes: usize,
        seed: u64,
        noise_rel: Option<f64>,
    },
    NullCheck {
        x_min: f64,
        x_max: f64,
        points: usize,
        s_max: usize,
        numeric_terms: usize,
        quad_nodes: usize,
    },
}

impl ExperimentConfig {
    pub fn subcommand_name(&self) -> &'static str {
        match self {
            ExperimentConfig::RankMc { .. } => "rank-mc",
            ExperimentConfig::FiniteRank { .. } => "finite-rank",
            ExperimentConfig::LliProbe { .. } => "lli-probe",
            ExperimentConfig::Taylor { .. } => "taylor",
            ExperimentConfig::Invert { .. } => "invert",
            ExperimentConfig::NullCheck { .. } => "null-check",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::RankMc { seed, .. }
            | ExperimentConfig::FiniteRank { seed, .. }
            | ExperimentConfig::LliProbe { seed, .. }
            | ExperimentConfig::Invert { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// Config echo, provenance and the result payload of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub duration_ms: u64,
    pub payload: serde_json::Value,
}

/// CLI-level failures, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    Core(fredrank::Error),
    BadConfig(String),
    Io(String),
    /// Manifest re-execution produced a different payload.
    MismatchDetected {
        field: String,
    },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::BadConfig(m) => write!(f, "invalid configuration: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::MismatchDetected { field } => {
                write!(f, "manifest mismatch at field {field}")
            }
        }
    }
}

impl From<fredrank::Error> for CliError {
    fn from(e: fredrank::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// Exit-code contract: 2 validation, 3 domain violation, 4 singular
    /// system, 5 quadrature non-convergence; 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use fredrank::Error::*;
        match self {
            CliError::BadConfig(_) => 2,
            CliError::Core(InvalidInput(_) | UnsupportedFamily(_) | IllConditionedFit { .. }) => 2,
            CliError::Core(
                DomainViolation(_)
                | OutOfChart { .. }
                | SubsetNotContained(_)
                | SingularExpansion { .. },
            ) => 3,
            CliError::Core(SingularSystem { .. }) => 4,
            CliError::Core(QuadratureNotConverged { .. } | NonConvergent { .. }) => 5,
            CliError::Io(_) | CliError::MismatchDetected { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn parse_comma_floats(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::BadConfig(format!("bad number list '{s}'")))
        })
        .collect()
}

fn parse_comma_usizes(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::BadConfig(format!("bad index list '{s}'")))
        })
        .collect()
}

/// Function-family grammar for `lli-probe`:
/// `powers:0,1,2`, `exp-neg-s-over-x:0,1`, or
/// `taylor:<kernel>@orders=2,4,6[@p=0,0][@dir=1,0]`. The family's domain is
/// the probe window itself.
pub fn parse_family(s: &str, window: &Domain) -> CliResult<FunctionFamily> {
    if let Some(list) = s.strip_prefix("powers:") {
        let exps = parse_comma_usizes(list)?;
        if window.dim() != 1 {
            return Err(CliError::BadConfig(
                "powers families expect a 1-d window".into(),
            ));
        }
        return Ok(FunctionFamily::Powers {
            exponents: exps.into_iter().map(|e| vec![e as u32]).collect(),
            domain: window.clone(),
        });
    }
    if let Some(list) = s.strip_prefix("exp-neg-s-over-x:") {
        let idx = parse_comma_usizes(list)?;
        return Ok(FunctionFamily::ExpNegSOverX {
            indices: idx.into_iter().map(|i| i as u32).collect(),
            domain: window.clone(),
        });
    }
    if let Some(rest) = s.strip_prefix("taylor:") {
        let mut parts = rest.split('@');
        let kernel = parts
            .next()
            .ok_or_else(|| CliError::BadConfig("taylor family needs a kernel".into()))?;
        let spec = parse_kernel(kernel)?;
        let mut orders: Option<Vec<usize>> = None;
        let mut center: Option<Vec<f64>> = None;
        let mut dir: Option<Vec<f64>> = None;
        for p in parts {
            match p.split_once('=') {
                Some(("orders", v)) => orders = Some(parse_comma_usizes(v)?),
                Some(("p", v)) => center = Some(parse_comma_floats(v)?),
                Some(("dir", v)) => dir = Some(parse_comma_floats(v)?),
                _ => return Err(CliError::BadConfig(format!("bad taylor family part '{p}'"))),
            }
        }
        let orders =
            orders.ok_or_else(|| CliError::BadConfig("taylor family needs orders=".into()))?;
        let dim = window.dim();
        let center = center.unwrap_or_else(|| vec![0.0; dim]);
        let dir = dir.unwrap_or_else(|| {
            let mut d = vec![0.0; dim];
            d[0] = 1.0;
            d
        });
        return Ok(FunctionFamily::TaylorFunctions {
            spec,
            center: Point::new(center),
            dir,
            orders,
            domain: window.clone(),
        });
    }
    Err(CliError::BadConfig(format!(
        "unknown family '{s}' (expected powers:, exp-neg-s-over-x:, taylor:)"
    )))
}

/// Method grammar for `invert`: `direct`, `tsvd:R`, `tikhonov:LAMBDA`,
/// `tikhonov-sweep`.
pub fn parse_method(s: &str) -> CliResult<Method> {
    if s == "direct" {
        return Ok(Method::Direct);
    }
    if s == "tikhonov-sweep" {
        return Ok(Method::TikhonovSwept);
    }
    if let Some(r) = s.strip_prefix("tsvd:") {
        let r = r
            .parse()
            .map_err(|_| CliError::BadConfig(format!("bad tsvd rank in '{s}'")))?;
        return Ok(Method::Tsvd { r });
    }
    if let Some(l) = s.strip_prefix("tikhonov:") {
        let lambda = l
            .parse()
            .map_err(|_| CliError::BadConfig(format!("bad lambda in '{s}'")))?;
        return Ok(Method::Tikhonov { lambda });
    }
    Err(CliError::BadConfig(format!("unknown method '{s}'")))
}

/// Truth grammar for `invert`: `exp-decay:RATE`, `poly:C0,C1,...`,
/// `bump:CENTER,WIDTH`.
pub fn parse_truth(s: &str) -> CliResult<TestFunction> {
    if let Some(r) = s.strip_prefix("exp-decay:") {
        return Ok(TestFunction::ExpDecay {
            rate: r
                .parse()
                .map_err(|_| CliError::BadConfig(format!("bad rate in '{s}'")))?,
        });
    }
    if let Some(c) = s.strip_prefix("poly:") {
        return Ok(TestFunction::Polynomial {
            coeffs: parse_comma_floats(c)?,
        });
    }
    if let Some(cw) = s.strip_prefix("bump:") {
        let v = parse_comma_floats(cw)?;
        if v.len() != 2 {
            return Err(CliError::BadConfig("bump needs center,width".into()));
        }
        return Ok(TestFunction::GaussianBump {
            center: v[0],
            width: v[1],
        });
    }
    Err(CliError::BadConfig(format!("unknown truth '{s}'")))
}

fn json_payload<T: Serialize>(value: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))
}

/// Validates and executes a config, returning the manifest.
pub fn run(config: &ExperimentConfig) -> CliResult<RunManifest> {
    let start = Instant::now();
    let payload = match config {
        ExperimentConfig::RankMc {
            kernel,
            k,
            trials,
            seed,
            rel_threshold,
        } => {
            let spec = parse_kernel(kernel)?;
            let policy = checked_policy(*rel_threshold)?;
            let report = rank::fullrank_mc(&spec, *k, *trials, *seed, &policy, None, None)?;
            json_payload(&report)?
        }
        ExperimentConfig::FiniteRank {
            kernel,
            k_max,
            trials_per_k,
            seed,
            rel_threshold,
        } => {
            let spec = parse_kernel(kernel)?;
            let policy = checked_policy(*rel_threshold)?;
            let report = rank::finite_rank_estimate(&spec, *k_max, *trials_per_k, *seed, &policy)?;
            json_payload(&report)?
        }
        ExperimentConfig::LliProbe {
            family,
            window,
            k,
            budget,
            seed,
            rel_threshold,
        } => {
            let win = parse_box(window)?;
            let fam = parse_family(family, &win)?;
            let policy = checked_policy(*rel_threshold)?;
            let verdict = rank::lli_probe(&fam, &win, *k, *budget, *seed, &policy)?;
            json_payload(&serde_json::json!({
                "verdict": verdict,
                "seed": seed,
                "budget": budget,
                "policy": policy,
            }))?
        }
        ExperimentConfig::Taylor {
            kernel,
            x,
            center,
            dir,
            order,
            radius,
            oracle_h,
        } => {
            let spec = parse_kernel(kernel)?;
            let slice = SliceSpec::new(
                Point::new(x.clone()),
                Point::new(center.clone()),
                dir.clone(),
                *order,
                *radius,
            )?;
            let report = finite_diff_check(&spec, &slice, *oracle_h)?;
            json_payload(&report)?
        }
        ExperimentConfig::Invert {
            kernel,
            truth,
            window,
            k,
            method,
            quad_nodes,
            seed,
            noise_rel,
        } => {
            let spec = parse_kernel(kernel)?;
            let f_true = parse_truth(truth)?;
            let win = parse_box(window)?;
            let m = parse_method(method)?;
            let report = fredholm::local_recover(
                &spec,
                &f_true,
                &win,
                *k,
                m,
                *quad_nodes,
                *seed,
                *noise_rel,
            )?;
            json_payload(&report)?
        }
        ExperimentConfig::NullCheck {
            x_min,
            x_max,
            points,
            s_max,
            numeric_terms,
            quad_nodes,
        } => {
            if *points < 2 || x_min >= x_max {
                return Err(CliError::BadConfig(
                    "need points >= 2 and x_min < x_max".into(),
                ));
            }
            let grid: Vec<f64> = (0..*points)
                .map(|i| x_min + (x_max - x_min) * i as f64 / (*points as f64 - 1.0))
                .collect();
            let report = fredholm::null_moment_check(&grid, *s_max, *numeric_terms, *quad_nodes)?;
            json_payload(&report)?
        }
    };
    Ok(RunManifest {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_ms: start.elapsed().as_millis() as u64,
        payload,
    })
}

fn checked_policy(rel_threshold: f64) -> CliResult<TolerancePolicy> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(CliError::BadConfig(
            "rel-threshold must lie in (0, 1)".into(),
        ));
    }
    Ok(TolerancePolicy::new(rel_threshold))
}

/// Renders a payload as CSV where the subcommand has a natural table form
/// (taylor coefficient tables, inversion curves); other payloads fall back
/// to their JSON rendering.
pub fn payload_csv(config: &ExperimentConfig, payload: &serde_json::Value) -> Option<String> {
    match config {
        ExperimentConfig::Taylor { .. } => {
            let rows = payload.get("rows")?.as_array()?;
            let mut out = String::from("order,coefficient,finite_diff,rel_err\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.get("order")?,
                    r.get("coefficient")?,
                    r.get("finite_diff")?,
                    r.get("rel_err")?
                ));
            }
            Some(out)
        }
        ExperimentConfig::Invert { .. } => {
            let ys = payload.get("y_nodes")?.as_array()?;
            let fh = payload.get("f_hat")?.as_array()?;
            let mut out = String::from("node,value\n");
            for (y, f) in ys.iter().zip(fh) {
                out.push_str(&format!("{y},{f}\n"));
            }
            Some(out)
        }
        _ => None,
    }
}

/// First JSON path at which two values differ, if any.
pub fn first_difference(
    a: &serde_json::Value,
    b: &serde_json::Value,
    path: &str,
) -> Option<String> {
    use serde_json::Value::*;
    match (a, b) {
        (Object(ma), Object(mb)) => {
            for key in ma.keys().chain(mb.keys()) {
                match (ma.get(key), mb.get(key)) {
                    (Some(va), Some(vb)) => {
                        if let Some(p) = first_difference(va, vb, &format!("{path}/{key}")) {
                            return Some(p);
                        }
                    }
                    _ => return Some(format!("{path}/{key}")),
                }
            }
            None
        }
        (Array(va), Array(vb)) => {
            if va.len() != vb.len() {
                return Some(format!("{path}/length"));
            }
            for (i, (x, y)) in va.iter().zip(vb).enumerate() {
                if let Some(p) = first_difference(x, y, &format!("{path}/{i}")) {
                    return Some(p);
                }
            }
            None
        }
        _ => {
            if a == b {
                None
            } else {
                Some(path.to_string())
            }
        }
    }
}

/// Re-executes the config embedded in a manifest file and compares payloads
/// byte for byte (via their canonical JSON forms).
pub fn verify_manifest(path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(e.to_string()))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::BadConfig(format!("bad manifest: {e}")))?;
    verify_manifest_value(&manifest)
}

/// Verification on an in-memory manifest.
pub fn verify_manifest_value(manifest: &RunManifest) -> CliResult<()> {
    let rerun = run(&manifest.config)?;
    let a = serde_json::to_string(&manifest.payload).map_err(|e| CliError::Io(e.to_string()))?;
    let b = serde_json::to_string(&rerun.payload).map_err(|e| CliError::Io(e.to_string()))?;
    if a == b {
        Ok(())
    } else {
        let field = first_difference(&manifest.payload, &rerun.payload, "")
            .unwrap_or_else(|| "/".to_string());
        Err(CliError::MismatchDetected { field })
    }
}
