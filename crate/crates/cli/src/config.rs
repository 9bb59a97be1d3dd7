//! TOML run configuration.
//!
//! ```toml
//! experiment = "vsweep"          # optional, must agree with the subcommand
//! output_dir = "out"
//! times = [0.0, 5.0, 10.0]       # or t_final / t_step
//! t_eval = 30.0
//!
//! [model]
//! variant = "ModelI"             # ModelI | ModelII | HermitianAA
//! j_left = 1.0
//! j_right = 0.5
//! v = 0.2
//! beta = 0.618
//!
//! [grid]
//! q = [-40.0, 40.0]
//! p = [-10.0, 10.0]
//! nq = 400
//! np = 200
//!
//! [sweep]
//! parameter = "v"
//! lo = 0.1
//! hi = 1.5
//! n = 15
//!
//! [numeric]
//! dt = 0.01
//! fock_dim = 300
//! lattice_size = 601
//! method = "fiber"               # fock | fiber
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use husimi_dyn::lattice::{DEFAULT_LATTICE_DT, DEFAULT_LATTICE_SIZE};
use husimi_dyn::phase::DEFAULT_TRAJECTORY_DT;
use husimi_dyn::semiclassical::DEFAULT_SEMI_DT;
use husimi_dyn::{golden_beta, ModelParams, PhasePoint, PhaseSpaceGrid, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Experiment {
    LatticeTransport,
    QuantumHusimi,
    ClassicalHusimi,
    PhasePortrait,
    CriticalPoint,
    VSweep,
    Compare,
    PurityScan,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::LatticeTransport,
        Experiment::QuantumHusimi,
        Experiment::ClassicalHusimi,
        Experiment::PhasePortrait,
        Experiment::CriticalPoint,
        Experiment::VSweep,
        Experiment::Compare,
        Experiment::PurityScan,
    ];

    /// Subcommand name.
    pub fn command(self) -> &'static str {
        match self {
            Experiment::LatticeTransport => "lattice",
            Experiment::QuantumHusimi => "qhusimi",
            Experiment::ClassicalHusimi => "chusimi",
            Experiment::PhasePortrait => "portrait",
            Experiment::CriticalPoint => "critical",
            Experiment::VSweep => "vsweep",
            Experiment::Compare => "compare",
            Experiment::PurityScan => "purity",
        }
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let e = match norm.as_str() {
            "lattice" | "latticetransport" => Experiment::LatticeTransport,
            "qhusimi" | "quantumhusimi" => Experiment::QuantumHusimi,
            "chusimi" | "classicalhusimi" => Experiment::ClassicalHusimi,
            "portrait" | "phaseportrait" => Experiment::PhasePortrait,
            "critical" | "criticalpoint" => Experiment::CriticalPoint,
            "vsweep" => Experiment::VSweep,
            "compare" => Experiment::Compare,
            "purity" | "purityscan" => Experiment::PurityScan,
            _ => return Err(CliError::Config(format!("experiment: unknown value `{s}`"))),
        };
        Ok(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantumMethod {
    /// Truncated oscillator basis.
    Fock,
    /// Decomposition into shifted lattices.
    Fiber,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    V,
    Beta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Sweep {
    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Numeric {
    /// Propagation step of lattice and quantum runs; `None` picks a
    /// stable step per method.
    pub dt: Option<f64>,
    pub fock_dim: usize,
    /// Grow the Fock basis when `fock_dim` cannot hold the horizon.
    pub adaptive_fock: bool,
    pub lattice_size: usize,
    pub method: QuantumMethod,
    /// Characteristic step for grid fields.
    pub semi_dt: f64,
    /// Step for forward-transported moments.
    pub moment_dt: f64,
    pub trajectory_dt: f64,
    pub escape_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Portrait {
    pub starts: Vec<(f64, f64)>,
    pub t_final: f64,
    /// Keep every `stride`-th integration step.
    pub stride: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelSpec {
    pub variant: &'static str,
    pub j_left: f64,
    pub j_right: f64,
    pub v: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub q: (f64, f64),
    pub p: (f64, f64),
    pub nq: usize,
    pub np: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip)]
    pub model: ModelParams<f64>,
    #[serde(rename = "model")]
    pub model_spec: ModelSpec,
    pub experiment: Experiment,
    #[serde(skip)]
    pub grid: PhaseSpaceGrid<f64>,
    #[serde(rename = "grid")]
    pub grid_spec: GridSpec,
    pub times: Vec<f64>,
    pub t_eval: f64,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
    pub numeric: Numeric,
    pub portrait: Portrait,
    /// Quantum transition point used for `special_beta`.
    pub quantum_vc: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    variant: Option<String>,
    j_left: Option<f64>,
    j_right: Option<f64>,
    j: Option<f64>,
    v: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    q: Option<[f64; 2]>,
    p: Option<[f64; 2]>,
    nq: Option<usize>,
    np: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: Option<String>,
    lo: f64,
    hi: f64,
    n: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumeric {
    dt: Option<f64>,
    fock_dim: Option<usize>,
    adaptive_fock: Option<bool>,
    lattice_size: Option<usize>,
    method: Option<String>,
    semi_dt: Option<f64>,
    moment_dt: Option<f64>,
    trajectory_dt: Option<f64>,
    escape_bound: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPortrait {
    starts: Option<Vec<[f64; 2]>>,
    t_final: Option<f64>,
    stride: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    output_dir: Option<PathBuf>,
    times: Option<Vec<f64>>,
    t_final: Option<f64>,
    t_step: Option<f64>,
    t_eval: Option<f64>,
    quantum_vc: Option<f64>,
    model: Option<RawModel>,
    grid: Option<RawGrid>,
    sweep: Option<RawSweep>,
    numeric: Option<RawNumeric>,
    portrait: Option<RawPortrait>,
}

fn bad(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

fn positive(field: &str, x: f64) -> CliResult<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(bad(field, format!("must be positive and finite, got {x}")))
    }
}

fn build_model(raw: RawModel) -> CliResult<(ModelParams<f64>, ModelSpec)> {
    let variant = match raw.variant.as_deref() {
        Some(s) => Variant::from_str(s).map_err(|_| bad("model.variant", format!("unknown variant `{s}`")))?,
        None => return Err(bad("model.variant", "missing")),
    };
    let beta = raw.beta.unwrap_or_else(golden_beta);
    let v = raw.v.unwrap_or(0.0);
    if !(v >= 0.0) {
        return Err(bad("model.v", format!("must be non-negative, got {v}")));
    }
    if !(beta.is_finite() && beta != 0.0) {
        return Err(bad("model.beta", format!("must be finite and nonzero, got {beta}")));
    }
    let params = match variant {
        Variant::ModelI => {
            if raw.j.is_some() {
                return Err(bad("model.j", "Model I takes j_left and j_right"));
            }
            ModelParams::model_i(raw.j_left.unwrap_or(1.0), raw.j_right.unwrap_or(0.5), v, beta)
        }
        Variant::ModelII | Variant::HermitianAA => {
            if raw.j_left.is_some() || raw.j_right.is_some() {
                return Err(bad("model.j_left", "this variant takes a single symmetric hopping `j`"));
            }
            let j = raw.j.unwrap_or(1.0);
            if variant == Variant::ModelII {
                ModelParams::model_ii(j, v, beta)
            } else {
                ModelParams::hermitian_aa(j, v, beta)
            }
        }
    }
    .map_err(|e| CliError::Config(format!("model: {e}")))?;
    let spec = ModelSpec {
        variant: variant.name(),
        j_left: params.j_left(),
        j_right: params.j_right(),
        v: params.v(),
        beta: params.beta(),
    };
    Ok((params, spec))
}

fn default_times(experiment: Experiment, variant: Variant) -> Vec<f64> {
    let horizon = if variant == Variant::ModelII { 10.0 } else { 30.0 };
    let steps = |t: f64, dt: f64| (0..=((t / dt).round() as usize)).map(|i| i as f64 * dt).collect::<Vec<_>>();
    match experiment {
        Experiment::LatticeTransport => (1..=100).map(|i| i as f64).collect(),
        Experiment::QuantumHusimi | Experiment::ClassicalHusimi => {
            if variant == Variant::ModelII {
                vec![0.0, 2.0, 5.0, 10.0]
            } else {
                vec![0.0, 5.0, 10.0, 20.0, 30.0]
            }
        }
        Experiment::Compare | Experiment::PurityScan => steps(10.0, 0.5),
        Experiment::VSweep | Experiment::PhasePortrait | Experiment::CriticalPoint => vec![horizon],
    }
}

/// Parses and validates a configuration for `command`. Every field is
/// checked before anything runs; defaults follow the model variant.
pub fn parse_config(text: &str, command: Experiment) -> CliResult<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    if let Some(s) = &raw.experiment {
        let e = Experiment::from_str(s)?;
        if e != command {
            return Err(bad("experiment", format!("config names `{}` but the subcommand is `{}`", e.command(), command.command())));
        }
    }
    let (model, model_spec) = build_model(raw.model.ok_or_else(|| bad("model", "missing [model] table"))?)?;

    let g = raw.grid.unwrap_or_default();
    let q = g.q.unwrap_or([-40.0, 40.0]);
    let p = g.p.unwrap_or([-10.0, 10.0]);
    let grid_spec = GridSpec { q: (q[0], q[1]), p: (p[0], p[1]), nq: g.nq.unwrap_or(400), np: g.np.unwrap_or(200) };
    let grid = PhaseSpaceGrid::new(grid_spec.q, grid_spec.p, grid_spec.nq, grid_spec.np)
        .map_err(|e| CliError::Config(format!("grid: {e}")))?;

    let times = match (raw.times, raw.t_final, raw.t_step) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(bad("times", "give either `times` or `t_final`/`t_step`, not both"));
        }
        (Some(t), None, None) => t,
        (None, Some(tf), step) => {
            let tf = positive("t_final", tf)?;
            let step = positive("t_step", step.unwrap_or(1.0))?;
            let n = (tf / step).round() as usize;
            if ((n as f64) * step - tf).abs() > 1e-9 * tf {
                return Err(bad("t_step", format!("{step} does not divide t_final = {tf}")));
            }
            (0..=n).map(|i| i as f64 * step).collect()
        }
        (None, None, Some(_)) => return Err(bad("t_step", "requires t_final")),
        (None, None, None) => default_times(command, model.variant()),
    };
    if times.is_empty() {
        return Err(bad("times", "must not be empty"));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(bad("times", "entries must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("times", "must be strictly increasing"));
    }
    if command == Experiment::LatticeTransport && times[0] == 0.0 && times.len() == 1 {
        return Err(bad("times", "lattice transport needs a positive sample time"));
    }

    let default_eval = if model.variant() == Variant::ModelII { 10.0 } else { 30.0 };
    let t_eval = positive("t_eval", raw.t_eval.unwrap_or(default_eval))?;
    let quantum_vc = positive("quantum_vc", raw.quantum_vc.unwrap_or(1.0))?;

    let sweep = match raw.sweep {
        Some(s) => {
            let parameter = match s.parameter.as_deref().unwrap_or("v").to_ascii_lowercase().as_str() {
                "v" => SweepParameter::V,
                "beta" => SweepParameter::Beta,
                other => return Err(bad("sweep.parameter", format!("expected `v` or `beta`, got `{other}`"))),
            };
            if s.n == 0 {
                return Err(bad("sweep.n", "must be at least 1"));
            }
            if !(s.lo.is_finite() && s.hi.is_finite()) || s.hi < s.lo {
                return Err(bad("sweep.hi", format!("need finite lo ≤ hi, got [{}, {}]", s.lo, s.hi)));
            }
            if parameter == SweepParameter::V && s.lo < 0.0 {
                return Err(bad("sweep.lo", "potential strength must be non-negative"));
            }
            if parameter == SweepParameter::Beta && s.lo <= 0.0 && s.hi >= 0.0 {
                return Err(bad("sweep.lo", "β range must not contain 0"));
            }
            Some(Sweep { parameter, lo: s.lo, hi: s.hi, n: s.n })
        }
        None if command == Experiment::VSweep => {
            Some(Sweep { parameter: SweepParameter::V, lo: 0.1, hi: 1.5, n: 15 })
        }
        None => None,
    };

    let n = raw.numeric.unwrap_or_default();
    let method = match n.method.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("fock") => QuantumMethod::Fock,
        Some("fiber") => QuantumMethod::Fiber,
        Some(other) => return Err(bad("numeric.method", format!("expected `fock` or `fiber`, got `{other}`"))),
    };
    // sweeps run long horizons where only the fiber route stays bounded
    let method = if n.method.is_none() && command == Experiment::VSweep { QuantumMethod::Fiber } else { method };
    let dt = n.dt.map(|x| positive("numeric.dt", x)).transpose()?;
    let fock_dim = n.fock_dim.unwrap_or(husimi_dyn::fock::DEFAULT_FOCK_DIM);
    if fock_dim < husimi_dyn::fock::MIN_FOCK_DIM {
        return Err(bad("numeric.fock_dim", format!("must be at least {}", husimi_dyn::fock::MIN_FOCK_DIM)));
    }
    let lattice_size = n.lattice_size.unwrap_or(DEFAULT_LATTICE_SIZE);
    if lattice_size < 3 || lattice_size % 2 == 0 {
        return Err(bad("numeric.lattice_size", format!("must be odd and at least 3, got {lattice_size}")));
    }
    let numeric = Numeric {
        dt,
        fock_dim,
        adaptive_fock: n.adaptive_fock.unwrap_or(true),
        lattice_size,
        method,
        semi_dt: positive("numeric.semi_dt", n.semi_dt.unwrap_or(DEFAULT_SEMI_DT))?,
        moment_dt: positive("numeric.moment_dt", n.moment_dt.unwrap_or(0.005))?,
        trajectory_dt: positive("numeric.trajectory_dt", n.trajectory_dt.unwrap_or(DEFAULT_TRAJECTORY_DT))?,
        escape_bound: positive("numeric.escape_bound", n.escape_bound.unwrap_or(1e3))?,
    };

    let pr = raw.portrait.unwrap_or_default();
    let portrait = Portrait {
        starts: match pr.starts {
            Some(s) => {
                if s.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                    return Err(bad("portrait.starts", "coordinates must be finite"));
                }
                s.into_iter().map(|p| (p[0], p[1])).collect()
            }
            None => default_starts(&model),
        },
        t_final: positive("portrait.t_final", pr.t_final.unwrap_or(50.0))?,
        stride: match pr.stride.unwrap_or(10) {
            0 => return Err(bad("portrait.stride", "must be at least 1")),
            s => s,
        },
    };

    Ok(RunConfig {
        model,
        model_spec,
        experiment: command,
        grid,
        grid_spec,
        times,
        t_eval,
        sweep,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        numeric,
        portrait,
        quantum_vc,
    })
}

/// A 5 × 5 lattice of starts over one quasiperiod in `q` and `p ∈ (−π, π)`.
fn default_starts(model: &ModelParams<f64>) -> Vec<(f64, f64)> {
    let qw = 1.0 / (2.0 * model.beta().abs());
    let pi = std::f64::consts::PI;
    let mut out = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            let q = -qw + 2.0 * qw * (i as f64 + 0.5) / 5.0;
            let p = -pi + 2.0 * pi * (j as f64 + 0.5) / 5.0;
            out.push((q, p));
        }
    }
    out
}

impl RunConfig {
    pub fn start_points(&self) -> Vec<PhasePoint<f64>> {
        self.portrait.starts.iter().map(|&(q, p)| PhasePoint::new(q, p)).collect()
    }

    pub fn lattice_dt(&self) -> f64 {
        self.numeric.dt.unwrap_or(DEFAULT_LATTICE_DT)
    }
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub fock_dim: Option<usize>,
    pub lattice_size: Option<usize>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(dt) = o.dt {
            self.numeric.dt = Some(positive("--dt", dt)?);
        }
        if let Some(n) = o.fock_dim {
            if n < husimi_dyn::fock::MIN_FOCK_DIM {
                return Err(bad("--fock-dim", format!("must be at least {}", husimi_dyn::fock::MIN_FOCK_DIM)));
            }
            self.numeric.fock_dim = n;
            // an explicit truncation is taken as given
            self.numeric.adaptive_fock = false;
        }
        if let Some(l) = o.lattice_size {
            if l < 3 || l % 2 == 0 {
                return Err(bad("--lattice-size", format!("must be odd and at least 3, got {l}")));
            }
            self.numeric.lattice_size = l;
        }
        Ok(())
    }
}
