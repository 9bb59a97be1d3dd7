//! One function per experiment. Each returns its tables and fields as
//! in-memory files plus diagnostics; the runner writes them.

use std::collections::BTreeMap;

use husimi_dyn::fiber::{evolve_fibers, FiberOptions};
use husimi_dyn::fock::{evolve_quantum_sampled, position_second_moment, suggested_fock_dim};
use husimi_dyn::husimi::{with_auto_expand, MAX_EXPANSIONS};
use husimi_dyn::lattice::{lattice_transport, EDGE_SITES};
use husimi_dyn::linalg::Operator;
use husimi_dyn::phase::{anchor_saddle, chord_saddles, Stability};
use husimi_dyn::semiclassical::{transport_moments_adaptive, AdaptiveLaunch, AdaptiveReport, SemiclassicalOptions};
use husimi_dyn::{
    bracket_critical_potential, critical_potential, ehrenfest_time, fixed_points, husimi_variance, integrate_trajectory,
    purity, quantum_husimi, saddle_energy_match, semiclassical_husimi, separatrix_geometry, separatrix_line_residual,
    special_beta, Classification, ContinuumBasis, HusimiField, ModelParams, PhaseSpaceGrid,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Experiment, QuantumMethod, RunConfig, SweepParameter};
use crate::error::{CliError, CliResult};
use crate::output::{field_csv, table, timed_name, Cell, OutFile};

/// Everything an experiment produced, even when it stopped early.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<OutFile>,
    pub diagnostics: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    /// First hard failure; files gathered before it are still written.
    pub error: Option<CliError>,
}

impl Outcome {
    fn diag(&mut self, key: &str, v: Value) {
        self.diagnostics.insert(key.to_string(), v);
    }

    fn fail(&mut self, e: CliError) {
        self.notes.push(e.to_string());
        if self.error.is_none() {
            self.error = Some(e);
        }
    }
}

pub fn run_experiment(cfg: &RunConfig) -> Outcome {
    match cfg.experiment {
        Experiment::LatticeTransport => run_lattice(cfg),
        Experiment::QuantumHusimi => run_qhusimi(cfg),
        Experiment::ClassicalHusimi => run_chusimi(cfg),
        Experiment::PhasePortrait => run_portrait(cfg),
        Experiment::CriticalPoint => run_critical(cfg),
        Experiment::VSweep => run_vsweep(cfg),
        Experiment::Compare => run_compare(cfg),
        Experiment::PurityScan => run_purity_scan(cfg),
    }
}

pub fn run_lattice(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let l = cfg.numeric.lattice_size;
    match lattice_transport(&cfg.model, l, &cfg.times, cfg.lattice_dt()) {
        Ok(rec) => {
            let rows: Vec<Vec<Cell>> = rec
                .times
                .iter()
                .zip(&rec.sigma_sq)
                .zip(&rec.mean_displacement)
                .map(|((&t, &s), &m)| {
                    let v = if t > 0.0 { Some(s.max(0.0).sqrt() / t) } else { None };
                    vec![t.into(), s.into(), v.into(), m.into()]
                })
                .collect();
            out.files.push(OutFile::new("lattice.csv", table(&["t", "sigma_sq", "velocity", "mean_displacement"], &rows)));
            out.diag("lattice_size", json!(l));
            out.diag("edge_mass_max", json!(rec.max_edge_mass));
            out.diag("edge_mass_ok", json!(!rec.edge_warning()));
            if rec.edge_warning() {
                let msg = format!(
                    "edge mass {:.3e} on the outer {EDGE_SITES} sites exceeds the limit; enlarge the lattice",
                    rec.max_edge_mass
                );
                log::warn!("{msg}");
                out.notes.push(msg);
            }
        }
        Err(e) => out.fail(e.into()),
    }
    out
}

/// Quantum observables at one sample time.
#[derive(Clone, Debug)]
pub struct QuantumSample {
    pub time: f64,
    pub sigma_sq: f64,
    pub field: Option<HusimiField<f64>>,
    pub expansions: usize,
}

#[derive(Clone, Debug, Default)]
pub struct QuantumRun {
    pub samples: Vec<QuantumSample>,
    pub diagnostics: BTreeMap<String, Value>,
}

fn largest_p(grid: &PhaseSpaceGrid<f64>) -> f64 {
    grid.p_min.abs().max(grid.p_max.abs())
}

fn field_on<F>(grid: &PhaseSpaceGrid<f64>, make: F) -> husimi_dyn::Result<(HusimiField<f64>, usize)>
where
    F: FnMut(&PhaseSpaceGrid<f64>) -> husimi_dyn::Result<HusimiField<f64>>,
{
    with_auto_expand(grid, make)
}

/// Evolves the vacuum and records `σ_H²` (and the Husimi field when
/// `fields` is set) at `times`.
pub fn quantum_series(
    cfg: &RunConfig,
    params: &ModelParams<f64>,
    times: &[f64],
    fields: Option<&PhaseSpaceGrid<f64>>,
) -> CliResult<QuantumRun> {
    let t_max = times.last().copied().unwrap_or(0.0);
    let mut run = QuantumRun::default();
    match cfg.numeric.method {
        QuantumMethod::Fock => {
            let n = if cfg.numeric.adaptive_fock {
                cfg.numeric.fock_dim.max(suggested_fock_dim(params, t_max))
            } else {
                cfg.numeric.fock_dim
            };
            let h = ContinuumBasis::<f64>::new(n)?.hamiltonian(params);
            let dt = cfg.numeric.dt.unwrap_or(0.9 * husimi_dyn::evolve::STEP_GUARD / h.step_norm());
            run.diagnostics.insert("method".into(), json!("fock"));
            run.diagnostics.insert("fock_dim".into(), json!(n));
            run.diagnostics.insert("quantum_dt".into(), json!(dt));
            let mut samples = Vec::new();
            let res = evolve_quantum_sampled(&h, times, dt, |t, psi| {
                let sigma_sq = position_second_moment(psi) + 0.5;
                let (field, expansions) = match fields {
                    Some(g) => {
                        let (f, k) = field_on(g, |g| quantum_husimi(psi, g, t))?;
                        (Some(f), k)
                    }
                    None => (None, 0),
                };
                samples.push(QuantumSample { time: t, sigma_sq, field, expansions });
                Ok(())
            });
            run.diagnostics.insert(
                "truncation_guard".into(),
                json!(match &res {
                    Ok(()) => "passed".to_string(),
                    Err(e) => e.to_string(),
                }),
            );
            run.samples = samples;
            res.map_err(CliError::from).map(|_| run)
        }
        QuantumMethod::Fiber => {
            let p_extent = fields.map_or(0.0, |g| largest_p(g) * 1.5f64.powi(MAX_EXPANSIONS as i32));
            let mut opts = FiberOptions::suggested(params, t_max, p_extent);
            if let Some(dt) = cfg.numeric.dt {
                opts.dt = dt;
            }
            run.diagnostics.insert("method".into(), json!("fiber"));
            run.diagnostics.insert("fibers".into(), json!(opts.fibers));
            run.diagnostics.insert("chain_half_width".into(), json!(opts.half_width));
            run.diagnostics.insert("quantum_dt".into(), json!(opts.dt));
            let snaps = evolve_fibers(params, &opts, times)?;
            let mut edge = 0.0f64;
            for s in &snaps {
                edge = edge.max(s.edge_mass());
                let (field, expansions) = match fields {
                    Some(g) => {
                        let (f, k) = field_on(g, |g| s.husimi(g))?;
                        (Some(f), k)
                    }
                    None => (None, 0),
                };
                run.samples.push(QuantumSample { time: s.time, sigma_sq: s.husimi_variance(), field, expansions });
            }
            run.diagnostics.insert("chain_edge_mass_max".into(), json!(edge));
            if edge >= 1e-6 {
                return Err(CliError::Numerical(format!("fiber chains leak: edge mass {edge:.3e}")));
            }
            Ok(run)
        }
    }
}

fn semi_opts(cfg: &RunConfig) -> SemiclassicalOptions<f64> {
    SemiclassicalOptions { dt: cfg.numeric.semi_dt, escape_bound: cfg.numeric.escape_bound, ..Default::default() }
}

/// Forward-transported `σ²` of the semiclassical field at `times`, with
/// the launch quadrature statistics.
pub fn classical_series(
    cfg: &RunConfig,
    params: &ModelParams<f64>,
    times: &[f64],
) -> CliResult<(Vec<f64>, AdaptiveReport)> {
    let (m, rep) = transport_moments_adaptive(
        params,
        times,
        cfg.numeric.moment_dt,
        AdaptiveLaunch::default(),
        cfg.numeric.escape_bound,
    )?;
    Ok((m.iter().map(|s| s.sigma_sq).collect(), rep))
}

fn quadrature_json(rep: &AdaptiveReport) -> Value {
    json!({
        "nodes": rep.nodes,
        "cells": rep.cells,
        "depth_reached": rep.depth_reached,
        "converged": rep.converged,
    })
}

pub fn run_qhusimi(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let run = quantum_series(cfg, &cfg.model, &cfg.times, Some(&cfg.grid));
    let run = match run {
        Ok(r) => r,
        Err(e) => {
            out.fail(e);
            return out;
        }
    };
    let mut rows = Vec::new();
    for s in &run.samples {
        let f = s.field.as_ref().expect("field requested");
        out.files.push(OutFile::new(timed_name("qhusimi", s.time), field_csv(f)));
        rows.push(vec![
            s.time.into(),
            s.sigma_sq.into(),
            purity(f).ok().into(),
            f.mass().into(),
            husimi_variance(f).ok().into(),
            s.expansions.into(),
        ]);
    }
    out.files.push(OutFile::new(
        "qhusimi_moments.csv",
        table(&["t", "sigma_sq", "purity", "mass", "grid_variance", "grid_expansions"], &rows),
    ));
    out.diagnostics.extend(run.diagnostics);
    out
}

pub fn run_chusimi(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let opts = semi_opts(cfg);
    let mut rows = Vec::new();
    let mut worst_escape = 0.0f64;
    let mut worst_log = 0.0f64;
    for &t in &cfg.times {
        let mut last_diag = None;
        let res = field_on(&cfg.grid, |g| {
            let (f, d) = semiclassical_husimi(&cfg.model, g, t, &opts)?;
            last_diag = Some(d);
            Ok(f)
        });
        match res {
            Ok((f, k)) => {
                let d = last_diag.unwrap_or_default();
                worst_escape = worst_escape.max(d.escaped_fraction);
                worst_log = worst_log.max(d.max_abs_log_norm);
                out.files.push(OutFile::new(timed_name("chusimi", t), field_csv(&f)));
                rows.push(vec![
                    t.into(),
                    husimi_variance(&f).ok().into(),
                    purity(&f).ok().into(),
                    f.mass().into(),
                    d.escaped_fraction.into(),
                    d.max_abs_log_norm.into(),
                    d.halving_change.into(),
                    k.into(),
                ]);
            }
            Err(e) => {
                out.fail(e.into());
                break;
            }
        }
    }
    out.files.push(OutFile::new(
        "chusimi_moments.csv",
        table(
            &["t", "sigma_sq", "purity", "mass", "escaped_fraction", "max_abs_log_norm", "halving_change", "grid_expansions"],
            &rows,
        ),
    ));
    out.diag("escaped_fraction_max", json!(worst_escape));
    out.diag("max_abs_log_norm", json!(worst_log));
    out
}

fn class_name(c: Classification) -> &'static str {
    match c {
        Classification::BoundedClosed => "bounded_closed",
        Classification::UnboundedQ => "unbounded_q",
        Classification::UnboundedP => "unbounded_p",
        Classification::Undetermined => "undetermined",
    }
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Center => "center",
        Stability::Saddle => "saddle",
        Stability::Degenerate => "degenerate",
    }
}

pub fn run_portrait(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let p = &cfg.model;
    let (qw, pw) = husimi_dyn::phase::default_window(p);
    let fps = fixed_points(p, qw, pw);
    let rows: Vec<Vec<Cell>> = fps
        .iter()
        .map(|r| {
            vec![
                r.location.q.into(),
                r.location.p.into(),
                stability_name(r.stability).into(),
                r.eigenvalues[0].re.into(),
                r.eigenvalues[0].im.into(),
                r.eigenvalues[1].re.into(),
                r.eigenvalues[1].im.into(),
                (if r.exists { "true" } else { "false" }).into(),
            ]
        })
        .collect();
    out.files.push(OutFile::new(
        "fixed_points.csv",
        table(&["q", "p", "stability", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im", "exists"], &rows),
    ));
    let starts = cfg.start_points();
    let trajs: Vec<_> = starts
        .par_iter()
        .map(|s| integrate_trajectory(p, *s, cfg.portrait.t_final, cfg.numeric.trajectory_dt))
        .collect();
    let mut rows = Vec::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (k, tr) in trajs.iter().enumerate() {
        let name = class_name(tr.classification);
        *counts.entry(name).or_default() += 1;
        let n = tr.points.len();
        for (i, (pt, t)) in tr.points.iter().zip(&tr.times).enumerate() {
            if i % cfg.portrait.stride == 0 || i + 1 == n {
                rows.push(vec![k.into(), (*t).into(), pt.q.into(), pt.p.into(), name.into()]);
            }
        }
    }
    out.files.push(OutFile::new("portrait.csv", table(&["trajectory", "t", "q", "p", "classification"], &rows)));
    out.diag("classification_counts", json!(counts));
    out.diag("fixed_points", json!(fps.iter().filter(|r| r.exists).count()));
    out
}

pub fn run_critical(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let p = &cfg.model;
    let vc = critical_potential(p);
    let mut rows: Vec<Vec<Cell>> = vec![vec!["critical_potential".into(), vc.into()]];
    let mut push = |out: &mut Outcome, name: &str, r: husimi_dyn::Result<f64>| match r {
        Ok(x) => rows.push(vec![name.into(), x.into()]),
        Err(e) => {
            rows.push(vec![name.into(), Cell::Missing]);
            out.fail(CliError::Numerical(format!("{name}: {e}")));
        }
    };
    push(&mut out, "bracketed_potential", bracket_critical_potential(p, 0.5 * vc, 1.5 * vc, 1e-3 * vc));
    push(&mut out, "saddle_energy_match", saddle_energy_match(p));
    if p.variant() != husimi_dyn::Variant::HermitianAA {
        push(&mut out, "special_beta", special_beta(p, cfg.quantum_vc));
    }
    let at_vc = p.with_v(vc);
    let geometry = at_vc.and_then(|q| anchor_saddle(&q).and_then(|s| separatrix_geometry(&q, &s)));
    match geometry {
        Ok(g) => {
            push(&mut out, "separatrix_m1_at_vc", Ok(g.m1));
            push(&mut out, "separatrix_m2_at_vc", Ok(g.m2));
            push(&mut out, "separatrix_v_star", Ok(g.v_star));
        }
        Err(e) => push(&mut out, "separatrix_m1_at_vc", Err(e)),
    }
    for (label, f) in [("0.9", 0.9), ("1", 1.0), ("1.1", 1.1)] {
        let r = p.with_v(f * vc).and_then(|q| {
            let (a, b) = chord_saddles(&q)?;
            separatrix_line_residual(&q, a, b, 400)
        });
        let name = format!("chord_residual_at_{label}_vc");
        match r {
            Ok(x) => rows.push(vec![name.into(), x.into()]),
            // the saddle pair only exists on one side of the transition
            Err(e) => {
                out.notes.push(format!("{name}: {e}"));
                rows.push(vec![name.into(), Cell::Missing]);
            }
        }
    }
    match ehrenfest_time(p) {
        Ok(t) => rows.push(vec!["ehrenfest_time".into(), t.into()]),
        Err(e) => {
            rows.push(vec!["ehrenfest_time".into(), Cell::Missing]);
            out.notes.push(format!("ehrenfest_time: {e}"));
        }
    }
    out.files.push(OutFile::new("critical.csv", table(&["quantity", "value"], &rows)));
    out.diag("model_v", json!(p.v()));
    out
}

/// `(parameter, v_lattice, v_quantum, v_classical)` for one sweep point.
pub type SweepRow = (f64, Option<f64>, Option<f64>, Option<f64>);

pub fn sweep_point(cfg: &RunConfig, params: &ModelParams<f64>) -> (SweepRow, Vec<String>) {
    let t = cfg.t_eval;
    let key = match cfg.sweep.map(|s| s.parameter) {
        Some(SweepParameter::Beta) => params.beta(),
        _ => params.v(),
    };
    let mut notes = Vec::new();
    let mut note = |what: &str, e: String| notes.push(format!("{}={key}: {what} failed: {e}", param_name(cfg)));
    let lattice = match lattice_transport(params, cfg.numeric.lattice_size, &[t], cfg.lattice_dt()) {
        Ok(r) => {
            if r.edge_warning() {
                note("lattice edge monitor", format!("edge mass {:.3e}", r.max_edge_mass));
            }
            Some(r.velocity_at_t)
        }
        Err(e) => {
            note("lattice", e.to_string());
            None
        }
    };
    let quantum = match quantum_series(cfg, params, &[t], None) {
        Ok(r) => Some(r.samples[0].sigma_sq.sqrt() / t),
        Err(e) => {
            note("quantum", e.to_string());
            None
        }
    };
    let classical = match classical_series(cfg, params, &[t]) {
        Ok((s, _)) => Some(s[0].sqrt() / t),
        Err(e) => {
            note("classical", e.to_string());
            None
        }
    };
    ((key, lattice, quantum, classical), notes)
}

fn param_name(cfg: &RunConfig) -> &'static str {
    match cfg.sweep.map(|s| s.parameter) {
        Some(SweepParameter::Beta) => "beta",
        _ => "V",
    }
}

pub fn run_vsweep(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let sweep = cfg.sweep.expect("vsweep always has a sweep");
    let params: Vec<CliResult<ModelParams<f64>>> = sweep
        .values()
        .into_iter()
        .map(|x| {
            match sweep.parameter {
                SweepParameter::V => cfg.model.with_v(x),
                SweepParameter::Beta => cfg.model.with_beta(x),
            }
            .map_err(CliError::from)
        })
        .collect();
    let points: Vec<CliResult<(SweepRow, Vec<String>)>> = params
        .into_par_iter()
        .map(|p| p.map(|p| sweep_point(cfg, &p)))
        .collect();
    let mut rows = Vec::new();
    let mut missing = 0usize;
    for p in points {
        match p {
            Ok(((x, l, q, c), notes)) => {
                missing += [l, q, c].iter().filter(|v| v.is_none()).count();
                out.notes.extend(notes);
                rows.push(vec![x.into(), l.into(), q.into(), c.into()]);
            }
            Err(e) => out.fail(e),
        }
    }
    rows.sort_by(|a, b| match (&a[0], &b[0]) {
        (Cell::Num(x), Cell::Num(y)) => x.total_cmp(y),
        _ => std::cmp::Ordering::Equal,
    });
    let header = [param_name(cfg), "v_lattice", "v_quantum_husimi", "v_classical_husimi"];
    out.files.push(OutFile::new("vsweep.csv", table(&header, &rows)));
    out.diag("t_eval", json!(cfg.t_eval));
    out.diag("missing_cells", json!(missing));
    out.diag("quantum_method", json!(cfg.numeric.method));
    if missing > 0 {
        out.fail(CliError::Numerical(format!("{missing} sweep cells missing")));
    }
    out
}

pub fn run_compare(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let times = &cfg.times;
    let last = *times.last().expect("times validated non-empty");
    let quantum = match quantum_series(cfg, &cfg.model, times, None) {
        Ok(r) => r,
        Err(e) => {
            out.fail(e);
            return out;
        }
    };
    out.diagnostics.extend(quantum.diagnostics.clone());
    let classical = match classical_series(cfg, &cfg.model, times) {
        Ok((c, rep)) => {
            out.diag("classical_quadrature", quadrature_json(&rep));
            c
        }
        Err(e) => {
            out.fail(e);
            return out;
        }
    };
    let rows: Vec<Vec<Cell>> = quantum
        .samples
        .iter()
        .zip(&classical)
        .map(|(q, &c)| vec![q.time.into(), q.sigma_sq.into(), c.into(), ((c - q.sigma_sq).abs() / q.sigma_sq).into()])
        .collect();
    out.files.push(OutFile::new(
        "compare.csv",
        table(&["t", "sigma_sq_quantum", "sigma_sq_classical", "relative_difference"], &rows),
    ));
    // fields at the final time on a common grid
    let qf = quantum_series(cfg, &cfg.model, &[last], Some(&cfg.grid));
    let qf = match qf {
        Ok(mut r) => r.samples.pop().and_then(|s| s.field),
        Err(e) => {
            out.fail(e);
            None
        }
    };
    if let Some(qf) = qf {
        match semiclassical_husimi(&cfg.model, &qf.grid, last, &semi_opts(cfg)) {
            Ok((cf, d)) => {
                let worst = qf.values.iter().zip(cf.values.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                out.diag("field_max_abs_discrepancy", json!(worst));
                out.diag("escaped_fraction", json!(d.escaped_fraction));
                out.files.push(OutFile::new(timed_name("compare_quantum", last), field_csv(&qf)));
                out.files.push(OutFile::new(timed_name("compare_classical", last), field_csv(&cf)));
            }
            Err(e) => out.fail(e.into()),
        }
    }
    out
}

pub fn run_purity_scan(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let quantum = match quantum_series(cfg, &cfg.model, &cfg.times, Some(&cfg.grid)) {
        Ok(r) => r,
        Err(e) => {
            out.fail(e);
            return out;
        }
    };
    out.diagnostics.extend(quantum.diagnostics.clone());
    let classical = classical_series(cfg, &cfg.model, &cfg.times);
    let classical = match classical {
        Ok((c, rep)) => {
            out.diag("classical_quadrature", quadrature_json(&rep));
            c.into_iter().map(Some).collect()
        }
        Err(e) => {
            out.fail(e);
            vec![None; cfg.times.len()]
        }
    };
    let rows: Vec<Vec<Cell>> = quantum
        .samples
        .iter()
        .zip(classical)
        .map(|(q, c)| {
            let pur = q.field.as_ref().and_then(|f| purity(f).ok());
            vec![q.time.into(), pur.into(), q.sigma_sq.into(), c.into()]
        })
        .collect();
    out.files.push(OutFile::new("purity.csv", table(&["t", "purity", "sigma_sq_quantum", "sigma_sq_classical"], &rows)));
    match ehrenfest_time(&cfg.model) {
        Ok(t) => out.diag("ehrenfest_time", if t.is_finite() { json!(t) } else { json!("infinite") }),
        Err(e) => out.notes.push(format!("ehrenfest_time: {e}")),
    }
    out
}
