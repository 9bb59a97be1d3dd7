//! Semiclassical Husimi propagation along characteristics.
//!
//! The characteristic reaching `z` at time `t` is found by running the
//! model flow field from `z` for a duration `t`; the norm landscape
//! `log w = ∫ 2Γ_I` is accumulated along the same path.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{evolve_quantum, ContinuumBasis};
use crate::husimi::{quantum_husimi, HusimiField, PhaseSpaceGrid};
use crate::linalg::{c, DenseOperator, Operator};
use crate::model::{PhaseFlow, PhasePoint};
use crate::ode::{rk4_integrate, rk4_step, step_count};
use crate::scalar::Real;

pub const DEFAULT_ESCAPE_BOUND: f64 = 1e3;
pub const DEFAULT_SEMI_DT: f64 = 1e-3;
/// Largest tolerated fraction of escaped grid nodes.
pub const ESCAPED_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicResult<T = f64> {
    /// Initial condition `ζ₀` that flows into `final_point`.
    pub origin: PhasePoint<T>,
    pub log_norm: T,
    pub final_point: PhasePoint<T>,
    pub escaped: bool,
}

fn out_of_bounds<T: Real>(q: T, p: T, bound: T) -> bool {
    !(q.abs() <= bound && p.abs() <= bound)
}

/// Follows the characteristic through `z` back to its initial point.
pub fn backward_characteristic<T: Real, F: PhaseFlow<T> + ?Sized>(
    flow: &F,
    z: PhasePoint<T>,
    t: T,
    dt: T,
    bound: T,
) -> CharacteristicResult<T> {
    let two = T::lit(2.0);
    let rhs = |y: &[T; 3]| {
        let pt = PhasePoint::new(y[0], y[1]);
        let (f, g) = flow.velocity(pt);
        [f, g, two * flow.gamma_i(pt)]
    };
    let (y, ok) = rk4_integrate(&rhs, [z.q, z.p, T::zero()], t, dt, |y| !out_of_bounds(y[0], y[1], bound));
    CharacteristicResult { origin: PhasePoint::new(y[0], y[1]), log_norm: y[2], final_point: z, escaped: !ok }
}

/// Runs the characteristic forward from `origin` for time `t`; inverse of
/// [`backward_characteristic`].
pub fn forward_characteristic<T: Real, F: PhaseFlow<T> + ?Sized>(
    flow: &F,
    origin: PhasePoint<T>,
    t: T,
    dt: T,
) -> PhasePoint<T> {
    let rhs = |y: &[T; 2]| {
        let (f, g) = flow.velocity(PhasePoint::new(y[0], y[1]));
        [-f, -g]
    };
    let (y, _) = rk4_integrate(&rhs, [origin.q, origin.p], t, dt, |_| true);
    PhasePoint::new(y[0], y[1])
}

#[derive(Clone, Copy, Debug)]
pub struct SemiclassicalOptions<T = f64> {
    pub dt: T,
    pub escape_bound: T,
    /// Run the step-halving check on every `n`-th node (0 disables it).
    pub halving_stride: usize,
}

impl<T: Real> Default for SemiclassicalOptions<T> {
    fn default() -> Self {
        Self { dt: T::lit(DEFAULT_SEMI_DT), escape_bound: T::lit(DEFAULT_ESCAPE_BOUND), halving_stride: 20 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SemiclassicalDiagnostics {
    pub escaped_fraction: f64,
    pub max_abs_log_norm: f64,
    /// Largest change of a node value when the step is halved, over the
    /// checked subsample.
    pub halving_change: f64,
}

fn initial_weight<T: Real>(origin: PhasePoint<T>) -> T {
    (-origin.z_norm_sqr()).exp()
}

/// `Q_cl(z, t) = e^{−|ζ₀|²} w` at every grid node.
pub fn semiclassical_husimi<T: Real, F: PhaseFlow<T> + ?Sized>(
    flow: &F,
    grid: &PhaseSpaceGrid<T>,
    t: T,
    opts: &SemiclassicalOptions<T>,
) -> Result<(HusimiField<T>, SemiclassicalDiagnostics)> {
    grid.validate()?;
    if t < T::zero() {
        return Err(Error::InvalidParameter { field: "t", reason: "must be non-negative".into() });
    }
    let np = grid.np;
    let rows: Vec<(Vec<T>, usize, f64, f64)> = (0..grid.nq)
        .into_par_iter()
        .map(|i| {
            let q = grid.q(i);
            let mut row = Vec::with_capacity(np);
            let (mut esc, mut max_log, mut halving) = (0usize, 0.0f64, 0.0f64);
            for j in 0..np {
                let z = PhasePoint::new(q, grid.p(j));
                let ch = backward_characteristic(flow, z, t, opts.dt, opts.escape_bound);
                let value = if ch.escaped {
                    esc += 1;
                    T::zero()
                } else {
                    max_log = max_log.max(ch.log_norm.as_f64().abs());
                    initial_weight(ch.origin) * ch.log_norm.exp()
                };
                let idx = i * np + j;
                if opts.halving_stride > 0 && idx % opts.halving_stride == 0 && !ch.escaped {
                    let fine = backward_characteristic(flow, z, t, opts.dt / T::lit(2.0), opts.escape_bound);
                    if !fine.escaped {
                        let v2 = initial_weight(fine.origin) * fine.log_norm.exp();
                        halving = halving.max((v2 - value).abs().as_f64());
                    }
                }
                row.push(value);
            }
            (row, esc, max_log, halving)
        })
        .collect();
    let mut values = ndarray::Array2::zeros((grid.nq, np));
    let mut diag = SemiclassicalDiagnostics::default();
    let mut escaped = 0usize;
    for (i, (row, esc, max_log, halving)) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
        escaped += esc;
        diag.max_abs_log_norm = diag.max_abs_log_norm.max(max_log);
        diag.halving_change = diag.halving_change.max(halving);
    }
    diag.escaped_fraction = escaped as f64 / (grid.nq * np) as f64;
    if diag.escaped_fraction > ESCAPED_LIMIT {
        return Err(Error::EscapedCharacteristics { fraction: diag.escaped_fraction, limit: ESCAPED_LIMIT });
    }
    Ok((HusimiField { grid: *grid, values, time: t }, diag))
}

/// Moments of `Q_cl` at one time, from [`transport_moments`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSample<T = f64> {
    pub time: T,
    pub mass: T,
    /// `∫q²Q_cl / ∫Q_cl`.
    pub sigma_sq: T,
    pub escaped_fraction: f64,
}

/// Launch lattice for [`transport_moments`]: square `[−radius, radius]²`
/// with `n × n` nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaunchGrid<T = f64> {
    pub radius: T,
    pub n: usize,
}

impl<T: Real> Default for LaunchGrid<T> {
    fn default() -> Self {
        Self { radius: T::lit(7.0), n: 121 }
    }
}

/// Moments of the semiclassical field computed by pushing the initial
/// distribution forward instead of pulling every grid node back.
///
/// With `Φ_t` the forward map, `∫F Q_cl dz = ∫F(Φ_t(ζ)) Q⁰(ζ) e^{∫(2Γ_I + ∇·u)} dζ`
/// where `u` is the forward velocity. The integral over `ζ` is done with the
/// trapezoid rule on the launch lattice, where `Q⁰` is smooth and compact, so
/// no output grid is needed and long times stay cheap.
pub fn transport_moments<T: Real, F: PhaseFlow<T> + ?Sized>(
    flow: &F,
    times: &[T],
    dt: T,
    launch: LaunchGrid<T>,
    escape_bound: T,
) -> Result<Vec<MomentSample<T>>> {
    if launch.n < 2 {
        return Err(Error::InvalidParameter { field: "launch", reason: "need at least 2 nodes".into() });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| *t < T::zero()) {
        return Err(Error::InvalidParameter { field: "times", reason: "must be ascending and non-negative".into() });
    }
    let h = T::lit(2.0) * launch.radius / T::from_index(launch.n - 1);
    let two = T::lit(2.0);
    let rhs = |y: &[T; 3]| {
        let pt = PhasePoint::new(y[0], y[1]);
        let (f, g) = flow.velocity(pt);
        [-f, -g, two * flow.gamma_i(pt) - flow.divergence(pt)]
    };
    let nt = times.len();
    // per launch row: for every time, (Σw, Σq²w, escaped count)
    let rows: Vec<Vec<(f64, f64, usize)>> = (0..launch.n)
        .into_par_iter()
        .map(|i| {
            let q0 = -launch.radius + h * T::from_index(i);
            let mut acc = vec![(0.0, 0.0, 0usize); nt];
            for j in 0..launch.n {
                let p0 = -launch.radius + h * T::from_index(j);
                let edge = |k: usize| if k == 0 || k + 1 == launch.n { 0.5 } else { 1.0 };
                let w0 = edge(i) * edge(j) * (-(q0 * q0 + p0 * p0) / two).exp().as_f64();
                let mut y = [q0, p0, T::zero()];
                let mut t = T::zero();
                let mut escaped = false;
                for (k, &target) in times.iter().enumerate() {
                    if !escaped {
                        let n = step_count(target - t, dt);
                        if n > 0 {
                            let step = (target - t) / T::from_index(n);
                            for _ in 0..n {
                                y = rk4_step(&rhs, &y, step);
                                if out_of_bounds(y[0], y[1], escape_bound) || !y[2].is_finite() {
                                    escaped = true;
                                    break;
                                }
                            }
                        }
                        t = target;
                    }
                    if escaped {
                        acc[k].2 += 1;
                    } else {
                        let w = w0 * y[2].as_f64().exp();
                        let q = y[0].as_f64();
                        acc[k].0 += w;
                        acc[k].1 += q * q * w;
                    }
                }
            }
            acc
        })
        .collect();
    let area = (h * h).as_f64();
    let total_nodes = (launch.n * launch.n) as f64;
    let mut out = Vec::with_capacity(nt);
    for (k, &t) in times.iter().enumerate() {
        let (mut m, mut m2, mut esc) = (0.0, 0.0, 0usize);
        for r in &rows {
            m += r[k].0;
            m2 += r[k].1;
            esc += r[k].2;
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::ZeroMass);
        }
        let fraction = esc as f64 / total_nodes;
        if fraction > ESCAPED_LIMIT {
            return Err(Error::EscapedCharacteristics { fraction, limit: ESCAPED_LIMIT });
        }
        out.push(MomentSample { time: t, mass: T::lit(m * area), sigma_sq: T::lit(m2 / m), escaped_fraction: fraction });
    }
    Ok(out)
}

/// Adaptive launch quadrature for [`transport_moments_adaptive`].
///
/// Cells of the `n × n` base lattice are split in four while the spread of
/// their corner weights, relative to the running total, exceeds `tol` for
/// either `∫Q` or `∫q²Q` at any sample time. Besides the requested times,
/// refinement also looks at probe times every `probe_interval`: gain ridges
/// narrow with time, and are caught while still wider than a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveLaunch<T = f64> {
    pub radius: T,
    pub n: usize,
    pub max_depth: u32,
    pub tol: f64,
    /// Refinement stops once this many characteristics have been launched.
    pub max_nodes: usize,
    pub probe_interval: f64,
}

impl<T: Real> Default for AdaptiveLaunch<T> {
    fn default() -> Self {
        Self { radius: T::lit(7.0), n: 61, max_depth: 8, tol: 2e-4, max_nodes: 400_000, probe_interval: 2.5 }
    }
}

/// Quadrature statistics of an adaptive moment run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AdaptiveReport {
    pub nodes: usize,
    pub cells: usize,
    /// Finest subdivision level used.
    pub depth_reached: u32,
    /// Every cell met the tolerance before the depth and node limits.
    pub converged: bool,
}

/// `(log weight, q)` of one launch point at each sample time, `None` once
/// escaped.
fn launch_history<T: Real, F: PhaseFlow<T> + ?Sized>(
    flow: &F,
    start: PhasePoint<T>,
    times: &[T],
    dt: T,
    escape_bound: T,
) -> Vec<Option<(f64, f64)>> {
    let two = T::lit(2.0);
    let rhs = |y: &[T; 3]| {
        let pt = PhasePoint::new(y[0], y[1]);
        let (f, g) = flow.velocity(pt);
        [-f, -g, two * flow.gamma_i(pt) - flow.divergence(pt)]
    };
    let log_q0 = (-(start.q * start.q + start.p * start.p) / two).as_f64();
    let mut y = [start.q, start.p, T::zero()];
    let mut t = T::zero();
    let mut escaped = false;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if !escaped {
            let n = step_count(target - t, dt);
            if n > 0 {
                let step = (target - t) / T::from_index(n);
                for _ in 0..n {
                    y = rk4_step(&rhs, &y, step);
                    if out_of_bounds(y[0], y[1], escape_bound) || !y[2].is_finite() {
                        escaped = true;
                        break;
                    }
                }
            }
            t = target;
        }
        out.push(if escaped { None } else { Some((log_q0 + y[2].as_f64(), y[0].as_f64())) });
    }
    out
}

/// [`transport_moments`] with the launch integral refined where the weight
/// `Q⁰ e^{∫(2Γ_I + ∇·u)}` concentrates.
///
/// Non-Hermitian gain makes the weight vary exponentially across launch
/// points, so at long times a fixed lattice samples the few cells that
/// carry the mass too coarsely. Cells are integrated with the bilinear
/// (corner-average) rule.
pub fn transport_moments_adaptive<T: Real, F: PhaseFlow<T> + ?Sized>(
    flow: &F,
    times: &[T],
    dt: T,
    launch: AdaptiveLaunch<T>,
    escape_bound: T,
) -> Result<(Vec<MomentSample<T>>, AdaptiveReport)> {
    use std::collections::BTreeMap;

    if launch.n < 2 {
        return Err(Error::InvalidParameter { field: "launch", reason: "need at least 2 nodes".into() });
    }
    if launch.max_depth > 20 {
        return Err(Error::InvalidParameter { field: "launch", reason: "max_depth above 20".into() });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| *t < T::zero()) {
        return Err(Error::InvalidParameter { field: "times", reason: "must be ascending and non-negative".into() });
    }
    if !(launch.probe_interval > 0.0) {
        return Err(Error::InvalidParameter { field: "launch", reason: "probe_interval must be positive".into() });
    }
    let requested = times;
    let t_max = times.last().map_or(0.0, |t| t.as_f64());
    let mut all: Vec<T> = times.to_vec();
    let mut k = 1.0;
    while k * launch.probe_interval < t_max {
        all.push(T::lit(k * launch.probe_interval));
        k += 1.0;
    }
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    all.dedup();
    let times = &all[..];
    let nt = times.len();
    let unit = 1i64 << launch.max_depth;
    let cells_per_side = (launch.n - 1) as i64;
    let fine = (T::lit(2.0) * launch.radius / T::from_index(launch.n - 1)).as_f64() / unit as f64;
    let r = launch.radius.as_f64();
    let coord = |k: i64| T::lit(-r + fine * k as f64);

    type History = Vec<Option<(f64, f64)>>;
    let mut nodes: BTreeMap<(i64, i64), History> = BTreeMap::new();
    let evaluate = |keys: Vec<(i64, i64)>, nodes: &mut BTreeMap<(i64, i64), History>| {
        let hist: Vec<History> = keys
            .par_iter()
            .map(|&(i, j)| launch_history(flow, PhasePoint::new(coord(i), coord(j)), times, dt, escape_bound))
            .collect();
        nodes.extend(keys.into_iter().zip(hist));
    };
    let base: Vec<(i64, i64)> =
        (0..=cells_per_side).flat_map(|i| (0..=cells_per_side).map(move |j| (i * unit, j * unit))).collect();
    evaluate(base, &mut nodes);

    // cells as (corner i, corner j, side) in fine units
    let mut cells: Vec<(i64, i64, i64)> =
        (0..cells_per_side).flat_map(|i| (0..cells_per_side).map(move |j| (i * unit, j * unit, unit))).collect();
    let corners = |c: &(i64, i64, i64)| {
        let (i, j, s) = *c;
        [(i, j), (i + s, j), (i, j + s), (i + s, j + s)]
    };
    // per time: Σ w, Σ q² w over a cell's corners (mean), spreads, escaped corners
    let cell_stats = |c: &(i64, i64, i64), nodes: &BTreeMap<(i64, i64), History>, k: usize| {
        let (mut m, mut m2) = (0.0, 0.0);
        let (mut lo, mut hi, mut lo2, mut hi2) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        let mut esc = 0usize;
        for key in corners(c) {
            let (w, w2) = match nodes[&key][k] {
                Some((lw, q)) => {
                    let w = lw.exp();
                    (w, q * q * w)
                }
                None => {
                    esc += 1;
                    (0.0, 0.0)
                }
            };
            m += w;
            m2 += w2;
            lo = lo.min(w);
            hi = hi.max(w);
            lo2 = lo2.min(w2);
            hi2 = hi2.max(w2);
        }
        let area = (c.2 as f64 * fine).powi(2);
        (0.25 * m * area, 0.25 * m2 * area, (hi - lo) * area, (hi2 - lo2) * area, esc)
    };
    let totals = |cells: &[(i64, i64, i64)], nodes: &BTreeMap<(i64, i64), History>| {
        (0..nt)
            .map(|k| {
                cells.iter().fold((0.0, 0.0), |acc, c| {
                    let s = cell_stats(c, nodes, k);
                    (acc.0 + s.0, acc.1 + s.1)
                })
            })
            .collect::<Vec<(f64, f64)>>()
    };

    let mut converged = false;
    loop {
        let tot = totals(&cells, &nodes);
        let needs = |c: &(i64, i64, i64)| {
            (0..nt).any(|k| {
                let s = cell_stats(c, &nodes, k);
                let (m, m2) = tot[k];
                (m > 0.0 && s.2 > launch.tol * m) || (m2 > 0.0 && s.3 > launch.tol * m2)
            })
        };
        let split: Vec<bool> = cells.iter().map(|c| c.2 > 1 && needs(c)).collect();
        if !split.iter().any(|&b| b) {
            converged = !cells.iter().any(|c| c.2 == 1 && needs(c));
            break;
        }
        let mut next = Vec::with_capacity(cells.len());
        let mut fresh = std::collections::BTreeSet::new();
        for (c, &sp) in cells.iter().zip(&split) {
            if !sp {
                next.push(*c);
                continue;
            }
            let (i, j, s) = *c;
            let h = s / 2;
            for (di, dj) in [(0, 0), (h, 0), (0, h), (h, h)] {
                let child = (i + di, j + dj, h);
                for key in corners(&child) {
                    if !nodes.contains_key(&key) {
                        fresh.insert(key);
                    }
                }
                next.push(child);
            }
        }
        if nodes.len() + fresh.len() > launch.max_nodes {
            break;
        }
        evaluate(fresh.into_iter().collect(), &mut nodes);
        cells = next;
    }
    let finest = cells.iter().map(|c| c.2).min().unwrap_or(unit);
    let depth = launch.max_depth - finest.trailing_zeros();

    let total_area = (2.0 * r).powi(2);
    let mut out = Vec::with_capacity(requested.len());
    for &t in requested {
        let k = times.iter().position(|&x| x == t).expect("requested time is sampled");
        let (mut m, mut m2, mut esc_area) = (0.0, 0.0, 0.0);
        for c in &cells {
            let s = cell_stats(c, &nodes, k);
            m += s.0;
            m2 += s.1;
            esc_area += s.4 as f64 / 4.0 * (c.2 as f64 * fine).powi(2);
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::ZeroMass);
        }
        let fraction = esc_area / total_area;
        if fraction > ESCAPED_LIMIT {
            return Err(Error::EscapedCharacteristics { fraction, limit: ESCAPED_LIMIT });
        }
        out.push(MomentSample { time: t, mass: T::lit(m), sigma_sq: T::lit(m2 / m), escaped_fraction: fraction });
    }
    let report = AdaptiveReport { nodes: nodes.len(), cells: cells.len(), depth_reached: depth, converged };
    Ok((out, report))
}

/// The test Hamiltonian `H = κ q̂`: `Γ_R = κq`, `Γ_I = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearPotential<T = f64> {
    pub kappa: T,
}

impl<T: Real> PhaseFlow<T> for LinearPotential<T> {
    fn velocity(&self, _pt: PhasePoint<T>) -> (T, T) {
        (T::zero(), self.kappa)
    }
    fn gamma_i(&self, _pt: PhasePoint<T>) -> T {
        T::zero()
    }
    fn divergence(&self, _pt: PhasePoint<T>) -> T {
        T::zero()
    }
}

impl<T: Real> LinearPotential<T> {
    pub fn quantum_operator(&self, basis: &ContinuumBasis<T>) -> DenseOperator<T> {
        let k = self.kappa;
        let (re, im) = basis.function_of_position(|x| c(k * x, T::zero()));
        DenseOperator::from_parts(re, im)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactnessReport<T = f64> {
    pub time: T,
    pub max_abs_discrepancy: T,
    pub quantum_peak: PhasePoint<T>,
    pub semiclassical_peak: PhasePoint<T>,
}

fn peak<T: Real>(f: &HusimiField<T>) -> PhasePoint<T> {
    let mut best = (0, 0);
    let mut max = T::neg_infinity();
    for ((i, j), v) in f.values.indexed_iter() {
        if *v > max {
            max = *v;
            best = (i, j);
        }
    }
    PhasePoint::new(f.grid.q(best.0), f.grid.p(best.1))
}

/// Quantum versus semiclassical Husimi field under `H = q̂` at time `t`
/// on the default grid.
pub fn quadratic_exactness_check(t: f64) -> Result<ExactnessReport<f64>> {
    quadratic_exactness_on(t, &PhaseSpaceGrid::default_grid(), &SemiclassicalOptions::default())
}

pub fn quadratic_exactness_on<T: Real>(
    t: T,
    grid: &PhaseSpaceGrid<T>,
    opts: &SemiclassicalOptions<T>,
) -> Result<ExactnessReport<T>> {
    let lin = LinearPotential { kappa: T::one() };
    // the packet sits at |z|² = t²/2; leave ample room above it
    let tf = t.as_f64().abs();
    let dim = ((tf * tf / 2.0 + 12.0 * tf + 80.0).ceil() as usize).max(64);
    let basis = ContinuumBasis::<T>::new(dim)?;
    let h = lin.quantum_operator(&basis);
    let dt = T::lit(0.05) / h.step_norm();
    let psi: Vec<Complex<T>> = evolve_quantum(&h, t, dt)?;
    let quantum = quantum_husimi(&psi, grid, t)?;
    let (semi, _) = semiclassical_husimi(&lin, grid, t, &SemiclassicalOptions { halving_stride: 0, ..*opts })?;
    let max = quantum
        .values
        .iter()
        .zip(semi.values.iter())
        .map(|(a, b)| (*a - *b).abs())
        .fold(T::zero(), T::max);
    Ok(ExactnessReport {
        time: t,
        max_abs_discrepancy: max,
        quantum_peak: peak(&quantum),
        semiclassical_peak: peak(&semi),
    })
}
