//! Classical phase-space analysis of the flow fields: fixed points,
//! stability, separatrix geometry, critical potentials and trajectories.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ModelParams, PhasePoint, Variant};
use crate::ode::{rk4_step, step_count};
use crate::scalar::Real;

/// Flow magnitude below which a point counts as fixed.
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const P_ESCAPE: f64 = 4.0 * std::f64::consts::PI;
pub const CLOSURE_TOL: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 200.0;
pub const DEFAULT_TRAJECTORY_DT: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stability {
    Center,
    Saddle,
    /// `λ = 0`: branches merging or no potential.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointReport<T = f64> {
    pub location: PhasePoint<T>,
    pub eigenvalues: [Complex<T>; 2],
    pub stability: Stability,
    pub exists: bool,
}

/// `λ²` of the flow Jacobian at a fixed point, in closed form.
fn lambda_sq<T: Real>(params: &ModelParams<T>, fp: PhasePoint<T>) -> T {
    let two = T::lit(2.0);
    let k = params.wavenumber();
    let v = params.v();
    let cp = fp.p.cos();
    let ckq = (k * fp.q).cos();
    match params.variant() {
        Variant::ModelI => -two * k * k * v * params.hopping_sum() * cp * ckq,
        Variant::ModelII => -two * k * k * v * params.j() * cp * ckq,
        Variant::HermitianAA => -T::lit(4.0) * k * k * v * params.j() * cp * ckq,
    }
}

fn classify<T: Real>(l2: T, scale: T) -> ([Complex<T>; 2], Stability) {
    let zero = T::zero();
    if l2.abs() <= T::lit(1e-14) * scale.max(T::one()) {
        return ([Complex::new(zero, zero); 2], Stability::Degenerate);
    }
    if l2 > zero {
        let l = l2.sqrt();
        ([Complex::new(l, zero), Complex::new(-l, zero)], Stability::Saddle)
    } else {
        let w = (-l2).sqrt();
        ([Complex::new(zero, w), Complex::new(zero, -w)], Stability::Center)
    }
}

fn lambda_scale<T: Real>(params: &ModelParams<T>) -> T {
    let k = params.wavenumber();
    k * k * params.v() * (params.hopping_sum().abs() + params.j().abs())
}

fn flow_norm<T: Real>(params: &ModelParams<T>, pt: PhasePoint<T>) -> T {
    let (f, g) = params.flow_field(pt);
    f.hypot(g)
}

/// Closed-form `±√λ²` at a fixed point. The first entry has the larger
/// real part (or positive imaginary part for a center).
pub fn jacobian_eigenvalues<T: Real>(params: &ModelParams<T>, fp: PhasePoint<T>) -> Result<[Complex<T>; 2]> {
    let r = flow_norm(params, fp);
    if !(r.as_f64() < FIXED_POINT_TOL) {
        return Err(Error::NotFixedPoint { q: fp.q.as_f64(), p: fp.p.as_f64(), residual: r.as_f64() });
    }
    Ok(classify(lambda_sq(params, fp), lambda_scale(params)).0)
}

/// Central-difference Jacobian of the flow field.
pub fn fd_jacobian<T: Real>(params: &ModelParams<T>, pt: PhasePoint<T>, h: T) -> [[T; 2]; 2] {
    let two = T::lit(2.0);
    let (fq1, gq1) = params.flow_field(PhasePoint::new(pt.q + h, pt.p));
    let (fq0, gq0) = params.flow_field(PhasePoint::new(pt.q - h, pt.p));
    let (fp1, gp1) = params.flow_field(PhasePoint::new(pt.q, pt.p + h));
    let (fp0, gp0) = params.flow_field(PhasePoint::new(pt.q, pt.p - h));
    [
        [(fq1 - fq0) / (two * h), (fp1 - fp0) / (two * h)],
        [(gq1 - gq0) / (two * h), (gp1 - gp0) / (two * h)],
    ]
}

/// Eigenvalues of a real 2×2 matrix, larger real part first.
pub fn eigenvalues_2x2<T: Real>(m: [[T; 2]; 2]) -> [Complex<T>; 2] {
    let two = T::lit(2.0);
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / T::lit(4.0) - det;
    let half = tr / two;
    if disc >= T::zero() {
        let s = disc.sqrt();
        [Complex::new(half + s, T::zero()), Complex::new(half - s, T::zero())]
    } else {
        let s = (-disc).sqrt();
        [Complex::new(half, s), Complex::new(half, -s)]
    }
}

/// Roots of `sin θ = s` with `θ ∈ [lo, hi]`, ascending.
fn sin_roots<T: Real>(s: T, lo: T, hi: T) -> Vec<T> {
    let pi = T::PI();
    let tau = T::TAU();
    let a = s.max(-T::one()).min(T::one()).asin();
    let m_lo = ((lo - pi) / tau).floor().to_i64().unwrap_or(0) - 1;
    let m_hi = (hi / tau).ceil().to_i64().unwrap_or(0) + 1;
    let mut out = Vec::new();
    for m in m_lo..=m_hi {
        let base = tau * T::lit(m as f64);
        for cand in [a + base, pi - a + base] {
            if cand >= lo && cand <= hi && !out.iter().any(|x: &T| (*x - cand).abs() < T::lit(1e-12)) {
                out.push(cand);
            }
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

fn report<T: Real>(params: &ModelParams<T>, q: T, p: T) -> FixedPointReport<T> {
    let loc = PhasePoint::new(q, p);
    let (eigenvalues, stability) = classify(lambda_sq(params, loc), lambda_scale(params));
    FixedPointReport { location: loc, eigenvalues, stability, exists: true }
}

fn missing<T: Real>(q: T, p: T) -> FixedPointReport<T> {
    let z = Complex::new(T::zero(), T::zero());
    FixedPointReport { location: PhasePoint::new(q, p), eigenvalues: [z, z], stability: Stability::Degenerate, exists: false }
}

/// Default enumeration window: one quasiperiod in `q`, `p ∈ [−π, π]`.
pub fn default_window<T: Real>(params: &ModelParams<T>) -> (T, T) {
    (T::one() / (T::lit(2.0) * params.beta().abs()), T::PI())
}

/// All fixed points with `|q| ≤ q_window`, `|p| ≤ p_window`.
///
/// When a branch has no real solution a single report with `exists = false`
/// is returned for it, placed where the branch would first appear.
pub fn fixed_points<T: Real>(params: &ModelParams<T>, q_window: T, p_window: T) -> Vec<FixedPointReport<T>> {
    let two = T::lit(2.0);
    let k = params.wavenumber();
    let v = params.v();
    let (th_lo, th_hi) = {
        let a = -k * q_window;
        let b = k * q_window;
        (a.min(b), a.max(b))
    };
    let pi = T::PI();
    let mut out = Vec::new();
    let branches = |lo: T, hi: T| {
        let n_lo = (lo / pi).ceil().to_i64().unwrap_or(0);
        let n_hi = (hi / pi).floor().to_i64().unwrap_or(0);
        n_lo..=n_hi
    };
    match params.variant() {
        Variant::ModelI | Variant::HermitianAA => {
            for n in branches(-p_window, p_window) {
                let p0 = pi * T::lit(n as f64);
                let sign = if n.rem_euclid(2) == 0 { T::one() } else { -T::one() };
                // g = Δ cos p − 2kV sin kq (Δ = 0 for AA)
                let s = if v == T::zero() {
                    T::nan()
                } else {
                    params.delta() * sign / (two * k * v)
                };
                if !(s.abs() <= T::one() + T::lit(1e-12)) {
                    out.push(missing(s.signum() * pi / (two * k), p0));
                    continue;
                }
                for th in sin_roots(s, th_lo, th_hi) {
                    out.push(report(params, th / k, p0));
                }
            }
        }
        Variant::ModelII => {
            let j = params.j();
            for m in branches(th_lo, th_hi) {
                let q0 = pi * T::lit(m as f64) / k;
                let sign = if m.rem_euclid(2) == 0 { T::one() } else { -T::one() };
                // f = 2J sin p − kV cos kq
                let s = k * v * sign / (two * j);
                if !(s.abs() <= T::one() + T::lit(1e-12)) {
                    out.push(missing(q0, s.signum() * pi / two));
                    continue;
                }
                for p0 in sin_roots(s, -p_window, p_window) {
                    out.push(report(params, q0, p0));
                }
            }
        }
    }
    out
}

/// Analytic classical critical potential.
pub fn critical_potential<T: Real>(params: &ModelParams<T>) -> T {
    let k = params.wavenumber();
    match params.variant() {
        Variant::ModelI => {
            let s = params.hopping_sum();
            let d = params.delta();
            (s * s + d * d / (k * k)).sqrt() / T::lit(2.0)
        }
        Variant::ModelII => T::lit(2.0) * params.j() / (T::one() + k * k).sqrt(),
        Variant::HermitianAA => params.j(),
    }
}

/// The `β > 0` at which the classical critical potential equals
/// `quantum_vc`.
pub fn special_beta<T: Real>(params: &ModelParams<T>, quantum_vc: T) -> Result<T> {
    if !(quantum_vc > T::zero()) {
        return Err(Error::NoRealSolution("quantum critical potential must be positive".into()));
    }
    let four = T::lit(4.0);
    let k = match params.variant() {
        Variant::ModelI => {
            let s = params.hopping_sum();
            let d = params.delta().abs();
            let rest = four * quantum_vc * quantum_vc - s * s;
            if !(rest > T::zero()) || d == T::zero() {
                return Err(Error::NoRealSolution(format!(
                    "Model I critical potential never reaches {quantum_vc} (minimum {})",
                    s.abs() / T::lit(2.0)
                )));
            }
            d / rest.sqrt()
        }
        Variant::ModelII => {
            let j = params.j();
            let rest = four * j * j / (quantum_vc * quantum_vc) - T::one();
            if rest < T::zero() {
                return Err(Error::NoRealSolution(format!(
                    "Model II critical potential cannot exceed {}",
                    T::lit(2.0) * j.abs()
                )));
            }
            rest.sqrt()
        }
        Variant::HermitianAA => {
            return Err(Error::NoRealSolution("the Hermitian critical potential does not depend on beta".into()))
        }
    };
    Ok(k / T::two_pi())
}

fn existence_ratio<T: Real>(params: &ModelParams<T>) -> T {
    let two = T::lit(2.0);
    let k = params.wavenumber();
    let v = params.v();
    match params.variant() {
        Variant::ModelI => params.delta() / (two * k * v),
        Variant::ModelII => k * v / (two * params.j()),
        Variant::HermitianAA => T::zero(),
    }
}

/// The two saddles joined by the straight chord of slope `−2πβ`. The first
/// is the anchor whose unstable direction approaches the chord.
pub fn chord_saddles<T: Real>(params: &ModelParams<T>) -> Result<(PhasePoint<T>, PhasePoint<T>)> {
    let pi = T::PI();
    let k = params.wavenumber();
    if params.v() == T::zero() {
        return Err(Error::NoSaddle);
    }
    let s = existence_ratio(params);
    if !(s.abs() <= T::one() + T::lit(1e-12)) {
        return Err(Error::NoSaddle);
    }
    let a = s.max(-T::one()).min(T::one()).asin();
    Ok(match params.variant() {
        Variant::ModelI => (PhasePoint::new(-a / k, pi), PhasePoint::new((pi - a) / k, T::zero())),
        Variant::ModelII => (PhasePoint::new(T::zero(), pi - a), PhasePoint::new(pi / k, -a)),
        Variant::HermitianAA => (PhasePoint::new(T::zero(), pi), PhasePoint::new(pi / k, T::zero())),
    })
}

/// Report for the chord anchor saddle of [`chord_saddles`].
pub fn anchor_saddle<T: Real>(params: &ModelParams<T>) -> Result<FixedPointReport<T>> {
    let (a, _) = chord_saddles(params)?;
    Ok(report(params, a.q, a.p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparatrixGeometry<T = f64> {
    pub m1: T,
    pub m2: T,
    pub v_star: T,
}

/// Second derivatives `[f_qq, f_qp, f_pp]` and `[g_qq, g_qp, g_pp]`.
fn flow_hessian<T: Real>(params: &ModelParams<T>, pt: PhasePoint<T>) -> ([T; 3], [T; 3]) {
    let two = T::lit(2.0);
    let k = params.wavenumber();
    let v = params.v();
    let k3v = k * k * k * v;
    let (skq, ckq) = (k * pt.q).sin_cos();
    let (sp, cp) = pt.p.sin_cos();
    let z = T::zero();
    match params.variant() {
        Variant::ModelI => (
            [z, z, -params.hopping_sum() * sp],
            [two * k3v * skq, z, -params.delta() * cp],
        ),
        Variant::ModelII => ([k3v * ckq, z, -two * params.j() * sp], [k3v * skq, z, z]),
        Variant::HermitianAA => ([z, z, -two * params.j() * sp], [two * k3v * skq, z, z]),
    }
}

/// Slope of the unstable eigenvector of the flow Jacobian at `saddle`.
fn unstable_slope<T: Real>(params: &ModelParams<T>, saddle: PhasePoint<T>) -> Result<T> {
    let j = params.flow_jacobian(saddle);
    let ev = eigenvalues_2x2(j);
    let l = ev[0].re;
    if !(l > T::zero()) || ev[0].im != T::zero() {
        return Err(Error::DegenerateJacobian);
    }
    // (J − λ) v = 0 with v = (1, m)
    if j[0][1].abs() > j[1][0].abs().min(T::lit(1e-300)) && j[0][1] != T::zero() {
        Ok((l - j[0][0]) / j[0][1])
    } else if (l - j[1][1]) != T::zero() {
        Ok(j[1][0] / (l - j[1][1]))
    } else {
        Err(Error::DegenerateJacobian)
    }
}

/// Second-order expansion `p − p_s = m1 (q − q_s) + m2 (q − q_s)²` of the
/// unstable separatrix branch leaving `saddle`.
pub fn separatrix_geometry<T: Real>(
    params: &ModelParams<T>,
    saddle: &FixedPointReport<T>,
) -> Result<SeparatrixGeometry<T>> {
    if saddle.stability != Stability::Saddle {
        return Err(Error::NoSaddle);
    }
    let pt = saddle.location;
    let m1 = unstable_slope(params, pt)?;
    let j = params.flow_jacobian(pt);
    let (fh, gh) = flow_hessian(params, pt);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let f2 = half * (fh[0] + two * fh[1] * m1 + fh[2] * m1 * m1);
    let g2 = half * (gh[0] + two * gh[1] * m1 + gh[2] * m1 * m1);
    let a1 = j[0][0] + j[0][1] * m1;
    let den = m1 * j[0][1] + two * a1 - j[1][1];
    if den == T::zero() {
        return Err(Error::DegenerateJacobian);
    }
    let m2 = (g2 - m1 * f2) / den;
    Ok(SeparatrixGeometry { m1, m2, v_star: critical_potential(params) })
}

/// `max |g − m f|` along the straight chord between two saddles.
pub fn separatrix_line_residual<T: Real>(
    params: &ModelParams<T>,
    a: PhasePoint<T>,
    b: PhasePoint<T>,
    n_samples: usize,
) -> Result<T> {
    let dq = b.q - a.q;
    if a.distance(&b) < T::lit(1e-12) || dq == T::zero() {
        return Err(Error::CoincidentSaddles);
    }
    let m = (b.p - a.p) / dq;
    let n = n_samples.max(1);
    let mut worst = T::zero();
    for i in 0..=n + 1 {
        let s = T::from_index(i) / T::from_index(n + 1);
        let q = a.q + dq * s;
        let p = a.p + m * (q - a.q);
        let (f, g) = params.flow_field(PhasePoint::new(q, p));
        worst = worst.max((g - m * f).abs());
    }
    Ok(worst)
}

/// Solves `Γ_R(saddle₁) = Γ_R(saddle₂)` for `V` by bisection over the
/// range where both saddles exist.
pub fn saddle_energy_match<T: Real>(params: &ModelParams<T>) -> Result<T> {
    let k = params.wavenumber().abs();
    let two = T::lit(2.0);
    // smallest V with saddles
    let v_min = match params.variant() {
        Variant::ModelI => params.delta().abs() / (two * k),
        _ => T::zero(),
    };
    let v_max = match params.variant() {
        Variant::ModelII => two * params.j().abs() / k,
        _ => T::lit(1e6),
    };
    let gap = |v: T| -> Result<T> {
        let p = params.with_v(v)?;
        let (a, b) = chord_saddles(&p)?;
        for s in [a, b] {
            let gi = p.gamma_split(s).gamma_i;
            if gi.abs() > T::lit(1e-10) {
                return Err(Error::NoRealSolution(format!("imaginary energy {gi} at saddle")));
            }
        }
        Ok(p.gamma_split(a).gamma_r - p.gamma_split(b).gamma_r)
    };
    let mut lo = v_min * (T::one() + T::lit(1e-12)) + T::lit(1e-300);
    let mut hi = v_max * (T::one() - T::lit(1e-12));
    let mut glo = gap(lo)?;
    let ghi = gap(hi)?;
    if glo.signum() == ghi.signum() {
        return Err(Error::NoSaddle);
    }
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        let g = gap(mid)?;
        if g.signum() == glo.signum() {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    Ok((lo + hi) / two)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    BoundedClosed,
    UnboundedQ,
    UnboundedP,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T = f64> {
    pub points: Vec<PhasePoint<T>>,
    pub times: Vec<T>,
    pub classification: Classification,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds<T = f64> {
    pub q_escape: T,
    pub p_escape: T,
    pub closure: T,
}

impl<T: Real> Thresholds<T> {
    pub fn for_params(params: &ModelParams<T>) -> Self {
        Self {
            q_escape: T::lit(3.0) / (T::lit(2.0) * params.beta().abs()),
            p_escape: T::lit(P_ESCAPE),
            closure: T::lit(CLOSURE_TOL),
        }
    }
}

fn segment_distance<T: Real>(a: PhasePoint<T>, b: PhasePoint<T>, x: PhasePoint<T>) -> T {
    let (dq, dp) = (b.q - a.q, b.p - a.p);
    let len2 = dq * dq + dp * dp;
    if len2 == T::zero() {
        return a.distance(&x);
    }
    let s = (((x.q - a.q) * dq + (x.p - a.p) * dp) / len2).max(T::zero()).min(T::one());
    PhasePoint::new(a.q + s * dq, a.p + s * dp).distance(&x)
}

fn run<T: Real>(
    params: &ModelParams<T>,
    start: PhasePoint<T>,
    t_final: T,
    dt: T,
    th: Thresholds<T>,
    store: bool,
    stop_on_class: bool,
) -> Trajectory<T> {
    let rhs = |y: &[T; 2]| {
        let (f, g) = params.flow_field(PhasePoint::new(y[0], y[1]));
        [f, g]
    };
    let n = step_count(t_final, dt);
    let h = if n > 0 { t_final / T::from_index(n) } else { dt };
    let mut points = vec![start];
    let mut times = vec![T::zero()];
    let mut y = [start.q, start.p];
    let mut left = false;
    let mut class = None;
    let mut max_dist = T::zero();
    for i in 0..n {
        let prev = PhasePoint::new(y[0], y[1]);
        y = rk4_step(&rhs, &y, h);
        let cur = PhasePoint::new(y[0], y[1]);
        let t = h * T::from_index(i + 1);
        if store {
            points.push(cur);
            times.push(t);
        }
        if class.is_none() {
            max_dist = max_dist.max(cur.distance(&start));
            if (cur.q - start.q).abs() > th.q_escape {
                class = Some(Classification::UnboundedQ);
            } else if (cur.p - start.p).abs() > th.p_escape {
                class = Some(Classification::UnboundedP);
            } else if !left {
                left = cur.distance(&start) > T::lit(10.0) * th.closure;
            } else if segment_distance(prev, cur, start) < th.closure {
                class = Some(Classification::BoundedClosed);
            }
            if class.is_some() && stop_on_class {
                break;
            }
        }
    }
    let classification = match class {
        Some(c) => c,
        None if max_dist < th.closure => Classification::BoundedClosed,
        None => Classification::Undetermined,
    };
    if !store {
        points.push(PhasePoint::new(y[0], y[1]));
    }
    Trajectory { points, times, classification }
}

/// Forward RK4 integration of the flow field with thresholds from
/// [`Thresholds::for_params`].
pub fn integrate_trajectory<T: Real>(params: &ModelParams<T>, start: PhasePoint<T>, t_final: T, dt: T) -> Trajectory<T> {
    run(params, start, t_final, dt, Thresholds::for_params(params), true, false)
}

/// Classification only, stopping as soon as a threshold is reached.
pub fn classify_start<T: Real>(params: &ModelParams<T>, start: PhasePoint<T>, horizon: T, dt: T) -> Classification {
    run(params, start, horizon, dt, Thresholds::for_params(params), false, true).classification
}

/// Starts strictly between the chord saddles, or across `p ∈ (0, π)` at
/// `q = 0` when there are no saddles.
pub fn probe_starts<T: Real>(params: &ModelParams<T>, n: usize) -> Vec<PhasePoint<T>> {
    let (a, b) = chord_saddles(params)
        .unwrap_or((PhasePoint::new(T::zero(), T::zero()), PhasePoint::new(T::zero(), T::PI())));
    (1..=n)
        .map(|i| {
            let s = T::from_index(i) / T::from_index(n + 1);
            PhasePoint::new(a.q + (b.q - a.q) * s, a.p + (b.p - a.p) * s)
        })
        .collect()
}

/// Whether any probe orbit is unbounded in `q`.
pub fn has_running_orbits<T: Real>(params: &ModelParams<T>, probes: usize, horizon: T, dt: T) -> bool {
    probe_starts(params, probes)
        .into_par_iter()
        .any(|s| classify_start(params, s, horizon, dt) == Classification::UnboundedQ)
}

/// Bisection on `V` between a delocalized `v_lo` and a localized `v_hi`.
pub fn bracket_critical_potential<T: Real>(params: &ModelParams<T>, v_lo: T, v_hi: T, tol: T) -> Result<T> {
    let horizon = T::lit(DEFAULT_HORIZON);
    let dt = T::lit(DEFAULT_TRAJECTORY_DT);
    let probes = 24;
    let running = |v: T| -> Result<bool> { Ok(has_running_orbits(&params.with_v(v)?, probes, horizon, dt)) };
    let (mut lo, mut hi) = (v_lo, v_hi);
    let r_lo = running(lo)?;
    let r_hi = running(hi)?;
    if r_lo == r_hi {
        return Err(Error::NoSignChange { lo: lo.as_f64(), hi: hi.as_f64() });
    }
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        if running(mid)? == r_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

/// `1/λ` at the chord anchor saddle; `+∞` when `λ → 0`.
pub fn ehrenfest_time<T: Real>(params: &ModelParams<T>) -> Result<T> {
    let (anchor, _) = chord_saddles(params)?;
    let l2 = lambda_sq(params, anchor);
    if l2 < T::zero() {
        return Err(Error::NoSaddle);
    }
    let lambda = l2.sqrt();
    if lambda <= T::lit(1e-7) * lambda_scale(params).max(T::one()).sqrt() {
        return Ok(T::infinity());
    }
    Ok(T::one() / lambda)
}

/// Pinned coordinate `(−π/2 + 2πn)/(2πβ)` of Model II at large `V`.
pub fn pinned_q<T: Real>(params: &ModelParams<T>, n: i64) -> T {
    (-T::FRAC_PI_2() + T::TAU() * T::lit(n as f64)) / params.wavenumber()
}

/// Mean `q` and least-squares `dp/dt` over the last `fraction` of a trajectory.
pub fn late_time_drift<T: Real>(traj: &Trajectory<T>, fraction: f64) -> (T, T) {
    let n = traj.points.len();
    let start = ((n as f64) * (1.0 - fraction)).floor() as usize;
    let pts = &traj.points[start.min(n - 1)..];
    let ts = &traj.times[start.min(n - 1)..];
    let m = T::from_index(pts.len());
    let mean_q = pts.iter().map(|p| p.q).sum::<T>() / m;
    let mt = ts.iter().copied().sum::<T>() / m;
    let mp = pts.iter().map(|p| p.p).sum::<T>() / m;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (t, p) in ts.iter().zip(pts) {
        sxy += (*t - mt) * (p.p - mp);
        sxx += (*t - mt) * (*t - mt);
    }
    (mean_q, sxy / sxx)
}
