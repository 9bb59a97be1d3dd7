//! Phase-space grids, Husimi fields and their moments.

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::c;
use crate::scalar::Real;

/// Fraction of the mass allowed in the boundary band before the grid is
/// considered too small.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-4;
pub const MAX_EXPANSIONS: usize = 6;
/// Coherent-state series terms below `e^{-CUTOFF}` are dropped.
const CUTOFF: f64 = 45.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpaceGrid<T = f64> {
    pub q_min: T,
    pub q_max: T,
    pub p_min: T,
    pub p_max: T,
    pub nq: usize,
    pub np: usize,
}

impl Default for PhaseSpaceGrid<f64> {
    fn default() -> Self {
        Self { q_min: -40.0, q_max: 40.0, p_min: -10.0, p_max: 10.0, nq: 400, np: 200 }
    }
}

impl<T: Real> PhaseSpaceGrid<T> {
    pub fn new(q: (T, T), p: (T, T), nq: usize, np: usize) -> Result<Self> {
        let g = Self { q_min: q.0, q_max: q.1, p_min: p.0, p_max: p.1, nq, np };
        g.validate()?;
        Ok(g)
    }

    pub fn default_grid() -> Self {
        let d = PhaseSpaceGrid::<f64>::default();
        Self {
            q_min: T::lit(d.q_min),
            q_max: T::lit(d.q_max),
            p_min: T::lit(d.p_min),
            p_max: T::lit(d.p_max),
            nq: d.nq,
            np: d.np,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nq < 2 || self.np < 2 {
            return Err(Error::InvalidParameter { field: "grid", reason: "need at least 2 nodes per axis".into() });
        }
        let finite = [self.q_min, self.q_max, self.p_min, self.p_max].iter().all(|x| x.is_finite());
        if !finite || !(self.q_max > self.q_min) || !(self.p_max > self.p_min) {
            return Err(Error::InvalidParameter { field: "grid", reason: "extents must be finite with max > min".into() });
        }
        Ok(())
    }

    pub fn dq(&self) -> T {
        (self.q_max - self.q_min) / T::from_index(self.nq - 1)
    }

    pub fn dp(&self) -> T {
        (self.p_max - self.p_min) / T::from_index(self.np - 1)
    }

    pub fn q(&self, i: usize) -> T {
        self.q_min + self.dq() * T::from_index(i)
    }

    pub fn p(&self, j: usize) -> T {
        self.p_min + self.dp() * T::from_index(j)
    }

    /// Trapezoid weight of node `(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> T {
        let half = T::lit(0.5);
        let wq = if i == 0 || i + 1 == self.nq { half } else { T::one() };
        let wp = if j == 0 || j + 1 == self.np { half } else { T::one() };
        wq * wp * self.dq() * self.dp()
    }

    /// Same node spacing, extents scaled about the centre by `fq`, `fp`.
    fn expanded(&self, fq: T, fp: T) -> Self {
        let scale = |lo: T, hi: T, n: usize, f: T| {
            if f == T::one() {
                return (lo, hi, n);
            }
            let mid = (lo + hi) / T::lit(2.0);
            let h = (hi - lo) / T::from_index(n - 1);
            let intervals = ((T::from_index(n - 1) * f).ceil()).to_usize().unwrap_or(n - 1).max(n - 1);
            let half = h * T::from_index(intervals) / T::lit(2.0);
            (mid - half, mid + half, intervals + 1)
        };
        let (q_min, q_max, nq) = scale(self.q_min, self.q_max, self.nq, fq);
        let (p_min, p_max, np) = scale(self.p_min, self.p_max, self.np, fp);
        Self { q_min, q_max, p_min, p_max, nq, np }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HusimiField<T = f64> {
    pub grid: PhaseSpaceGrid<T>,
    /// `values[[i, j]]` at `(q_i, p_j)`.
    pub values: Array2<T>,
    pub time: T,
}

impl<T: Real> HusimiField<T> {
    /// Evaluates `f(q, p)` at every node, rows in parallel.
    pub fn from_fn<F>(grid: PhaseSpaceGrid<T>, time: T, f: F) -> Self
    where
        F: Fn(T, T) -> T + Sync,
    {
        let rows: Vec<Vec<T>> = (0..grid.nq)
            .into_par_iter()
            .map(|i| {
                let q = grid.q(i);
                (0..grid.np).map(|j| f(q, grid.p(j))).collect()
            })
            .collect();
        let mut values = Array2::zeros((grid.nq, grid.np));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        Self { grid, values, time }
    }

    fn integrate<F: Fn(T, T, T) -> T>(&self, f: F) -> T {
        let g = &self.grid;
        let mut acc = T::zero();
        for i in 0..g.nq {
            let q = g.q(i);
            for j in 0..g.np {
                acc += g.weight(i, j) * f(q, g.p(j), self.values[[i, j]]);
            }
        }
        acc
    }

    /// `∫Q dq dp`.
    pub fn mass(&self) -> T {
        self.integrate(|_, _, v| v)
    }

    /// Fraction of the mass in the outer band of nodes (2% of each axis, at
    /// least one node) on `(q, p)` sides respectively.
    pub fn boundary_mass(&self) -> (T, T) {
        let g = &self.grid;
        let total = self.mass();
        if !(total > T::zero()) {
            return (T::zero(), T::zero());
        }
        let bq = (g.nq / 50).max(1);
        let bp = (g.np / 50).max(1);
        let (mut mq, mut mp) = (T::zero(), T::zero());
        for i in 0..g.nq {
            for j in 0..g.np {
                let w = g.weight(i, j) * self.values[[i, j]];
                if i < bq || i + bq >= g.nq {
                    mq += w;
                }
                if j < bp || j + bp >= g.np {
                    mp += w;
                }
            }
        }
        (mq / total, mp / total)
    }

    pub fn is_contained(&self) -> bool {
        let (a, b) = self.boundary_mass();
        a.as_f64() < BOUNDARY_MASS_LIMIT && b.as_f64() < BOUNDARY_MASS_LIMIT
    }

    /// Extent in `q` of the set where `Q ≥ level · max Q`.
    pub fn q_extent(&self, level: T) -> T {
        let max = self.values.iter().copied().fold(T::zero(), T::max);
        let thr = max * level;
        let mut lo = None;
        let mut hi = None;
        for i in 0..self.grid.nq {
            if self.values.row(i).iter().any(|v| *v >= thr) {
                lo.get_or_insert(i);
                hi = Some(i);
            }
        }
        match (lo, hi) {
            (Some(a), Some(b)) => self.grid.q(b) - self.grid.q(a),
            _ => T::zero(),
        }
    }
}

/// `∫q²Q / ∫Q` by the trapezoid rule.
pub fn husimi_variance<T: Real>(field: &HusimiField<T>) -> Result<T> {
    let m = field.mass();
    if !(m > T::zero()) {
        return Err(Error::ZeroMass);
    }
    Ok(field.integrate(|q, _, v| q * q * v) / m)
}

/// `∫(Q/∫Q)²`.
pub fn purity<T: Real>(field: &HusimiField<T>) -> Result<T> {
    let m = field.mass();
    if !(m > T::zero()) {
        return Err(Error::ZeroMass);
    }
    Ok(field.integrate(|_, _, v| v * v) / (m * m))
}

/// Table of `ln √(n!)` for `n < dim`.
fn half_log_factorials<T: Real>(dim: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(dim);
    let mut acc = 0.0f64;
    for n in 0..dim {
        if n > 0 {
            acc += (n as f64).ln();
        }
        out.push(T::lit(acc / 2.0));
    }
    out
}

/// `⟨z|ψ⟩` for `z = (q + ip)/√2`, summing `e^{−|z|²/2} (z*)ⁿ/√(n!) ψ_n`
/// outward from the largest term so that neither factorials nor powers of
/// `|z|` ever appear unscaled.
fn coherent_overlap<T: Real>(psi: &[Complex<T>], half_lf: &[T], q: T, p: T) -> Complex<T> {
    let n = psi.len();
    let two = T::lit(2.0);
    let r2 = (q * q + p * p) / two;
    let zc = c(q, -p) / two.sqrt();
    if r2 == T::zero() {
        return psi[0];
    }
    let r = r2.sqrt();
    let theta = zc.arg();
    let ln_r = r.ln();
    let n0 = r2.floor().to_usize().unwrap_or(usize::MAX).min(n - 1);
    let cut = T::lit(-CUTOFF);
    let log_mag = T::from_index(n0) * ln_r - half_lf[n0] - r2 / two;
    if log_mag < cut - T::lit(20.0) {
        // the whole series is negligible
        return c(T::zero(), T::zero());
    }
    let phase = T::from_index(n0) * theta;
    let start = Complex::from_polar(log_mag.exp(), phase);
    let eps = cut.exp();
    let mut sum = start * psi[n0];
    // upward: term_{n+1} = term_n z*/√(n+1)
    let mut term = start;
    for m in n0 + 1..n {
        term = term * zc / T::from_index(m).sqrt();
        sum += term * psi[m];
        if term.norm() < eps && m > n0 + 4 {
            break;
        }
    }
    // downward: term_{n−1} = term_n √n / z*
    let mut term = start;
    let inv = zc.inv();
    for m in (0..n0).rev() {
        term = term * inv * T::from_index(m + 1).sqrt();
        sum += term * psi[m];
        if term.norm() < eps && m + 4 < n0 {
            break;
        }
    }
    sum
}

/// Quantum Husimi function `|⟨z|ψ⟩|²` on `grid`.
pub fn quantum_husimi<T: Real>(psi: &[Complex<T>], grid: &PhaseSpaceGrid<T>, time: T) -> Result<HusimiField<T>> {
    grid.validate()?;
    let half_lf = half_log_factorials::<T>(psi.len());
    Ok(HusimiField::from_fn(*grid, time, |q, p| coherent_overlap(psi, &half_lf, q, p).norm_sqr()))
}

/// Evaluates `make(grid)` and enlarges the grid along whichever axis leaks
/// mass until the boundary monitor passes or the expansion budget is used.
/// Returns the field and the number of expansions performed.
pub fn with_auto_expand<T, F>(grid: &PhaseSpaceGrid<T>, mut make: F) -> Result<(HusimiField<T>, usize)>
where
    T: Real,
    F: FnMut(&PhaseSpaceGrid<T>) -> Result<HusimiField<T>>,
{
    let mut g = *grid;
    let mut field = make(&g)?;
    let mut n = 0;
    while n < MAX_EXPANSIONS {
        let (mq, mp) = field.boundary_mass();
        let limit = T::lit(BOUNDARY_MASS_LIMIT);
        if mq < limit && mp < limit {
            break;
        }
        let f = T::lit(1.5);
        g = g.expanded(if mq >= limit { f } else { T::one() }, if mp >= limit { f } else { T::one() });
        field = make(&g)?;
        n += 1;
    }
    Ok((field, n))
}

/// The vacuum Husimi function `e^{−(q²+p²)/2}`.
pub fn vacuum_husimi<T: Real>(grid: &PhaseSpaceGrid<T>) -> HusimiField<T> {
    HusimiField::from_fn(*grid, T::zero(), |q, p| (-(q * q + p * p) / T::lit(2.0)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::vacuum;
    use approx::assert_relative_eq;

    fn small() -> PhaseSpaceGrid<f64> {
        PhaseSpaceGrid::new((-8.0, 8.0), (-8.0, 8.0), 161, 161).unwrap()
    }

    #[test]
    fn vacuum_overlap_matches_closed_form() {
        let psi = vacuum::<f64>(40);
        let f = quantum_husimi(&psi, &small(), 0.0).unwrap();
        let exact = vacuum_husimi(&small());
        for (a, b) in f.values.iter().zip(exact.values.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_relative_eq!(f.values[[80, 80]], 1.0, epsilon = 1e-14);
        let m = f.mass();
        assert!((m / (2.0 * std::f64::consts::PI) - 1.0).abs() < 0.01);
        assert_relative_eq!(husimi_variance(&f).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn first_excited_state_has_node() {
        let mut psi = vec![c(0.0, 0.0); 10];
        psi[1] = c(1.0, 0.0);
        let g = PhaseSpaceGrid::new((-1.0, 1.0), (-1.0, 1.0), 3, 3).unwrap();
        let f = quantum_husimi(&psi, &g, 0.0).unwrap();
        assert_eq!(f.values[[1, 1]], 0.0);
        // |⟨z|1⟩|² = |z|² e^{−|z|²}
        assert_relative_eq!(f.values[[2, 1]], 0.5 * (-0.5f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn far_coherent_state_is_stable() {
        // amplitudes of |α⟩ with α = (q0 + i p0)/√2 far from the origin
        let (q0, p0) = (30.0, -5.0);
        let n = 1200;
        let alpha = c(q0, p0) / 2f64.sqrt();
        let lf = half_log_factorials::<f64>(n);
        let psi: Vec<Complex<f64>> = (0..n)
            .map(|k| {
                let mag = (k as f64 * alpha.norm().ln() - lf[k] - alpha.norm_sqr() / 2.0).exp();
                Complex::from_polar(mag, k as f64 * alpha.arg())
            })
            .collect();
        let g = PhaseSpaceGrid::new((20.0, 40.0), (-10.0, 0.0), 81, 41).unwrap();
        let f = quantum_husimi(&psi, &g, 0.0).unwrap();
        for i in 0..g.nq {
            for j in 0..g.np {
                let (dq, dp) = (g.q(i) - q0, g.p(j) - p0);
                let exact = (-(dq * dq + dp * dp) / 2.0).exp();
                assert!((f.values[[i, j]] - exact).abs() < 1e-10, "{} vs {exact}", f.values[[i, j]]);
            }
        }
    }

    #[test]
    fn purity_of_flat_and_vacuum() {
        let g = PhaseSpaceGrid::new((0.0, 2.0), (0.0, 3.0), 11, 7).unwrap();
        let flat = HusimiField::from_fn(g, 0.0, |_, _| 0.7);
        assert_relative_eq!(purity(&flat).unwrap(), 1.0 / 6.0, epsilon = 1e-12);
        let v = vacuum_husimi(&PhaseSpaceGrid::<f64>::default_grid());
        let target = 1.0 / (4.0 * std::f64::consts::PI);
        assert!((purity(&v).unwrap() / target - 1.0).abs() < 0.01);
        let zero = HusimiField::from_fn(g, 0.0, |_, _| 0.0);
        assert_eq!(purity(&zero), Err(Error::ZeroMass));
        assert_eq!(husimi_variance(&zero), Err(Error::ZeroMass));
    }

    #[test]
    fn symmetric_field_variance_from_half_plane() {
        let g = PhaseSpaceGrid::new((-6.0, 6.0), (-6.0, 6.0), 121, 121).unwrap();
        let f = HusimiField::from_fn(g, 0.0, |q: f64, p: f64| (-(q * q) / 3.0 - p * p / 2.0).exp() * (1.0 + 0.3 * q * q));
        let half_g = PhaseSpaceGrid::new((0.0, 6.0), (-6.0, 6.0), 61, 121).unwrap();
        let h = HusimiField::from_fn(half_g, 0.0, |q: f64, p: f64| (-(q * q) / 3.0 - p * p / 2.0).exp() * (1.0 + 0.3 * q * q));
        // the q = 0 column carries half weight in the half-plane rule
        let num = 2.0 * h.integrate(|q, _, v| q * q * v);
        let den = 2.0 * h.mass();
        assert_relative_eq!(husimi_variance(&f).unwrap(), num / den, epsilon = 1e-10);
    }

    #[test]
    fn auto_expand_recovers_mass() {
        let g = PhaseSpaceGrid::<f64>::new((-3.0, 3.0), (-8.0, 8.0), 31, 81).unwrap();
        let (f, n) = with_auto_expand(&g, |g| Ok(vacuum_husimi(g))).unwrap();
        assert!(n > 0);
        assert!(f.is_contained());
        assert!((f.grid.dq() - g.dq()).abs() < 1e-12);
        assert!((f.mass() / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-3);
    }
}
