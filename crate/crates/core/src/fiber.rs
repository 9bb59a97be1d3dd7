//! Continuum evolution by decomposition into shifted lattices.
//!
//! Every continuum Hamiltonian here is built from `e^{±ip̂}`, which shifts
//! `x` by `∓1`, and a function of `q̂`. Positions `x₀ + j` with fixed
//! `x₀ ∈ [−½, ½)` and integer `j` therefore form an invariant lattice, and
//! `ψ(x, t)` is obtained exactly by evolving one tight-binding chain per
//! sampled `x₀`. Integrals over `x` become a periodic trapezoid sum over
//! `x₀` (spectrally accurate) plus the lattice sum over `j`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolve::{evolve_sampled, EvolveOptions};
use crate::husimi::{HusimiField, PhaseSpaceGrid};
use crate::linalg::{c, Tridiagonal};
use crate::model::{ModelParams, Variant};
use crate::scalar::Real;

/// Outer sites per chain end watched by the edge monitor.
pub const FIBER_EDGE_SITES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberOptions<T = f64> {
    /// Number of sampled offsets `x₀`.
    pub fibers: usize,
    /// Chain sites run over `j ∈ [−half_width, half_width]`.
    pub half_width: usize,
    pub dt: T,
}

impl<T: Real> FiberOptions<T> {
    /// Sizes for a run up to time `t`: the chain must hold the packet at
    /// the maximal `q` speed and the offset sampling must resolve the
    /// largest momentum reached, plus the grid momenta of a Husimi read-out.
    pub fn suggested(params: &ModelParams<T>, t: T, p_extent: T) -> Self {
        let t = t.as_f64().max(0.0);
        // imaginary-gauge gain feeds the fastest front, so leave a wide margin
        let reach_q = 2.0 * params.max_q_speed().as_f64() * t + 24.0;
        let reach_p = params.max_p_speed().as_f64() * t + p_extent.as_f64().abs() + 16.0;
        let fibers = ((reach_p / std::f64::consts::PI).ceil() as usize).max(32).next_power_of_two();
        Self { fibers, half_width: reach_q.ceil() as usize, dt: T::lit(0.01) }
    }
}

#[derive(Clone, Debug)]
pub struct FiberSnapshot<T = f64> {
    pub time: T,
    pub offsets: Vec<T>,
    pub half_width: usize,
    /// `amplitudes[m][j + half_width]`, each chain normalized.
    pub amplitudes: Vec<Vec<Complex<T>>>,
    /// Relative weight of each chain in the global norm (max 1).
    pub weights: Vec<T>,
}

pub fn fiber_offsets<T: Real>(m: usize) -> Vec<T> {
    (0..m)
        .map(|i| -T::lit(0.5) + (T::from_index(i) + T::lit(0.5)) / T::from_index(m))
        .collect()
}

/// Chain Hamiltonian at offset `x₀`: `(Hψ)_j = J_R ψ_{j+1} + J_L ψ_{j−1} + U(x₀+j) ψ_j`
/// for Model I, and the symmetric analogues otherwise.
pub fn fiber_hamiltonian<T: Real>(params: &ModelParams<T>, x0: T, half_width: usize) -> Tridiagonal<T> {
    let two = T::lit(2.0);
    let k = params.wavenumber();
    let v = params.v();
    let n = 2 * half_width + 1;
    let diag = (0..n)
        .map(|i| {
            let x = x0 + T::from_index(i) - T::from_index(half_width);
            match params.variant() {
                Variant::ModelI | Variant::HermitianAA => c(two * v * (k * x).cos(), T::zero()),
                Variant::ModelII => c(v * (k * x).cos(), -v * (k * x).sin()),
            }
        })
        .collect();
    let (up, down) = match params.variant() {
        Variant::ModelI => (params.j_right(), params.j_left()),
        _ => (params.j(), params.j()),
    };
    Tridiagonal { diag, upper: vec![c(up, T::zero()); n - 1], lower: vec![c(down, T::zero()); n - 1] }
}

/// Evolves the vacuum `π^{−1/4} e^{−x²/2}` and returns a snapshot at every
/// sample time.
pub fn evolve_fibers<T: Real>(
    params: &ModelParams<T>,
    opts: &FiberOptions<T>,
    samples: &[T],
) -> Result<Vec<FiberSnapshot<T>>> {
    if opts.fibers == 0 || opts.half_width == 0 {
        return Err(Error::InvalidParameter { field: "fibers", reason: "need at least one chain of 3 sites".into() });
    }
    let offsets = fiber_offsets::<T>(opts.fibers);
    let w = opts.half_width;
    let n = 2 * w + 1;
    let norm0 = T::PI().powf(-T::lit(0.25));
    // per chain: per sample (amplitudes, log norm)
    let runs: Vec<Result<Vec<(Vec<Complex<T>>, T)>>> = offsets
        .par_iter()
        .map(|&x0| {
            let h = fiber_hamiltonian(params, x0, w);
            let mut psi: Vec<Complex<T>> = (0..n)
                .map(|i| {
                    let x = x0 + T::from_index(i) - T::from_index(w);
                    c(norm0 * (-x * x / T::lit(2.0)).exp(), T::zero())
                })
                .collect();
            let n0 = crate::linalg::norm(&psi);
            psi.iter_mut().for_each(|a| *a = *a / n0);
            let log0 = n0.ln();
            let mut out = Vec::with_capacity(samples.len());
            evolve_sampled(&h, &mut psi, T::zero(), samples, EvolveOptions::new(opts.dt), |_, psi, ln| {
                out.push((psi.to_vec(), log0 + ln));
                Ok(())
            })?;
            Ok(out)
        })
        .collect();
    let runs: Vec<Vec<(Vec<Complex<T>>, T)>> = runs.into_iter().collect::<Result<_>>()?;
    let mut snaps = Vec::with_capacity(samples.len());
    for (s, &t) in samples.iter().enumerate() {
        let max_log = runs.iter().map(|r| r[s].1).fold(T::neg_infinity(), T::max);
        let weights = runs.iter().map(|r| (T::lit(2.0) * (r[s].1 - max_log)).exp()).collect();
        let amplitudes = runs.iter().map(|r| r[s].0.clone()).collect();
        snaps.push(FiberSnapshot { time: t, offsets: offsets.clone(), half_width: w, amplitudes, weights });
    }
    Ok(snaps)
}

impl<T: Real> FiberSnapshot<T> {
    fn position(&self, m: usize, i: usize) -> T {
        self.offsets[m] + T::from_index(i) - T::from_index(self.half_width)
    }

    /// `⟨q̂²⟩` of the normalized continuum state.
    pub fn q_second_moment(&self) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for (m, amps) in self.amplitudes.iter().enumerate() {
            let w = self.weights[m];
            for (i, a) in amps.iter().enumerate() {
                let x = self.position(m, i);
                num += w * x * x * a.norm_sqr();
            }
            den += w;
        }
        num / den
    }

    /// Husimi variance `∫q²Q/∫Q`, which equals `⟨q̂²⟩ + ½` exactly.
    pub fn husimi_variance(&self) -> T {
        self.q_second_moment() + T::lit(0.5)
    }

    /// Weighted probability on the outer chain sites.
    pub fn edge_mass(&self) -> T {
        let mut edge = T::zero();
        let mut den = T::zero();
        for (m, amps) in self.amplitudes.iter().enumerate() {
            let n = amps.len();
            let k = FIBER_EDGE_SITES.min(n / 2);
            let e: T = amps[..k].iter().chain(&amps[n - k..]).map(|a| a.norm_sqr()).sum();
            edge += self.weights[m] * e;
            den += self.weights[m];
        }
        edge / den
    }

    /// `|⟨z|ψ⟩|²` on `grid`, using `⟨x|z⟩ ∝ e^{−(x−q)²/2 + ipx}`.
    pub fn husimi(&self, grid: &PhaseSpaceGrid<T>) -> Result<HusimiField<T>> {
        grid.validate()?;
        let m_count = self.offsets.len();
        let den: T = self.weights.iter().copied().sum();
        // ∫dx → (1/M) Σ_m Σ_j ; amplitudes scaled back to the global norm
        let scale: Vec<T> = self
            .weights
            .iter()
            .map(|w| (*w / den * T::from_index(m_count)).sqrt())
            .collect();
        let norm0 = T::PI().powf(-T::lit(0.25)) / T::from_index(m_count);
        let window = T::lit(9.0);
        Ok(HusimiField::from_fn(*grid, self.time, |q, p| {
            let mut acc = c(T::zero(), T::zero());
            for (m, amps) in self.amplitudes.iter().enumerate() {
                let x0 = self.offsets[m];
                let lo = (q - window - x0).ceil().to_i64().unwrap_or(0) + self.half_width as i64;
                let hi = (q + window - x0).floor().to_i64().unwrap_or(-1) + self.half_width as i64;
                let lo = lo.max(0) as usize;
                let hi = hi.min(amps.len() as i64 - 1);
                if hi < lo as i64 {
                    continue;
                }
                let mut part = c(T::zero(), T::zero());
                for i in lo..=hi as usize {
                    let x = self.position(m, i);
                    let d = x - q;
                    let k = Complex::from_polar((-d * d / T::lit(2.0)).exp(), -p * x);
                    part += k * amps[i];
                }
                acc += part * scale[m];
            }
            (acc * norm0).norm_sqr()
        }))
    }
}
