//! Continuum Hamiltonians in a truncated oscillator basis.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::evolve::{evolve_sampled, EvolveOptions};
use crate::linalg::{c, position_spectrum, quarter_turn, DenseOperator, RealSpectrum};
use crate::model::{ModelParams, Variant};
use crate::scalar::Real;

pub const MIN_FOCK_DIM: usize = 8;
pub const DEFAULT_FOCK_DIM: usize = 300;
/// Guard on the population of the top tenth of the levels.
pub const TRUNCATION_LIMIT: f64 = 1e-6;
pub const MAX_SUGGESTED_FOCK_DIM: usize = 4000;

/// Lowering operator `a` on `n` levels, `a[m−1][m] = √m`.
pub fn lowering_operator<T: Real>(n: usize) -> Array2<Complex<T>> {
    let mut a = Array2::from_elem((n, n), c(T::zero(), T::zero()));
    for m in 1..n {
        a[[m - 1, m]] = c(T::from_index(m).sqrt(), T::zero());
    }
    a
}

#[derive(Clone, Debug)]
pub struct FockOperators<T = f64> {
    pub dim: usize,
    pub lowering: Array2<Complex<T>>,
    pub raising: Array2<Complex<T>>,
    pub position: Array2<Complex<T>>,
    pub momentum: Array2<Complex<T>>,
}

pub fn make_fock_operators<T: Real>(n: usize) -> Result<FockOperators<T>> {
    if n < MIN_FOCK_DIM {
        return Err(Error::FockTooSmall(n));
    }
    let a = lowering_operator::<T>(n);
    let ad = a.t().mapv(|z| z.conj());
    let s = T::one() / T::lit(2.0).sqrt();
    let position = (&ad + &a).mapv(|z| z * s);
    let i = c(T::zero(), s);
    let momentum = (&ad - &a).mapv(|z| z * i);
    Ok(FockOperators { dim: n, lowering: a, raising: ad, position, momentum })
}

/// Spectral data of `q̂` on `dim` levels, reused for every Hamiltonian built
/// at that truncation.
#[derive(Clone, Debug)]
pub struct ContinuumBasis<T = f64> {
    spectrum: RealSpectrum<T>,
}

impl<T: Real> ContinuumBasis<T> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < MIN_FOCK_DIM {
            return Err(Error::FockTooSmall(dim));
        }
        Ok(Self { spectrum: position_spectrum(dim)? })
    }

    pub fn dim(&self) -> usize {
        self.spectrum.values.len()
    }

    pub fn position_eigenvalues(&self) -> &[T] {
        &self.spectrum.values
    }

    /// `f(q̂)` split into real and imaginary parts.
    pub fn function_of_position<F: Fn(T) -> Complex<T>>(&self, f: F) -> (Array2<T>, Array2<T>) {
        self.spectrum.map_parts(f)
    }

    /// `f(p̂)`, using `p̂ = −R† q̂ R` with `R = diag(iⁿ)`.
    pub fn function_of_momentum<F: Fn(T) -> Complex<T>>(&self, f: F) -> Array2<Complex<T>> {
        quarter_turn(&self.spectrum.map(|x| f(-x)))
    }

    /// Kinetic (momentum) part of the continuum Hamiltonian.
    pub fn hopping_part(&self, params: &ModelParams<T>) -> Array2<Complex<T>> {
        let two = T::lit(2.0);
        match params.variant() {
            Variant::ModelI => {
                let (jl, jr) = (params.j_left(), params.j_right());
                self.function_of_momentum(|x| {
                    let (s, co) = x.sin_cos();
                    c((jr + jl) * co, (jr - jl) * s)
                })
            }
            Variant::ModelII | Variant::HermitianAA => {
                let j = params.j();
                self.function_of_momentum(|x| c(two * j * x.cos(), T::zero()))
            }
        }
    }

    /// Potential part, real and imaginary matrices.
    pub fn potential_part(&self, params: &ModelParams<T>) -> (Array2<T>, Array2<T>) {
        let two = T::lit(2.0);
        let k = params.wavenumber();
        let v = params.v();
        match params.variant() {
            Variant::ModelI | Variant::HermitianAA => {
                self.function_of_position(|x| c(two * v * (k * x).cos(), T::zero()))
            }
            Variant::ModelII => self.function_of_position(|x| {
                let (s, co) = (k * x).sin_cos();
                c(v * co, -v * s)
            }),
        }
    }

    pub fn hamiltonian(&self, params: &ModelParams<T>) -> DenseOperator<T> {
        let hop = self.hopping_part(params);
        let (vr, vi) = self.potential_part(params);
        let re = hop.mapv(|z| z.re) + vr;
        let im = hop.mapv(|z| z.im) + vi;
        DenseOperator::from_parts(re, im)
    }
}

/// Continuum Hamiltonian with every matrix function taken through the
/// spectral decomposition of `q̂` (and of `p̂ = −R†q̂R`).
pub fn build_continuum_hamiltonian<T: Real>(
    params: &ModelParams<T>,
    ops: &FockOperators<T>,
) -> Result<DenseOperator<T>> {
    Ok(ContinuumBasis::new(ops.dim)?.hamiltonian(params))
}

pub fn vacuum<T: Real>(dim: usize) -> Vec<Complex<T>> {
    let mut v = vec![c(T::zero(), T::zero()); dim];
    v[0] = c(T::one(), T::zero());
    v
}

/// Population in the top tenth of the levels.
pub fn top_population<T: Real>(psi: &[Complex<T>]) -> T {
    let n = psi.len();
    let start = n - (n / 10).max(1);
    let total: T = psi.iter().map(|a| a.norm_sqr()).sum();
    psi[start..].iter().map(|a| a.norm_sqr()).sum::<T>() / total
}

pub fn check_truncation<T: Real>(psi: &[Complex<T>], time: T) -> Result<()> {
    let pop = top_population(psi).as_f64();
    if !(pop <= TRUNCATION_LIMIT) {
        return Err(Error::TruncationGuard { time: time.as_f64(), population: pop });
    }
    Ok(())
}

/// Evolves the vacuum under `h`, calling `observe` at each sample time.
/// The truncation guard is checked at every sample and at least once per
/// unit of time.
pub fn evolve_quantum_sampled<T, F>(h: &DenseOperator<T>, samples: &[T], dt: T, mut observe: F) -> Result<()>
where
    T: Real,
    F: FnMut(T, &[Complex<T>]) -> Result<()>,
{
    use crate::linalg::Operator;
    let mut psi = vacuum::<T>(h.dim());
    let mut checkpoints: Vec<(T, bool)> = Vec::new();
    let mut t = T::zero();
    for &s in samples {
        while s - t > T::one() {
            t += T::one();
            checkpoints.push((t, false));
        }
        checkpoints.push((s, true));
        t = s;
    }
    let times: Vec<T> = checkpoints.iter().map(|c| c.0).collect();
    let mut idx = 0;
    evolve_sampled(h, &mut psi, T::zero(), &times, EvolveOptions::new(dt), |t, psi, _| {
        check_truncation(psi, t)?;
        let keep = checkpoints[idx].1;
        idx += 1;
        if keep {
            observe(t, psi)?;
        }
        Ok(())
    })?;
    Ok(())
}

/// Normalized `e^{−iHt}|0⟩`.
pub fn evolve_quantum<T: Real>(h: &DenseOperator<T>, t: T, dt: T) -> Result<Vec<Complex<T>>> {
    if t < T::zero() {
        return Err(Error::InvalidParameter { field: "t", reason: "must be non-negative".into() });
    }
    let mut out = None;
    evolve_quantum_sampled(h, &[t], dt, |_, psi| {
        out = Some(psi.to_vec());
        Ok(())
    })?;
    Ok(out.expect("one sample"))
}

/// Truncation large enough to hold a packet spreading at the maximal
/// classical speed up to time `t`.
pub fn suggested_fock_dim<T: Real>(params: &ModelParams<T>, t: T) -> usize {
    let reach = params.max_q_speed().as_f64() * t.as_f64().max(0.0) + 12.0;
    let n = (reach * reach / 2.0 / 0.9 * 1.35).ceil() as usize;
    n.clamp(64, MAX_SUGGESTED_FOCK_DIM)
}

/// `⟨ψ|q̂²|ψ⟩` with the untruncated `q̂² = (2a†a + 1 + a² + a†²)/2`.
pub fn position_second_moment<T: Real>(psi: &[Complex<T>]) -> T {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for (n, a) in psi.iter().enumerate() {
        acc += (T::from_index(2 * n + 1)) * half * a.norm_sqr();
        if n + 2 < psi.len() {
            // ⟨n|a²|n+2⟩ = √((n+1)(n+2))
            let w = (T::from_index((n + 1) * (n + 2))).sqrt();
            acc += w * (a.conj() * psi[n + 2]).re;
        }
    }
    let total: T = psi.iter().map(|a| a.norm_sqr()).sum();
    acc / total
}
