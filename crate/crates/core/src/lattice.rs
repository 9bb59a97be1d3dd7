//! Tight-binding lattice versions of the models and wavepacket transport.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::evolve::{evolve_sampled, EvolveOptions};
use crate::linalg::{c, norm, Operator, Tridiagonal};
use crate::model::{ModelParams, Variant};
use crate::scalar::Real;

pub const DEFAULT_LATTICE_SIZE: usize = 601;
pub const DEFAULT_LATTICE_DT: f64 = 0.01;
/// Sites on each edge watched by the edge-mass monitor.
pub const EDGE_SITES: usize = 20;
pub const EDGE_MASS_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState<T = f64> {
    pub amplitudes: Vec<Complex<T>>,
    /// 1-based index of the middle site, `(L + 1) / 2`.
    pub center_site: usize,
    pub time: T,
    /// Accumulated log of the norm divided out by renormalization.
    pub log_norm: T,
}

fn check_size(l: usize) -> Result<()> {
    if l < 3 || l % 2 == 0 {
        return Err(Error::LatticeSize(l));
    }
    Ok(())
}

/// Lattice Hamiltonian with open boundaries; site `j` runs `1..=L`.
pub fn build_lattice_hamiltonian<T: Real>(params: &ModelParams<T>, l: usize) -> Result<Tridiagonal<T>> {
    check_size(l)?;
    let k = params.wavenumber();
    let v = params.v();
    let two = T::lit(2.0);
    let diag = (1..=l)
        .map(|j| {
            let x = k * T::from_index(j);
            match params.variant() {
                Variant::ModelI | Variant::HermitianAA => c(two * v * x.cos(), T::zero()),
                Variant::ModelII => c(v * x.cos(), -v * x.sin()),
            }
        })
        .collect();
    let (up, down) = match params.variant() {
        Variant::ModelI => (params.j_left(), params.j_right()),
        _ => (params.j(), params.j()),
    };
    Ok(Tridiagonal {
        diag,
        upper: vec![c(up, T::zero()); l - 1],
        lower: vec![c(down, T::zero()); l - 1],
    })
}

/// Normalized Gaussian `ψ_j ∝ exp(−(j − (L+1)/2)²/2)`.
pub fn coherent_initial_state<T: Real>(l: usize) -> Result<LatticeState<T>> {
    check_size(l)?;
    let center = (l + 1) / 2;
    let mut amps: Vec<Complex<T>> = (1..=l)
        .map(|j| {
            let m = T::from_index(j) - T::from_index(center);
            c((-m * m / T::lit(2.0)).exp(), T::zero())
        })
        .collect();
    let nrm = norm(&amps);
    amps.iter_mut().for_each(|a| *a = *a / nrm);
    Ok(LatticeState { amplitudes: amps, center_site: center, time: T::zero(), log_norm: T::zero() })
}

/// Evolves with per-step renormalization and returns one snapshot per
/// entry of `sample_times`.
pub fn evolve_lattice<T: Real, O: Operator<T> + ?Sized>(
    h: &O,
    state: &LatticeState<T>,
    sample_times: &[T],
    dt: T,
) -> Result<Vec<LatticeState<T>>> {
    evolve_lattice_with(h, state, sample_times, EvolveOptions::new(dt))
}

pub fn evolve_lattice_with<T: Real, O: Operator<T> + ?Sized>(
    h: &O,
    state: &LatticeState<T>,
    sample_times: &[T],
    opts: EvolveOptions<T>,
) -> Result<Vec<LatticeState<T>>> {
    if h.dim() != state.amplitudes.len() {
        return Err(Error::InvalidParameter {
            field: "state",
            reason: format!("dimension {} does not match operator {}", state.amplitudes.len(), h.dim()),
        });
    }
    let mut psi = state.amplitudes.clone();
    let mut out = Vec::with_capacity(sample_times.len());
    evolve_sampled(h, &mut psi, state.time, sample_times, opts, |t, psi, log_norm| {
        out.push(LatticeState {
            amplitudes: psi.to_vec(),
            center_site: state.center_site,
            time: t,
            log_norm: state.log_norm + log_norm,
        });
        Ok(())
    })?;
    Ok(out)
}

fn displacement<T: Real>(state: &LatticeState<T>, idx: usize) -> T {
    T::from_index(idx + 1) - T::from_index(state.center_site)
}

/// `Σ m_j² |ψ_j|²` with `m_j` the displacement from the initial center.
pub fn sigma_squared_lattice<T: Real>(state: &LatticeState<T>) -> T {
    let total: T = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let s: T = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let m = displacement(state, i);
            m * m * a.norm_sqr()
        })
        .sum();
    s / total
}

pub fn mean_displacement<T: Real>(state: &LatticeState<T>) -> T {
    let total: T = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let s: T = state.amplitudes.iter().enumerate().map(|(i, a)| displacement(state, i) * a.norm_sqr()).sum();
    s / total
}

/// Probability on the outer `sites` sites at both ends.
pub fn edge_mass<T: Real>(state: &LatticeState<T>, sites: usize) -> T {
    let n = state.amplitudes.len();
    let w = sites.min(n / 2);
    let total: T = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let edge: T = state.amplitudes[..w].iter().chain(&state.amplitudes[n - w..]).map(|a| a.norm_sqr()).sum();
    edge / total
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportRecord<T = f64> {
    pub times: Vec<T>,
    pub sigma_sq: Vec<T>,
    pub mean_displacement: Vec<T>,
    /// `σ(t)/t` at the last sample.
    pub velocity_at_t: T,
    pub max_edge_mass: T,
}

impl<T: Real> TransportRecord<T> {
    pub fn edge_warning(&self) -> bool {
        self.max_edge_mass.as_f64() >= EDGE_MASS_LIMIT
    }
}

/// Locates `t` among the sample times with a relative tolerance.
pub fn find_time<T: Real>(times: &[T], t: T) -> Option<usize> {
    let tol = T::lit(1e-9) * T::one().max(t.abs());
    times.iter().position(|&s| (s - t).abs() <= tol)
}

/// Excitation velocity `σ(t)/t`.
pub fn velocity<T: Real>(record: &TransportRecord<T>, t_eval: T) -> Result<T> {
    let i = find_time(&record.times, t_eval).ok_or(Error::MissingSample(t_eval.as_f64()))?;
    if !(t_eval > T::zero()) {
        return Err(Error::MissingSample(t_eval.as_f64()));
    }
    Ok(record.sigma_sq[i].max(T::zero()).sqrt() / t_eval)
}

/// Builds the record from snapshots taken at `times`.
pub fn transport_record<T: Real>(snapshots: &[LatticeState<T>]) -> TransportRecord<T> {
    let times: Vec<T> = snapshots.iter().map(|s| s.time).collect();
    let sigma_sq: Vec<T> = snapshots.iter().map(sigma_squared_lattice).collect();
    let mean: Vec<T> = snapshots.iter().map(mean_displacement).collect();
    let max_edge = snapshots.iter().map(|s| edge_mass(s, EDGE_SITES)).fold(T::zero(), T::max);
    let velocity_at_t = match (times.last(), sigma_sq.last()) {
        (Some(&t), Some(&s)) if t > T::zero() => s.max(T::zero()).sqrt() / t,
        _ => T::zero(),
    };
    TransportRecord { times, sigma_sq, mean_displacement: mean, velocity_at_t, max_edge_mass: max_edge }
}

/// Full transport run: build, evolve from the centered packet, record.
pub fn lattice_transport<T: Real>(
    params: &ModelParams<T>,
    l: usize,
    times: &[T],
    dt: T,
) -> Result<TransportRecord<T>> {
    let h = build_lattice_hamiltonian(params, l)?;
    let psi0 = coherent_initial_state(l)?;
    let snaps = evolve_lattice(&h, &psi0, times, dt)?;
    Ok(transport_record(&snaps))
}

/// `n` evenly spaced times in `(0, t_final]`.
pub fn uniform_times<T: Real>(t_final: T, n: usize) -> Vec<T> {
    (1..=n).map(|i| t_final * T::from_index(i) / T::from_index(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn model_i_free_matrix() {
        let p = ModelParams::model_i(1.0, 0.5, 0.0, 0.3).unwrap();
        let h = build_lattice_hamiltonian(&p, 3).unwrap().to_dense();
        let expect = [[0.0, 1.0, 0.0], [0.5, 0.0, 1.0], [0.0, 0.5, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(h[[i, j]].re, expect[i][j]);
                assert_eq!(h[[i, j]].im, 0.0);
            }
        }
    }

    #[test]
    fn model_ii_onsite_phases() {
        let p = ModelParams::model_ii(0.0, 1.0, 0.25).unwrap();
        let h = build_lattice_hamiltonian(&p, 3).unwrap();
        let expect = [c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)];
        for (a, b) in h.diag.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn symmetry_of_matrices() {
        let aa = build_lattice_hamiltonian(&ModelParams::hermitian_aa(1.0, 0.7, 0.618).unwrap(), 7).unwrap();
        let d = aa.to_dense();
        assert_eq!(d, d.t().to_owned());
        let m1 = build_lattice_hamiltonian(&ModelParams::model_i(1.0, 0.5, 0.7, 0.618).unwrap(), 7).unwrap();
        let d = m1.to_dense();
        assert_ne!(d, d.t().to_owned());
    }

    #[test]
    fn even_sizes_rejected() {
        let p = ModelParams::<f64>::default_for(Variant::ModelI, 0.2).unwrap();
        assert_eq!(build_lattice_hamiltonian(&p, 4), Err(Error::LatticeSize(4)));
        assert!(coherent_initial_state::<f64>(600).is_err());
        assert!(coherent_initial_state::<f64>(1).is_err());
    }

    #[test]
    fn initial_state_profile() {
        let s = coherent_initial_state::<f64>(5).unwrap();
        let raw = [(-2.0f64).exp(), (-0.5f64).exp(), 1.0, (-0.5f64).exp(), (-2.0f64).exp()];
        let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (a, r) in s.amplitudes.iter().zip(raw) {
            assert_relative_eq!(a.re, r / n, epsilon = 1e-15);
        }
        let big = coherent_initial_state::<f64>(601).unwrap();
        assert_eq!(big.center_site, 301);
        let peak = big.amplitudes.iter().enumerate().max_by(|a, b| a.1.re.total_cmp(&b.1.re)).unwrap().0;
        assert_eq!(peak + 1, 301);
        assert_relative_eq!(norm(&big.amplitudes), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sigma_sq_simple_profiles() {
        let mk = |amps: Vec<f64>| LatticeState {
            center_site: (amps.len() + 1) / 2,
            amplitudes: amps.into_iter().map(|a| c(a, 0.0)).collect(),
            time: 0.0,
            log_norm: 0.0,
        };
        assert_eq!(sigma_squared_lattice(&mk(vec![0.0, 0.0, 1.0, 0.0, 0.0])), 0.0);
        let a = 1.0 / 3f64.sqrt();
        assert_relative_eq!(sigma_squared_lattice(&mk(vec![0.0, a, a, a, 0.0])), 2.0 / 3.0, epsilon = 1e-15);
        // discrete Gaussian second moment Σ m² e^{-m²} / Σ e^{-m²}
        let s0 = coherent_initial_state::<f64>(601).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for m in -300i32..=300 {
            let w = (-(m as f64).powi(2)).exp();
            num += (m as f64).powi(2) * w;
            den += w;
        }
        assert_relative_eq!(sigma_squared_lattice(&s0), num / den, epsilon = 1e-14);
        assert!((num / den - 0.5).abs() < 0.01);
    }

    #[test]
    fn velocity_lookup() {
        let rec = TransportRecord {
            times: vec![1.0, 2.0, 4.0],
            sigma_sq: vec![0.25, 1.0, 4.0],
            mean_displacement: vec![0.0; 3],
            velocity_at_t: 0.5,
            max_edge_mass: 0.0,
        };
        assert_relative_eq!(velocity(&rec, 4.0).unwrap(), 0.5);
        assert_eq!(velocity(&rec, 3.0), Err(Error::MissingSample(3.0)));
    }

    #[test]
    fn step_guard_rejects_large_dt() {
        let p = ModelParams::<f64>::default_for(Variant::ModelI, 0.5).unwrap();
        let h = build_lattice_hamiltonian(&p, 11).unwrap();
        let s = coherent_initial_state(11).unwrap();
        assert!(matches!(evolve_lattice(&h, &s, &[1.0], 0.05), Err(Error::StepTooLarge { .. })));
    }
}
