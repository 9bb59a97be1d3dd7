//! Small-step normalized evolution shared by the lattice and continuum
//! simulations.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{norm, Operator};
use crate::ode::{step_count, SchrodingerRk4};
use crate::scalar::Real;

/// Largest accepted `dt · ‖H‖`.
pub const STEP_GUARD: f64 = 0.1;

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions<T> {
    pub dt: T,
    /// Divide by the norm after every step.
    pub renormalize: bool,
}

impl<T: Real> EvolveOptions<T> {
    pub fn new(dt: T) -> Self {
        Self { dt, renormalize: true }
    }
}

pub fn check_step<T: Real, O: Operator<T> + ?Sized>(op: &O, dt: T) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidParameter { field: "dt", reason: format!("must be positive, got {dt}") });
    }
    let product = dt * op.step_norm();
    if product.as_f64() > STEP_GUARD {
        return Err(Error::StepTooLarge { product: product.as_f64(), limit: STEP_GUARD });
    }
    Ok(())
}

/// Integrates `i dψ/dt = Hψ` from `t0`, stopping exactly on each entry of
/// `samples` (ascending, all ≥ `t0`) and calling `observe(t, ψ, log_norm)`
/// there, where `log_norm` is the log of the norm removed so far.
///
/// Returns the accumulated log of the norm removed by renormalization.
pub fn evolve_sampled<T, O, F>(
    op: &O,
    psi: &mut [Complex<T>],
    t0: T,
    samples: &[T],
    opts: EvolveOptions<T>,
    mut observe: F,
) -> Result<T>
where
    T: Real,
    O: Operator<T> + ?Sized,
    F: FnMut(T, &[Complex<T>], T) -> Result<()>,
{
    check_step(op, opts.dt)?;
    let mut rk = SchrodingerRk4::new(op.dim());
    let apply = |x: &[Complex<T>], y: &mut [Complex<T>]| op.apply(x, y);
    let mut t = t0;
    let mut log_norm = T::zero();
    for &target in samples {
        if target < t {
            return Err(Error::InvalidParameter {
                field: "times",
                reason: "sample times must be ascending and not before the start".into(),
            });
        }
        let n = step_count(target - t, opts.dt);
        if n > 0 {
            let h = (target - t) / T::from_index(n);
            for _ in 0..n {
                rk.step(&apply, psi, h);
                if opts.renormalize {
                    let nrm = norm(psi);
                    if !(nrm > T::zero()) || !nrm.is_finite() {
                        return Err(Error::NoConvergence);
                    }
                    log_norm += nrm.ln();
                    let inv = T::one() / nrm;
                    psi.iter_mut().for_each(|v| *v = *v * inv);
                }
            }
        }
        t = target;
        observe(t, psi, log_norm)?;
    }
    Ok(log_norm)
}
