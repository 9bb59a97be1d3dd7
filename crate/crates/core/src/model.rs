//! Model parameters, classical Hamiltonians and the characteristic flow.
//!
//! Three variants are supported:
//!
//! * `ModelI`: asymmetric hopping `J_L`, `J_R` with a real quasiperiodic
//!   potential `2V cos(2πβq)`.
//! * `ModelII`: symmetric hopping `J` with a complex potential `V e^{-2πiβq}`.
//! * `HermitianAA`: the Aubry–André limit, `2J cos p + 2V cos(2πβq)`.
//!
//! The classical Hamiltonian `H^c(q, p) = Γ_R + iΓ_I` drives the flow
//!
//! ```text
//! dq/dt = -∂Γ_R/∂p + ∂Γ_I/∂q
//! dp/dt =  ∂Γ_R/∂q + ∂Γ_I/∂p
//! ```
//!
//! which is the characteristic field integrated backward from a query
//! point when propagating a Husimi distribution. All derivatives are closed
//! forms.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    ModelI,
    ModelII,
    HermitianAA,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::ModelI => "model-i",
            Variant::ModelII => "model-ii",
            Variant::HermitianAA => "hermitian-aa",
        }
    }

    pub fn is_hermitian(self) -> bool {
        matches!(self, Variant::HermitianAA)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "modeli" | "model1" | "i" | "1" => Ok(Variant::ModelI),
            "modelii" | "model2" | "ii" | "2" => Ok(Variant::ModelII),
            "hermitianaa" | "aa" | "hermitian" => Ok(Variant::HermitianAA),
            _ => Err(Error::InvalidParameter {
                field: "model",
                reason: format!("unknown variant `{s}`"),
            }),
        }
    }
}

/// Inverse golden ratio `(√5 − 1)/2`, the default incommensurability.
pub fn golden_beta<T: Real>() -> T {
    (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0)
}

/// Couplings of one model variant.
///
/// `ModelII` and `HermitianAA` carry a single symmetric hopping; their
/// `j_left`/`j_right` accessors both return it. The hopping asymmetry
/// `Δ = J_R − J_L` is always computed, never stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T = f64> {
    variant: Variant,
    j_left: T,
    j_right: T,
    v: T,
    beta: T,
}

impl<T: Real> ModelParams<T> {
    pub fn model_i(j_left: T, j_right: T, v: T, beta: T) -> Result<Self> {
        Self { variant: Variant::ModelI, j_left, j_right, v, beta }.validated()
    }

    pub fn model_ii(j: T, v: T, beta: T) -> Result<Self> {
        Self { variant: Variant::ModelII, j_left: j, j_right: j, v, beta }.validated()
    }

    pub fn hermitian_aa(j: T, v: T, beta: T) -> Result<Self> {
        Self { variant: Variant::HermitianAA, j_left: j, j_right: j, v, beta }.validated()
    }

    /// Defaults used throughout: `J_L = 1`, `J_R = 1/2` for Model I,
    /// `J = 1` otherwise, and `β = (√5 − 1)/2`.
    pub fn default_for(variant: Variant, v: T) -> Result<Self> {
        let beta = golden_beta();
        match variant {
            Variant::ModelI => Self::model_i(T::one(), T::lit(0.5), v, beta),
            Variant::ModelII => Self::model_ii(T::one(), v, beta),
            Variant::HermitianAA => Self::hermitian_aa(T::one(), v, beta),
        }
    }

    fn validated(self) -> Result<Self> {
        let finite = |field: &'static str, x: T| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { field, reason: "must be finite".into() })
            }
        };
        finite("j_left", self.j_left)?;
        finite("j_right", self.j_right)?;
        finite("v", self.v)?;
        finite("beta", self.beta)?;
        if self.v < T::zero() {
            return Err(Error::InvalidParameter {
                field: "v",
                reason: format!("potential strength must be non-negative, got {}", self.v),
            });
        }
        if self.beta == T::zero() {
            return Err(Error::InvalidParameter { field: "beta", reason: "must be nonzero".into() });
        }
        Ok(self)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn j_left(&self) -> T {
        self.j_left
    }
    pub fn j_right(&self) -> T {
        self.j_right
    }
    /// Symmetric hopping. For Model I this is the mean of the two hoppings.
    pub fn j(&self) -> T {
        (self.j_left + self.j_right) / T::lit(2.0)
    }
    pub fn v(&self) -> T {
        self.v
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    /// `Δ = J_R − J_L`.
    pub fn delta(&self) -> T {
        self.j_right - self.j_left
    }
    /// `J_L + J_R`.
    pub fn hopping_sum(&self) -> T {
        self.j_left + self.j_right
    }
    /// Wavenumber of the quasiperiodic potential, `2πβ`.
    pub fn wavenumber(&self) -> T {
        T::two_pi() * self.beta
    }

    pub fn with_v(self, v: T) -> Result<Self> {
        Self { v, ..self }.validated()
    }

    pub fn with_beta(self, beta: T) -> Result<Self> {
        Self { beta, ..self }.validated()
    }

    /// Classical Hamiltonian `H^c(q, p)`.
    pub fn classical_hamiltonian(&self, pt: PhasePoint<T>) -> Complex<T> {
        let e = self.gamma_split(pt);
        Complex::new(e.gamma_r, e.gamma_i)
    }

    pub fn gamma_split(&self, pt: PhasePoint<T>) -> ComplexEnergy<T> {
        let two = T::lit(2.0);
        let kq = self.wavenumber() * pt.q;
        let (sp, cp) = pt.p.sin_cos();
        match self.variant {
            Variant::ModelI => ComplexEnergy {
                gamma_r: self.hopping_sum() * cp + two * self.v * kq.cos(),
                gamma_i: self.delta() * sp,
            },
            Variant::ModelII => ComplexEnergy {
                gamma_r: two * self.j_left * cp + self.v * kq.cos(),
                gamma_i: -self.v * kq.sin(),
            },
            Variant::HermitianAA => ComplexEnergy {
                gamma_r: two * self.j_left * cp + two * self.v * kq.cos(),
                gamma_i: T::zero(),
            },
        }
    }

    /// Closed-form partial derivatives of `Γ_R` and `Γ_I`.
    pub fn gamma_gradient(&self, pt: PhasePoint<T>) -> GammaGradient<T> {
        let two = T::lit(2.0);
        let k = self.wavenumber();
        let (skq, ckq) = (k * pt.q).sin_cos();
        let (sp, cp) = pt.p.sin_cos();
        match self.variant {
            Variant::ModelI => GammaGradient {
                dr_dq: -two * self.v * k * skq,
                dr_dp: -self.hopping_sum() * sp,
                di_dq: T::zero(),
                di_dp: self.delta() * cp,
            },
            Variant::ModelII => GammaGradient {
                dr_dq: -self.v * k * skq,
                dr_dp: -two * self.j_left * sp,
                di_dq: -self.v * k * ckq,
                di_dp: T::zero(),
            },
            Variant::HermitianAA => GammaGradient {
                dr_dq: -two * self.v * k * skq,
                dr_dp: -two * self.j_left * sp,
                di_dq: T::zero(),
                di_dp: T::zero(),
            },
        }
    }

    /// `(dq/dt, dp/dt)` of the characteristic flow.
    pub fn flow_field(&self, pt: PhasePoint<T>) -> (T, T) {
        let g = self.gamma_gradient(pt);
        (-g.dr_dp + g.di_dq, g.dr_dq + g.di_dp)
    }

    /// Jacobian `[[∂f/∂q, ∂f/∂p], [∂g/∂q, ∂g/∂p]]` of [`flow_field`](Self::flow_field).
    pub fn flow_jacobian(&self, pt: PhasePoint<T>) -> [[T; 2]; 2] {
        let two = T::lit(2.0);
        let k = self.wavenumber();
        let (skq, ckq) = (k * pt.q).sin_cos();
        let (sp, cp) = pt.p.sin_cos();
        let k2v = k * k * self.v;
        match self.variant {
            Variant::ModelI => [
                [T::zero(), self.hopping_sum() * cp],
                [-two * k2v * ckq, -self.delta() * sp],
            ],
            Variant::ModelII => [
                [k2v * skq, two * self.j_left * cp],
                [-k2v * ckq, T::zero()],
            ],
            Variant::HermitianAA => [
                [T::zero(), two * self.j_left * cp],
                [-two * k2v * ckq, T::zero()],
            ],
        }
    }

    /// Divergence `∂f/∂q + ∂g/∂p` of the flow.
    pub fn flow_divergence(&self, pt: PhasePoint<T>) -> T {
        let j = self.flow_jacobian(pt);
        j[0][0] + j[1][1]
    }

    /// Upper bound on `|dp/dt|` over all of phase space.
    pub fn max_p_speed(&self) -> T {
        let two = T::lit(2.0);
        let kv = self.wavenumber().abs() * self.v;
        match self.variant {
            Variant::ModelI => self.delta().abs() + two * kv,
            Variant::ModelII => kv,
            Variant::HermitianAA => two * kv,
        }
    }

    /// Upper bound on `|dq/dt|` over all of phase space.
    pub fn max_q_speed(&self) -> T {
        let two = T::lit(2.0);
        match self.variant {
            Variant::ModelI => self.hopping_sum().abs(),
            Variant::ModelII => two * self.j_left.abs() + self.wavenumber().abs() * self.v,
            Variant::HermitianAA => two * self.j_left.abs(),
        }
    }
}

/// Point `(q, p)` of phase space; `z = (q + ip)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PhasePoint<T = f64> {
    pub q: T,
    pub p: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(q: T, p: T) -> Self {
        Self { q, p }
    }

    /// `|z|² = (q² + p²)/2`.
    pub fn z_norm_sqr(&self) -> T {
        (self.q * self.q + self.p * self.p) / T::lit(2.0)
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.q - other.q).hypot(self.p - other.p)
    }
}

/// Real and imaginary parts of the classical energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexEnergy<T = f64> {
    pub gamma_r: T,
    pub gamma_i: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaGradient<T = f64> {
    pub dr_dq: T,
    pub dr_dp: T,
    pub di_dq: T,
    pub di_dp: T,
}

/// Anything that can drive a characteristic: a velocity field, its
/// divergence, and the imaginary energy feeding the norm landscape.
pub trait PhaseFlow<T: Real>: Sync {
    fn velocity(&self, pt: PhasePoint<T>) -> (T, T);
    fn gamma_i(&self, pt: PhasePoint<T>) -> T;
    fn divergence(&self, pt: PhasePoint<T>) -> T;
}

impl<T: Real> PhaseFlow<T> for ModelParams<T> {
    fn velocity(&self, pt: PhasePoint<T>) -> (T, T) {
        self.flow_field(pt)
    }
    fn gamma_i(&self, pt: PhasePoint<T>) -> T {
        self.gamma_split(pt).gamma_i
    }
    fn divergence(&self, pt: PhasePoint<T>) -> T {
        self.flow_divergence(pt)
    }
}
