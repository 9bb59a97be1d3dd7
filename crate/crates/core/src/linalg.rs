//! Linear operators and the few spectral routines the simulations need.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

/// A square complex operator acting on state vectors.
pub trait Operator<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// Writes `H x` into `y`.
    fn apply(&self, x: &[C<T>], y: &mut [C<T>]);

    /// Norm used by the step-size guard of the integrators.
    fn step_norm(&self) -> T;

    fn to_dense(&self) -> Array2<C<T>>;
}

/// Tridiagonal complex matrix. `upper[j] = H[j][j+1]`, `lower[j] = H[j+1][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal<T = f64> {
    pub diag: Vec<C<T>>,
    pub upper: Vec<C<T>>,
    pub lower: Vec<C<T>>,
}

impl<T: Real> Tridiagonal<T> {
    /// Maximum absolute row sum `‖H‖_∞`.
    pub fn max_row_sum(&self) -> T {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].norm();
                if i + 1 < n {
                    s += self.upper[i].norm();
                }
                if i > 0 {
                    s += self.lower[i - 1].norm();
                }
                s
            })
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Operator<T> for Tridiagonal<T> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i + 1 < n {
                acc = acc + self.upper[i] * x[i + 1];
            }
            if i > 0 {
                acc = acc + self.lower[i - 1] * x[i - 1];
            }
            y[i] = acc;
        }
    }

    fn step_norm(&self) -> T {
        self.max_row_sum()
    }

    fn to_dense(&self) -> Array2<C<T>> {
        let n = self.diag.len();
        let mut m = Array2::from_elem((n, n), c(T::zero(), T::zero()));
        for i in 0..n {
            m[[i, i]] = self.diag[i];
            if i + 1 < n {
                m[[i, i + 1]] = self.upper[i];
                m[[i + 1, i]] = self.lower[i];
            }
        }
        m
    }
}

/// Dense complex operator stored as separate real and imaginary parts so
/// that products run through the real matrix kernels.
#[derive(Clone, Debug)]
pub struct DenseOperator<T = f64> {
    re: Array2<T>,
    im: Array2<T>,
    norm_estimate: T,
}

impl<T: Real> DenseOperator<T> {
    pub fn new(m: &Array2<C<T>>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let re = m.mapv(|z| z.re);
        let im = m.mapv(|z| z.im);
        let mut op = Self { re, im, norm_estimate: T::zero() };
        op.norm_estimate = op.estimate_spectral_norm(40);
        op
    }

    pub fn from_parts(re: Array2<T>, im: Array2<T>) -> Self {
        assert_eq!(re.dim(), im.dim());
        let mut op = Self { re, im, norm_estimate: T::zero() };
        op.norm_estimate = op.estimate_spectral_norm(40);
        op
    }

    pub fn real_part(&self) -> &Array2<T> {
        &self.re
    }

    pub fn imag_part(&self) -> &Array2<T> {
        &self.im
    }

    fn apply_adjoint(&self, x: &[C<T>], y: &mut [C<T>]) {
        // H† = Re^T - i Im^T
        let xs = stack(x);
        let a = self.re.t().dot(&xs);
        let b = self.im.t().dot(&xs);
        for i in 0..y.len() {
            y[i] = c(a[[i, 0]] + b[[i, 1]], a[[i, 1]] - b[[i, 0]]);
        }
    }

    /// Power iteration on `H†H`; returns a slight overestimate of `‖H‖₂`.
    fn estimate_spectral_norm(&self, iters: usize) -> T {
        let n = self.re.nrows();
        if n == 0 {
            return T::zero();
        }
        // deterministic, non-symmetric start vector
        let mut x: Vec<C<T>> = (0..n)
            .map(|i| c(T::one() + T::lit(0.37) * T::from_index(i % 7), T::lit(0.11) * T::from_index(i % 3)))
            .collect();
        let mut y = vec![c(T::zero(), T::zero()); n];
        let mut lambda = T::zero();
        for _ in 0..iters {
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v = *v / nx);
            self.apply(&x, &mut y);
            self.apply_adjoint(&y, &mut x);
            lambda = norm(&x).sqrt();
        }
        lambda * T::lit(1.02)
    }
}

fn stack<T: Real>(x: &[C<T>]) -> Array2<T> {
    let mut xs = Array2::zeros((x.len(), 2));
    for (i, v) in x.iter().enumerate() {
        xs[[i, 0]] = v.re;
        xs[[i, 1]] = v.im;
    }
    xs
}

impl<T: Real> Operator<T> for DenseOperator<T> {
    fn dim(&self) -> usize {
        self.re.nrows()
    }

    fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        let xs = stack(x);
        let a = self.re.dot(&xs);
        let b = self.im.dot(&xs);
        for i in 0..y.len() {
            y[i] = c(a[[i, 0]] - b[[i, 1]], a[[i, 1]] + b[[i, 0]]);
        }
    }

    fn step_norm(&self) -> T {
        self.norm_estimate
    }

    fn to_dense(&self) -> Array2<C<T>> {
        let mut m = Array2::from_elem(self.re.dim(), c(T::zero(), T::zero()));
        ndarray::Zip::from(&mut m).and(&self.re).and(&self.im).for_each(|z, &r, &i| *z = c(r, i));
        m
    }
}

pub fn norm<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
}

/// Eigenvalues of a real symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts. `off[i]` couples rows `i` and `i + 1`. Returned in
/// ascending order.
pub fn symmetric_tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    assert!(off.len() + 1 == n || (n == 0 && off.is_empty()));
    let mut d = diag.to_vec();
    let mut e: Vec<T> = off.iter().copied().chain(std::iter::once(T::zero())).collect();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut cs, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = cs * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                cs = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * cs * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cs * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

/// Spectral decomposition `A = U diag(λ) Uᵀ` of a real symmetric matrix;
/// eigenvectors are the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct RealSpectrum<T = f64> {
    pub values: Vec<T>,
    pub vectors: Array2<T>,
}

impl<T: Real> RealSpectrum<T> {
    /// `U diag(re f(λ)) Uᵀ` and `U diag(im f(λ)) Uᵀ`.
    pub fn map_parts<F>(&self, f: F) -> (Array2<T>, Array2<T>)
    where
        F: Fn(T) -> C<T>,
    {
        let fx: Vec<C<T>> = self.values.iter().map(|&x| f(x)).collect();
        let re = Array1::from_iter(fx.iter().map(|z| z.re));
        let im = Array1::from_iter(fx.iter().map(|z| z.im));
        let ut = self.vectors.t();
        let part = |w: &Array1<T>| {
            if w.iter().all(|x| *x == T::zero()) {
                return Array2::zeros(self.vectors.dim());
            }
            let scaled = &self.vectors * &w.view().insert_axis(Axis(0));
            scaled.dot(&ut)
        };
        (part(&re), part(&im))
    }

    /// `f(A)` as a complex matrix.
    pub fn map<F>(&self, f: F) -> Array2<C<T>>
    where
        F: Fn(T) -> C<T>,
    {
        let (re, im) = self.map_parts(f);
        combine(&re, &im)
    }
}

pub(crate) fn combine<T: Real>(re: &Array2<T>, im: &Array2<T>) -> Array2<C<T>> {
    let mut m = Array2::from_elem(re.dim(), c(T::zero(), T::zero()));
    ndarray::Zip::from(&mut m).and(re).and(im).for_each(|z, &r, &i| *z = c(r, i));
    m
}

/// Spectral decomposition of the truncated position operator
/// `q̂ = (a† + a)/√2` on `dim` oscillator levels.
///
/// The matrix is the Jacobi matrix of the Hermite functions, so the
/// eigenvalues are Gauss–Hermite nodes and each eigenvector is the vector of
/// Hermite functions `ψ_n(x_k)`, `n < dim`, normalized. Only the eigenvalues
/// need an iterative solve; the vectors follow from the three-term
/// recurrence.
pub fn position_spectrum<T: Real>(dim: usize) -> Result<RealSpectrum<T>> {
    let diag = vec![T::zero(); dim];
    let off: Vec<T> = (1..dim).map(|n| (T::from_index(n) / T::lit(2.0)).sqrt()).collect();
    let values = symmetric_tridiagonal_eigenvalues(&diag, &off)?;
    let mut vectors = Array2::zeros((dim, dim));
    let big = T::lit(1e150);
    let mut col = vec![T::zero(); dim];
    for (k, &x) in values.iter().enumerate() {
        col[0] = T::one();
        if dim > 1 {
            col[1] = x / off[0];
        }
        for n in 1..dim.saturating_sub(1) {
            col[n + 1] = (x * col[n] - off[n - 1] * col[n - 1]) / off[n];
            if col[n + 1].abs() > big {
                let inv = T::one() / big;
                col[..=n + 1].iter_mut().for_each(|v| *v = *v * inv);
            }
        }
        let nrm = col.iter().map(|v| *v * *v).sum::<T>().sqrt();
        // fix the sign so the last component is non-negative
        let sign = if col[dim - 1] < T::zero() { -T::one() } else { T::one() };
        for n in 0..dim {
            vectors[[n, k]] = sign * col[n] / nrm;
        }
    }
    Ok(RealSpectrum { values, vectors })
}

/// Conjugation by `R = diag(iⁿ)`: returns `R† M R`, i.e. entries scaled by
/// `i^{n−m}`. Maps functions of `−q̂` to functions of `p̂`.
pub fn quarter_turn<T: Real>(m: &Array2<C<T>>) -> Array2<C<T>> {
    let mut out = m.clone();
    for ((row, col), z) in out.indexed_iter_mut() {
        *z = match (col + 4 - row % 4) % 4 {
            0 => *z,
            1 => c(-z.im, z.re),
            2 => c(-z.re, -z.im),
            _ => c(z.im, -z.re),
        };
    }
    out
}
