//! Fixed-step classical Runge–Kutta integration.

use num_complex::Complex;

use crate::scalar::Real;

/// One RK4 step for a small real state vector.
#[inline]
pub fn rk4_step<T: Real, const N: usize, F>(f: &F, y: &[T; N], h: T) -> [T; N]
where
    F: Fn(&[T; N]) -> [T; N],
{
    let half = h / T::lit(2.0);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let k1 = f(y);
    let k2 = f(&std::array::from_fn(|i| y[i] + half * k1[i]));
    let k3 = f(&std::array::from_fn(|i| y[i] + half * k2[i]));
    let k4 = f(&std::array::from_fn(|i| y[i] + h * k3[i]));
    std::array::from_fn(|i| y[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
}

/// Integrates `dy/dt = f(y)` over `duration` using `ceil(duration/dt)`
/// equal steps. Stops early, returning the last state and `false`, if
/// `keep_going` rejects an intermediate state.
pub fn rk4_integrate<T: Real, const N: usize, F, G>(
    f: &F,
    y0: [T; N],
    duration: T,
    dt: T,
    mut keep_going: G,
) -> ([T; N], bool)
where
    F: Fn(&[T; N]) -> [T; N],
    G: FnMut(&[T; N]) -> bool,
{
    let steps = step_count(duration, dt);
    if steps == 0 {
        return (y0, true);
    }
    let h = duration / T::from_index(steps);
    let mut y = y0;
    for _ in 0..steps {
        y = rk4_step(f, &y, h);
        if !keep_going(&y) {
            return (y, false);
        }
    }
    (y, true)
}

/// Number of equal steps of size at most `dt` covering `duration`.
pub fn step_count<T: Real>(duration: T, dt: T) -> usize {
    if duration <= T::zero() {
        return 0;
    }
    let n = (duration / dt - T::lit(1e-9)).ceil();
    n.to_usize().unwrap_or(usize::MAX).max(1)
}

/// Scratch buffers for RK4 on `i dψ/dt = Hψ`.
pub(crate) struct SchrodingerRk4<T> {
    k: [Vec<Complex<T>>; 4],
    tmp: Vec<Complex<T>>,
}

impl<T: Real> SchrodingerRk4<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![Complex::new(T::zero(), T::zero()); dim];
        Self { k: [z.clone(), z.clone(), z.clone(), z.clone()], tmp: z }
    }

    /// Advances `psi` by `h` in place; `apply(x, y)` must write `Hx` into `y`.
    pub fn step<A>(&mut self, apply: &A, psi: &mut [Complex<T>], h: T)
    where
        A: Fn(&[Complex<T>], &mut [Complex<T>]),
    {
        // dψ/dt = -i Hψ
        let minus_i = Complex::new(T::zero(), -T::one());
        let half = Complex::new(h / T::lit(2.0), T::zero());
        let full = Complex::new(h, T::zero());
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;

        apply(psi, k1);
        k1.iter_mut().for_each(|x| *x = *x * minus_i);
        for ((t, y), k) in tmp.iter_mut().zip(psi.iter()).zip(k1.iter()) {
            *t = *y + half * *k;
        }
        apply(tmp, k2);
        k2.iter_mut().for_each(|x| *x = *x * minus_i);
        for ((t, y), k) in tmp.iter_mut().zip(psi.iter()).zip(k2.iter()) {
            *t = *y + half * *k;
        }
        apply(tmp, k3);
        k3.iter_mut().for_each(|x| *x = *x * minus_i);
        for ((t, y), k) in tmp.iter_mut().zip(psi.iter()).zip(k3.iter()) {
            *t = *y + full * *k;
        }
        apply(tmp, k4);
        k4.iter_mut().for_each(|x| *x = *x * minus_i);

        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        for i in 0..psi.len() {
            let incr = k1[i] + k2[i] * two + k3[i] * two + k4[i];
            psi[i] = psi[i] + incr * sixth;
        }
    }
}
