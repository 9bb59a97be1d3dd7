use husimi_dyn::*;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

fn dense(h: &Tridiagonal<f64>) -> DMatrix<Complex64> {
    let n = h.diag.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = h.diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = h.upper[i];
            m[(i + 1, i)] = h.lower[i];
        }
    }
    m
}

fn normalized(v: DVector<Complex64>) -> DVector<Complex64> {
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// `e^{−iHt}ψ₀` from the spectrum of the symmetric matrix similar to `H`.
/// Model I is symmetrized by the imaginary-gauge scaling `r^j`,
/// `r = √(J_R/J_L)`.
fn eigen_propagate(h: &Tridiagonal<f64>, psi0: &DVector<f64>, t: f64) -> DVector<Complex64> {
    let n = h.diag.len();
    let r = (h.lower[0].re / h.upper[0].re).sqrt();
    let s = (h.lower[0].re * h.upper[0].re).sqrt();
    let mut sym = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        sym[(i, i)] = h.diag[i].re;
        if i + 1 < n {
            sym[(i, i + 1)] = s;
            sym[(i + 1, i)] = s;
        }
    }
    let eig = SymmetricEigen::new(sym);
    // H = D S D⁻¹ with D = diag(r^i)
    let d: Vec<f64> = (0..n).map(|i| r.powi(i as i32)).collect();
    let y = DVector::from_fn(n, |i, _| psi0[i] / d[i]);
    let coeff = eig.eigenvectors.transpose() * y;
    let mut out = DVector::<Complex64>::zeros(n);
    for k in 0..n {
        let ph = Complex64::from_polar(coeff[k], -eig.eigenvalues[k] * t);
        for i in 0..n {
            out[i] += ph * eig.eigenvectors[(i, k)] * d[i];
        }
    }
    normalized(out)
}

fn exp_propagate(h: &Tridiagonal<f64>, psi0: &DVector<f64>, t: f64) -> DVector<Complex64> {
    let u = (dense(h) * Complex64::new(0.0, -t)).exp();
    normalized(u * psi0.map(|x| Complex64::new(x, 0.0)))
}

fn max_err(a: &[Complex64], b: &DVector<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn lattice_evolution_matches_dense_oracles() {
    let cases = [
        (ModelParams::model_i(1.0, 0.5, 0.5, golden_beta()).unwrap(), 21),
        (ModelParams::model_i(1.0, 0.5, 1.3, golden_beta()).unwrap(), 31),
        (ModelParams::model_ii(1.0, 0.4, golden_beta()).unwrap(), 21),
        (ModelParams::model_ii(1.0, 1.2, golden_beta()).unwrap(), 31),
        (ModelParams::hermitian_aa(1.0, 0.8, golden_beta()).unwrap(), 25),
    ];
    for (p, l) in cases {
        let h = build_lattice_hamiltonian(&p, l).unwrap();
        let psi0 = coherent_initial_state::<f64>(l).unwrap();
        let times = [1.0, 5.0, 10.0];
        let snaps = evolve_lattice(&h, &psi0, &times, 0.01).unwrap();
        let real0 = DVector::from_iterator(l, psi0.amplitudes.iter().map(|a| a.re));
        for (s, &t) in snaps.iter().zip(&times) {
            let by_exp = exp_propagate(&h, &real0, t);
            let e = max_err(&s.amplitudes, &by_exp);
            assert!(e < 1e-6, "{:?} L={l} t={t}: matrix-exponential error {e}", p.variant());
            if p.variant() != Variant::ModelII {
                let by_eig = eigen_propagate(&h, &real0, t);
                let e = max_err(&s.amplitudes, &by_eig);
                assert!(e < 1e-6, "{:?} L={l} t={t}: eigendecomposition error {e}", p.variant());
            }
        }
    }
}

#[test]
fn hermitian_lattice_keeps_norm_without_renormalization() {
    let p = ModelParams::hermitian_aa(1.0, 0.6, golden_beta()).unwrap();
    let h = build_lattice_hamiltonian(&p, 41).unwrap();
    let psi0 = coherent_initial_state::<f64>(41).unwrap();
    // RK4 damps the norm by O((dt‖H‖)⁶) per step
    for (t, dt) in [(5.0, 0.005), (20.0, 0.005)] {
        let mut opts = husimi_dyn::evolve::EvolveOptions::new(dt);
        opts.renormalize = false;
        let s = &husimi_dyn::lattice::evolve_lattice_with(&h, &psi0, &[t], opts).unwrap()[0];
        let n: f64 = s.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-10, "norm {n}");
    }
}

#[test]
fn continuum_potential_spectrum_matches_dense_diagonalization() {
    // Model II with J = 0 is V e^{−ikq̂}; its eigenvalues are unimodular phases
    // at the eigenvalues of the truncated position matrix.
    let n = 48;
    let ops = make_fock_operators::<f64>(n).unwrap();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = ops.position[[i, j]].re;
        }
    }
    let eig = SymmetricEigen::new(q);
    let p = ModelParams::model_ii(0.0, 1.0, golden_beta()).unwrap();
    let h = build_continuum_hamiltonian(&p, &ops).unwrap();
    let hd = h.to_dense();
    let u = DMatrix::from_fn(n, n, |i, j| Complex64::new(eig.eigenvectors[(i, j)], 0.0));
    let m = DMatrix::from_fn(n, n, |i, j| hd[[i, j]]);
    let diag = u.adjoint() * m * &u;
    let k = p.wavenumber();
    for a in 0..n {
        for b in 0..n {
            let expect = if a == b { Complex64::from_polar(1.0, -k * eig.eigenvalues[a]) } else { Complex64::new(0.0, 0.0) };
            assert!((diag[(a, b)] - expect).norm() < 1e-8, "({a},{b}) {} vs {expect}", diag[(a, b)]);
        }
    }
}
