//! Cyclic Jacobi eigendecomposition of complex Hermitian matrices.

use num_complex::Complex64;

use crate::cmat::CMatrix;
use crate::error::{shape, Error, Result};

/// Sweep cap before the solver gives up.
pub const MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to `|A|_F`.
pub const REL_TOL: f64 = 1e-12;
/// Accepted Hermitian defect on input, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    pub sweeps: usize,
}

impl HermitianEigen {
    /// `V diag(values) V^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        CMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj())
                .sum()
        })
    }

    /// Largest entry of `|V^H V - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.values.len();
        let v = &self.vectors;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let dot: Complex64 = (0..n).map(|i| v[(i, a)].conj() * v[(i, b)]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition `m = V diag(λ) V^H` by cyclic complex Jacobi rotations.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return shape(format!("eigendecomposition of a {}x{} matrix", m.rows(), m.cols()));
    }
    let n = m.rows();
    let scale = m.max_abs();
    if !scale.is_finite() {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if m.hermitian_defect() > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian (defect {:.3e})",
            m.hermitian_defect()
        )));
    }

    let mut a = m.clone();
    a.symmetrize();
    let mut v = CMatrix::identity(n);
    let tol = REL_TOL * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi did not converge after {MAX_SWEEPS} sweeps (off-diagonal residual {off:.3e}, tolerance {tol:.3e})"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

// Annihilates a[p][q] with J = D P, D = diag(1, e^{-jφ}) on (p, q) and P the
// real Jacobi rotation of the phase-removed pair.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let n = a.rows();
    let phase = apq / mag;
    let phase_c = phase.conj();
    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // columns: A <- A J
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * c - phase_c * aiq * s;
        a[(i, q)] = aip * s + phase_c * aiq * c;
    }
    // rows: A <- J^H A
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = apj * c - phase * aqj * s;
        a[(q, j)] = apj * s + phase * aqj * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * c - phase_c * viq * s;
        v[(i, q)] = vip * s + phase_c * viq * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity() {
        let e = hermitian_eig(&CMatrix::identity(5)).unwrap();
        assert!(e.values.iter().all(|&x| x == 1.0));
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn diagonal() {
        let m = CMatrix::from_rows(vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(3.0, 0.0)]]).unwrap();
        let e = hermitian_eig(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors[(1, 0)].norm(), 1.0);
        assert_eq!(e.vectors[(0, 1)].norm(), 1.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(-3.0..3.0);
            let d: f64 = rng.gen_range(-3.0..3.0);
            let b = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let m = CMatrix::from_rows(vec![vec![c(a, 0.0), b], vec![b.conj(), c(d, 0.0)]]).unwrap();
            let tr = a + d;
            let disc = ((a - d).powi(2) + 4.0 * b.norm_sqr()).sqrt();
            let e = hermitian_eig(&m).unwrap();
            assert!((e.values[0] - (tr + disc) / 2.0).abs() < 1e-10);
            assert!((e.values[1] - (tr - disc) / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_rows(vec![vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::Domain(_))));
        assert!(hermitian_eig(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [3usize, 8, 17] {
            let g = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let mut h = g.matmul(&g.adjoint()).unwrap();
            h.symmetrize();
            let e = hermitian_eig(&h).unwrap();
            let r = e.reconstruct().sub(&h).unwrap().max_abs();
            assert!(r < 1e-8 * h.max_abs());
            assert!(e.orthonormality_defect() < 1e-8);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
