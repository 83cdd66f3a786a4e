//! Hermitian eigendecomposition.
//!
//! A `K×K` Hermitian `A = X + jY` is embedded as the real symmetric
//! `2K×2K` matrix `[[X, −Y], [Y, X]]`, which is diagonalized by cyclic
//! Jacobi rotations. Each eigenvalue of `A` appears twice in the embedding.
//! A real eigenvector `(p; q)` maps to the complex eigenvector `p + jq`, so the
//! duplicates are removed by complex Gram-Schmidt inside each eigenvalue cluster.

use num_complex::Complex64;

use super::matrix::{dot_h, ComplexMatrix};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching unit-norm eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.eigenvectors.col(i)
    }
}

pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::Precondition(format!(
            "eigendecomposition needs a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Precondition(format!(
            "matrix is not Hermitian (max deviation {defect:.3e})"
        )));
    }

    let k = a.rows();
    let n = 2 * k;
    let mut s = vec![0.0; n * n];
    for r in 0..k {
        for c in 0..k {
            // symmetrize so tiny Hermitian defects don't leak into the rotation
            let z = 0.5 * (a[(r, c)] + a[(c, r)].conj());
            s[r * n + c] = z.re;
            s[(r + k) * n + (c + k)] = z.re;
            s[r * n + (c + k)] = -z.im;
            s[(r + k) * n + c] = z.im;
        }
    }

    let (values, vectors) = jacobi_symmetric(&mut s, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let cluster_tol = 1e-9 * scale;

    let mut accepted: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    let mut start = 0;
    while start < n && accepted.len() < k {
        let mut end = start + 1;
        while end < n && values[order[end - 1]] - values[order[end]] <= cluster_tol {
            end += 1;
        }
        let mut candidates: Vec<Vec<Complex64>> = order[start..end]
            .iter()
            .map(|&idx| {
                (0..k)
                    .map(|r| Complex64::new(vectors[r * n + idx], vectors[(r + k) * n + idx]))
                    .collect()
            })
            .collect();
        let want = (end - start) / 2;
        let mut taken = 0;
        while taken < want && accepted.len() < k {
            // pivoted Gram-Schmidt: project every candidate, keep the largest residual
            for cand in candidates.iter_mut() {
                for u in accepted.iter() {
                    let p = dot_h(u, cand);
                    for (x, y) in cand.iter_mut().zip(u) {
                        *x -= p * y;
                    }
                }
            }
            let (best, best_norm) = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("cluster is never empty");
            if best_norm < 1e-6 {
                return Err(Error::Numerical(format!(
                    "could not extract an independent eigenvector (residual {best_norm:.3e})"
                )));
            }
            let u: Vec<Complex64> = candidates.swap_remove(best).iter().map(|z| z / best_norm).collect();
            accepted.push(u);
            taken += 1;
        }
        start = end;
    }
    if accepted.len() != k {
        return Err(Error::Numerical(format!(
            "recovered {} of {k} eigenvectors from the real embedding",
            accepted.len()
        )));
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = accepted
        .into_iter()
        .map(|u| {
            let au = a.mul_vec(&u).expect("square");
            (dot_h(&u, &au).re, u)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut eigenvectors = ComplexMatrix::zeros(k, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (c, (lambda, u)) in pairs.into_iter().enumerate() {
        eigenvalues.push(lambda);
        eigenvectors.set_col(c, &u);
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Cyclic Jacobi on a dense real symmetric matrix (row-major, destroyed).
/// Returns the eigenvalues and the row-major matrix whose columns are eigenvectors.
fn jacobi_symmetric(s: &mut [f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if total == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    let mut off = 0.0;
    for _ in 0..MAX_SWEEPS {
        off = off_diagonal_norm(s, n);
        if off <= 1e-15 * total {
            let values = (0..n).map(|i| s[i * n + i]).collect();
            return Ok((values, v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = s[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = s[p * n + p];
                let aqq = s[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for r in 0..n {
                    let srp = s[r * n + p];
                    let srq = s[r * n + q];
                    s[r * n + p] = c * srp - sn * srq;
                    s[r * n + q] = sn * srp + c * srq;
                }
                for col in 0..n {
                    let spc = s[p * n + col];
                    let sqc = s[q * n + col];
                    s[p * n + col] = c * spc - sn * sqc;
                    s[q * n + col] = sn * spc + c * sqc;
                }
                s[p * n + q] = 0.0;
                s[q * n + p] = 0.0;
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - sn * vrq;
                    v[r * n + q] = sn * vrp + c * vrq;
                }
            }
        }
    }
    Err(Error::Numerical(format!(
        "Jacobi iteration did not converge after {MAX_SWEEPS} sweeps (off-diagonal residual {off:.3e})"
    )))
}

fn off_diagonal_norm(s: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                acc += s[r * n + c] * s[r * n + c];
            }
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::SeededRng;

    fn random_hermitian(k: usize, rng: &mut SeededRng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(k, k);
        for r in 0..k {
            m[(r, r)] = Complex64::new(rng.normal(), 0.0);
            for c in r + 1..k {
                let z = Complex64::new(rng.normal(), rng.normal());
                m[(r, c)] = z;
                m[(c, r)] = z.conj();
            }
        }
        m
    }

    fn check_invariants(a: &ComplexMatrix, eig: &HermitianEig) {
        let k = a.rows();
        let norm = a.frobenius_norm().max(1.0);
        for w in eig.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for i in 0..k {
            let u = eig.vector(i);
            let au = a.mul_vec(&u).unwrap();
            let res: f64 = au
                .iter()
                .zip(&u)
                .map(|(x, y)| (x - y * eig.eigenvalues[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-8 * norm, "residual {res}");
            for j in 0..i {
                assert!(dot_h(&eig.vector(j), &u).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let eig = hermitian_eig(&ComplexMatrix::identity(3)).unwrap();
        for l in &eig.eigenvalues {
            assert!((l - 1.0).abs() < 1e-14);
        }
        check_invariants(&ComplexMatrix::identity(3), &eig);
    }

    #[test]
    fn diagonal_returns_standard_basis() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a[(1, 1)] = Complex64::new(3.0, 0.0);
        let eig = hermitian_eig(&a).unwrap();
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((eig.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_matches_quadratic_formula() {
        let mut rng = SeededRng::new(7, 0);
        for _ in 0..50 {
            let a = random_hermitian(2, &mut rng);
            let (p, q) = (a[(0, 0)].re, a[(1, 1)].re);
            let b = a[(0, 1)].norm_sqr();
            // λ² − (p+q)λ + (pq − |b|²) = 0
            let mid = 0.5 * (p + q);
            let disc = (0.25 * (p - q) * (p - q) + b).sqrt();
            let eig = hermitian_eig(&a).unwrap();
            assert!((eig.eigenvalues[0] - (mid + disc)).abs() < 1e-12);
            assert!((eig.eigenvalues[1] - (mid - disc)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_sixteen_by_sixteen_reconstructs() {
        let mut rng = SeededRng::new(11, 3);
        let a = random_hermitian(16, &mut rng);
        let eig = hermitian_eig(&a).unwrap();
        check_invariants(&a, &eig);
        let trace: f64 = eig.eigenvalues.iter().sum();
        assert!((trace - a.trace().re).abs() < 1e-8 * a.frobenius_norm());
        let u = &eig.eigenvectors;
        let lambda = ComplexMatrix::from_fn(16, 16, |r, c| {
            if r == c {
                Complex64::new(eig.eigenvalues[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let rebuilt = u.matmul(&lambda).unwrap().matmul(&u.adjoint()).unwrap();
        assert!(rebuilt.sub(&a).unwrap().max_abs() < 1e-7);
    }

    #[test]
    fn repeated_eigenvalues_give_orthogonal_vectors() {
        // rank-1 plus identity: one eigenvalue 1 + ‖u‖², the rest exactly 1
        let u = [
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.2, 0.3),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.7, 0.0),
        ];
        let a = ComplexMatrix::outer(&u, &u).add(&ComplexMatrix::identity(4)).unwrap();
        let eig = hermitian_eig(&a).unwrap();
        check_invariants(&a, &eig);
        let top: f64 = 1.0 + u.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((eig.eigenvalues[0] - top).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = ComplexMatrix::identity(2);
        a[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(matches!(hermitian_eig(&a), Err(Error::Precondition(_))));
    }
}
