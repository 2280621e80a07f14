//! Dense and sparse linear-algebra helpers on complex matrices.
//!
//! Everything here operates on `ndarray` arrays of `Complex64`. The
//! eigenvalue routine is a cyclic Jacobi iteration specialised to Hermitian
//! matrices; it is only used for validation (positivity checks), never on the
//! propagation hot path.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

pub type C64 = Complex64;

/// Kronecker product `a (x) b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<C64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Frobenius norm.
pub fn frobenius_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest elementwise deviation from Hermitian symmetry,
/// `max_ij |a[i][j] - conj(a[j][i])|`.
pub fn hermiticity_residual(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Projector `|psi><psi|` from a state vector.
pub fn outer(psi: &Array1<C64>) -> Array2<C64> {
    let n = psi.len();
    let mut out = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = psi[i] * psi[j].conj();
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Cyclic Jacobi with phase absorption: each off-diagonal element `a_pq` is
/// annihilated by the unitary that first rotates its phase onto the real axis
/// and then applies the symmetric Jacobi rotation. Quadratic convergence makes
/// a handful of sweeps sufficient at the dimensions used here (<= a few
/// hundred).
pub fn hermitian_eigenvalues(a: &Array2<C64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoreError::invalid_argument("matrix must be square"));
    }
    let scale = frobenius_norm(a).max(1.0);
    let res = hermiticity_residual(a);
    if res > 1e-9 * scale {
        return Err(CoreError::invalid_argument(format!(
            "matrix is not Hermitian (residual {res:.3e})"
        )));
    }
    let mut m = a.clone();
    // Symmetrise exactly so rounding in the input cannot bias the iteration.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }

    let tol = 1e-14 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let z = m[(p, q)];
                let zn = z.norm();
                if zn <= 1e-300 {
                    continue;
                }
                // Unitary diag(1, conj(z)/|z|) makes the (p, q) entry real.
                let phase = z.conj() / zn;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * zn);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column update with U = [[c, s], [-s*phase, c*phase]] on (p, q).
                for r in 0..n {
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    m[(r, p)] = c * mrp - s * phase * mrq;
                    m[(r, q)] = s * mrp + c * phase * mrq;
                }
                // Row update with U^dagger.
                for r in 0..n {
                    let mpr = m[(p, r)];
                    let mqr = m[(q, r)];
                    m[(p, r)] = c * mpr - s * phase.conj() * mqr;
                    m[(q, r)] = s * mpr + c * phase.conj() * mqr;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }

    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigs)
}

/// Sparse matrix in triplet form, used for structure-aware operator
/// application inside the integrator.
#[derive(Debug, Clone)]
pub(crate) struct SparseOp {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn new(dim: usize, entries: Vec<(usize, usize, C64)>) -> Self {
        debug_assert!(entries.iter().all(|&(i, j, _)| i < dim && j < dim));
        SparseOp { dim, entries }
    }

    #[allow(dead_code)] // cross-check support for unit tests
    pub fn from_dense(a: &Array2<C64>) -> Self {
        let dim = a.nrows();
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let z = a[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    entries.push((i, j, z));
                }
            }
        }
        SparseOp { dim, entries }
    }

    #[allow(dead_code)] // cross-check support for unit tests
    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::<C64>::zeros((self.dim, self.dim));
        for &(i, j, z) in &self.entries {
            out[(i, j)] += z;
        }
        out
    }

    pub fn dagger(&self) -> Self {
        SparseOp {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, z)| (j, i, z.conj())).collect(),
        }
    }

    /// `y += w * A x` on raw slices.
    #[allow(dead_code)] // cross-check support for unit tests
    pub fn apply_scaled(&self, w: C64, x: &[C64], y: &mut [C64]) {
        for &(i, j, z) in &self.entries {
            y[i] += w * z * x[j];
        }
    }

    /// `y += w * A x` with a real weight; hot path of the closed integrator.
    pub fn apply_scaled_re(&self, w: f64, x: &[C64], y: &mut [C64]) {
        for &(i, j, z) in &self.entries {
            y[i] += (z * w) * x[j];
        }
    }

    /// `out += w * A rho` (row-sparse left multiplication).
    pub fn left_mul(&self, w: C64, rho: &Array2<C64>, out: &mut Array2<C64>) {
        for &(i, j, z) in &self.entries {
            let wz = w * z;
            out.row_mut(i).scaled_add(wz, &rho.row(j));
        }
    }

    /// `out += w * rho A` (column-sparse right multiplication).
    pub fn right_mul(&self, w: C64, rho: &Array2<C64>, out: &mut Array2<C64>) {
        for &(i, j, z) in &self.entries {
            let wz = w * z;
            out.column_mut(j).scaled_add(wz, &rho.column(i));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> Array2<C64> {
        let mut a = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            a[(i, i)] = c(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        a
    }

    #[test]
    fn kron_matches_hand_computation() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]];
        let b = array![[c(0.0, 1.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let k = kron(&a, &b);
        assert_eq!(k.dim(), (4, 4));
        assert_eq!(k[(0, 0)], c(0.0, 1.0));
        assert_eq!(k[(1, 1)], c(1.0, 0.0));
        assert_eq!(k[(0, 2)], c(0.0, 2.0));
        assert_eq!(k[(3, 3)], c(4.0, 0.0));
        assert_eq!(k[(2, 0)], c(0.0, 3.0));
    }

    #[test]
    fn dagger_conjugates_and_transposes() {
        let a = array![[c(1.0, 2.0), c(3.0, -4.0)], [c(0.0, 1.0), c(5.0, 0.0)]];
        let d = dagger(&a);
        assert_eq!(d[(0, 0)], c(1.0, -2.0));
        assert_eq!(d[(1, 0)], c(3.0, 4.0));
        assert_eq!(d[(0, 1)], c(0.0, -1.0));
    }

    #[test]
    fn jacobi_diagonal_matrix_is_fixed_point() {
        let a = array![
            [c(3.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(-1.0, 0.0)]
        ];
        let e = hermitian_eigenvalues(&a).unwrap();
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_recovers_pauli_spectra() {
        // sigma_y has a purely imaginary off-diagonal pair, eigenvalues -1, 1.
        let sy = array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let e = hermitian_eigenvalues(&sy).unwrap();
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn jacobi_2x2_closed_form() {
        // Eigenvalues of [[a, z], [conj(z), b]] are the closed-form pair
        // (a + b)/2 -+ sqrt(((a - b)/2)^2 + |z|^2).
        let (a, b, z) = (0.7, -0.3, c(0.4, -0.9));
        let m = array![[c(a, 0.0), z], [z.conj(), c(b, 0.0)]];
        let disc = (0.25 * (a - b) * (a - b) + z.norm_sqr()).sqrt();
        let e = hermitian_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(e[0], 0.5 * (a + b) - disc, epsilon = 1e-13);
        assert_abs_diff_eq!(e[1], 0.5 * (a + b) + disc, epsilon = 1e-13);
    }

    #[test]
    fn jacobi_preserves_trace_and_frobenius_invariants() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8, 12] {
            let a = random_hermitian(n, &mut rng);
            let e = hermitian_eigenvalues(&a).unwrap();
            let tr: f64 = (0..n).map(|i| a[(i, i)].re).sum();
            let fr2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(e.iter().sum::<f64>(), tr, epsilon = 1e-10 * n as f64);
            assert_abs_diff_eq!(
                e.iter().map(|x| x * x).sum::<f64>(),
                fr2,
                epsilon = 1e-10 * fr2.max(1.0)
            );
            for w in e.windows(2) {
                assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn jacobi_rejects_non_hermitian_input() {
        let a = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.5, 0.0), c(0.0, 0.0)]];
        assert!(hermitian_eigenvalues(&a).is_err());
    }

    #[test]
    fn sparse_roundtrip_and_products_match_dense() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 6;
        let mut dense = Array2::<C64>::zeros((n, n));
        for _ in 0..10 {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            dense[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let sp = SparseOp::from_dense(&dense);
        assert_abs_diff_eq!(frobenius_norm(&(&sp.to_dense() - &dense)), 0.0, epsilon = 0.0);

        let rho = random_hermitian(n, &mut rng);
        let w = c(0.3, -0.8);

        let mut left = Array2::<C64>::zeros((n, n));
        sp.left_mul(w, &rho, &mut left);
        let expect_left = dense.dot(&rho).mapv(|z| w * z);
        assert!(frobenius_norm(&(&left - &expect_left)) < 1e-13);

        let mut right = Array2::<C64>::zeros((n, n));
        sp.right_mul(w, &rho, &mut right);
        let expect_right = rho.dot(&dense).mapv(|z| w * z);
        assert!(frobenius_norm(&(&right - &expect_right)) < 1e-13);

        let x: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut y = vec![C64::new(0.0, 0.0); n];
        sp.apply_scaled(w, &x, &mut y);
        let xv = Array1::from_vec(x);
        let expect_y = dense.dot(&xv).mapv(|z| w * z);
        for i in 0..n {
            assert!((y[i] - expect_y[i]).norm() < 1e-13);
        }

        let dag = sp.dagger();
        assert!(frobenius_norm(&(&dag.to_dense() - &dagger(&dense))) < 1e-15);
    }
}
