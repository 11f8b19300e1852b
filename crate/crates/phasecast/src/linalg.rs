//! Dense complex matrices, the Hermitian eigensolver, and state containers.
//!
//! Dimensions in this crate stay small (at most a few hundred), so matrices
//! are plain row-major `Vec<Complex64>` buffers and the eigensolver is cyclic
//! Jacobi with complex rotations: simple, dependency-free, and the
//! accumulated eigenvector matrix is unitary by construction.

use num_complex::Complex64;

use crate::tol;
use crate::{Error, Result};

/// Square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a row-major entry buffer; length must be `dim * dim`.
    pub fn from_vec(dim: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must equal dim^2");
        assert!(dim >= 1);
        Self { dim, entries }
    }

    /// Convenience constructor from real diagonal entries.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_vec(self.dim, entries)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_vec(self.dim, entries)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_vec(self.dim, self.entries.iter().map(|a| a * factor).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    /// Matrix power by repeated squaring.
    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[i * n + j] * v[j]).sum())
            .collect()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest |a_ij - conj(a_ji)|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.entries[i * n + j] - self.entries[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Hermitian part (a + a^dag)/2 with an exactly real diagonal.
    pub fn hermitize(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[i * n + j] =
                    (self.entries[i * n + j] + self.entries[j * n + i].conj()) * 0.5;
            }
            out.entries[i * n + i] = Complex64::new(out.entries[i * n + i].re, 0.0);
        }
        out
    }

    /// tr(self * other), without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.entries[i * n + k] * other.entries[k * n + i];
            }
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

/// Kronecker product, row-major layout: `(a ⊗ b)[(i1*db+i2),(j1*db+j2)] = a[i1,j1] b[i2,j2]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n);
    for i1 in 0..da {
        for j1 in 0..da {
            let f = a[(i1, j1)];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for i2 in 0..db {
                for j2 in 0..db {
                    out[(i1 * db + i2, j1 * db + j2)] = f * b[(i2, j2)];
                }
            }
        }
    }
    out
}

pub fn pauli_x() -> ComplexMatrix {
    let one = Complex64::new(1.0, 0.0);
    ComplexMatrix::from_vec(
        2,
        vec![Complex64::new(0.0, 0.0), one, one, Complex64::new(0.0, 0.0)],
    )
}

pub fn pauli_y() -> ComplexMatrix {
    let i = Complex64::new(0.0, 1.0);
    ComplexMatrix::from_vec(
        2,
        vec![Complex64::new(0.0, 0.0), -i, i, Complex64::new(0.0, 0.0)],
    )
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, -1.0])
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as the columns of the second element. The input must be
/// Hermitian within [`tol::EIG_INPUT`].
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let asym = m.hermiticity_deviation();
    if asym > tol::EIG_INPUT {
        return Err(Error::NonHermitian {
            max_asymmetry: asym,
        });
    }
    let n = m.dim();
    let mut a = m.hermitize();
    let mut v = ComplexMatrix::identity(n);

    let scale = a.max_abs().max(1e-300);
    let thresh = 1e-14 * scale;
    let max_sweeps = 80;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= thresh {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= thresh * 1e-2 {
                    continue;
                }
                // Unitary rotation in the (p, q) plane annihilating a[p][q]:
                // phase strips arg(a_pq), then a real Jacobi angle does the rest.
                let phase = apq / mag; // e^{i beta}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_fwd = s * phase; // s e^{i beta}
                let s_bwd = s * phase.conj(); // s e^{-i beta}

                // Columns p and q of both a and v: col_p' = c col_p - s e^{-i b} col_q,
                // col_q' = s e^{i b} col_p + c col_q; rows of a follow by Hermiticity.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * s_bwd;
                    a[(k, q)] = akp * s_fwd + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * s_fwd;
                    a[(q, k)] = apk * s_bwd + aqk * c;
                }
                // Clean the rotated 2x2 block against rounding drift.
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * s_bwd;
                    v[(k, q)] = vkp * s_fwd + vkq * c;
                }
            }
        }
    }
    if !converged {
        // One last check: the sweep loop may have finished its work exactly
        // on the final iteration.
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off > thresh {
            return Err(Error::EigNoConvergence { sweeps: max_sweeps });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity before accepting `m`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let asym = m.hermiticity_deviation();
        if asym > tol::HERMITICITY {
            return Err(Error::NonHermitian {
                max_asymmetry: asym,
            });
        }
        let tr = m.trace();
        let dev = (tr - Complex64::new(1.0, 0.0)).norm();
        if dev > tol::TRACE {
            return Err(Error::TraceDeviation { deviation: dev });
        }
        let (evals, _) = hermitian_eig(&m)?;
        if let Some(&min) = evals.first() {
            if min < -tol::POSITIVITY {
                return Err(Error::NegativeEigenvalue { value: min });
            }
        }
        Ok(Self { matrix: m })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        let p = Complex64::new(1.0 / dim as f64, 0.0);
        for i in 0..dim {
            m[(i, i)] = p;
        }
        Self { matrix: m }
    }

    /// Projector |psi><psi| onto a normalized ket.
    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > tol::TRACE {
            return Err(Error::TraceDeviation {
                deviation: (norm_sqr - 1.0).abs(),
            });
        }
        let n = ket.len();
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = ket[i] * ket[j].conj();
            }
        }
        Ok(Self { matrix: m })
    }

    /// |+><+| = (|0>+|1>)(<0|+<1|)/2, the maximally coherent qubit state.
    pub fn plus_state() -> Self {
        let h = Complex64::new(0.5, 0.0);
        Self {
            matrix: ComplexMatrix::from_vec(2, vec![h, h, h, h]),
        }
    }

    /// Computational basis projector |k><k| in dimension `dim`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        assert!(k < dim);
        let mut m = ComplexMatrix::zeros(dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// GHZ projector on `n` qubits, (|0...0> + |1...1>)/sqrt(2).
    pub fn ghz(n: usize) -> Self {
        assert!(n >= 1);
        let dim = 1usize << n;
        let mut m = ComplexMatrix::zeros(dim);
        let h = Complex64::new(0.5, 0.0);
        m[(0, 0)] = h;
        m[(0, dim - 1)] = h;
        m[(dim - 1, 0)] = h;
        m[(dim - 1, dim - 1)] = h;
        Self { matrix: m }
    }
}

/// Real 3-vector on (or inside) the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// r_k = tr(rho sigma_k) for a single-qubit state.
pub fn bloch_from_state(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    Ok(BlochVector {
        x: 2.0 * m[(0, 1)].re,
        y: -2.0 * m[(0, 1)].im,
        z: (m[(0, 0)] - m[(1, 1)]).re,
    })
}

/// rho = (1 + r . sigma)/2; rejects |r| beyond the Bloch ball.
pub fn state_from_bloch(r: &BlochVector) -> Result<DensityMatrix> {
    let norm = r.norm();
    if norm > 1.0 + tol::BLOCH_NORM {
        return Err(Error::UnphysicalBloch { norm });
    }
    let m = ComplexMatrix::from_vec(
        2,
        vec![
            Complex64::new((1.0 + r.z) / 2.0, 0.0),
            Complex64::new(r.x / 2.0, -r.y / 2.0),
            Complex64::new(r.x / 2.0, r.y / 2.0),
            Complex64::new((1.0 - r.z) / 2.0, 0.0),
        ],
    );
    // Rounding in the entries can push an eigenvalue of a surface state
    // below zero by ~1e-16; the DensityMatrix floor absorbs that.
    DensityMatrix::new(m)
}

/// Single-qubit state flattened in the fixed ordering
/// (rho_00, rho_01, rho_10, rho_11).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorizedState {
    pub v: [Complex64; 4],
}

/// Row-major flattening of a single-qubit density matrix.
pub fn vectorize(rho: &DensityMatrix) -> Result<VectorizedState> {
    if rho.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    Ok(VectorizedState {
        v: [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
    })
}

/// Inverse of [`vectorize`]; rejects vectors that are not valid states.
pub fn devectorize(vs: &VectorizedState) -> Result<DensityMatrix> {
    let v = &vs.v;
    let trace_dev = (v[0] + v[3] - Complex64::new(1.0, 0.0)).norm();
    let herm_dev = (v[1] - v[2].conj()).norm();
    let dev = trace_dev.max(herm_dev);
    if dev > tol::DEVECTORIZE {
        return Err(Error::InvalidVectorization { deviation: dev });
    }
    let m = ComplexMatrix::from_vec(2, vec![v[0], v[1], v[2], v[3]]).hermitize();
    DensityMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn random_complex(rng: &mut SplitMix64) -> Complex64 {
        Complex64::new(rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0)
    }

    pub(crate) fn random_hermitian(dim: usize, rng: &mut SplitMix64) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = random_complex(rng);
            }
        }
        m.hermitize()
    }

    pub(crate) fn random_state(dim: usize, rng: &mut SplitMix64) -> DensityMatrix {
        // a a^dag / tr is Hermitian and positive by construction.
        let mut a = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                a[(i, j)] = random_complex(rng);
            }
        }
        let m = a.mul(&a.dagger());
        let tr = m.trace().re;
        let m = m.scale(Complex64::new(1.0 / tr, 0.0)).hermitize();
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn eig_of_diagonal_matrix_is_trivial() {
        let m = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let (vals, vecs) = hermitian_eig(&m).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!(vecs.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn eig_pauli_x_spectrum() {
        let (vals, _) = hermitian_eig(&pauli_x()).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = SplitMix64::new(42);
        let m = random_hermitian(4, &mut rng);
        let (vals, v) = hermitian_eig(&m).unwrap();
        // V Lambda V^dag
        let lambda = ComplexMatrix::from_real_diag(&vals);
        let rebuilt = v.mul(&lambda).mul(&v.dagger());
        assert!(rebuilt.max_abs_diff(&m) < tol::EIG_RECONSTRUCTION_PER_DIM * 4.0);
        // V^dag V = 1
        assert!(v.dagger().mul(&v).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
    }

    #[test]
    fn eig_rejects_non_hermitian_input() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        match hermitian_eig(&m) {
            Err(Error::NonHermitian { max_asymmetry }) => {
                assert!((max_asymmetry - 0.5).abs() < 1e-15)
            }
            other => panic!("expected NonHermitian, got {other:?}"),
        }
    }

    #[test]
    fn eig_trace_and_determinant_consistency() {
        let mut rng = SplitMix64::new(9);
        for dim in [2usize, 3, 4] {
            let m = random_hermitian(dim, &mut rng);
            let (vals, _) = hermitian_eig(&m).unwrap();
            let sum: f64 = vals.iter().sum();
            assert!((sum - m.trace().re).abs() < 1e-10);
            // determinant via eigenvalue product vs cofactor expansion
            let prod: f64 = vals.iter().product();
            if dim == 2 {
                let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
                assert!((det - prod).abs() < 1e-8);
            }
            if dim == 3 {
                let det = (m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                    - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                    + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]))
                    .re;
                assert!((det - prod).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eig_handles_degenerate_spectrum() {
        // 2 I has a fully degenerate spectrum; any orthonormal pair works.
        let m = ComplexMatrix::identity(3).scale(Complex64::new(2.0, 0.0));
        let (vals, v) = hermitian_eig(&m).unwrap();
        for val in vals {
            assert!((val - 2.0).abs() < 1e-14);
        }
        assert!(v.dagger().mul(&v).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn vectorize_known_states() {
        let mixed = vectorize(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert_eq!(mixed.v[0], Complex64::new(0.5, 0.0));
        assert_eq!(mixed.v[1], Complex64::new(0.0, 0.0));
        assert_eq!(mixed.v[3], Complex64::new(0.5, 0.0));

        let plus = vectorize(&DensityMatrix::plus_state()).unwrap();
        for entry in plus.v {
            assert!((entry - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }

        let zero = vectorize(&DensityMatrix::basis_state(2, 0)).unwrap();
        assert_eq!(zero.v[0], Complex64::new(1.0, 0.0));
        assert_eq!(zero.v[3], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn vectorize_rejects_wrong_dimension() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(vectorize(&rho), Err(Error::Dimension { .. })));
    }

    #[test]
    fn devectorize_known_vectors_and_round_trip() {
        let half = Complex64::new(0.5, 0.0);
        let v = VectorizedState {
            v: [
                half,
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                half,
            ],
        };
        assert_eq!(devectorize(&v).unwrap(), DensityMatrix::maximally_mixed(2));

        let mut rng = SplitMix64::new(7);
        let rho = random_state(2, &mut rng);
        let back = devectorize(&vectorize(&rho).unwrap()).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn devectorize_rejects_invalid_vectors() {
        let v = VectorizedState {
            v: [
                Complex64::new(0.7, 0.0),
                Complex64::new(0.1, 0.0),
                Complex64::new(0.1, 0.0),
                Complex64::new(0.7, 0.0),
            ],
        };
        assert!(matches!(
            devectorize(&v),
            Err(Error::InvalidVectorization { .. })
        ));
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));

        // sigma_x ⊗ sigma_x flips |00> to |11>
        let xx = kron(&pauli_x(), &pauli_x());
        let mut ket00 = vec![Complex64::new(0.0, 0.0); 4];
        ket00[0] = Complex64::new(1.0, 0.0);
        let flipped = xx.apply_vec(&ket00);
        assert_eq!(flipped[3], Complex64::new(1.0, 0.0));
        assert_eq!(flipped[0], Complex64::new(0.0, 0.0));

        let d1 = ComplexMatrix::from_real_diag(&[2.0, 3.0]);
        let d2 = ComplexMatrix::from_real_diag(&[5.0, 7.0]);
        let expect = ComplexMatrix::from_real_diag(&[10.0, 14.0, 15.0, 21.0]);
        assert!(kron(&d1, &d2).max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn bloch_known_states_and_round_trip() {
        let plus = bloch_from_state(&DensityMatrix::plus_state()).unwrap();
        assert!((plus.x - 1.0).abs() < 1e-15 && plus.y.abs() < 1e-15 && plus.z.abs() < 1e-15);

        let mixed = bloch_from_state(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(mixed.norm() < 1e-15);

        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let raw = BlochVector {
                x: rng.next_f64() * 2.0 - 1.0,
                y: rng.next_f64() * 2.0 - 1.0,
                z: rng.next_f64() * 2.0 - 1.0,
            };
            let scale = rng.next_f64() / raw.norm().max(1.0);
            let r = BlochVector {
                x: raw.x * scale,
                y: raw.y * scale,
                z: raw.z * scale,
            };
            let back = bloch_from_state(&state_from_bloch(&r).unwrap()).unwrap();
            assert!((back.x - r.x).abs() < 1e-14);
            assert!((back.y - r.y).abs() < 1e-14);
            assert!((back.z - r.z).abs() < 1e-14);
        }
    }

    #[test]
    fn bloch_rejects_unphysical_norm() {
        let r = BlochVector {
            x: 1.2,
            y: 0.0,
            z: 0.0,
        };
        assert!(matches!(
            state_from_bloch(&r),
            Err(Error::UnphysicalBloch { .. })
        ));
    }

    #[test]
    fn density_matrix_rejects_bad_inputs() {
        let mut skew = ComplexMatrix::identity(2).scale(Complex64::new(0.5, 0.0));
        skew[(0, 1)] = Complex64::new(0.0, 0.3);
        assert!(matches!(
            DensityMatrix::new(skew),
            Err(Error::NonHermitian { .. })
        ));

        let overweight = ComplexMatrix::identity(2);
        assert!(matches!(
            DensityMatrix::new(overweight),
            Err(Error::TraceDeviation { .. })
        ));

        let indefinite = ComplexMatrix::from_real_diag(&[1.5, -0.5]);
        assert!(matches!(
            DensityMatrix::new(indefinite),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    proptest! {
        #[test]
        fn kron_mixed_product_property(seed in 0u64..1_000) {
            let mut rng = SplitMix64::new(seed);
            let a = random_hermitian(2, &mut rng);
            let b = random_hermitian(2, &mut rng);
            let c = random_hermitian(2, &mut rng);
            let d = random_hermitian(2, &mut rng);
            let lhs = kron(&a, &b).mul(&kron(&c, &d));
            let rhs = kron(&a.mul(&c), &b.mul(&d));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn kron_is_associative(seed in 0u64..1_000) {
            let mut rng = SplitMix64::new(seed.wrapping_add(77));
            let a = random_hermitian(2, &mut rng);
            let b = random_hermitian(2, &mut rng);
            let c = random_hermitian(2, &mut rng);
            let lhs = kron(&kron(&a, &b), &c);
            let rhs = kron(&a, &kron(&b, &c));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn eigenvalue_sum_matches_trace(seed in 0u64..200) {
            let mut rng = SplitMix64::new(seed.wrapping_mul(31).wrapping_add(5));
            let m = random_hermitian(4, &mut rng);
            let (vals, _) = hermitian_eig(&m).unwrap();
            let sum: f64 = vals.iter().sum();
            prop_assert!((sum - m.trace().re).abs() < 1e-10);
        }
    }
}
