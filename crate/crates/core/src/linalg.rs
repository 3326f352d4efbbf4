//! Small dense complex linear algebra.
//!
//! Everything in this crate lives at desk scale (dimension at most 64, or a
//! few hundred lattice sites), so a flat row-major `Vec<Complex64>` is all
//! the structure we need.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Components below this modulus are treated as zero when fixing phases.
pub const GAUGE_THRESHOLD: f64 = 1e-12;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row vectors. Returns `None` for ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(CMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Option<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return None;
        }
        Some(Self::from_fn(rows, columns.len(), |r, c| columns[c][r]))
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Dimension of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> CMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, k: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// Matrix product. Panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product. Panics on dimension mismatch.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "apply dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product, row-major flattening: ((i,k),(j,l)) -> (i*n2+k, j*m2+l).
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(M†M - I)_ij|`; infinite for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint().matmul(self).max_abs_diff(&CMatrix::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// `max |M_ij - conj(M_ji)|`; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// `u† v`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    norm_sqr(v).sqrt()
}

/// Kronecker product of two vectors, component `j*n2 + k` is `a_j b_k`.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Outer product `u v†`.
pub fn outer(u: &[Complex64], v: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
}

/// Multiplies `v` by a global phase so that its first non-negligible
/// component is real and non-negative.
pub fn canonical_phase(v: &mut [Complex64]) {
    if let Some(lead) = v.iter().copied().find(|z| z.norm() > GAUGE_THRESHOLD) {
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Lexicographic comparison on (re, im) pairs.
pub fn lexicographic(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Unit eigenvectors in canonical gauge, matching `values` by index.
    pub vectors: Vec<Vec<Complex64>>,
}

/// Eigenvalues closer than this (relative to the spectral scale) count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// Diagonalizes a Hermitian matrix with cyclic complex Jacobi rotations.
///
/// Eigenpairs come back in descending eigenvalue order; ties are broken by
/// lexicographic comparison of the canonically-phased eigenvectors, larger
/// first. Only the Hermitian part of `m` is used.
pub fn eigh(m: &CMatrix) -> HermitianEigen {
    assert!(m.is_square(), "eigh needs a square matrix");
    let n = m.dim();
    let mut a = CMatrix::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
    let mut v = CMatrix::identity(n);

    let scale: f64 = a.as_slice().iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    let eps = f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= eps {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let gabs = g.norm();
                if gabs <= eps * 1e-3 {
                    continue;
                }
                // Phase-rotate column q so the pivot becomes real, then apply
                // an ordinary real Jacobi rotation.
                let phase = g.conj() / gabs;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * gabs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // R = D G with D = diag(.., phase at q, ..).
                let r_pp = Complex64::new(c, 0.0);
                let r_pq = Complex64::new(s, 0.0);
                let r_qp = phase * -s;
                let r_qq = phase * c;
                rotate_columns(&mut a, p, q, r_pp, r_pq, r_qp, r_qq);
                rotate_rows_adjoint(&mut a, p, q, r_pp, r_pq, r_qp, r_qq);
                rotate_columns(&mut v, p, q, r_pp, r_pq, r_qp, r_qq);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|i| {
            let mut col = v.column(i);
            canonical_phase(&mut col);
            (a[(i, i)].re, col)
        })
        .collect();
    let spread = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    pairs.sort_by(|x, y| {
        if (x.0 - y.0).abs() <= TIE_TOLERANCE * spread {
            lexicographic(&y.1, &x.1)
        } else {
            y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal)
        }
    });
    let (values, vectors) = pairs.into_iter().unzip();
    HermitianEigen { values, vectors }
}

// A <- A R on columns p, q.
#[allow(clippy::too_many_arguments)]
fn rotate_columns(
    a: &mut CMatrix,
    p: usize,
    q: usize,
    r_pp: Complex64,
    r_pq: Complex64,
    r_qp: Complex64,
    r_qq: Complex64,
) {
    for k in 0..a.rows() {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * r_pp + akq * r_qp;
        a[(k, q)] = akp * r_pq + akq * r_qq;
    }
}

// A <- R† A on rows p, q.
#[allow(clippy::too_many_arguments)]
fn rotate_rows_adjoint(
    a: &mut CMatrix,
    p: usize,
    q: usize,
    r_pp: Complex64,
    r_pq: Complex64,
    r_qp: Complex64,
    r_qq: Complex64,
) {
    for k in 0..a.cols() {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = r_pp.conj() * apk + r_qp.conj() * aqk;
        a[(q, k)] = r_pq.conj() * apk + r_qq.conj() * aqk;
    }
}
