//! Small dense complex linear algebra: inner products, a Jacobi Hermitian
//! eigensolver and column-ordered Gram–Schmidt.
//!
//! Matrices are square and stored column-major; column `j` is read as the
//! `j`-th state of a basis.

use std::cmp::Ordering;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the `normalized` flag of a state vector.
pub const NORMALIZED_TOL: f64 = 1e-12;
/// Tolerance for the unitary flag, max-entry norm of `M^† M - I`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for the Hermitian flag, max-entry norm of `M - M^†`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Components below this magnitude are skipped when fixing a global phase.
pub const PHASE_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVector(pub Vec<Complex64>);

impl CVector {
    pub fn zeros(d: usize) -> Self {
        CVector(vec![Complex64::new(0.0, 0.0); d])
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = Self::zeros(d);
        v.0[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORMALIZED_TOL
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// `sum_k conj(u_k) v_k` on raw slices of equal length.
#[inline]
pub fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        acc += a.conj() * b;
    }
    acc
}

/// `<u|v>`, conjugate-linear in `u`.
pub fn inner(u: &CVector, v: &CVector) -> Result<Complex64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    Ok(dot(&u.0, &v.0))
}

/// Rotates `v` by a global phase so that its first component of magnitude
/// above [`PHASE_TOL`] is real and positive.
pub fn fix_phase(v: &mut [Complex64]) {
    if let Some(z) = v.iter().find(|z| z.norm() > PHASE_TOL) {
        let rot = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= rot;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (row, col): (usize, usize)) -> &Complex64 {
        &self.data[col * self.dim + row]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut Complex64 {
        &mut self.data[col * self.dim + row]
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from `f(row, col)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for col in 0..dim {
            for row in 0..dim {
                data.push(f(row, col));
            }
        }
        CMatrix { dim, data }
    }

    pub fn from_columns(columns: &[CVector]) -> Result<Self> {
        let dim = columns.len();
        let mut data = Vec::with_capacity(dim * dim);
        for c in columns {
            if c.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.len() });
            }
            data.extend_from_slice(&c.0);
        }
        Ok(CMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn column_vector(&self, j: usize) -> CVector {
        CVector(self.column(j).to_vec())
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    /// `A^† B`, i.e. the table of overlaps `<a_i|b_j>` between columns.
    pub fn adjoint_mul(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(CMatrix::from_fn(self.dim, |i, j| dot(self.column(i), other.column(j))))
    }

    pub fn mul(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_dim(other)?;
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for j in 0..d {
            for k in 0..d {
                let b = other[(k, j)];
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..d {
                    out.data[j * d + i] += self[(i, k)] * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add_scaled_identity(&self, delta: f64) -> CMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)] += delta;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max_ij |(M^† M - I)_ij|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let mut z = dot(self.column(i), self.column(j));
                if i == j {
                    z -= 1.0;
                }
                dev = dev.max(z.norm());
            }
        }
        dev
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= UNITARY_TOL
    }

    /// `max_ij |(M - M^†)_ij|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL
    }

    /// Multiplies every column by a unit phase so its first significant
    /// component is real and positive.
    pub fn fix_column_phases(&mut self) {
        for j in 0..self.dim {
            fix_phase(self.column_mut(j));
        }
    }

    fn check_dim(&self, other: &CMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal, aligned with `values`, phase-fixed.
    pub vectors: Vec<CVector>,
}

impl Eigensystem {
    /// `max_i ||H v_i - lambda_i v_i||`.
    pub fn max_residual(&self, h: &CMatrix) -> f64 {
        let d = h.dim();
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&lambda, v)| {
                (0..d)
                    .map(|r| {
                        let hv: Complex64 = (0..d).map(|c| h[(r, c)] * v[c]).sum();
                        (hv - lambda * v[r]).norm_sqr()
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `sum_i lambda_i v_i v_i^†`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.vectors.first().map_or(0, CVector::len);
        let mut m = CMatrix::zeros(d);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            for c in 0..d {
                for r in 0..d {
                    m[(r, c)] += *lambda * v[r] * v[c].conj();
                }
            }
        }
        m
    }
}

fn lex_cmp(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.0.iter().zip(&b.0) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Cyclic complex Jacobi on a column-major `n x n` Hermitian buffer.
///
/// On return the diagonal of `a` holds the eigenvalues (unsorted) and, when
/// given, `v` (initially the identity) holds the matching eigenvectors as columns.
pub fn jacobi_in_place(a: &mut [Complex64], n: usize, mut v: Option<&mut [Complex64]>) -> Result<()> {
    let at = |r: usize, c: usize| c * n + r;
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // Off-diagonal entries at or below this are treated as zero.
    let negligible = f64::EPSILON * scale;
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[at(p, q)];
                let r = apq.norm();
                if r <= negligible {
                    continue;
                }
                rotated = true;
                let app = a[at(p, p)].re;
                let aqq = a[at(q, q)].re;
                // Phase e^{-i alpha} on column q makes the pivot real, then a real rotation.
                let phase = apq.conj() / r;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = [[c, s], [-s*phase, c*phase]] acting on columns (p, q).
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -s * phase;
                let jqq = c * phase;
                // A <- A J
                for k in 0..n {
                    let akp = a[at(k, p)];
                    let akq = a[at(k, q)];
                    a[at(k, p)] = akp * jpp + akq * jqp;
                    a[at(k, q)] = akp * jpq + akq * jqq;
                }
                // A <- J^† A
                for k in 0..n {
                    let apk = a[at(p, k)];
                    let aqk = a[at(q, k)];
                    a[at(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[at(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[at(p, q)] = Complex64::new(0.0, 0.0);
                a[at(q, p)] = Complex64::new(0.0, 0.0);
                a[at(p, p)].im = 0.0;
                a[at(q, q)].im = 0.0;
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[at(k, p)];
                        let vkq = v[at(k, q)];
                        v[at(k, p)] = vkp * jpp + vkq * jqp;
                        v[at(k, q)] = vkp * jpq + vkq * jqq;
                    }
                }
            }
        }
        if !rotated {
            return Ok(());
        }
        sweeps += 1;
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence(sweeps));
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Eigenvalues are returned in descending order. Each eigenvector has its
/// first significant component real-positive, and eigenvalues equal to within
/// `1e-12 * ||H||_F` are ordered by the lexicographic order of their vectors.
pub fn eigh(h: &CMatrix) -> Result<Eigensystem> {
    let dev = h.hermiticity_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let d = h.dim();
    // Symmetrize so the working copy is exactly Hermitian.
    let mut a = CMatrix::from_fn(d, |r, c| 0.5 * (h[(r, c)] + h[(c, r)].conj()));
    let mut v = CMatrix::identity(d);
    let scale = a.frobenius_norm();
    jacobi_in_place(&mut a.data, d, Some(&mut v.data))?;

    let mut pairs: Vec<(f64, CVector)> = (0..d)
        .map(|j| {
            let mut col = v.column_vector(j);
            fix_phase(&mut col.0);
            (a[(j, j)].re, col)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    // Order near-degenerate groups by their vectors.
    let tie = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end - 1].0 - pairs[end].0 <= tie {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| lex_cmp(&x.1, &y.1));
        start = end;
    }
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(Eigensystem { values, vectors })
}

/// Largest eigenvalue and its eigenvector.
pub fn top_eigenpair(h: &CMatrix) -> Result<(f64, CVector)> {
    let es = eigh(h)?;
    let v = es.vectors.into_iter().next().unwrap_or_else(|| CVector::zeros(0));
    Ok((es.values.first().copied().unwrap_or(0.0), v))
}

/// Classical Gram–Schmidt in column order with one re-orthogonalization pass.
///
/// Column `j` of the result lies in the span of input columns `0..=j`, and each
/// output column has its first significant component real and positive.
pub fn gram_schmidt(m: &CMatrix) -> Result<CMatrix> {
    let d = m.dim();
    let mut q = CMatrix::zeros(d);
    for j in 0..d {
        let input_norm = m.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut w = m.column(j).to_vec();
        for _pass in 0..2 {
            let coeffs: Vec<Complex64> = (0..j).map(|i| dot(q.column(i), &w)).collect();
            for (i, c) in coeffs.into_iter().enumerate() {
                for (wk, qk) in w.iter_mut().zip(q.column(i)) {
                    *wk -= c * qk;
                }
            }
        }
        let pivot = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(pivot >= 1e-12 * input_norm) || pivot == 0.0 {
            return Err(Error::RankDeficient { column: j, pivot });
        }
        for wk in w.iter_mut() {
            *wk /= pivot;
        }
        fix_phase(&mut w);
        q.column_mut(j).copy_from_slice(&w);
    }
    Ok(q)
}
