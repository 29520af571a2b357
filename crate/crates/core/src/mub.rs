//! Complete sets of Galois mutually unbiased bases in prime-power dimensions.
//!
//! Basis 0 is the computational basis. For `mu = 1..=d` let `a` be the field
//! element with index `mu - 1`; column `i` of basis `mu` has amplitude at row `j`
//!
//! * odd `p`: `omega_p^{tr(a j^2 + i j)} / sqrt(d)` with `omega_p = exp(2 pi i / p)`;
//! * `p = 2`: `I^{Tr((T(a) + 2 T(i)) T(j))} / sqrt(d)` where `T` is the
//!   Teichmüller lift into the Galois ring GR(4, k) and `Tr` its Z_4-valued trace.
//!
//! Field elements are enumerated by their base-p digit index. Every set is
//! certified pairwise unbiased before it is returned.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmatrix::{dot, CMatrix};
use crate::error::{Error, Result};
use crate::gfield::{prime_power, FieldSpec};

/// Cross-overlap magnitudes must match `1/sqrt(d)` to this tolerance.
pub const UNBIASED_TOL: f64 = 1e-10;
/// Largest dimension accepted by [`galois_mubs`].
pub const MAX_MUB_DIM: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisLabel {
    pub index: usize,
    pub construction: String,
}

/// An orthonormal basis; column `i` is the `i`-th state.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    matrix: CMatrix,
    pub label: BasisLabel,
}

impl Basis {
    /// Wraps a matrix, rejecting it unless it is unitary.
    pub fn new(matrix: CMatrix, label: BasisLabel) -> Result<Self> {
        let deviation = matrix.unitarity_deviation();
        if !(deviation <= crate::cmatrix::UNITARY_TOL) {
            return Err(Error::NonUnitary { index: label.index, deviation });
        }
        Ok(Basis { matrix, label })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn state(&self, i: usize) -> &[Complex64] {
        self.matrix.column(i)
    }

    /// Same basis with each column multiplied by the given unit phase.
    pub fn with_column_phases(&self, phases: &[f64]) -> Basis {
        let mut m = self.matrix.clone();
        for (j, &t) in phases.iter().enumerate() {
            let ph = Complex64::from_polar(1.0, t);
            for z in m.column_mut(j) {
                *z *= ph;
            }
        }
        Basis { matrix: m, label: self.label.clone() }
    }
}

/// A certified set of pairwise mutually unbiased bases.
#[derive(Debug, Clone)]
pub struct MubSet {
    dim: usize,
    bases: Vec<Basis>,
    field: Option<FieldSpec>,
    max_deviation: f64,
}

impl MubSet {
    /// Certifies that every pair of `bases` is unbiased.
    pub fn certify(bases: Vec<Basis>, field: Option<FieldSpec>) -> Result<Self> {
        let dim = bases.first().map_or(0, Basis::dim);
        if let Some(b) = bases.iter().find(|b| b.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: b.dim() });
        }
        let mut max_deviation: f64 = 0.0;
        for (i, a) in bases.iter().enumerate() {
            for b in &bases[i + 1..] {
                max_deviation = max_deviation.max(check_unbiased(a, b)?);
            }
        }
        if !(max_deviation <= UNBIASED_TOL) {
            return Err(Error::UnbiasednessCheckFailed(max_deviation));
        }
        Ok(MubSet { dim, bases, field, max_deviation })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn field(&self) -> Option<&FieldSpec> {
        self.field.as_ref()
    }

    /// Largest `| |<a_i|b_k>| - 1/sqrt(d) |` over all distinct pairs.
    pub fn max_deviation(&self) -> f64 {
        self.max_deviation
    }

    pub fn into_bases(self) -> Vec<Basis> {
        self.bases
    }
}

/// `max_{i,k} | |<a_i|b_k>| - 1/sqrt(d) |`.
pub fn check_unbiased(a: &Basis, b: &Basis) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let target = 1.0 / (a.dim() as f64).sqrt();
    let mut dev: f64 = 0.0;
    for ai in a.matrix.columns() {
        for bk in b.matrix.columns() {
            dev = dev.max((dot(ai, bk).norm() - target).abs());
        }
    }
    Ok(dev)
}

/// The complete set of `d + 1` Galois MUBs in dimension `d`.
pub fn galois_mubs(d: usize) -> Result<MubSet> {
    let (p, _) = prime_power(d as u64).ok_or(Error::NotPrimePower(d as u64))?;
    if d > MAX_MUB_DIM {
        return Err(Error::InvalidArgument(format!("dimension {d} exceeds {MAX_MUB_DIM}")));
    }
    let field = FieldSpec::with_order(d as u64)?;
    let mut bases = Vec::with_capacity(d + 1);
    bases.push(Basis {
        matrix: CMatrix::identity(d),
        label: BasisLabel { index: 0, construction: "computational".into() },
    });
    let (exponents, modulus, construction) = if p == 2 {
        (GaloisRing4::new(&field).phase_table(), 4, "galois-ring-z4")
    } else {
        (odd_phase_table(&field), p as usize, "galois-odd")
    };
    let roots: Vec<Complex64> = (0..modulus)
        .map(|e| match (modulus, e) {
            (_, 0) => Complex64::new(1.0, 0.0),
            (4, 1) => Complex64::new(0.0, 1.0),
            (4, 2) => Complex64::new(-1.0, 0.0),
            (4, 3) => Complex64::new(0.0, -1.0),
            _ => Complex64::from_polar(1.0, 2.0 * PI * e as f64 / modulus as f64),
        })
        .collect();
    let norm = 1.0 / (d as f64).sqrt();
    for mu in 1..=d {
        let table = &exponents[(mu - 1) * d * d..mu * d * d];
        let mut matrix = CMatrix::from_fn(d, |row, col| roots[table[col * d + row] as usize] * norm);
        matrix.fix_column_phases();
        bases.push(Basis { matrix, label: BasisLabel { index: mu, construction: construction.into() } });
    }
    MubSet::certify(bases, Some(field))
}

/// Exponent table `e[a][col][row] = tr(a row^2 + col row) mod p`, flattened.
fn odd_phase_table(field: &FieldSpec) -> Vec<u32> {
    let d = field.order();
    let p = field.characteristic();
    let t = field.tables();
    // tr(x y) for all x, y; the trace is Z_p-linear.
    let tr_prod: Vec<u32> = (0..d * d).map(|i| t.trace(t.mul(i / d, i % d))).collect();
    let sq: Vec<usize> = (0..d).map(|j| t.mul(j, j)).collect();
    let mut out = vec![0u32; d * d * d];
    for a in 0..d {
        for col in 0..d {
            for row in 0..d {
                let e = tr_prod[a * d + sq[row]] + tr_prod[col * d + row];
                out[(a * d + col) * d + row] = e % p;
            }
        }
    }
    out
}

/// GR(4, k) = Z_4[x] / (f) with `f` the binary field modulus read over Z_4.
struct GaloisRing4 {
    k: usize,
    modulus: Vec<u8>,
    /// Teichmüller lift of each field element, by field index.
    teich: Vec<Vec<u8>>,
}

impl GaloisRing4 {
    fn new(field: &FieldSpec) -> Self {
        let k = field.degree() as usize;
        let modulus: Vec<u8> = field.modulus().iter().map(|&c| c as u8).collect();
        let mut ring = GaloisRing4 { k, modulus, teich: Vec::new() };
        let d = field.order();
        // Any lift v of u gives the same v^(2^k), which is the Teichmüller representative.
        ring.teich = (0..d)
            .map(|i| {
                let lift: Vec<u8> = field.elem(i).coeffs().iter().map(|&c| c as u8).collect();
                ring.pow(&lift, d)
            })
            .collect();
        ring
    }

    fn mul(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        let k = self.k;
        let mut prod = vec![0u8; 2 * k - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % 4;
            }
        }
        for top in (k..prod.len()).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            for (s, &m) in self.modulus.iter().enumerate() {
                let i = top - k + s;
                prod[i] = (prod[i] + 4 - (c * m) % 4) % 4;
            }
        }
        prod.truncate(k);
        prod
    }

    fn pow(&self, a: &[u8], e: usize) -> Vec<u8> {
        let mut acc = vec![0u8; self.k];
        acc[0] = 1;
        for _ in 0..e {
            acc = self.mul(&acc, a);
        }
        acc
    }

    /// Z_4-valued trace: trace of the multiplication-by-`z` map in the basis `1, x, .., x^(k-1)`.
    fn trace(&self, z: &[u8]) -> u8 {
        let mut t = 0u8;
        for i in 0..self.k {
            let mut e = vec![0u8; self.k];
            e[i] = 1;
            t = (t + self.mul(z, &e)[i]) % 4;
        }
        t
    }

    /// Exponent table `e[a][col][row] = Tr((T(a) + 2 T(col)) T(row)) mod 4`, flattened.
    fn phase_table(&self) -> Vec<u32> {
        let d = self.teich.len();
        let tr_prod: Vec<u32> = (0..d * d)
            .map(|i| self.trace(&self.mul(&self.teich[i / d], &self.teich[i % d])) as u32)
            .collect();
        let mut out = vec![0u32; d * d * d];
        for a in 0..d {
            for col in 0..d {
                for row in 0..d {
                    out[(a * d + col) * d + row] = (tr_prod[a * d + row] + 2 * tr_prod[col * d + row]) % 4;
                }
            }
        }
        out
    }
}

/// A double serialized with 17 significant digits.
struct Exact(f64);

impl Serialize for Exact {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = serde_json::value::RawValue::from_string(format_exact(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

/// `{:.16e}` formatting, i.e. 17 significant digits; round-trips every finite double.
pub fn format_exact(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct BasisFileOut<'a> {
    dim: usize,
    construction: &'a str,
    bases: Vec<Vec<Vec<[Exact; 2]>>>,
}

#[derive(Deserialize)]
struct BasisFileIn {
    dim: usize,
    #[serde(default)]
    construction: String,
    bases: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Writes bases as JSON, columns as states.
pub fn save_bases(bases: &[Basis], construction: &str, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, bases_to_json(bases, construction)?)?;
    Ok(())
}

pub fn bases_to_json(bases: &[Basis], construction: &str) -> Result<String> {
    let dim = bases.first().map_or(0, Basis::dim);
    let file = BasisFileOut {
        dim,
        construction,
        bases: bases
            .iter()
            .map(|b| {
                b.matrix
                    .columns()
                    .map(|col| col.iter().map(|z| [Exact(z.re), Exact(z.im)]).collect())
                    .collect()
            })
            .collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

/// Reads a basis file. Each basis must be unitary; unbiasedness is not checked
/// here (use [`MubSet::certify`]).
pub fn load_bases(path: impl AsRef<Path>) -> Result<Vec<Basis>> {
    bases_from_json(&fs::read_to_string(path)?)
}

pub fn bases_from_json(text: &str) -> Result<Vec<Basis>> {
    let file: BasisFileIn = serde_json::from_str(text)?;
    let d = file.dim;
    let construction = if file.construction.is_empty() { "file".to_string() } else { file.construction };
    file.bases
        .into_iter()
        .enumerate()
        .map(|(index, cols)| {
            if cols.len() != d || cols.iter().any(|c| c.len() != d) {
                return Err(Error::Parse(format!("basis {index} is not {d}x{d}")));
            }
            let m = CMatrix::from_fn(d, |r, c| Complex64::new(cols[c][r][0], cols[c][r][1]));
            Basis::new(m, BasisLabel { index, construction: construction.clone() })
        })
        .collect()
}
