//! Maximum success probabilities of n-dit quantum random access codes.
//!
//! For fixed measurement bases the best encoding of a word `x` is the top
//! eigenvector of `P(x) = sum_i p_i |xi^(i)_{x_i}><xi^(i)_{x_i}|`, and the
//! code's success probability is the top eigenvalue averaged uniformly over all
//! `d^n` words. [`analytic`] holds the closed form for three unbiased bases and
//! [`stationary`] checks the critical-point structure behind it.

pub mod analytic;
pub mod classical;
pub mod stationary;

use num_complex::Complex64;
use serde::Serialize;

use crate::cmatrix::{dot, eigh, jacobi_in_place, CMatrix, CVector, Eigensystem};
use crate::error::{Error, Result};
use crate::mub::Basis;
use crate::par::{chunked_sum, Execution};

pub use analytic::{p3_analytic, p_bar_analytic, phi_of, wrap_angle, PhiRecord};
pub use classical::{classical_baseline, ClassicalMode};
pub use stationary::{q_value, verify_stationary_structure, QContext, StationaryReport};

/// Upper bound on the number of words `d^n` enumerated by [`p_general`].
pub const WORD_BUDGET: u64 = 100_000_000;
/// Words per reduction chunk; fixed so sums do not depend on the thread count.
const WORD_CHUNK: usize = 4096;

/// Alice's n-dit string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct InputWord {
    d: usize,
    digits: Vec<usize>,
}

impl InputWord {
    pub fn new(d: usize, digits: Vec<usize>) -> Result<Self> {
        if let Some(&x) = digits.iter().find(|&&x| x >= d) {
            return Err(Error::InvalidArgument(format!("digit {x} outside Z_{d}")));
        }
        Ok(InputWord { d, digits })
    }

    /// The `index`-th word in odometer order (last digit fastest).
    pub fn from_index(d: usize, n: usize, mut index: usize) -> Self {
        let mut digits = vec![0; n];
        for slot in digits.iter_mut().rev() {
            *slot = index % d;
            index /= d;
        }
        InputWord { d, digits }
    }

    pub fn n(&self) -> usize {
        self.digits.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }
}

/// Bob's question distribution `p_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestWeights(Vec<f64>);

impl RequestWeights {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::WeightError("no weights".into()));
        }
        if let Some(&w) = p.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::WeightError(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::WeightError(format!("weights sum to {total}")));
        }
        Ok(RequestWeights(p))
    }

    pub fn uniform(n: usize) -> Self {
        RequestWeights(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// The Hermitian score operator of one word, with its certified spectrum.
#[derive(Debug, Clone)]
pub struct PhatOperator {
    matrix: CMatrix,
    word: InputWord,
    weights: RequestWeights,
    spectrum: Eigensystem,
}

impl PhatOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn word(&self) -> &InputWord {
        &self.word
    }

    pub fn weights(&self) -> &RequestWeights {
        &self.weights
    }

    pub fn spectrum(&self) -> &Eigensystem {
        &self.spectrum
    }
}

fn check_setup(bases: &[&Basis], n: usize, weights: &RequestWeights) -> Result<usize> {
    if bases.is_empty() {
        return Err(Error::InvalidArgument("at least one basis is required".into()));
    }
    if bases.len() != n {
        return Err(Error::DimensionMismatch { expected: bases.len(), found: n });
    }
    if weights.len() != n {
        return Err(Error::WeightError(format!("{} weights for {n} bases", weights.len())));
    }
    let d = bases[0].dim();
    if let Some(b) = bases.iter().find(|b| b.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
    }
    Ok(d)
}

/// Builds `sum_i p_i |xi^(i)_{x_i}><xi^(i)_{x_i}|` and certifies trace,
/// positivity and rank.
pub fn phat(bases: &[&Basis], word: &InputWord, weights: &RequestWeights) -> Result<PhatOperator> {
    let d = check_setup(bases, word.n(), weights)?;
    if word.d() != d {
        return Err(Error::DimensionMismatch { expected: d, found: word.d() });
    }
    let mut matrix = CMatrix::zeros(d);
    for ((basis, &x), &p) in bases.iter().zip(word.digits()).zip(weights.as_slice()) {
        let v = basis.state(x);
        for c in 0..d {
            let vc = v[c].conj() * p;
            for r in 0..d {
                matrix[(r, c)] += v[r] * vc;
            }
        }
    }
    let spectrum = eigh(&matrix)?;
    let total: f64 = weights.as_slice().iter().sum();
    debug_assert!((matrix.trace().re - total).abs() <= 1e-12);
    debug_assert!(spectrum.values.last().is_none_or(|&l| l >= -1e-10));
    debug_assert!(spectrum.values.iter().skip(word.n()).all(|l| l.abs() <= 1e-10));
    Ok(PhatOperator { matrix, word: word.clone(), weights: weights.clone(), spectrum })
}

/// Largest eigenvalue of the operator and Alice's matching optimal state.
pub fn word_optimum(op: &PhatOperator) -> (f64, CVector) {
    (op.spectrum.values[0], op.spectrum.vectors[0].clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Eigensolver,
}

#[derive(Debug, Clone, Serialize)]
pub struct WordOptimum {
    pub word: InputWord,
    pub lambda: f64,
    pub state: CVector,
}

#[derive(Debug, Clone, Serialize)]
pub struct QracValue {
    pub value: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_word: Option<Vec<WordOptimum>>,
}

/// Pairwise overlap tables `<xi^(i)_a | xi^(j)_b>` for `i < j`.
///
/// For `n <= d` the nonzero spectrum of `P(x)` equals that of the `n x n`
/// weighted Gram matrix `W_ij = sqrt(p_i p_j) <xi^(i)_{x_i}|xi^(j)_{x_j}>`, which is
/// what the word loop diagonalizes.
pub(crate) struct GramTables {
    n: usize,
    d: usize,
    sqrt_p: Vec<f64>,
    tables: Vec<Vec<Complex64>>,
}

impl GramTables {
    pub(crate) fn new(bases: &[&Basis], weights: &RequestWeights) -> Self {
        let n = bases.len();
        let d = bases[0].dim();
        let mut tables = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let mut t = Vec::with_capacity(d * d);
                for a in 0..d {
                    let u = bases[i].state(a);
                    for b in 0..d {
                        t.push(dot(u, bases[j].state(b)));
                    }
                }
                tables.push(t);
            }
        }
        let sqrt_p = weights.as_slice().iter().map(|p| p.sqrt()).collect();
        GramTables { n, d, sqrt_p, tables }
    }

    fn pair(&self, i: usize, j: usize) -> &[Complex64] {
        // row-major index of (i, j), i < j, in the upper triangle
        let k = i * (2 * self.n - i - 1) / 2 + (j - i - 1);
        &self.tables[k]
    }

    /// Fills `buf` (column-major `n x n`) with the weighted Gram matrix of `digits`.
    fn fill(&self, digits: &[usize], buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            buf[i * n + i] = Complex64::new(self.sqrt_p[i] * self.sqrt_p[i], 0.0);
            for j in i + 1..n {
                let w = self.pair(i, j)[digits[i] * self.d + digits[j]] * (self.sqrt_p[i] * self.sqrt_p[j]);
                buf[j * n + i] = w;
                buf[i * n + j] = w.conj();
            }
        }
    }

    pub(crate) fn top_eigenvalue(&self, digits: &[usize]) -> Result<f64> {
        let n = self.n;
        let mut small = [Complex64::new(0.0, 0.0); 16];
        let mut heap;
        let buf: &mut [Complex64] = if n * n <= small.len() {
            &mut small[..n * n]
        } else {
            heap = vec![Complex64::new(0.0, 0.0); n * n];
            &mut heap
        };
        self.fill(digits, buf);
        jacobi_in_place(buf, n, None)?;
        Ok((0..n).map(|i| buf[i * n + i].re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Top eigenpair, with the eigenvector mapped back to the d-dimensional space.
    fn top_eigenpair(&self, bases: &[&Basis], digits: &[usize]) -> Result<(f64, CVector)> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        self.fill(digits, &mut buf);
        let w = CMatrix::from_fn(n, |r, c| buf[c * n + r]);
        let es = eigh(&w)?;
        let lambda = es.values[0];
        let coeffs = &es.vectors[0];
        let mut state = CVector::zeros(self.d);
        for (i, basis) in bases.iter().enumerate() {
            let scale = coeffs[i] * self.sqrt_p[i];
            for (s, v) in state.0.iter_mut().zip(basis.state(digits[i])) {
                *s += scale * v;
            }
        }
        let norm = state.norm();
        for s in state.0.iter_mut() {
            *s /= norm;
        }
        crate::cmatrix::fix_phase(&mut state.0);
        Ok((lambda, state))
    }
}

fn word_count(d: usize, n: usize) -> Result<usize> {
    (d as u64)
        .checked_pow(n as u32)
        .filter(|&w| w <= WORD_BUDGET)
        .map(|w| w as usize)
        .ok_or(Error::BudgetExceeded { d, n })
}

/// Success probability for fixed bases, averaging the per-word optimum over
/// all `d^n` words.
pub fn p_general(bases: &[&Basis], weights: &RequestWeights) -> Result<QracValue> {
    p_general_with(bases, weights, Execution::default())
}

pub fn p_general_with(bases: &[&Basis], weights: &RequestWeights, exec: Execution) -> Result<QracValue> {
    let value = mean_top_eigenvalue(bases, weights, exec)?;
    Ok(QracValue { value, method: Method::Eigensolver, per_word: None })
}

/// Like [`p_general`], additionally keeping every word's optimum.
pub fn p_general_detailed(bases: &[&Basis], weights: &RequestWeights) -> Result<QracValue> {
    let n = weights.len();
    let d = check_setup(bases, n, weights)?;
    let words = word_count(d, n)?;
    let per_word: Vec<WordOptimum> = if n <= d {
        let tables = GramTables::new(bases, weights);
        Execution::default().try_map(words, |w| {
            let word = InputWord::from_index(d, n, w);
            let (lambda, state) = tables.top_eigenpair(bases, word.digits())?;
            Ok::<_, Error>(WordOptimum { word, lambda, state })
        })?
    } else {
        Execution::default().try_map(words, |w| {
            let word = InputWord::from_index(d, n, w);
            let op = phat(bases, &word, weights)?;
            let (lambda, state) = word_optimum(&op);
            Ok::<_, Error>(WordOptimum { word, lambda, state })
        })?
    };
    let value = chunk_mean(&per_word.iter().map(|w| w.lambda).collect::<Vec<_>>());
    Ok(QracValue { value, method: Method::Eigensolver, per_word: Some(per_word) })
}

fn chunk_mean(values: &[f64]) -> f64 {
    let sum: f64 = values.chunks(WORD_CHUNK).map(|c| c.iter().sum::<f64>()).sum();
    sum / values.len() as f64
}

pub(crate) fn mean_top_eigenvalue(bases: &[&Basis], weights: &RequestWeights, exec: Execution) -> Result<f64> {
    let n = weights.len();
    let d = check_setup(bases, n, weights)?;
    let words = word_count(d, n)?;
    let failure = std::sync::Mutex::new(None);
    let record = |e: Error| {
        failure.lock().unwrap().get_or_insert(e);
        0.0
    };
    let sum = if n <= d {
        let tables = GramTables::new(bases, weights);
        chunked_sum(exec, words, WORD_CHUNK, |w| {
            let word = InputWord::from_index(d, n, w);
            tables.top_eigenvalue(word.digits()).unwrap_or_else(record)
        })
    } else {
        chunked_sum(exec, words, WORD_CHUNK, |w| {
            let word = InputWord::from_index(d, n, w);
            phat(bases, &word, weights).map(|op| op.spectrum.values[0]).unwrap_or_else(record)
        })
    };
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(sum / words as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mub::galois_mubs;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn odometer_order() {
        let w = InputWord::from_index(5, 3, 1);
        assert_eq!(w.digits(), &[0, 0, 1]);
        let w = InputWord::from_index(5, 3, 5 * 5 * 2 + 5 * 3 + 4);
        assert_eq!(w.digits(), &[2, 3, 4]);
        assert!(InputWord::new(3, vec![0, 3]).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(RequestWeights::new(vec![0.5, 0.5]).is_ok());
        assert!(matches!(RequestWeights::new(vec![0.6, 0.6]), Err(Error::WeightError(_))));
        assert!(matches!(RequestWeights::new(vec![1.5, -0.5]), Err(Error::WeightError(_))));
    }

    #[test]
    fn single_basis_is_a_projector() {
        let set = galois_mubs(3).unwrap();
        let b = &set.bases()[2];
        let op = phat(&[b], &InputWord::new(3, vec![1]).unwrap(), &RequestWeights::uniform(1)).unwrap();
        let (lambda, state) = word_optimum(&op);
        assert!((lambda - 1.0).abs() < 1e-14);
        assert!((dot(&state.0, b.state(1)).norm() - 1.0).abs() < 1e-14);
        let v = p_general(&[b], &RequestWeights::uniform(1)).unwrap();
        assert!((v.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qubit_pair_closed_form() {
        let set = galois_mubs(2).unwrap();
        let pair = [&set.bases()[0], &set.bases()[1]];
        let expected = (1.0 + FRAC_1_SQRT_2) / 2.0;
        let weights = RequestWeights::uniform(2);
        for w in 0..4 {
            let op = phat(&pair, &InputWord::from_index(2, 2, w), &weights).unwrap();
            assert!((word_optimum(&op).0 - expected).abs() < 1e-14);
            assert!((op.matrix().trace().re - 1.0).abs() < 1e-14);
        }
        assert!((p_general(&pair, &weights).unwrap().value - expected).abs() < 1e-14);
    }

    #[test]
    fn mub_pair_value_d5() {
        let set = galois_mubs(5).unwrap();
        let pair = [&set.bases()[1], &set.bases()[4]];
        let v = p_general(&pair, &RequestWeights::uniform(2)).unwrap().value;
        assert!((v - 0.5 * (1.0 + 1.0 / 5f64.sqrt())).abs() < 1e-12);
        assert!((v - 0.723_606_797_749_979).abs() < 1e-12);
    }

    #[test]
    fn qubit_triplet() {
        let set = galois_mubs(2).unwrap();
        let all: Vec<&Basis> = set.bases().iter().collect();
        let v = p_general(&all, &RequestWeights::uniform(3)).unwrap().value;
        let expected = (1.0 + 2f64.sqrt() * (PI / 12.0).cos()) / 3.0;
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.788_675).abs() < 1e-6);
    }

    #[test]
    fn gram_path_matches_full_operator() {
        let set = galois_mubs(4).unwrap();
        let trip: Vec<&Basis> = [0, 2, 3].iter().map(|&i| &set.bases()[i]).collect();
        let weights = RequestWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let tables = GramTables::new(&trip, &weights);
        for w in 0..64 {
            let word = InputWord::from_index(4, 3, w);
            let full = phat(&trip, &word, &weights).unwrap();
            let fast = tables.top_eigenvalue(word.digits()).unwrap();
            assert!((word_optimum(&full).0 - fast).abs() < 1e-13);
        }
        let detailed = p_general_detailed(&trip, &weights).unwrap();
        let plain = p_general(&trip, &weights).unwrap();
        assert!((detailed.value - plain.value).abs() < 1e-14);
        for wo in detailed.per_word.as_ref().unwrap() {
            let op = phat(&trip, &wo.word, &weights).unwrap();
            assert!(wo.state.is_normalized());
            let residual = op.spectrum().max_residual(op.matrix());
            assert!(residual < 1e-12);
            // the returned state is an eigenvector for lambda
            let m = op.matrix();
            let err: f64 = (0..4)
                .map(|r| {
                    let hv: Complex64 = (0..4).map(|c| m[(r, c)] * wo.state[c]).sum();
                    (hv - wo.lambda * wo.state[r]).norm_sqr()
                })
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn more_bases_than_dimension_uses_full_operator() {
        let set = galois_mubs(2).unwrap();
        let bases: Vec<&Basis> = set.bases().iter().chain(set.bases().iter().take(1)).collect();
        let v = p_general(&bases, &RequestWeights::uniform(4)).unwrap();
        assert!(v.value > 0.5 && v.value <= 1.0);
    }

    #[test]
    fn budget_and_shape_errors() {
        let set = galois_mubs(11).unwrap();
        let many: Vec<&Basis> = set.bases().iter().take(8).collect();
        assert!(matches!(
            p_general(&many, &RequestWeights::uniform(8)),
            Err(Error::BudgetExceeded { d: 11, n: 8 })
        ));
        let pair = [&set.bases()[0], &set.bases()[1]];
        assert!(matches!(p_general(&pair, &RequestWeights::uniform(3)), Err(Error::DimensionMismatch { .. })));
        let small = galois_mubs(2).unwrap();
        let mixed = [&set.bases()[0], &small.bases()[0]];
        assert!(matches!(p_general(&mixed, &RequestWeights::uniform(2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let set = galois_mubs(7).unwrap();
        let trip: Vec<&Basis> = set.bases().iter().take(3).collect();
        let w = RequestWeights::uniform(3);
        let a = p_general_with(&trip, &w, Execution::Sequential).unwrap().value;
        let b = p_general_with(&trip, &w, Execution::Parallel).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
