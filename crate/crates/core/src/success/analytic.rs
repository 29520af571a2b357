//! Closed-form success probability for three mutually unbiased bases.
//!
//! For unbiased `c, e, f` every overlap is `e^{i phi}/sqrt(d)`, and the spectrum of
//! the score operator depends on the word only through the wrapped phase sum `Phi`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{InputWord, Method, QracValue};
use crate::cmatrix::{dot, fix_phase, CVector};
use crate::error::{Error, Result};
use crate::mub::Basis;
use crate::par::{chunked_sum, Execution};

/// Allowed deviation of an overlap magnitude from `1/sqrt(d)`.
pub const OVERLAP_TOL: f64 = 1e-8;
const TAU: f64 = 2.0 * PI;

/// Principal argument in `(-pi, pi]`.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Shifts `phi` by a multiple of `2 pi` into `[-pi, pi)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let mut t = phi;
    while t >= PI {
        t -= TAU;
    }
    while t < -PI {
        t += TAU;
    }
    t
}

/// The three overlap phases of a word and their wrapped combination.
#[derive(Debug, Clone, Serialize)]
pub struct PhiRecord {
    pub word: InputWord,
    pub phi01: f64,
    pub phi02: f64,
    pub phi12: f64,
    pub varphi: f64,
    #[serde(rename = "Phi")]
    pub big_phi: f64,
}

fn check_triplet(triplet: &[&Basis; 3]) -> Result<usize> {
    let d = triplet[0].dim();
    if let Some(b) = triplet.iter().find(|b| b.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
    }
    Ok(d)
}

fn overlap_phase(u: &[Complex64], v: &[Complex64], d: usize) -> Result<f64> {
    let z = dot(u, v);
    let dev = (z.norm() - 1.0 / (d as f64).sqrt()).abs();
    if dev > OVERLAP_TOL {
        return Err(Error::NotUnbiased(dev));
    }
    Ok(principal_arg(z))
}

pub fn phi_of(triplet: &[&Basis; 3], word: &InputWord) -> Result<PhiRecord> {
    let d = check_triplet(triplet)?;
    if word.n() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: word.n() });
    }
    if word.d() != d {
        return Err(Error::DimensionMismatch { expected: d, found: word.d() });
    }
    let [x0, x1, x2] = [word.digits()[0], word.digits()[1], word.digits()[2]];
    let (c, e, f) = (triplet[0].state(x0), triplet[1].state(x1), triplet[2].state(x2));
    let phi01 = overlap_phase(c, e, d)?;
    let phi02 = overlap_phase(c, f, d)?;
    let phi12 = overlap_phase(e, f, d)?;
    let varphi = phi01 - phi02 + phi12;
    Ok(PhiRecord { word: word.clone(), phi01, phi02, phi12, varphi, big_phi: wrap_angle(varphi) })
}

/// The three nonzero eigenvalues `(1/3)(1 + (2/sqrt d) cos(Phi/3 + 2 pi k/3))`
/// for `k = 0, 1, -1`, in that order.
pub fn analytic_eigenvalues(big_phi: f64, d: usize) -> [f64; 3] {
    let s = 2.0 / (d as f64).sqrt();
    [0.0, TAU / 3.0, -TAU / 3.0].map(|shift| (1.0 + s * (big_phi / 3.0 + shift).cos()) / 3.0)
}

/// Optimal value and encoding state of one word, from its phase record.
pub fn p_bar_analytic(triplet: &[&Basis; 3], word: &InputWord) -> Result<(f64, CVector)> {
    let rec = phi_of(triplet, word)?;
    let d = triplet[0].dim();
    let third = rec.big_phi / 3.0;
    let value = analytic_eigenvalues(rec.big_phi, d)[0];
    let norm = (3.0 + 6.0 / (d as f64).sqrt() * third.cos()).sqrt();
    let ge = Complex64::from_polar(1.0, third - rec.phi01);
    let gf = Complex64::from_polar(1.0, -third - rec.phi02);
    let digits = word.digits();
    let (c, e, f) = (triplet[0].state(digits[0]), triplet[1].state(digits[1]), triplet[2].state(digits[2]));
    let mut state: Vec<Complex64> = (0..d).map(|r| (c[r] + ge * e[r] + gf * f[r]) / norm).collect();
    fix_phase(&mut state);
    Ok((value, CVector(state)))
}

/// Phase tables `arg<a_i|b_j>` for one ordered pair of bases, row-major in `i`.
fn phase_table(a: &Basis, b: &Basis) -> Result<Vec<f64>> {
    let d = a.dim();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(overlap_phase(a.state(i), b.state(j), d)?);
        }
    }
    Ok(out)
}

pub fn p3_analytic(triplet: &[&Basis; 3]) -> Result<QracValue> {
    p3_analytic_with(triplet, Execution::default())
}

/// Averages the closed form over all `d^3` words using three precomputed
/// `d x d` phase tables.
pub fn p3_analytic_with(triplet: &[&Basis; 3], exec: Execution) -> Result<QracValue> {
    let d = check_triplet(triplet)?;
    let t01 = phase_table(triplet[0], triplet[1])?;
    let t02 = phase_table(triplet[0], triplet[2])?;
    let t12 = phase_table(triplet[1], triplet[2])?;
    let s = 2.0 / (d as f64).sqrt();
    let dd = d * d;
    let sum = chunked_sum(exec, d * dd, dd, |w| {
        let (x0, x1, x2) = (w / dd, (w / d) % d, w % d);
        let phi = t01[x0 * d + x1] - t02[x0 * d + x2] + t12[x1 * d + x2];
        1.0 + s * (wrap_angle(phi) / 3.0).cos()
    });
    Ok(QracValue { value: sum / (3 * d * dd) as f64, method: Method::Analytic, per_word: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmatrix::eigh;
    use crate::mub::galois_mubs;
    use crate::success::{p_general, phat, word_optimum, RequestWeights};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triplets(d: usize) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for a in 0..=d {
            for b in a + 1..=d {
                for c in b + 1..=d {
                    out.push([a, b, c]);
                }
            }
        }
        out
    }

    #[test]
    fn wrap_examples() {
        assert!((wrap_angle(1.5 * PI) + 0.5 * PI).abs() < 1e-15);
        assert_eq!(wrap_angle(0.3), 0.3);
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(-2.9 * PI) - 1.1 * PI + TAU).abs() < 1e-14);
        assert_eq!(principal_arg(Complex64::new(-1.0, -0.0)), PI);
    }

    #[test]
    fn qubit_word_zero() {
        let set = galois_mubs(2).unwrap();
        let t = [&set.bases()[0], &set.bases()[1], &set.bases()[2]];
        let w = InputWord::new(2, vec![0, 0, 0]).unwrap();
        let rec = phi_of(&t, &w).unwrap();
        assert!((rec.varphi - PI / 4.0).abs() < 1e-14);
        assert!((rec.big_phi - PI / 4.0).abs() < 1e-14);
        let (value, _) = p_bar_analytic(&t, &w).unwrap();
        let expected = (1.0 + 2f64.sqrt() * (PI / 12.0).cos()) / 3.0;
        assert!((value - expected).abs() < 1e-14);
        let p3 = p3_analytic(&t).unwrap().value;
        assert!((p3 - 0.788_675).abs() < 1e-6);
        assert!((p3 - p_general(&[t[0], t[1], t[2]], &RequestWeights::uniform(3)).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn reference_word_phase() {
        let set = galois_mubs(5).unwrap();
        let t = [&set.bases()[0], &set.bases()[1], &set.bases()[2]];
        let rec = phi_of(&t, &InputWord::new(5, vec![0, 0, 1]).unwrap()).unwrap();
        assert!((rec.big_phi - 1.2566).abs() < 1e-4);
        assert!((rec.big_phi - rec.varphi).rem_euclid(TAU).min(TAU - (rec.big_phi - rec.varphi).rem_euclid(TAU)) < 1e-12);
    }

    #[test]
    fn d5_class_values() {
        let set = galois_mubs(5).unwrap();
        let mut values: Vec<f64> = triplets(5)
            .iter()
            .map(|t| {
                let b = [&set.bases()[t[0]], &set.bases()[t[1]], &set.bases()[t[2]]];
                p3_analytic(&b).unwrap().value
            })
            .collect();
        values.sort_by(f64::total_cmp);
        assert!((values[0] - 0.5964).abs() < 5e-5);
        assert!((values[values.len() - 1] - 0.6109).abs() < 5e-5);
    }

    #[test]
    fn biased_triplet_is_rejected() {
        let set = galois_mubs(3).unwrap();
        let t = [&set.bases()[0], &set.bases()[0], &set.bases()[1]];
        assert!(matches!(p3_analytic(&t), Err(Error::NotUnbiased(_))));
    }

    #[test]
    fn analytic_matches_eigensolver_on_random_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let uniform = RequestWeights::uniform(3);
        for d in [2usize, 3, 4, 5, 7, 8, 9] {
            let set = galois_mubs(d).unwrap();
            for t in triplets(d) {
                let b = [&set.bases()[t[0]], &set.bases()[t[1]], &set.bases()[t[2]]];
                for _ in 0..200 {
                    let word = InputWord::new(d, (0..3).map(|_| rng.random_range(0..d)).collect()).unwrap();
                    let (value, state) = p_bar_analytic(&b, &word).unwrap();
                    let op = phat(&b, &word, &uniform).unwrap();
                    let (lambda, _) = word_optimum(&op);
                    assert!((value - lambda).abs() <= 1e-10, "d={d} {t:?}");
                    assert!(state.is_normalized());
                    let spec = op.spectrum();
                    let rec = phi_of(&b, &word).unwrap();
                    let mut expected = analytic_eigenvalues(rec.big_phi, d).to_vec();
                    expected.sort_by(|a, b| b.total_cmp(a));
                    assert!(expected[0] >= expected[1] - 1e-15);
                    let [l0, l1, l2] = analytic_eigenvalues(rec.big_phi, d);
                    assert!(l0 >= l1 - 1e-12 && l0 >= l2 - 1e-12);
                    for (k, &v) in spec.values.iter().enumerate() {
                        let target = if k < 3 { expected[k] } else { 0.0 };
                        assert!((v - target).abs() <= 1e-10);
                    }
                    assert!((spec.values.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn analytic_state_is_an_eigenvector() {
        let set = galois_mubs(7).unwrap();
        let b = [&set.bases()[1], &set.bases()[3], &set.bases()[6]];
        for w in [0usize, 17, 100, 342] {
            let word = InputWord::from_index(7, 3, w);
            let (value, state) = p_bar_analytic(&b, &word).unwrap();
            let op = phat(&b, &word, &RequestWeights::uniform(3)).unwrap();
            let m = op.matrix();
            let err = (0..7)
                .map(|r| ((0..7).map(|c| m[(r, c)] * state[c]).sum::<Complex64>() - value * state[r]).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn relabeling_and_phase_invariance() {
        let set = galois_mubs(5).unwrap();
        let b = [&set.bases()[0], &set.bases()[2], &set.bases()[3]];
        let base = p3_analytic(&b).unwrap().value;
        let uniform = RequestWeights::uniform(3);
        let perms = [[0, 1, 2], [1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1], [0, 2, 1]];
        for w in 0..125 {
            let word = InputWord::from_index(5, 3, w);
            let lambda = word_optimum(&phat(&b, &word, &uniform).unwrap()).0;
            for p in perms {
                let pb = [b[p[0]], b[p[1]], b[p[2]]];
                let pw = InputWord::new(5, p.iter().map(|&i| word.digits()[i]).collect()).unwrap();
                let l = word_optimum(&phat(&pb, &pw, &uniform).unwrap()).0;
                assert!((l - lambda).abs() <= 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rotated: Vec<Basis> = b
            .iter()
            .map(|basis| basis.with_column_phases(&(0..5).map(|_| rng.random_range(-PI..PI)).collect::<Vec<_>>()))
            .collect();
        let rb = [&rotated[0], &rotated[1], &rotated[2]];
        assert!((p3_analytic(&rb).unwrap().value - base).abs() <= 1e-12);
        assert!((p_general(&rb, &uniform).unwrap().value - base).abs() <= 1e-12);
    }

    #[test]
    fn execution_modes_agree() {
        let set = galois_mubs(11).unwrap();
        let b = [&set.bases()[2], &set.bases()[5], &set.bases()[9]];
        let s = p3_analytic_with(&b, Execution::Sequential).unwrap().value;
        let p = p3_analytic_with(&b, Execution::Parallel).unwrap().value;
        assert_eq!(s.to_bits(), p.to_bits());
    }

    proptest! {
        #[test]
        fn wrap_lands_in_half_open_interval(phi in -3.0 * PI..3.0 * PI) {
            let w = wrap_angle(phi);
            prop_assert!((-PI..PI).contains(&w));
            let k = (phi - w) / TAU;
            prop_assert!((k - k.round()).abs() < 1e-12);
        }

        #[test]
        fn eigenvalues_sum_to_one(phi in -PI..PI, d in 2usize..64) {
            let l = analytic_eigenvalues(phi, d);
            prop_assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            prop_assert!(l[0] >= l[1] - 1e-15 && l[0] >= l[2] - 1e-15);
        }

        #[test]
        fn value_is_a_probability(seed in 0u64..64) {
            let set = galois_mubs(4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = (0..5).collect();
            for i in (1..5).rev() {
                idx.swap(i, rng.random_range(0..=i));
            }
            let b = [&set.bases()[idx[0]], &set.bases()[idx[1]], &set.bases()[idx[2]]];
            let v = p3_analytic(&b).unwrap().value;
            prop_assert!((0.25..=1.0).contains(&v));
            let h = eigh(&phat(&b, &InputWord::from_index(4, 3, seed as usize), &RequestWeights::uniform(3)).unwrap().matrix().clone()).unwrap();
            prop_assert!(h.values[0] <= 1.0 + 1e-12);
        }
    }
}
