//! Finite-statistics simulation of the three-input code: optimal states are
//! measured with Born-rule multinomial sampling and the success rate is
//! estimated per trial.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::cmatrix::dot;
use crate::error::{Error, Result};
use crate::mub::Basis;
use crate::oiscan::TripletId;
use crate::par::Execution;
use crate::success::{p_general_detailed, RequestWeights, WordOptimum};

/// Name and version of the generator, recorded in every report.
pub const GENERATOR: &str = "ChaCha20 (rand_chacha 0.9)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotMode {
    /// Total shots per trial, spread uniformly over all (word, question) pairs.
    Sampled(u64),
    /// Born-rule expectation, no sampling.
    Infinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShotSpec {
    pub mode: ShotMode,
    pub trials: usize,
    pub seed: u64,
}

impl ShotSpec {
    pub fn new(mode: ShotMode, trials: usize, seed: u64) -> Result<Self> {
        if trials < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 trials for a spread, got {trials}")));
        }
        if mode == ShotMode::Sampled(0) {
            return Err(Error::InvalidArgument("shots must be positive".into()));
        }
        Ok(ShotSpec { mode, trials, seed })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioStats {
    pub triplet: TripletId,
    /// Exact success probability of the prepared strategy.
    pub exact: f64,
    pub estimates: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across trials.
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShotReport {
    pub generator: &'static str,
    pub seed: u64,
    pub mode: ShotMode,
    pub trials: usize,
    pub dim: usize,
    pub scenarios: Vec<ScenarioStats>,
    /// `(mean_0 - mean_1) / sqrt(sd_0^2 + sd_1^2)` for the first two scenarios.
    pub sigma_gap: Option<f64>,
}

impl ShotReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Success probability of every (word, question) pair, in odometer word order
/// with the question index fastest.
fn pair_probabilities(bases: &[&Basis; 3], optima: &[WordOptimum]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(optima.len() * 3);
    for wo in optima {
        for b in bases {
            out.push((0..b.dim()).map(|k| dot(b.state(k), &wo.state.0).norm_sqr()).collect());
        }
    }
    out
}

/// Largest-remainder split of `total` over `parts` equal shares; leftovers go
/// to the lowest indices.
fn allocate(total: u64, parts: usize) -> Vec<u64> {
    let base = total / parts as u64;
    let extra = (total % parts as u64) as usize;
    (0..parts).map(|i| base + u64::from(i < extra)).collect()
}

/// Outcome counts for `n` shots drawn from `probs`, by sequential conditional binomials.
fn multinomial(rng: &mut ChaCha20Rng, n: u64, probs: &[f64]) -> Result<Vec<u64>> {
    let mut counts = vec![0; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, q).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng);
        counts[k] = c;
        left -= c;
        mass -= p;
    }
    Ok(counts)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Simulates each triplet scenario. Trial `t` of scenario `s` draws from the
/// stream `(s << 32) | t` of a generator seeded with `spec.seed`, so results do
/// not depend on execution order.
pub fn simulate(bases: &[Basis], scenarios: &[TripletId], spec: &ShotSpec) -> Result<ShotReport> {
    simulate_with(bases, scenarios, spec, Execution::default())
}

pub fn simulate_with(bases: &[Basis], scenarios: &[TripletId], spec: &ShotSpec, exec: Execution) -> Result<ShotReport> {
    let dim = bases.first().map_or(0, Basis::dim);
    let mut stats = Vec::with_capacity(scenarios.len());
    for (s, &triplet) in scenarios.iter().enumerate() {
        if triplet.0[2] >= bases.len() {
            return Err(Error::InvalidArgument(format!("triplet {triplet} outside the {} bases", bases.len())));
        }
        let trip = [&bases[triplet.0[0]], &bases[triplet.0[1]], &bases[triplet.0[2]]];
        let detailed = p_general_detailed(&trip, &RequestWeights::uniform(3))?;
        let optima = detailed.per_word.as_deref().unwrap_or_default();
        let probs = pair_probabilities(&trip, optima);
        let targets: Vec<usize> = optima.iter().flat_map(|wo| wo.word.digits().iter().copied()).collect();
        let pairs = probs.len();

        let estimates: Vec<f64> = match spec.mode {
            ShotMode::Infinite => {
                let expected = probs.iter().zip(&targets).map(|(p, &x)| p[x]).sum::<f64>() / pairs as f64;
                vec![expected; spec.trials]
            }
            ShotMode::Sampled(shots) => {
                let alloc = allocate(shots, pairs);
                exec.try_map(spec.trials, |t| {
                    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
                    rng.set_stream(((s as u64) << 32) | t as u64);
                    let mut hits = 0u64;
                    for ((p, &x), &n) in probs.iter().zip(&targets).zip(&alloc) {
                        hits += multinomial(&mut rng, n, p)?[x];
                    }
                    Ok::<_, Error>(hits as f64 / shots as f64)
                })?
            }
        };
        let (mean, sd) = mean_sd(&estimates);
        stats.push(ScenarioStats { triplet, exact: detailed.value, estimates, mean, sd });
    }
    let sigma_gap = match stats.as_slice() {
        [a, b, ..] => Some((a.mean - b.mean) / (a.sd.powi(2) + b.sd.powi(2)).sqrt()),
        _ => None,
    };
    Ok(ShotReport { generator: GENERATOR, seed: spec.seed, mode: spec.mode, trials: spec.trials, dim, scenarios: stats, sigma_gap })
}
