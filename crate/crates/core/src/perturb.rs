//! The perturbation family `U -> GS(U + delta I)` and sweeps of the
//! three-basis success probability along it.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cmatrix::gram_schmidt;
use crate::error::{Error, Result};
use crate::mub::{format_exact, Basis, BasisLabel, MubSet};
use crate::oiscan::{scan_with, ScanReport, TripletId, DEFAULT_TOL};
use crate::par::Execution;
use crate::success::{mean_top_eigenvalue, RequestWeights};

pub const DEFAULT_MARGIN: f64 = 1e-3;
/// Bound on `d^3 * |grid| * |triplets|` word evaluations per sweep.
pub const SWEEP_BUDGET: u64 = 10_000_000_000;

/// Applies `U + delta I` followed by Gram-Schmidt to every basis.
///
/// The results are unitary but in general no longer mutually unbiased.
pub fn perturb_set(mubs: &MubSet, delta: f64) -> Result<Vec<Basis>> {
    perturb_bases(mubs.bases(), delta)
}

pub fn perturb_bases(bases: &[Basis], delta: f64) -> Result<Vec<Basis>> {
    check_delta(delta)?;
    bases.iter().map(|b| perturb_one(b, delta)).collect()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be finite and non-negative, got {delta}")));
    }
    Ok(())
}

/// `GS(U + delta I)` for one basis. Fails with `RankDeficient` when `-delta` is
/// an eigenvalue of `U`, e.g. `delta = 1` for bases with eigenvalue `-1`.
pub fn perturb_one(b: &Basis, delta: f64) -> Result<Basis> {
    let m = gram_schmidt(&b.matrix().add_scaled_identity(delta))?;
    let label = BasisLabel { index: b.label.index, construction: format!("{}+perturbed", b.label.construction) };
    Basis::new(m, label)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub delta_grid: Vec<f64>,
    /// `None` sweeps every triplet.
    pub triplets: Option<Vec<TripletId>>,
    pub margin: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec::new(SweepSpec::grid(0.0, 2.0, 0.02).unwrap(), None, DEFAULT_MARGIN).unwrap()
    }
}

impl SweepSpec {
    pub fn new(delta_grid: Vec<f64>, triplets: Option<Vec<TripletId>>, margin: f64) -> Result<Self> {
        if !delta_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("delta grid must be strictly increasing".into()));
        }
        if !delta_grid.contains(&0.0) {
            return Err(Error::InvalidArgument("delta grid must contain 0".into()));
        }
        if !(margin >= 0.0) {
            return Err(Error::InvalidArgument(format!("margin must be non-negative, got {margin}")));
        }
        Ok(SweepSpec { delta_grid, triplets, margin })
    }

    /// `start, start + step, ...` up to `end` inclusive; points are `start + i * step`.
    pub fn grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !(end >= start) || start < 0.0 {
            return Err(Error::InvalidArgument(format!("bad grid {start}..{end} step {step}")));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub triplet: TripletId,
    /// `None` where one of the triplet's bases could not be perturbed.
    #[serde(skip)]
    pub values: Vec<Option<f64>>,
    pub max: f64,
    pub argmax_delta: f64,
    /// Class of the triplet in the unperturbed scan, 0 being `P_plus`.
    pub class: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BestPoint {
    pub triplet: TripletId,
    pub delta: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub class: usize,
    pub in_p_minus_class: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub dim: usize,
    pub delta_grid: Vec<f64>,
    pub margin: f64,
    #[serde(rename = "P_plus")]
    pub p_plus: f64,
    #[serde(rename = "P_minus")]
    pub p_minus: f64,
    pub n_classes: usize,
    pub curves: Vec<Curve>,
    pub best: BestPoint,
    /// `best.P - P_plus`.
    pub surpass_margin: f64,
    /// Some point exceeds `P_plus` at all.
    pub exceeds_p_plus: bool,
    /// Some point exceeds `P_plus` by at least `margin`.
    pub surpass: bool,
    /// Largest `|P(delta_{i+1}) - P(delta_i)| / (delta_{i+1} - delta_i)` over all curves.
    pub continuity_constant: f64,
    /// Largest `|P(0) - scan value|` over all curves.
    pub delta0_deviation: f64,
    /// Grid points and basis indices where `U + delta I` is singular.
    pub rank_deficient: Vec<SingularPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularPoint {
    pub delta: f64,
    pub basis: usize,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("triplet,delta,P\n");
        for c in &self.curves {
            for (delta, p) in self.delta_grid.iter().zip(&c.values) {
                let Some(p) = p else { continue };
                writeln!(out, "{},{},{}", c.triplet, format_exact(*delta), format_exact(*p)).unwrap();
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn sweep(spec: &SweepSpec, mubs: &MubSet) -> Result<SweepReport> {
    sweep_with(spec, mubs, Execution::default())
}

pub fn sweep_with(spec: &SweepSpec, mubs: &MubSet, exec: Execution) -> Result<SweepReport> {
    let d = mubs.dim();
    let triplets = match &spec.triplets {
        Some(t) => t.clone(),
        None => TripletId::all(mubs.len()),
    };
    if let Some(t) = triplets.iter().find(|t| t.0[2] >= mubs.len()) {
        return Err(Error::InvalidArgument(format!("triplet {t} outside the {} bases", mubs.len())));
    }
    if triplets.is_empty() {
        return Err(Error::InvalidArgument("no triplets to sweep".into()));
    }
    let work = (d as u64)
        .checked_pow(3)
        .and_then(|w| w.checked_mul(spec.delta_grid.len() as u64))
        .and_then(|w| w.checked_mul(triplets.len() as u64));
    if work.is_none_or(|w| w > SWEEP_BUDGET) {
        return Err(Error::BudgetExceeded { d, n: 3 });
    }

    let reference: ScanReport = scan_with(mubs, DEFAULT_TOL, exec)?;
    let weights = RequestWeights::uniform(3);
    let mut grid_values: Vec<Vec<Option<f64>>> = Vec::with_capacity(spec.delta_grid.len());
    let mut rank_deficient = Vec::new();
    for &delta in &spec.delta_grid {
        check_delta(delta)?;
        let mut bases = Vec::with_capacity(mubs.len());
        for (basis, b) in mubs.bases().iter().enumerate() {
            match perturb_one(b, delta) {
                Ok(p) => bases.push(Some(p)),
                Err(Error::RankDeficient { .. }) => {
                    rank_deficient.push(SingularPoint { delta, basis });
                    bases.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        let row = exec.try_map(triplets.len(), |i| {
            let [a, b, c] = triplets[i].0;
            match (&bases[a], &bases[b], &bases[c]) {
                (Some(a), Some(b), Some(c)) => {
                    mean_top_eigenvalue(&[a, b, c], &weights, Execution::Sequential).map(Some)
                }
                _ => Ok(None),
            }
        })?;
        grid_values.push(row);
    }

    let zero = spec.delta_grid.iter().position(|&x| x == 0.0).unwrap_or(0);
    let mut continuity_constant: f64 = 0.0;
    let mut delta0_deviation: f64 = 0.0;
    let curves: Vec<Curve> = triplets
        .iter()
        .enumerate()
        .map(|(i, &triplet)| {
            let values: Vec<Option<f64>> = grid_values.iter().map(|row| row[i]).collect();
            for (w, dv) in spec.delta_grid.windows(2).zip(values.windows(2)) {
                if let [Some(a), Some(b)] = dv {
                    continuity_constant = continuity_constant.max((b - a).abs() / (w[1] - w[0]));
                }
            }
            match (reference.value_of(triplet), values[zero]) {
                (Some(v0), Some(p0)) => delta0_deviation = delta0_deviation.max((p0 - v0).abs()),
                _ => delta0_deviation = f64::INFINITY,
            }
            // first maximum wins so ties resolve to the smaller delta
            let (k, max) = values.iter().enumerate().fold((zero, f64::NEG_INFINITY), |acc, (k, v)| match v {
                Some(v) if *v > acc.1 => (k, *v),
                _ => acc,
            });
            let class = reference.class_of(triplet).unwrap_or(0);
            Curve { triplet, values, max, argmax_delta: spec.delta_grid[k], class }
        })
        .collect();

    let top = curves.iter().fold(&curves[0], |best, c| if c.max > best.max { c } else { best });
    let minus_class = reference.n_clusters - 1;
    let best = BestPoint {
        triplet: top.triplet,
        delta: top.argmax_delta,
        p: top.max,
        class: top.class,
        in_p_minus_class: reference.n_clusters > 1 && top.class == minus_class,
    };
    let surpass_margin = best.p - reference.p_plus;
    Ok(SweepReport {
        dim: d,
        delta_grid: spec.delta_grid.clone(),
        margin: spec.margin,
        p_plus: reference.p_plus,
        p_minus: reference.p_minus,
        n_classes: reference.n_clusters,
        exceeds_p_plus: surpass_margin > 0.0,
        surpass: surpass_margin >= spec.margin,
        surpass_margin,
        best,
        curves,
        continuity_constant,
        delta0_deviation,
        rank_deficient,
    })
}
