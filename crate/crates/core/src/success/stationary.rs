//! Numerical check of the critical-point structure of the two-angle success
//! function `q(theta1, theta2)`.
//!
//! Alice's trial state is `c + e^{i(t1 - phi01)} e + e^{i(t2 - phi02)} f`, normalized,
//! and the word's success probability is `(2 + q)/3`. The verifier locates the
//! root `gamma0` of the stationary condition, confirms the gradient vanishes at
//! the three intersection points, that `q` is flat along `theta2 = gamma0`, and
//! that no grid point beats `q_m1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::analytic::{phi_of, PhiRecord};
use super::InputWord;
use crate::cmatrix::dot;
use crate::error::{Error, Result};
use crate::mub::Basis;

const TAU: f64 = 2.0 * PI;
/// Points in the sign-change scan for roots of the stationary condition.
pub const ROOT_SCAN_POINTS: usize = 4096;
pub const ROOT_TOL: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const FLATNESS_TOL: f64 = 1e-9;
pub const LINE_SAMPLES: usize = 256;
pub const GRID_SIDE: usize = 512;
pub const GRID_TOL: f64 = 1e-9;
/// Squared trial-state norm below which an intersection point is treated as singular.
pub const SINGULAR_NORM: f64 = 1e-9;

/// Everything `q` needs for one word: dimension, wrapped phase and the three states.
#[derive(Debug, Clone)]
pub struct QContext {
    pub d: usize,
    pub record: PhiRecord,
    states: [Vec<Complex64>; 3],
}

impl QContext {
    pub fn new(triplet: &[&Basis; 3], word: &InputWord) -> Result<Self> {
        let record = phi_of(triplet, word)?;
        let x = word.digits();
        let states = [0, 1, 2].map(|i| triplet[i].state(x[i]).to_vec());
        Ok(QContext { d: triplet[0].dim(), record, states })
    }

    /// Context without explicit states; only the closed-form path is usable.
    pub fn from_phase(d: usize, record: PhiRecord) -> Self {
        QContext { d, record, states: [Vec::new(), Vec::new(), Vec::new()] }
    }

    fn phi(&self) -> f64 {
        self.record.big_phi
    }

    /// `q` evaluated from the Born rule on the explicit trial state.
    pub fn q_born(&self, t1: f64, t2: f64) -> Result<f64> {
        if self.states[0].is_empty() {
            return Err(Error::InvalidArgument("context carries no basis states".into()));
        }
        let [c, e, f] = &self.states;
        let ge = Complex64::from_polar(1.0, t1 - self.record.phi01);
        let gf = Complex64::from_polar(1.0, t2 - self.record.phi02);
        let psi: Vec<Complex64> = (0..self.d).map(|r| c[r] + ge * e[r] + gf * f[r]).collect();
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let hits: f64 = self.states.iter().map(|s| dot(s, &psi).norm_sqr()).sum();
        Ok(hits / norm2 - 2.0)
    }
}

fn denominator(d: f64, t1: f64, t2: f64, phi: f64) -> f64 {
    3.0 + 2.0 / d.sqrt() * (t1.cos() + t2.cos() + (t1 - t2 - phi).cos())
}

/// Closed form of `q`; equals `3 P - 2` for the trial state.
pub fn q_value(t1: f64, t2: f64, ctx: &QContext) -> f64 {
    let d = ctx.d as f64;
    let phi = ctx.phi();
    let num = -3.0 + 6.0 / d + 2.0 / d * ((t1 - t2).cos() + (t2 + phi).cos() + (t1 - phi).cos());
    num / denominator(d, t1, t2, phi)
}

/// The braced factor of `dq/dtheta1`; its zeros in `theta2` are the `gamma0` roots.
pub fn stationary_condition(t2: f64, d: usize, phi: f64) -> f64 {
    let d = d as f64;
    let d32 = d.powf(1.5);
    ((t2 - phi) / 2.0).cos() * (6.0 / d + 4.0 / d32 * t2.cos())
        + ((t2 + phi) / 2.0).cos() * (6.0 / d.sqrt() - 12.0 / d32 - 4.0 / d32 * (t2 + phi).cos())
}

pub fn dq_dtheta1(t1: f64, t2: f64, ctx: &QContext) -> f64 {
    let phi = ctx.phi();
    let n2 = denominator(ctx.d as f64, t1, t2, phi);
    -2.0 * ((2.0 * t1 - t2 - phi) / 2.0).sin() * stationary_condition(t2, ctx.d, phi) / (n2 * n2)
}

/// Mirror of [`dq_dtheta1`] under `q(t1, t2) = q(-t2, -t1)`.
pub fn dq_dtheta2(t1: f64, t2: f64, ctx: &QContext) -> f64 {
    -dq_dtheta1(-t2, -t1, ctx)
}

fn central_gradient(t1: f64, t2: f64, ctx: &QContext) -> f64 {
    let h = FD_STEP;
    let g1 = (q_value(t1 + h, t2, ctx) - q_value(t1 - h, t2, ctx)) / (2.0 * h);
    let g2 = (q_value(t1, t2 + h, ctx) - q_value(t1, t2 - h, ctx)) / (2.0 * h);
    g1.hypot(g2)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All sign-change roots of the stationary condition in `[-pi, pi)`.
///
/// The condition is anti-periodic, `g(t + 2 pi) = -g(t)`, so the scan closes
/// with `g(pi) = -g(-pi)` and a root is always bracketed.
pub fn gamma_roots(d: usize, phi: f64) -> Vec<f64> {
    let g = |t: f64| stationary_condition(t, d, phi);
    let step = TAU / ROOT_SCAN_POINTS as f64;
    let g_start = g(-PI);
    let mut roots = Vec::new();
    let mut prev = g_start;
    for i in 0..ROOT_SCAN_POINTS {
        let (a, b) = (-PI + i as f64 * step, -PI + (i + 1) as f64 * step);
        let gb = if i + 1 == ROOT_SCAN_POINTS { -g_start } else { g(b) };
        if prev == 0.0 {
            roots.push(a);
        } else if (prev < 0.0) != (gb < 0.0) && gb != 0.0 {
            let r = bisect(g, a, b);
            roots.push(if r >= PI { r - TAU } else { r });
        }
        prev = gb;
    }
    roots
}

#[derive(Debug, Clone, Serialize)]
pub struct RootCheck {
    pub gamma: f64,
    pub q_m2: f64,
    /// max - min of `q` over sampled `theta1` on `theta2 = gamma`.
    pub variation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryReport {
    pub word: InputWord,
    pub phi: PhiRecord,
    pub gamma0: f64,
    pub roots: Vec<RootCheck>,
    pub q_m1: f64,
    pub q_m2: f64,
    /// Finite-difference gradient norms at the three intersection points.
    pub gradient_norms: [f64; 3],
    /// Intersections where the trial state vanishes (the three states are linearly dependent).
    pub singular_points: Vec<usize>,
    /// `q` at the three intersection points.
    pub intersection_q: [f64; 3],
    pub max_line_variation: f64,
    pub grid_max: f64,
    pub gradients_vanish: bool,
    pub flat_along_gamma: bool,
    pub q_m1_dominates: bool,
    pub grid_bounded: bool,
}

impl StationaryReport {
    pub fn all_passed(&self) -> bool {
        self.gradients_vanish && self.flat_along_gamma && self.q_m1_dominates && self.grid_bounded
    }
}

fn q_m2_at(gamma: f64, ctx: &QContext) -> f64 {
    let d = ctx.d as f64;
    (-3.0 + 6.0 / d + 2.0 / d * (gamma + ctx.phi()).cos()) / (3.0 + 2.0 / d.sqrt() * gamma.cos())
}

pub fn verify_stationary_structure(triplet: &[&Basis; 3], word: &InputWord) -> Result<StationaryReport> {
    let ctx = QContext::new(triplet, word)?;
    let phi = ctx.phi();
    let d = ctx.d;

    let roots: Vec<RootCheck> = gamma_roots(d, phi)
        .into_iter()
        .map(|gamma| {
            let (lo, hi) = (0..LINE_SAMPLES)
                .map(|i| q_value(-PI + TAU * i as f64 / LINE_SAMPLES as f64, gamma, &ctx))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q), hi.max(q)));
            RootCheck { gamma, q_m2: q_m2_at(gamma, &ctx), variation: hi - lo }
        })
        .collect();
    let first = roots.first().ok_or(Error::RootNotFound)?;

    let points = [0.0, TAU / 3.0, -TAU / 3.0].map(|k| (phi / 3.0 + k, -phi / 3.0 - k));
    let gradient_norms = points.map(|(t1, t2)| central_gradient(t1, t2, &ctx));
    let singular_points: Vec<usize> =
        (0..3).filter(|&k| denominator(d as f64, points[k].0, points[k].1, phi) < SINGULAR_NORM).collect();
    let intersection_q = points.map(|(t1, t2)| q_value(t1, t2, &ctx));
    let q_m1 = -1.0 + 2.0 / (d as f64).sqrt() * (phi / 3.0).cos();
    let max_line_variation = roots.iter().map(|r| r.variation).fold(0.0, f64::max);

    let step = TAU / GRID_SIDE as f64;
    let mut grid_max = f64::NEG_INFINITY;
    for i in 0..GRID_SIDE {
        for j in 0..GRID_SIDE {
            grid_max = grid_max.max(q_value(-PI + i as f64 * step, -PI + j as f64 * step, &ctx));
        }
    }

    Ok(StationaryReport {
        word: word.clone(),
        gamma0: first.gamma,
        q_m2: first.q_m2,
        q_m1,
        gradient_norms,
        intersection_q,
        max_line_variation,
        grid_max,
        gradients_vanish: (0..3).all(|k| singular_points.contains(&k) || gradient_norms[k] <= GRADIENT_TOL),
        singular_points,
        flat_along_gamma: max_line_variation <= FLATNESS_TOL,
        q_m1_dominates: roots.iter().all(|r| q_m1 >= r.q_m2 - 1e-12),
        grid_bounded: grid_max <= q_m1 + GRID_TOL,
        phi: ctx.record,
        roots,
    })
}
