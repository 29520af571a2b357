//! Operational-inequivalence scan: the three-basis success probability of every
//! triplet in a complete MUB set, grouped into distinct values.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mub::MubSet;
use crate::par::Execution;
use crate::success::analytic::p3_analytic_with;

pub const DEFAULT_TOL: f64 = 1e-9;
/// Minimum ratio of the smallest between-cluster gap to `tol` before a scan is
/// flagged as tolerance-fragile.
pub const GAP_SAFETY: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct TripletId(pub [usize; 3]);

impl TripletId {
    pub fn new(mut indices: [usize; 3]) -> Result<Self> {
        indices.sort_unstable();
        if indices[0] == indices[1] || indices[1] == indices[2] {
            return Err(Error::InvalidArgument(format!("triplet {indices:?} repeats a basis")));
        }
        Ok(TripletId(indices))
    }

    /// All `C(m, 3)` triplets of `0..m` in lexicographic order.
    pub fn all(m: usize) -> Vec<TripletId> {
        let mut out = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    out.push(TripletId([a, b, c]));
                }
            }
        }
        out
    }
}

impl std::fmt::Display for TripletId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}-{}", self.0[0], self.0[1], self.0[2])
    }
}

/// A run of sorted values whose consecutive gaps are all at most `tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Mean of the members.
    pub value: f64,
    pub min: f64,
    pub max: f64,
    /// Indices into the input slice, ascending by value.
    pub members: Vec<usize>,
}

/// Single-linkage clustering on the line; returned in ascending order of value.
pub fn cluster_values(values: &[f64], tol: f64) -> Vec<Cluster> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match clusters.last_mut() {
            Some(c) if values[i] - values[*c.last().unwrap()] <= tol => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
        .into_iter()
        .map(|members| {
            let min = values[members[0]];
            let max = values[*members.last().unwrap()];
            let value = members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64;
            Cluster { value, min, max, members }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanEntry {
    pub triplet: TripletId,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueClass {
    pub value: f64,
    pub spread: f64,
    pub members: Vec<TripletId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub dim: usize,
    pub tol: f64,
    pub entries: Vec<ScanEntry>,
    /// Descending by value, so the first class is `P_plus`.
    pub clusters: Vec<ValueClass>,
    #[serde(rename = "N")]
    pub n_clusters: usize,
    #[serde(rename = "P_plus")]
    pub p_plus: f64,
    #[serde(rename = "P_minus")]
    pub p_minus: f64,
    pub predicted_n: usize,
    pub agrees: bool,
    /// Smallest gap between adjacent classes; absent with a single class.
    pub min_gap: Option<f64>,
    pub max_spread: f64,
    /// `min_gap / tol < GAP_SAFETY`.
    pub fragile: bool,
}

impl ScanReport {
    pub fn value_of(&self, t: TripletId) -> Option<f64> {
        self.entries.iter().find(|e| e.triplet == t).map(|e| e.p)
    }

    /// Index into `clusters` of the class containing `t`.
    pub fn class_of(&self, t: TripletId) -> Option<usize> {
        self.clusters.iter().position(|c| c.members.contains(&t))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu1,mu2,mu3,P\n");
        for e in &self.entries {
            let [a, b, c] = e.triplet.0;
            writeln!(out, "{a},{b},{c},{}", crate::mub::format_exact(e.p)).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Number of distinct triplet values expected: two iff `d = 1 mod 4`.
pub fn predicted_n(d: usize) -> usize {
    if d % 4 == 1 {
        2
    } else {
        1
    }
}

pub fn scan(mubs: &MubSet, tol: f64) -> Result<ScanReport> {
    scan_with(mubs, tol, Execution::default())
}

pub fn scan_with(mubs: &MubSet, tol: f64, exec: Execution) -> Result<ScanReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let bases = mubs.bases();
    let triplets = TripletId::all(bases.len());
    if triplets.is_empty() {
        return Err(Error::InvalidArgument("a scan needs at least three bases".into()));
    }
    let values = exec.try_map(triplets.len(), |i| {
        let [a, b, c] = triplets[i].0;
        p3_analytic_with(&[&bases[a], &bases[b], &bases[c]], Execution::Sequential).map(|v| v.value)
    })?;
    Ok(assemble(mubs.dim(), tol, triplets, values))
}

fn assemble(dim: usize, tol: f64, triplets: Vec<TripletId>, values: Vec<f64>) -> ScanReport {
    let raw = cluster_values(&values, tol);
    let min_gap = raw.windows(2).map(|w| w[1].min - w[0].max).reduce(f64::min);
    let max_spread = raw.iter().map(|c| c.max - c.min).fold(0.0, f64::max);
    let clusters: Vec<ValueClass> = raw
        .iter()
        .rev()
        .map(|c| {
            let mut members: Vec<TripletId> = c.members.iter().map(|&i| triplets[i]).collect();
            members.sort();
            ValueClass { value: c.value, spread: c.max - c.min, members }
        })
        .collect();
    let entries = triplets.into_iter().zip(values).map(|(triplet, p)| ScanEntry { triplet, p }).collect();
    let n_clusters = clusters.len();
    ScanReport {
        dim,
        tol,
        entries,
        p_plus: clusters[0].value,
        p_minus: clusters[n_clusters - 1].value,
        n_clusters,
        clusters,
        predicted_n: predicted_n(dim),
        agrees: n_clusters == predicted_n(dim),
        fragile: min_gap.is_some_and(|g| g / tol < GAP_SAFETY),
        min_gap,
        max_spread,
    }
}

pub fn check_pattern(report: &ScanReport) -> bool {
    report.n_clusters == predicted_n(report.dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mub::galois_mubs;
    use std::time::Instant;

    #[test]
    fn clustering_examples() {
        let c = cluster_values(&[1.0, 2.0, 1.0 + 1e-12], 1e-9);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].members, vec![0, 2]);
        assert!(cluster_values(&[], 1e-9).is_empty());
        // chains link through intermediate points
        assert_eq!(cluster_values(&[0.0, 0.8e-9, 1.6e-9], 1e-9).len(), 1);
    }

    #[test]
    fn triplet_ids() {
        assert_eq!(TripletId::new([3, 1, 2]).unwrap(), TripletId([1, 2, 3]));
        assert!(TripletId::new([1, 1, 2]).is_err());
        assert_eq!(TripletId::all(6).len(), 20);
        assert_eq!(TripletId([0, 4, 5]).to_string(), "0-4-5");
    }

    #[test]
    fn d5_two_classes() {
        let start = Instant::now();
        let r = scan(&galois_mubs(5).unwrap(), DEFAULT_TOL).unwrap();
        assert!(start.elapsed().as_secs_f64() < 1.0);
        assert_eq!(r.n_clusters, 2);
        assert_eq!(r.clusters.iter().map(|c| c.members.len()).sum::<usize>(), 20);
        assert_eq!(format!("{:.4}", r.p_plus), "0.6109");
        assert_eq!(format!("{:.4}", r.p_minus), "0.5964");
        assert!(r.agrees && check_pattern(&r) && !r.fragile);
        assert!(r.max_spread <= r.tol);
        let csv = r.to_csv();
        assert!(csv.starts_with("mu1,mu2,mu3,P\n0,1,2,"));
        assert_eq!(csv.lines().count(), 21);
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["N"], 2);
        assert_eq!(json["entries"][0]["triplet"], serde_json::json!([0, 1, 2]));
    }

    #[test]
    fn small_dimensions_single_class() {
        for d in [2usize, 3, 4, 7, 8] {
            let r = scan(&galois_mubs(d).unwrap(), DEFAULT_TOL).unwrap();
            assert_eq!(r.n_clusters, 1, "d={d}");
            assert!(check_pattern(&r));
            assert_eq!(r.min_gap, None);
        }
        let r2 = scan(&galois_mubs(2).unwrap(), DEFAULT_TOL).unwrap();
        assert!((r2.p_plus - 0.788_675).abs() < 1e-6);
    }

    #[test]
    fn pattern_check_reads_n() {
        let mut r = scan(&galois_mubs(9).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(r.n_clusters, 2);
        assert!(check_pattern(&r));
        r.n_clusters = 1;
        assert!(!check_pattern(&r));
        assert_eq!(predicted_n(13), 2);
        assert_eq!(predicted_n(8), 1);
    }

    #[test]
    fn relabeling_permutes_values() {
        let set = galois_mubs(5).unwrap();
        let r = scan(&set, DEFAULT_TOL).unwrap();
        let mut bases = set.bases().to_vec();
        bases.rotate_left(2);
        let permuted = MubSet::certify(bases, None).unwrap();
        let rp = scan(&permuted, DEFAULT_TOL).unwrap();
        let mut a: Vec<f64> = r.entries.iter().map(|e| e.p).collect();
        let mut b: Vec<f64> = rp.entries.iter().map(|e| e.p).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn sequential_matches_parallel() {
        let set = galois_mubs(7).unwrap();
        let s = scan_with(&set, DEFAULT_TOL, Execution::Sequential).unwrap();
        let p = scan_with(&set, DEFAULT_TOL, Execution::Parallel).unwrap();
        assert_eq!(s.to_csv(), p.to_csv());
    }

    #[test]
    fn invalid_tolerance() {
        assert!(scan(&galois_mubs(3).unwrap(), 0.0).is_err());
    }
}
