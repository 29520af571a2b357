//! Classical random access codes on tiny instances.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassicalMode {
    /// Send `x_0` verbatim and guess the other dits uniformly.
    Identity,
    /// Exhaustive search over deterministic strategies.
    Brute,
}

impl FromStr for ClassicalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(ClassicalMode::Identity),
            "brute" => Ok(ClassicalMode::Brute),
            other => Err(Error::InvalidArgument(format!("unknown classical mode {other:?}"))),
        }
    }
}

/// Instances small enough for [`ClassicalMode::Brute`].
pub const BRUTE_INSTANCES: [(usize, usize); 3] = [(2, 2), (2, 3), (3, 2)];

pub fn classical_baseline(n: usize, d: usize, mode: ClassicalMode) -> Result<f64> {
    if n == 0 || d < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 1 and d >= 2, got n={n}, d={d}")));
    }
    match mode {
        ClassicalMode::Identity => Ok((1.0 + (n - 1) as f64 / d as f64) / n as f64),
        ClassicalMode::Brute if BRUTE_INSTANCES.contains(&(n, d)) => Ok(brute(n, d)),
        ClassicalMode::Brute => Err(Error::BudgetExceeded { d, n }),
    }
}

/// For a fixed encoding the best decoder of question `i` maps each message to
/// the most frequent `x_i` among the words sent to it, so only encodings need
/// enumerating. Shared randomness cannot beat the best deterministic strategy.
fn brute(n: usize, d: usize) -> f64 {
    let words = d.pow(n as u32);
    let digit = |w: usize, i: usize| (w / d.pow((n - 1 - i) as u32)) % d;
    let mut encoding = vec![0usize; words];
    let mut counts = vec![0usize; d * d];
    let mut best = 0usize;
    loop {
        let mut total = 0;
        for i in 0..n {
            counts.iter_mut().for_each(|c| *c = 0);
            for (w, &m) in encoding.iter().enumerate() {
                counts[m * d + digit(w, i)] += 1;
            }
            total += counts.chunks(d).map(|row| row.iter().max().copied().unwrap_or(0)).sum::<usize>();
        }
        best = best.max(total);
        // next encoding in odometer order
        let mut pos = 0;
        while pos < words {
            encoding[pos] += 1;
            if encoding[pos] < d {
                break;
            }
            encoding[pos] = 0;
            pos += 1;
        }
        if pos == words {
            break;
        }
    }
    best as f64 / (n * words) as f64
}
