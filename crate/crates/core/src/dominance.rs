//! Finite-depth evidence for dominance: Q dominates P when every interval
//! (q_{k+1}, q_k] of Q's non-increasing ordering holds a uniformly bounded
//! number of P's probabilities.
//!
//! The relation quantifies over all k, so a finite scan can only report what it
//! saw. The verdict says so.

use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceConfig {
    /// Number of q-intervals examined.
    pub depth: u64,
    /// Most P terms scanned before giving up.
    pub probe_limit: u64,
    /// Counts above this, rising in the deeper half, read as unbounded growth.
    pub growth_threshold: u64,
}

impl Default for DominanceConfig {
    fn default() -> Self {
        DominanceConfig {
            depth: 50,
            probe_limit: 1_000_000,
            growth_threshold: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "bound")]
pub enum DominanceVerdict {
    /// Every examined interval held at most this many terms.
    DominatedWithin(u64),
    NotDominatedAtDepth,
    /// The scan hit the probe limit or the end of a generated prefix.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub depth: u64,
    /// counts[k-1] = #{i : p_i ∈ (q_{k+1}, q_k]}
    pub counts: Vec<u64>,
    pub max_count: u64,
    pub verdict: DominanceVerdict,
    /// P terms examined.
    pub scanned: u64,
    /// P terms above q_1, which fall in no interval.
    pub above_first: u64,
}

/// Counts P's probabilities in the first `depth` intervals of Q.
pub fn dominates(
    q: &Distribution,
    p: &Distribution,
    config: &DominanceConfig,
) -> Result<DominanceReport> {
    if q.is_finite() {
        return Err(Error::FiniteSupport);
    }
    if p.is_finite() {
        return Err(Error::params("dominance needs P with infinite support"));
    }
    if config.depth == 0 {
        return Err(Error::params("depth must be positive"));
    }
    let depth = config.depth as usize;
    // compared in log space: deep q_k of fast-decaying families underflow
    let qs = q.ln_sorted_prefix(depth + 1)?;
    let floor = qs[depth];
    let mono = p.monotone_from();

    let mut counts = vec![0u64; depth];
    let mut above_first = 0;
    let mut complete = false;
    let mut i = 0u64;
    while i < config.probe_limit {
        i += 1;
        let pi = match p.ln_prob(i) {
            Ok(x) => x,
            Err(Error::DepthExceeded { .. }) => {
                i -= 1;
                break;
            }
            Err(e) => return Err(e),
        };
        if !(pi > f64::NEG_INFINITY) {
            return Err(Error::params(format!("p_{i} is not positive")));
        }
        // number of q_j >= p_i; the interval is k = idx when 1 <= idx <= depth
        let idx = qs.partition_point(|&qj| qj >= pi);
        match idx {
            0 => above_first += 1,
            k if k <= depth => counts[k - 1] += 1,
            _ => {}
        }
        if i >= mono && pi <= floor {
            complete = true;
            break;
        }
    }

    let max_count = counts.iter().copied().max().unwrap_or(0);
    let verdict = if !complete {
        DominanceVerdict::Undetermined
    } else {
        let half = depth / 2;
        let early = counts[..half].iter().copied().max().unwrap_or(0);
        let late = counts[half..].iter().copied().max().unwrap_or(0);
        if max_count > config.growth_threshold && late > early {
            DominanceVerdict::NotDominatedAtDepth
        } else {
            DominanceVerdict::DominatedWithin(max_count)
        }
    };
    Ok(DominanceReport {
        depth: config.depth,
        counts,
        max_count,
        verdict,
        scanned: i,
        above_first,
    })
}
