//! Sampling and estimation: frequency tables, Turing's formula N_1/n, the
//! missing mass, and the unbiased estimator Z_{1,v} of ζ_{1,v}.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::special::ln_gamma;
use crate::util::Kahan;

/// Largest n evaluated with exact integer factorials.
pub const EXACT_FACTORIAL_LIMIT: u64 = 30;
/// Limits for [`exact_expectation`].
pub const ORACLE_MAX_SUPPORT: usize = 6;
pub const ORACLE_MAX_N: u64 = 12;

const CACHED_PREFIX: usize = 1 << 20;
const SCAN_LIMIT: u64 = 1 << 62;

/// Observed letter counts of a sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    n: u64,
    counts: BTreeMap<u64, u64>,
    n1: u64,
}

impl FrequencyTable {
    /// Builds a table from (letter, count) pairs; counts must be positive and
    /// letters distinct.
    pub fn from_counts(pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for (k, y) in pairs {
            if k == 0 {
                return Err(Error::params("letter indices start at 1"));
            }
            if y == 0 {
                return Err(Error::params(format!("letter {k} has count 0")));
            }
            if counts.insert(k, y).is_some() {
                return Err(Error::params(format!("letter {k} listed twice")));
            }
        }
        let n = counts.values().sum();
        if n == 0 {
            return Err(Error::params("empty frequency table"));
        }
        let n1 = counts.values().filter(|&&y| y == 1).count() as u64;
        Ok(FrequencyTable { n, counts, n1 })
    }

    /// Tallies a sequence of observed letters.
    pub fn from_letters(letters: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for k in letters {
            *counts.entry(k).or_default() += 1;
        }
        Self::from_counts(counts)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of letters seen exactly once.
    pub fn n1(&self) -> u64 {
        self.n1
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn count(&self, k: u64) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// (k, y_k) in increasing k.
    pub fn rows(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &y)| (k, y))
    }
}

/// Draws n iid letters by inverse-CDF search.
pub fn sample(dist: &Distribution, n: u64, seed: u64) -> Result<FrequencyTable> {
    if n == 0 {
        return Err(Error::params("n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let top = draws.iter().copied().fold(0.0, f64::max);
    let limit = dist.depth_limit().unwrap_or(u64::MAX);

    // prefix CDF, grown until it passes the largest draw or the cache fills
    let mut cdf: Vec<f64> = Vec::new();
    let mut acc = Kahan::default();
    let support = dist.support_size();
    let end = match dist.finite_probs() {
        Some(p) => p.len() as u64,
        None => limit.min(CACHED_PREFIX as u64),
    };
    let mut k = 0u64;
    while k < end && cdf.last().is_none_or(|&c| c <= top) {
        k += 1;
        acc.add(dist.prob(k)?);
        cdf.push(acc.sum());
    }

    let mut letters = Vec::with_capacity(n as usize);
    for &u in &draws {
        let idx = cdf.partition_point(|&c| c <= u);
        let letter = if idx < cdf.len() {
            idx as u64 + 1
        } else if support.is_some() {
            // rounding left the total just under u; take the last positive letter
            let p = dist.finite_probs().unwrap();
            p.iter().rposition(|&x| x > 0.0).unwrap() as u64 + 1
        } else {
            scan_beyond(dist, &cdf, u, limit)?
        };
        letters.push(letter);
    }
    FrequencyTable::from_letters(letters)
}

/// Inverse CDF past the cached prefix, searching on the certified tail mass
/// T(k) = Σ_{j>k} p_j for the first k with T(k) < 1 − u.
fn scan_beyond(dist: &Distribution, cdf: &[f64], u: f64, limit: u64) -> Result<u64> {
    let target = 1.0 - u;
    let below = |k: u64| dist.tail_power_sum(k, 1).mid() < target;
    let start = cdf.len() as u64;
    let cap = limit.min(SCAN_LIMIT);
    let mut lo = start;
    let mut step = 1u64;
    let hi = loop {
        let probe = lo.saturating_add(step).min(cap);
        if below(probe) {
            break probe;
        }
        if probe == cap {
            return Err(Error::DepthExceeded {
                index: cap + 1,
                limit: cap,
            });
        }
        lo = probe;
        step = step.saturating_mul(2);
    };
    // T(lo) >= target > T(hi)
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Turing's formula N_1/n.
pub fn turing(freq: &FrequencyTable) -> f64 {
    freq.n1 as f64 / freq.n as f64
}

/// π_0 = 1 − Σ_{observed k} p_k.
pub fn true_missing_mass(dist: &Distribution, freq: &FrequencyTable) -> Result<f64> {
    let mut seen = Kahan::default();
    for &k in freq.counts.keys() {
        seen.add(dist.prob(k)?);
    }
    Ok((1.0 - seen.sum()).clamp(0.0, 1.0))
}

fn check_v(freq: &FrequencyTable, v: u64) -> Result<()> {
    if v == 0 || v >= freq.n {
        Err(Error::InvalidV { v, n: freq.n })
    } else {
        Ok(())
    }
}

/// Z_{1,v} = Σ_k y_k·(n−y_k)_v·(n−1−v)!/n!, with (m)_v the falling factorial.
pub fn z1v(freq: &FrequencyTable, v: u64) -> Result<f64> {
    check_v(freq, v)?;
    Ok(if freq.n <= EXACT_FACTORIAL_LIMIT {
        z1v_exact(freq, v)
    } else {
        z1v_log_gamma(freq, v)
    })
}

fn falling(m: u64, v: u64) -> u128 {
    if m < v {
        return 0;
    }
    (m - v + 1..=m).map(u128::from).product()
}

fn factorial(m: u64) -> u128 {
    (1..=m).map(u128::from).product()
}

/// Integer path, valid for n <= 33 (the numerator is at most n!).
#[doc(hidden)]
pub fn z1v_exact(freq: &FrequencyTable, v: u64) -> f64 {
    let n = freq.n;
    let tail = factorial(n - 1 - v);
    let num: u128 = freq
        .counts
        .values()
        .map(|&y| u128::from(y) * falling(n - y, v) * tail)
        .sum();
    num as f64 / factorial(n) as f64
}

#[doc(hidden)]
pub fn z1v_log_gamma(freq: &FrequencyTable, v: u64) -> f64 {
    let n = freq.n as f64;
    let vf = v as f64;
    let common = ln_gamma(n - vf) - ln_gamma(n + 1.0);
    freq.counts
        .values()
        .filter(|&&y| freq.n - y >= v)
        .map(|&y| {
            let m = (freq.n - y) as f64;
            y as f64 * (ln_gamma(m + 1.0) - ln_gamma(m - vf + 1.0) + common).exp()
        })
        .collect::<Kahan>()
        .sum()
}

/// t̂_v = v·Z_{1,v}.
pub fn t_hat(freq: &FrequencyTable, v: u64) -> Result<f64> {
    Ok(v as f64 * z1v(freq, v)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub v_values: Vec<u64>,
    pub z1v: Vec<f64>,
    pub t_hat: Vec<f64>,
}

pub fn estimator_report(freq: &FrequencyTable, vs: &[u64]) -> Result<EstimatorReport> {
    let z = vs
        .iter()
        .map(|&v| z1v(freq, v))
        .collect::<Result<Vec<_>>>()?;
    let t = vs.iter().zip(&z).map(|(&v, &z)| v as f64 * z).collect();
    Ok(EstimatorReport {
        v_values: vs.to_vec(),
        z1v: z,
        t_hat: t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    Z1v(u64),
    Turing,
    MissingMass,
}

/// Probabilities rounded to 15 decimals and renormalized, so decimal inputs
/// such as 0.3 are taken at face value.
fn rational_probs(p: &[f64]) -> Vec<BigRational> {
    let scale = BigInt::from(10u64.pow(15));
    let raw: Vec<BigRational> = p
        .iter()
        .map(|&x| BigRational::new(BigInt::from((x * 1e15).round() as i64), scale.clone()))
        .collect();
    let total: BigRational = raw.iter().cloned().sum();
    raw.into_iter().map(|r| r / &total).collect()
}

/// E[statistic] over all samples of size n, by enumerating every count vector.
pub fn exact_expectation(dist: &Distribution, n: u64, statistic: Statistic) -> Result<BigRational> {
    let p_all = dist
        .finite_probs()
        .ok_or_else(|| Error::TooLarge(format!("{} has infinite support", dist.spec())))?;
    let p: Vec<f64> = p_all.iter().copied().filter(|&x| x > 0.0).collect();
    if p.len() > ORACLE_MAX_SUPPORT || n > ORACLE_MAX_N {
        return Err(Error::TooLarge(format!(
            "K = {}, n = {n}; limits are K <= {ORACLE_MAX_SUPPORT}, n <= {ORACLE_MAX_N}",
            p.len()
        )));
    }
    if n == 0 {
        return Err(Error::params("n must be at least 1"));
    }
    if let Statistic::Z1v(v) = statistic {
        if v == 0 || v >= n {
            return Err(Error::InvalidV { v, n });
        }
    }
    let probs = rational_probs(&p);
    let fact: Vec<BigInt> = (0..=n)
        .scan(BigInt::one(), |f, i| {
            if i > 0 {
                *f *= BigInt::from(i);
            }
            Some(f.clone())
        })
        .collect();
    // powers[k][y] = p_k^y
    let powers: Vec<Vec<BigRational>> = probs
        .iter()
        .map(|pk| {
            (0..=n)
                .scan(BigRational::one(), |acc, i| {
                    if i > 0 {
                        *acc *= pk;
                    }
                    Some(acc.clone())
                })
                .collect()
        })
        .collect();

    let mut total = BigRational::zero();
    let mut y = vec![0u64; probs.len()];
    enumerate(&mut y, 0, n, &mut |y| {
        let mut weight = BigRational::from_integer(fact[n as usize].clone());
        for (k, &yk) in y.iter().enumerate() {
            weight /= BigRational::from_integer(fact[yk as usize].clone());
            weight *= &powers[k][yk as usize];
        }
        let value = match statistic {
            Statistic::Z1v(v) => {
                let num: BigInt = y
                    .iter()
                    .map(|&yk| BigInt::from(yk) * BigInt::from(falling(n - yk, v)))
                    .sum::<BigInt>()
                    * &fact[(n - 1 - v) as usize];
                BigRational::new(num, fact[n as usize].clone())
            }
            Statistic::Turing => {
                let n1 = y.iter().filter(|&&yk| yk == 1).count();
                BigRational::new(BigInt::from(n1), BigInt::from(n))
            }
            Statistic::MissingMass => y
                .iter()
                .zip(&probs)
                .filter(|(&yk, _)| yk == 0)
                .map(|(_, pk)| pk.clone())
                .sum(),
        };
        total += weight * value;
    });
    Ok(total)
}

fn enumerate(y: &mut Vec<u64>, pos: usize, left: u64, visit: &mut impl FnMut(&[u64])) {
    if pos + 1 == y.len() {
        y[pos] = left;
        visit(y);
        return;
    }
    for take in 0..=left {
        y[pos] = take;
        enumerate(y, pos + 1, left - take, visit);
    }
}

/// Nearest f64 to an exact expectation.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
