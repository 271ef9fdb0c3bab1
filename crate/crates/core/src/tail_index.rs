//! ζ_{1,n} = Σ p_k(1−p_k)^n, the tail index t_n = n·ζ_{1,n}, and the
//! quantities used to study their limits.
//!
//! Infinite sums are split at a cutoff K. The head is summed directly; the
//! remainder Σ_{k>K} p_k(1−p_k)^n is enclosed by alternating partial sums of
//! the binomial expansion,
//!
//! ```text
//! Σ_{j≤J} (−1)^j C(n,j) S_{j+1}(K),   S_m(K) = Σ_{k>K} p_k^m,
//! ```
//!
//! which over-estimate for even J and under-estimate for odd J. The
//! exponential kernel e^{−np} is handled the same way with n^j/j!. Each
//! S_m(K) comes as a certified bracket from the distribution, so the reported
//! value is a lower bound and value + trunc_error an upper bound, up to
//! floating-point rounding of the head.

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{Bracket, Distribution, FamilySpec};
use crate::error::{Error, Result};
use crate::special::{gamma, lower_gamma};
use crate::util::Kahan;

/// Default absolute accuracy on t_n.
pub const DEFAULT_EPS: f64 = 1e-9;

const FIRST_CHECKPOINT: u64 = 16;
const MAX_TERMS: u64 = 1 << 28;
const MAX_EXPANSION: usize = 64;

/// A sample size n, possibly far beyond u64. Serialized in its text form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SampleSize {
    Exact(u64),
    /// n = 2^e
    Pow2(u32),
    /// n = 2^e − 1
    Pow2Minus1(u32),
    /// A finite float at or above 2^64, hence an integer.
    Large(f64),
}

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

impl SampleSize {
    /// ⌊x⌋ as a sample size.
    pub fn from_f64_floor(x: f64) -> Result<Self> {
        if !(x >= 1.0 && x.is_finite()) {
            return Err(Error::params(format!("{x:e} is not a finite sample size")));
        }
        Ok(if x < TWO_POW_64 {
            SampleSize::Exact(x as u64)
        } else {
            SampleSize::Large(x)
        })
    }

    /// Collapses forms that fit in a u64.
    pub fn normalize(self) -> Self {
        match self {
            SampleSize::Large(x) if x < TWO_POW_64 => SampleSize::Exact(x as u64),
            SampleSize::Pow2(e) if e < 64 => SampleSize::Exact(1u64 << e),
            SampleSize::Pow2Minus1(e) if e <= 64 => SampleSize::Exact(((1u128 << e) - 1) as u64),
            other => other,
        }
    }

    pub fn exact(self) -> Option<u64> {
        match self.normalize() {
            SampleSize::Exact(n) => Some(n),
            _ => None,
        }
    }

    pub fn ln(self) -> f64 {
        match self.normalize() {
            SampleSize::Exact(n) => (n as f64).ln(),
            SampleSize::Pow2(e) => e as f64 * LN_2,
            SampleSize::Pow2Minus1(e) => e as f64 * LN_2 + (-(-(e as f64) * LN_2).exp()).ln_1p(),
            SampleSize::Large(x) => x.ln(),
        }
    }

    /// n as a float; infinite past the f64 range.
    pub fn to_f64(self) -> f64 {
        match self.normalize() {
            SampleSize::Exact(n) => n as f64,
            SampleSize::Pow2(e) | SampleSize::Pow2Minus1(e) => {
                if e > 1023 {
                    f64::INFINITY
                } else {
                    2f64.powi(e as i32)
                }
            }
            SampleSize::Large(x) => x,
        }
    }

    fn check(self) -> Result<Self> {
        match self.normalize() {
            SampleSize::Exact(0) => Err(Error::params("n must be at least 1")),
            SampleSize::Large(x) if !x.is_finite() => Err(Error::params("n must be finite")),
            other => Ok(other),
        }
    }

    /// (1 − p)^n by repeated squaring.
    fn power_of(self, base: f64) -> f64 {
        match self.normalize() {
            SampleSize::Exact(n) => powu(base, n),
            SampleSize::Pow2(e) => (0..e).fold(base, |acc, _| acc * acc),
            SampleSize::Pow2Minus1(e) => (0..e).fold(base, |acc, _| acc * acc) / base,
            SampleSize::Large(x) => base.powf(x),
        }
    }
}

impl From<u64> for SampleSize {
    fn from(n: u64) -> Self {
        SampleSize::Exact(n)
    }
}

impl From<SampleSize> for String {
    fn from(n: SampleSize) -> String {
        n.to_string()
    }
}

impl TryFrom<String> for SampleSize {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for SampleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.normalize() {
            SampleSize::Exact(n) => write!(f, "{n}"),
            SampleSize::Pow2(e) => write!(f, "2^{e}"),
            SampleSize::Pow2Minus1(e) => write!(f, "2^{e}-1"),
            SampleSize::Large(x) => write!(f, "{x:e}"),
        }
    }
}

impl FromStr for SampleSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let t = s.trim();
        if let Some(rest) = t.strip_prefix("2^") {
            let (exp, minus) = match rest.strip_suffix("-1") {
                Some(e) => (e, true),
                None => (rest, false),
            };
            let e: u32 = exp.parse().map_err(|_| bad("exponent is not an integer"))?;
            let n = if minus {
                SampleSize::Pow2Minus1(e)
            } else {
                SampleSize::Pow2(e)
            };
            return n.check().map_err(|_| bad("n must be at least 1"));
        }
        let n = match t.parse::<u64>() {
            Ok(n) => n,
            Err(_) => {
                let x: f64 = t.parse().map_err(|_| bad("not a sample size"))?;
                if !(x >= 1.0 && x.fract() == 0.0 && x.is_finite()) {
                    return Err(bad("not a positive integer"));
                }
                return SampleSize::from_f64_floor(x).map_err(|_| bad("not a positive integer"));
            }
        };
        SampleSize::Exact(n)
            .check()
            .map_err(|_| bad("n must be at least 1"))
    }
}

fn powu(mut base: f64, mut n: u64) -> f64 {
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

/// One evaluation of ζ_{1,n} or t_n with its certified truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexValue {
    pub n: SampleSize,
    pub value: f64,
    pub trunc_error: f64,
    pub terms_used: u64,
}

impl IndexValue {
    pub fn bracket(&self) -> Bracket {
        Bracket::new(self.value, self.value + self.trunc_error)
    }
}

/// t_n along a schedule of sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub schedule: Vec<u64>,
    pub points: Vec<IndexValue>,
}

impl IndexSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    /// (1 − p)^n
    Binomial,
    /// e^{−np}
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scale {
    /// Σ p_k K_n(p_k)
    Unit,
    /// Σ n p_k K_n(p_k), evaluated as x e^{−x r} with x = n p_k
    BySize,
}

#[derive(Debug, Clone, Copy)]
struct Partial {
    value: f64,
    trunc_error: f64,
    terms_used: u64,
}

fn term(n: SampleSize, kernel: Kernel, scale: Scale, p: f64, ln_p: impl Fn() -> f64) -> f64 {
    if p == 0.0 && scale == Scale::Unit {
        return 0.0;
    }
    match scale {
        Scale::Unit => {
            let survive = match kernel {
                Kernel::Binomial if p >= 1.0 => 0.0,
                Kernel::Binomial if p > 0.99 => n.power_of(1.0 - p),
                Kernel::Binomial => (n.to_f64() * (-p).ln_1p()).exp(),
                Kernel::Poisson => (-n.to_f64() * p).exp(),
            };
            p * survive
        }
        Scale::BySize => {
            let ln_x = n.ln() + ln_p();
            if ln_x > 700.0 || (kernel == Kernel::Binomial && p >= 1.0) {
                return 0.0;
            }
            let x = ln_x.exp();
            let rate = match kernel {
                Kernel::Binomial if p > 0.0 => -(-p).ln_1p() / p,
                _ => 1.0,
            };
            x * (-x * rate).exp()
        }
    }
}

/// Bracket for Σ_{k>K} (scale) p_k K_n(p_k).
fn tail_bracket(
    dist: &Distribution,
    n: SampleSize,
    kernel: Kernel,
    scale: Scale,
    big_k: u64,
) -> Bracket {
    let nf = n.to_f64();
    let factor = match scale {
        Scale::Unit => 1.0,
        Scale::BySize => nf,
    };
    // every term is at most (scale) p_k
    let crude_hi = match scale {
        Scale::Unit => dist.tail_mass_bound(big_k),
        Scale::BySize => (n.ln() + dist.ln_tail_mass_bound(big_k)).exp(),
    };
    if !nf.is_finite() {
        return Bracket::new(0.0, crude_hi);
    }
    let mut coeff = 1.0;
    let mut upper = 0.0;
    let mut lower = 0.0;
    let mut best_hi = f64::INFINITY;
    let mut best_lo = 0.0f64;
    for j in 0..MAX_EXPANSION {
        if j > 0 {
            coeff *= match kernel {
                Kernel::Binomial => (nf - (j - 1) as f64) / j as f64,
                Kernel::Poisson => nf / j as f64,
            };
        }
        if coeff <= 0.0 {
            // binomial expansion terminated: both running sums are final
            best_hi = best_hi.min(upper);
            best_lo = best_lo.max(lower);
            break;
        }
        if !coeff.is_finite() {
            break;
        }
        let s = dist.tail_power_sum(big_k, j as u32 + 1);
        if !(s.hi >= f64::MIN_POSITIVE) {
            // an underflowed power sum would pass for an exact zero
            break;
        }
        if j % 2 == 0 {
            upper += coeff * s.hi;
            lower += coeff * s.lo;
            best_hi = best_hi.min(upper);
        } else {
            upper -= coeff * s.lo;
            lower -= coeff * s.hi;
            best_lo = best_lo.max(lower);
            if coeff * s.hi <= 1e-17 * best_hi.abs() {
                break;
            }
        }
    }
    let hi = (best_hi * factor).min(crude_hi).max(0.0);
    let lo = (best_lo * factor).clamp(0.0, hi);
    Bracket::new(lo, hi)
}

fn kernel_sum(
    dist: &Distribution,
    n: SampleSize,
    kernel: Kernel,
    scale: Scale,
    target: f64,
) -> Result<Partial> {
    let term_at = |k: u64| -> Result<f64> {
        let p = dist.prob(k)?;
        Ok(term(n, kernel, scale, p, || {
            dist.ln_prob(k).unwrap_or(f64::NEG_INFINITY)
        }))
    };

    if let Some(p) = dist.finite_probs() {
        // Sorting the terms makes the sum independent of the letter order.
        let mut terms: Vec<f64> = p
            .iter()
            .map(|&x| term(n, kernel, scale, x, || x.ln()))
            .collect();
        terms.sort_by(f64::total_cmp);
        return Ok(Partial {
            value: terms.into_iter().collect::<Kahan>().sum(),
            trunc_error: 0.0,
            terms_used: p.len() as u64,
        });
    }

    let limit = dist.depth_limit().unwrap_or(u64::MAX);
    let mut acc = Kahan::default();
    let mut k = 0u64;
    let mut checkpoint = FIRST_CHECKPOINT.min(limit);
    loop {
        while k < checkpoint {
            k += 1;
            acc.add(term_at(k)?);
        }
        let tail = tail_bracket(dist, n, kernel, scale, k);
        // below this the bracket endpoints cannot be resolved in f64
        let floor = 8.0 * f64::EPSILON * tail.hi;
        if tail.hi.is_finite() && tail.width() <= target.max(floor) {
            return Ok(Partial {
                value: acc.sum() + tail.lo,
                trunc_error: tail.width(),
                terms_used: k,
            });
        }
        if k >= limit {
            return Err(Error::DepthExceeded {
                index: k + 1,
                limit,
            });
        }
        if k >= MAX_TERMS {
            return Err(Error::TruncationBudget {
                terms: k,
                width: tail.width(),
            });
        }
        checkpoint = (k + (k / 4).max(16)).min(limit);
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::params(format!(
            "eps must be positive and finite, got {eps}"
        )))
    }
}

/// ζ_{1,n} = Σ p_k(1−p_k)^n with trunc_error ≤ eps/n.
pub fn zeta1(dist: &Distribution, n: impl Into<SampleSize>, eps: f64) -> Result<IndexValue> {
    let n = n.into().check()?;
    check_eps(eps)?;
    let s = kernel_sum(dist, n, Kernel::Binomial, Scale::Unit, eps / n.to_f64())?;
    Ok(IndexValue {
        n,
        value: s.value,
        trunc_error: s.trunc_error,
        terms_used: s.terms_used,
    })
}

/// t_n = n·ζ_{1,n} with trunc_error ≤ eps.
///
/// For n that fits in a u64 the result is exactly `n as f64` times the
/// value of [`zeta1`]. Larger n are evaluated directly in t-space, where
/// ζ_{1,n} itself would underflow.
pub fn tn(dist: &Distribution, n: impl Into<SampleSize>, eps: f64) -> Result<IndexValue> {
    let n = n.into().check()?;
    check_eps(eps)?;
    match n {
        SampleSize::Exact(m) => {
            let z = zeta1(dist, n, eps)?;
            let nf = m as f64;
            Ok(IndexValue {
                n,
                value: nf * z.value,
                trunc_error: nf * z.trunc_error,
                terms_used: z.terms_used,
            })
        }
        _ => {
            let s = kernel_sum(dist, n, Kernel::Binomial, Scale::BySize, eps)?;
            Ok(IndexValue {
                n,
                value: s.value,
                trunc_error: s.trunc_error,
                terms_used: s.terms_used,
            })
        }
    }
}

/// Builds the geometric schedule start, start·factor, ... up to stop.
pub fn geometric_schedule(start: u64, stop: u64, factor: f64) -> Result<Vec<u64>> {
    if start == 0 || stop < start {
        return Err(Error::params(format!(
            "schedule {start}..{stop} is empty or starts at 0"
        )));
    }
    if !(factor > 1.0 && factor.is_finite()) {
        return Err(Error::params(format!(
            "schedule factor must exceed 1, got {factor}"
        )));
    }
    let mut out = vec![start];
    let mut j = 1i32;
    loop {
        let next = (start as f64 * factor.powi(j)).round();
        if next > stop as f64 {
            break;
        }
        let next = next as u64;
        if next > *out.last().unwrap() {
            out.push(next);
        }
        j += 1;
    }
    Ok(out)
}

/// t_n at every point of a strictly increasing schedule.
pub fn index_series(dist: &Distribution, schedule: &[u64], eps: f64) -> Result<IndexSeries> {
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::params("schedule must be strictly increasing"));
    }
    let points = schedule
        .iter()
        .map(|&n| tn(dist, n, eps))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexSeries {
        schedule: schedule.to_vec(),
        points,
    })
}

/// n^{1−δ}·Σ p_k(1−p_k)^n next to its exponential surrogate n^{1−δ}·Σ p_k e^{−np_k}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledPair {
    pub n: u64,
    pub delta: f64,
    pub binomial: f64,
    pub poisson: f64,
    /// Larger of the two truncation errors, on the scaled values.
    pub trunc_error: f64,
}

impl ScaledPair {
    pub fn relative_gap(&self) -> f64 {
        (self.binomial - self.poisson).abs() / self.binomial.abs().max(self.poisson.abs())
    }
}

pub fn scaled_pair(dist: &Distribution, n: u64, delta: f64, eps: f64) -> Result<ScaledPair> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::params(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let size = SampleSize::Exact(n).check()?;
    check_eps(eps)?;
    let target = eps / n as f64;
    let b = kernel_sum(dist, size, Kernel::Binomial, Scale::Unit, target)?;
    let p = kernel_sum(dist, size, Kernel::Poisson, Scale::Unit, target)?;
    let scale = (n as f64).powf(1.0 - delta);
    Ok(ScaledPair {
        n,
        delta,
        binomial: scale * b.value,
        poisson: scale * p.value,
        trunc_error: scale * b.trunc_error.max(p.trunc_error),
    })
}

/// lim_{n→∞} n^{1/λ}·ζ_{1,n} for p_k ~ c·k^{−λ}: c^{1/λ}·λ^{−1}·Γ(1−1/λ).
pub fn power_tail_limit(c: f64, lambda: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::params(format!("c must be positive, got {c}")));
    }
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::params(format!("lambda must exceed 1, got {lambda}")));
    }
    Ok(c.powf(1.0 / lambda) / lambda * gamma(1.0 - 1.0 / lambda))
}

/// Position of n on a geometric tail: the k* with p_{k*+1} < 1/(n+1) ≤ p_{k*}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationState {
    pub n: u64,
    pub k_star: u64,
    pub c_of_n: f64,
}

impl OscillationState {
    /// n/(n+1) ≤ c(n) ≤ e·n/(n+1), which holds whenever p_{k*}/p_{k*+1} ≤ e.
    pub fn sandwich_holds(&self) -> bool {
        let r = self.n as f64 / (self.n as f64 + 1.0);
        r <= self.c_of_n && self.c_of_n <= E * r
    }
}

pub fn oscillation_state(dist: &Distribution, n: u64) -> Result<OscillationState> {
    if dist.is_finite() {
        return Err(Error::FiniteSupport);
    }
    if n == 0 {
        return Err(Error::params("n must be at least 1"));
    }
    let m = n as f64 + 1.0;
    let reached = |k: u64| -> Result<bool> { Ok(dist.prob(k)? * m >= 1.0) };
    let start = dist.monotone_from();
    if !reached(start)? {
        return Err(Error::params(format!(
            "no p_k with k >= {start} reaches 1/(n+1) for n = {n}"
        )));
    }
    // gallop to a failing index, then bisect
    let mut good = start;
    let mut step = 1u64;
    let mut bad = loop {
        let probe = good + step;
        if !reached(probe)? {
            break probe;
        }
        good = probe;
        step *= 2;
    };
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if reached(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(OscillationState {
        n,
        k_star: good,
        c_of_n: n as f64 * dist.prob(good)?,
    })
}

/// Limiting profile t(c) = c Σ_{j≥0} e^j e^{−c e^j} + c Σ_{j≥1} e^{−j} e^{−c e^{−j}}
/// of t_n for base-e geometric tails.
pub fn oscillation_t(c: f64) -> f64 {
    const CAP: i32 = 200;
    let term = |j: i32| {
        let u = c * (j as f64).exp();
        u * (-u).exp()
    };
    let mut acc = Kahan::default();
    for j in 0..CAP {
        let t = term(j);
        acc.add(t);
        if t < 1e-16 * acc.sum() {
            break;
        }
    }
    for j in 1..CAP {
        let t = term(-j);
        acc.add(t);
        if t < 1e-16 * acc.sum() {
            break;
        }
    }
    acc.sum()
}

/// Sum against integral for f_n(x) = n^{1−1/λ}·c·x^{−λ}·e^{−ncx^{−λ}} over x ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmGap {
    pub n: u64,
    /// Σ_{k≥1} f_n(k)
    pub sum: f64,
    /// ∫_1^∞ f_n(x) dx
    pub integral: f64,
    /// f_n(1) + 2 f_n(x(n))
    pub bound: f64,
    /// x(n) = (nc)^{1/λ}, where f_n peaks
    pub x_peak: f64,
    /// f_n(x(n)), evaluated numerically
    pub peak: f64,
}

impl EmGap {
    pub fn holds(&self) -> bool {
        (self.sum - self.integral).abs() <= self.bound
    }
}

pub fn em_gap(dist: &Distribution, n: u64) -> Result<EmGap> {
    let lambda = match dist.spec() {
        FamilySpec::Power { lambda } => *lambda,
        other => {
            return Err(Error::params(format!(
                "em_gap needs a power family, got {other}"
            )))
        }
    };
    if n == 0 {
        return Err(Error::params("n must be at least 1"));
    }
    let c = dist.norm_constant();
    let nf = n as f64;
    let scale = nf.powf(1.0 - 1.0 / lambda);
    let f = |x: f64| {
        let u = nf * c * x.powf(-lambda);
        scale * (u / nf) * (-u).exp()
    };
    let s = kernel_sum(
        dist,
        SampleSize::Exact(n),
        Kernel::Poisson,
        Scale::Unit,
        1e-12 / nf,
    )?;
    let x_peak = (nf * c).powf(1.0 / lambda);
    let peak = f(x_peak);
    Ok(EmGap {
        n,
        sum: scale * s.value,
        integral: c.powf(1.0 / lambda) / lambda * lower_gamma(1.0 - 1.0 / lambda, nf * c),
        bound: f(1.0) + 2.0 * peak,
        x_peak,
        peak,
    })
}
