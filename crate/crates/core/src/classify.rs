//! Domain verdicts: exact ones where a theorem covers the family, and
//! threshold-based readings of the t_n trajectory otherwise.

use std::f64::consts::E;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, FamilySpec};
use crate::dominance::{dominates, DominanceConfig, DominanceVerdict};
use crate::error::{Error, Result};
use crate::tail_index::{index_series, tn, SampleSize, DEFAULT_EPS};

/// Fewest schedule points `classify_numeric` accepts.
pub const MIN_SCHEDULE_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Domain0,
    Domain1,
    Domain2,
    Transient,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub n: SampleSize,
    pub t_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Per-doubling ratio t_{2n}/t_n, worst case over the later half.
    pub doubling_ratio: Option<f64>,
    /// Slope of ln t_n against ln n over the later half.
    pub growth_exponent: Option<f64>,
    /// max − min of t_n over the later half.
    pub band_width: Option<f64>,
}

/// Cutoffs for reading a domain off a finite trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub theta0: f64,
    pub theta2: f64,
    pub band_floor: f64,
    pub band_ceiling: f64,
    pub min_decades: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            theta0: 1e-6,
            theta2: 10.0,
            band_floor: (-1.0f64).exp() - 0.1,
            band_ceiling: 10.0,
            min_decades: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainVerdict {
    pub domain: Domain,
    pub method: Method,
    pub evidence: Vec<Evidence>,
    pub diagnostics: Diagnostics,
    pub citation: Option<String>,
    pub thresholds: Option<Thresholds>,
}

impl DomainVerdict {
    fn analytic(domain: Domain, citation: &str) -> Self {
        DomainVerdict {
            domain,
            method: Method::Analytic,
            evidence: Vec::new(),
            diagnostics: Diagnostics::default(),
            citation: Some(citation.to_string()),
            thresholds: None,
        }
    }
}

const FINITE: &str = "Theorem 1: t_n -> 0 exactly when the effective cardinality is finite";
const POWER: &str = "Theorem 2: p_k >= c k^-lambda for large k gives t_n -> infinity";
const GEOMETRIC: &str =
    "Corollary 2: geometric, Gaussian-type and tilted geometric tails are in Domain 1";
const DOMINATED: &str =
    "Theorem 4: a distribution dominated by a Domain 1 distribution is in Domain 1";
const DIFFUSION: &str =
    "diffusion construction: t_n diverges along run starts and stays bounded just before them";

/// Verdict from the theorem that covers the family.
///
/// Constructed families over a Domain 2 base inherit Domain 2 because each
/// term stays above a base term at a comparable index (p_k >= q_{2k} after
/// congregation, p_k >= q_{k+1} after pair averaging). Over a Domain 1 base
/// the verdict needs the dominance scan to pass; when it does not, no theorem
/// applies and the result is [`Error::NoAnalyticRule`].
pub fn classify_analytic(dist: &Distribution) -> Result<DomainVerdict> {
    classify_spec(dist.spec(), dist)
}

fn classify_spec(spec: &FamilySpec, dist: &Distribution) -> Result<DomainVerdict> {
    Ok(match spec {
        FamilySpec::Finite { .. } => DomainVerdict::analytic(Domain::Domain0, FINITE),
        FamilySpec::Power { .. } | FamilySpec::LogPower { .. } => {
            DomainVerdict::analytic(Domain::Domain2, POWER)
        }
        FamilySpec::Geometric { .. }
        | FamilySpec::GaussianType { .. }
        | FamilySpec::TiltedGeometric { .. } => DomainVerdict::analytic(Domain::Domain1, GEOMETRIC),
        FamilySpec::Diffusion { .. } => DomainVerdict::analytic(Domain::Transient, DIFFUSION),
        FamilySpec::Congregated { base, .. } | FamilySpec::PairAveraged { base, .. } => {
            let base_dist = Distribution::new((**base).clone())?;
            let inner = classify_spec(base, &base_dist)?;
            match inner.domain {
                Domain::Domain2 => DomainVerdict::analytic(Domain::Domain2, POWER),
                Domain::Domain1 => {
                    let report = dominates(&base_dist, dist, &DominanceConfig::default())?;
                    match report.verdict {
                        DominanceVerdict::DominatedWithin(_) => {
                            DomainVerdict::analytic(Domain::Domain1, DOMINATED)
                        }
                        _ => {
                            return Err(Error::NoAnalyticRule(format!(
                                "{spec}: base {base} does not dominate it at depth {}",
                                report.depth
                            )))
                        }
                    }
                }
                _ => {
                    return Err(Error::NoAnalyticRule(format!(
                        "{spec}: base {base} is not in Domain 1 or 2"
                    )))
                }
            }
        }
    })
}

/// Subsequences along which a transient distribution should grow and stay
/// bounded respectively.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Probes {
    pub growing: Vec<SampleSize>,
    pub bounded: Vec<SampleSize>,
}

/// Reads a domain off t_n along `schedule`, with optional probe subsequences
/// for detecting transience.
pub fn classify_numeric(
    dist: &Distribution,
    schedule: &[u64],
    thresholds: &Thresholds,
    probes: Option<&Probes>,
) -> Result<DomainVerdict> {
    if schedule.len() < MIN_SCHEDULE_POINTS {
        return Err(Error::ScheduleTooShort(format!(
            "{} points, need at least {MIN_SCHEDULE_POINTS}",
            schedule.len()
        )));
    }
    let decades = (*schedule.last().unwrap() as f64 / schedule[0] as f64).log10();
    if decades < thresholds.min_decades {
        return Err(Error::ScheduleTooShort(format!(
            "spans {decades:.2} decades, need {}",
            thresholds.min_decades
        )));
    }
    let series = index_series(dist, schedule, DEFAULT_EPS)?;
    let t = series.values();
    let ns: Vec<f64> = schedule.iter().map(|&n| n as f64).collect();
    let mut evidence: Vec<Evidence> = schedule
        .iter()
        .zip(&t)
        .map(|(&n, &t_n)| Evidence {
            n: SampleSize::Exact(n),
            t_n,
        })
        .collect();

    let half = t.len() / 2;
    let late_t = &t[half..];
    let late_n = &ns[half..];
    let last = *t.last().unwrap();

    let doubling_ratio = late_n
        .windows(2)
        .zip(late_t.windows(2))
        .map(|(n, t)| {
            if t[0] > 0.0 {
                (t[1] / t[0]).powf(1.0 / (n[1] / n[0]).log2())
            } else {
                0.0
            }
        })
        .fold(0.0f64, f64::max);
    let growth_exponent = slope(late_n, late_t);
    let late_max = late_t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let late_min = late_t.iter().copied().fold(f64::INFINITY, f64::min);
    let overall_max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let increasing = late_t.windows(2).all(|w| w[1] > w[0]);
    let diagnostics = Diagnostics {
        doubling_ratio: Some(doubling_ratio),
        growth_exponent,
        band_width: Some(late_max - late_min),
    };

    let mut domain = if last < thresholds.theta0 && doubling_ratio < 0.5 {
        Domain::Domain0
    } else if last > thresholds.theta2 && increasing && growth_exponent.is_some_and(|g| g > 0.1) {
        Domain::Domain2
    } else if overall_max <= thresholds.band_ceiling
        && late_max >= thresholds.band_floor
        && !(increasing && growth_exponent.is_some_and(|g| g > 0.1))
    {
        Domain::Domain1
    } else {
        Domain::Inconclusive
    };

    if let Some(probes) = probes.filter(|p| !p.growing.is_empty() && !p.bounded.is_empty()) {
        let grow = probes
            .growing
            .iter()
            .map(|&n| tn(dist, n, DEFAULT_EPS).map(|v| v.value))
            .collect::<Result<Vec<_>>>()?;
        let bound = probes
            .bounded
            .iter()
            .map(|&n| tn(dist, n, DEFAULT_EPS).map(|v| v.value))
            .collect::<Result<Vec<_>>>()?;
        let grows = grow.windows(2).all(|w| w[1] > w[0])
            && grow.last().is_some_and(|&g| g > thresholds.theta2);
        let stays = bound.iter().all(|&b| b <= thresholds.band_ceiling);
        evidence.extend(
            probes
                .growing
                .iter()
                .zip(&grow)
                .map(|(&n, &t_n)| Evidence { n, t_n }),
        );
        evidence.extend(
            probes
                .bounded
                .iter()
                .zip(&bound)
                .map(|(&n, &t_n)| Evidence { n, t_n }),
        );
        if grows && stays {
            domain = Domain::Transient;
        }
    }

    Ok(DomainVerdict {
        domain,
        method: Method::Numeric,
        evidence,
        diagnostics,
        citation: None,
        thresholds: Some(*thresholds),
    })
}

/// Least-squares slope of ln y on ln x over positive points.
fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub k: u64,
    pub n_k: SampleSize,
    pub t_n_k: f64,
}

/// t_n along n_k = ⌊1/p_k⌋.
pub fn subsequence_probe(
    dist: &Distribution,
    k_range: RangeInclusive<u64>,
) -> Result<Vec<ProbePoint>> {
    if dist.is_finite() {
        return Err(Error::FiniteSupport);
    }
    k_range
        .map(|k| {
            let n_k = match dist.dyadic_exponent(k) {
                Some(e) => SampleSize::Pow2(e).normalize(),
                None => SampleSize::from_f64_floor(1.0 / dist.prob(k)?)?,
            };
            Ok(ProbePoint {
                k,
                n_k,
                t_n_k: tn(dist, n_k, DEFAULT_EPS)?.value,
            })
        })
        .collect()
}

/// One row of the diffusion run table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunEvidence {
    pub stage: u32,
    pub diffusion: u64,
    pub run_exponent: u32,
    /// n_i = 2^{run exponent} = 1/p_{k_i}
    pub n_i: SampleSize,
    pub t_n_i: f64,
    /// (d_i + 1)(1 − 1/n_i)^{n_i}
    pub lower_bound: f64,
    /// Exponent of p_{k_i − (d_i+1)}
    pub probe_exponent: u32,
    /// m_i = 1/p_{k_i − (d_i+1)} − 1
    pub m_i: SampleSize,
    pub t_m_i: f64,
}

/// Probe subsequences of the diffusion sequence, skipping the last stage whose
/// tail is not generated.
pub fn diffusion_probes(dist: &Distribution) -> Result<Probes> {
    let runs = dist
        .diffusion_runs()
        .ok_or_else(|| Error::params(format!("{} is not a diffusion sequence", dist.spec())))?;
    let usable = &runs[..runs.len().saturating_sub(1)];
    Ok(Probes {
        growing: usable
            .iter()
            .map(|r| SampleSize::Pow2(r.exponent))
            .collect(),
        bounded: usable
            .iter()
            .map(|r| SampleSize::Pow2Minus1(r.probe_exponent))
            .collect(),
    })
}

/// t at both probe subsequences for every run whose tail is generated.
pub fn diffusion_run_table(dist: &Distribution, eps: f64) -> Result<Vec<RunEvidence>> {
    let runs = dist
        .diffusion_runs()
        .ok_or_else(|| Error::params(format!("{} is not a diffusion sequence", dist.spec())))?;
    let usable = &runs[..runs.len().saturating_sub(1)];
    usable
        .iter()
        .map(|r| {
            let n_i = SampleSize::Pow2(r.exponent).normalize();
            let m_i = SampleSize::Pow2Minus1(r.probe_exponent).normalize();
            // (1 − 1/n)^n = exp(n ln(1 − 1/n)), which is e^{-1} to f64 precision once n overflows
            let nf = n_i.to_f64();
            let ln_pow = if nf.is_finite() {
                nf * (-1.0 / nf).ln_1p()
            } else {
                -1.0
            };
            Ok(RunEvidence {
                stage: r.stage,
                diffusion: r.diffusion,
                run_exponent: r.exponent,
                n_i,
                t_n_i: tn(dist, n_i, eps)?.value,
                lower_bound: (r.diffusion + 1) as f64 * ln_pow.exp(),
                probe_exponent: r.probe_exponent,
                m_i,
                t_m_i: tn(dist, m_i, eps)?.value,
            })
        })
        .collect()
}

/// The Domain 1 floor e^{-1} used by the subsequence probes.
pub fn subsequence_floor() -> f64 {
    1.0 / E
}
