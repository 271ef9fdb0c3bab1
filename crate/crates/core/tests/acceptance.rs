//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints its own PASS/FAIL line.

use std::f64::consts::{E, PI};
use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use tailindex::classify::{diffusion_run_table, subsequence_floor, subsequence_probe};
use tailindex::dist::construct_congregated;
use tailindex::estimate::{exact_expectation, rational_to_f64, Statistic};
use tailindex::tail_index::{
    em_gap, geometric_schedule, oscillation_state, oscillation_t, power_tail_limit, scaled_pair,
};
use tailindex::{dominates, tn, zeta1, Distribution, DominanceConfig, DominanceVerdict};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn dist(s: &str) -> Distribution {
    Distribution::new(s.parse().expect("spec parses")).expect("spec is valid")
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Σ p(1−p)^n over an explicit vector.
fn zeta_direct(p: &[f64], n: u64) -> f64 {
    p.iter().map(|&x| x * (1.0 - x).powi(n as i32)).sum()
}

/// Vectors used by the exhaustive expectation checks.
fn oracle_grid() -> Vec<Vec<f64>> {
    vec![
        vec![0.5, 0.5],
        vec![0.7, 0.3],
        vec![0.5, 0.3, 0.2],
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        vec![0.4, 0.3, 0.2, 0.1],
        vec![0.25, 0.25, 0.25, 0.25],
    ]
}

fn finite(p: &[f64]) -> Distribution {
    let list: Vec<String> = p.iter().map(|x| x.to_string()).collect();
    dist(&format!("finite:p={}", list.join(";")))
}

fn power_gamma_limit() -> Outcome {
    let p = dist("power:lambda=2");
    let c = 6.0 / (PI * PI);
    // c^{1/2} · (1/2) · Γ(1/2) with Γ(1/2) = √π
    let reference = c.sqrt() * 0.5 * PI.sqrt();
    let lib = power_tail_limit(c, 2.0).map_err(|e| e.to_string())?;
    check(rel(lib, reference) < 1e-12, || {
        format!("limit {lib} vs reference {reference}")
    })?;
    check(rel(p.norm_constant(), c) < 1e-12, || {
        format!("normalizer {}", p.norm_constant())
    })?;
    let start = Instant::now();
    let z = zeta1(&p, 1_000_000u64, 1e-12).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let scaled = 1e3 * z.value;
    check(rel(scaled, reference) < 0.02, || {
        format!("sqrt(n) zeta = {scaled} vs {reference}")
    })?;
    check(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "sqrt(n) zeta = {scaled:.8}, limit {reference:.8}, rel {:.1e}, {elapsed:?}",
        rel(scaled, reference)
    ))
}

fn domain0_rate() -> Outcome {
    let u = dist("finite:p=0.1;0.1;0.1;0.1;0.1;0.1;0.1;0.1;0.1;0.1");
    let mut worst = 0.0f64;
    for e in 4..=20u32 {
        let n = 1u64 << e;
        let t = tn(&u, n, 1e-9).map_err(|e| e.to_string())?.value;
        let closed = n as f64 * 0.9f64.powf(n as f64);
        check(t <= closed * (1.0 + 1e-12), || {
            format!("t_{n} = {t:e} above n 0.9^n = {closed:e}")
        })?;
        if closed > 0.0 {
            worst = worst.max(rel(t, closed));
        } else {
            check(t == 0.0, || {
                format!("t_{n} = {t:e} where the closed form underflows")
            })?;
        }
    }
    check(worst < 1e-12, || format!("closed form mismatch {worst:e}"))?;
    let t12 = tn(&u, 4096u64, 1e-9).map_err(|e| e.to_string())?.value;
    check(t12 < 1e-50, || format!("t_4096 = {t12:e}"))?;
    Ok(format!(
        "t_n = n 0.9^n on 2^4..2^20 (max rel {worst:.1e}), t_4096 = {t12:.3e}"
    ))
}

fn unbiasedness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for p in oracle_grid() {
        let d = finite(&p);
        for n in [4u64, 5, 6, 8] {
            for v in 1..n {
                let e = rational_to_f64(
                    &exact_expectation(&d, n, Statistic::Z1v(v)).map_err(|e| e.to_string())?,
                );
                let z = zeta_direct(&p, v);
                worst = worst.max((e - z).abs());
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(worst < 1e-12, || format!("max |E Z - zeta| = {worst:e}"))?;
    check(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{cases} cases, max |E[Z_1v] - zeta_1v| = {worst:.1e}, {elapsed:?}"
    ))
}

fn turing_and_missing_mass() -> Outcome {
    let mut worst = 0.0f64;
    for p in oracle_grid() {
        let d = finite(&p);
        for n in [4u64, 5, 6, 8] {
            let turing = rational_to_f64(
                &exact_expectation(&d, n, Statistic::Turing).map_err(|e| e.to_string())?,
            );
            let missing = rational_to_f64(
                &exact_expectation(&d, n, Statistic::MissingMass).map_err(|e| e.to_string())?,
            );
            worst = worst.max((turing - zeta_direct(&p, n - 1)).abs());
            worst = worst.max((missing - zeta_direct(&p, n)).abs());
        }
    }
    check(worst < 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!(
        "E[N1/n] = zeta_(n-1), E[pi_0] = zeta_n, max deviation {worst:.1e}"
    ))
}

fn subsequence_floor_holds() -> Outcome {
    let floor = subsequence_floor() - 0.05;
    check((subsequence_floor() - (-1.0f64).exp()).abs() < 1e-15, || {
        "floor is not 1/e".into()
    })?;
    let mut lowest = f64::INFINITY;
    for s in ["geometric:a=e", "power:lambda=2"] {
        let points = subsequence_probe(&dist(s), 10..=25).map_err(|e| e.to_string())?;
        check(points.len() == 16, || {
            format!("{s}: {} points", points.len())
        })?;
        for pt in points {
            check(pt.t_n_k > floor, || {
                format!("{s}: t at k={} is {}", pt.k, pt.t_n_k)
            })?;
            lowest = lowest.min(pt.t_n_k);
        }
    }
    Ok(format!("min t_(n_k) = {lowest:.6} > {floor:.6}"))
}

fn geometric_oscillation() -> Outcome {
    let grid: Vec<f64> = (0..1000)
        .map(|i| 1.0 + (E - 1.0) * i as f64 / 999.0)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&c| oscillation_t(c)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    check(hi - lo > 1e-4, || format!("spread {}", hi - lo))?;
    check(lo > 0.9 && hi < 1.1, || format!("range [{lo}, {hi}]"))?;
    let g = dist("geometric:a=e");
    let mut worst = 0.0f64;
    for n in geometric_schedule(100_000, 10_000_000, 1.37).map_err(|e| e.to_string())? {
        let s = oscillation_state(&g, n).map_err(|e| e.to_string())?;
        let t = tn(&g, n, 1e-9).map_err(|e| e.to_string())?.value;
        worst = worst.max((t - oscillation_t(s.c_of_n)).abs());
    }
    check(worst < 5e-3, || format!("|t_n - t(c(n))| = {worst}"))?;
    Ok(format!(
        "t(c) in [{lo:.6}, {hi:.6}], spread {:.2e}, max |t_n - t(c(n))| = {worst:.1e}",
        hi - lo
    ))
}

fn c_sandwich() -> Outcome {
    let g = dist("geometric:a=e");
    let c0 = E - 1.0;
    let schedule = geometric_schedule(10, 100_000, 1.05).map_err(|e| e.to_string())?;
    for &n in &schedule {
        let s = oscillation_state(&g, n).map_err(|e| e.to_string())?;
        let nf = n as f64;
        let (lower, upper) = (nf / (nf + 1.0), E * nf / (nf + 1.0));
        check(lower <= s.c_of_n && s.c_of_n <= upper, || {
            format!("n={n}: c = {} outside [{lower}, {upper}]", s.c_of_n)
        })?;
        let expected = (c0 * (nf + 1.0)).ln().floor() as u64;
        check(s.k_star == expected, || {
            format!("n={n}: k* = {} expected {expected}", s.k_star)
        })?;
    }
    Ok(format!(
        "{} sample sizes in [10, 1e5], sandwich and k* exact",
        schedule.len()
    ))
}

fn domain_t() -> Outcome {
    let d = dist("diffusion:stages=13");
    let rows = diffusion_run_table(&d, 1e-9).map_err(|e| e.to_string())?;
    check(rows.len() >= 12, || format!("only {} runs", rows.len()))?;
    let mut min_late = f64::INFINITY;
    let mut max_m = 0.0f64;
    for r in &rows {
        check(r.t_n_i.is_finite() && r.t_m_i.is_finite(), || {
            format!("stage {}: non-finite", r.stage)
        })?;
        check(r.diffusion == 1u64 << r.stage, || {
            format!("stage {}: d = {}", r.stage, r.diffusion)
        })?;
        check(r.t_n_i >= r.lower_bound * (1.0 - 1e-12), || {
            format!("stage {}: t = {} below {}", r.stage, r.t_n_i, r.lower_bound)
        })?;
        if r.stage >= 7 {
            check(r.t_n_i > 20.0, || {
                format!("stage {}: t_n = {}", r.stage, r.t_n_i)
            })?;
            min_late = min_late.min(r.t_n_i);
        }
        if r.stage <= 12 {
            check(r.t_m_i < 4.0, || {
                format!("stage {}: t_m = {}", r.stage, r.t_m_i)
            })?;
            max_m = max_m.max(r.t_m_i);
        }
    }
    Ok(format!(
        "{} runs, min t_(n_i) for i>=7 = {min_late:.2}, max t_(m_i) = {max_m:.4}",
        rows.len()
    ))
}

fn dominance_suite() -> Outcome {
    let cfg = DominanceConfig::default();
    let run = |q: &Distribution, p: &Distribution| dominates(q, p, &cfg).map_err(|e| e.to_string());
    let eventually_one = |counts: &[u64]| counts[counts.len() / 2..].iter().all(|&c| c <= 1);

    let pairs = [
        ("geometric:a=e", "gaussian:lambda=1"),
        ("geometric:a=2", "geometric:a=3"),
        ("geometric:a=e", "tilted:r=-2,lambda=1"),
        ("geometric:a=1.6487212707001282", "tilted:r=3,lambda=1"),
    ];
    for (q, p) in pairs {
        let r = run(&dist(q), &dist(p))?;
        check(r.counts.len() == 50, || {
            format!("{p} vs {q}: depth {}", r.counts.len())
        })?;
        check(
            matches!(r.verdict, DominanceVerdict::DominatedWithin(m) if m <= 3),
            || format!("{p} vs {q}: {:?}", r.verdict),
        )?;
        check(eventually_one(&r.counts), || {
            format!("{p} vs {q}: late counts above 1")
        })?;
    }

    let g = dist("geometric:a=2");
    let same = run(&g, &g)?;
    check(
        same.verdict == DominanceVerdict::DominatedWithin(1) && same.counts == vec![1; 50],
        || format!("identical: {:?}", same.verdict),
    )?;

    let cong = construct_congregated(&g, 40).map_err(|e| e.to_string())?;
    let r = run(&g, &cong)?;
    check(r.verdict == DominanceVerdict::NotDominatedAtDepth, || {
        format!("congregated: {:?}", r.verdict)
    })?;
    for m in 2..=9u64 {
        let k = m * (m + 1) / 2;
        check(r.counts[(k - 1) as usize] == m, || {
            format!(
                "congregated: count at {k} is {}",
                r.counts[(k - 1) as usize]
            )
        })?;
    }
    Ok(format!(
        "four pairs bounded, identical DominatedWithin(1), congregated max {}",
        r.max_count
    ))
}

fn delta_equivalence() -> Outcome {
    let p = dist("power:lambda=2");
    let mut gaps = Vec::new();
    for (n, tol) in [(1_000_000u64, 0.01), (100_000_000, 0.002)] {
        let s = scaled_pair(&p, n, 0.5, 1e-12).map_err(|e| e.to_string())?;
        let gap = s.relative_gap();
        check(gap < tol, || format!("n={n}: relative gap {gap}"))?;
        gaps.push(format!("n={n}: {gap:.1e}"));
    }
    Ok(format!("relative gaps {}", gaps.join(", ")))
}

fn euler_maclaurin_gap() -> Outcome {
    let p = dist("power:lambda=2");
    let mut notes = Vec::new();
    for n in [10_000u64, 1_000_000] {
        let g = em_gap(&p, n).map_err(|e| e.to_string())?;
        let diff = (g.sum - g.integral).abs();
        check(diff <= g.bound, || {
            format!("n={n}: gap {diff} exceeds {}", g.bound)
        })?;
        check(g.holds(), || format!("n={n}: holds() disagrees"))?;
        let closed = 1.0 / (E * (n as f64).sqrt());
        check(rel(g.peak, closed) < 1e-12, || {
            format!("n={n}: peak {} vs {closed}", g.peak)
        })?;
        notes.push(format!("n={n}: gap {diff:.2e} <= {:.2e}", g.bound));
    }
    Ok(notes.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("power-tail gamma limit", power_gamma_limit),
        ("domain 0 rate", domain0_rate),
        ("unbiasedness of Z_1v", unbiasedness),
        (
            "Turing and missing-mass identities",
            turing_and_missing_mass,
        ),
        ("subsequence floor", subsequence_floor_holds),
        ("geometric oscillation", geometric_oscillation),
        ("c(n) sandwich and k*", c_sandwich),
        ("domain T runs", domain_t),
        ("dominance suite", dominance_suite),
        ("delta equivalence", delta_equivalence),
        ("Euler-Maclaurin gap", euler_maclaurin_gap),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
