//! Acceptance suite: one line per criterion.
//!
//! Criteria listed in `DOCUMENTED_RED` are known to fail as stated (see the
//! README); they are still run and reported as FAIL. Any other failure makes the
//! binary exit non-zero.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use covering::engine::{pair_vacancy_exact, run_to_cover, snapshot_vacant, vacancy_probability_exact, ArcSampler, TorusCoverState};
use covering::experiments::{preset, run_experiment, ExperimentOutput, Summary, PRESETS};
use covering::rng::{derive_seed, exp1, rng_from_seed};
use covering::shepp::{missing_lattice_counts, pi_hat, project_w, project_x, shepp_series, CircleConfiguration, SeriesClass};
use covering::stats::{extinction_frequency, kesten_stigum_check, preexp_bounds, OffspringLaw};
use covering::tails::{cf_estimate, karamata_ratio, TailMoments};
use covering::TailFunction;

const SEED: u64 = 0xC0FF_EE00_D15C_0001;

/// Criteria that fail as stated; the analysis lives in the README.
const DOCUMENTED_RED: [u32; 4] = [3, 5, 6, 7];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Presets {
    dir: tempfile::TempDir,
    runs: BTreeMap<&'static str, ExperimentOutput>,
}

impl Presets {
    fn get(&mut self, name: &'static str) -> &ExperimentOutput {
        if !self.runs.contains_key(name) {
            let config = preset(name, self.dir.path().join("w1")).unwrap();
            let out = run_experiment(&config, 1).unwrap();
            self.runs.insert(name, out);
        }
        &self.runs[name]
    }

    fn summary(&mut self, name: &'static str) -> &Summary {
        &self.get(name).summary
    }
}

// 1. successor engine against a plain boolean array
fn oracle_equivalence() -> Outcome {
    let families = [
        "const:1", "const:5", "geom:0.5", "geom:0.9", "logpow:0", "logpow:1.5", "logpow:-0.5", "pow:-0.75",
        "pow:-0.25", "slowlog",
    ];
    let runs = 1_000u64;
    let mismatches: Vec<String> = families
        .par_iter()
        .enumerate()
        .flat_map_iter(|(fi, fam)| {
            let tail: TailFunction = fam.parse().unwrap();
            (0..runs).filter_map(move |r| {
                let seed = derive_seed(SEED, 1_000 + fi as u64, r);
                let n = 1 + (derive_seed(seed, 0, 0) % 512) as usize;
                naive_replay(&tail, n, seed).err().map(|e| format!("{fam} n={n} run {r}: {e}"))
            })
        })
        .collect();
    let total = families.len() as u64 * runs;
    match mismatches.first() {
        None => outcome(true, format!("{total} runs over {} families, n <= 512, all identical", families.len())),
        Some(m) => outcome(false, format!("{} mismatching runs, first: {m}", mismatches.len())),
    }
}

fn naive_replay(tail: &TailFunction, n: usize, seed: u64) -> Result<(), String> {
    let mut rng = rng_from_seed(seed);
    let mut sampler = ArcSampler::new(tail, n);
    let mut state = TorusCoverState::new(n).unwrap();
    let mut naive = vec![false; n];
    let mut covered = 0usize;
    let mut time = 0.0;
    let mut total_new = 0usize;
    loop {
        let arc = sampler.draw(&mut rng);
        time += exp1(&mut rng);
        let mut fresh = 0;
        for j in 0..(arc.len.min(n as u64) as usize) {
            let i = (arc.start + j) % n;
            if !naive[i] {
                naive[i] = true;
                fresh += 1;
            }
        }
        covered += fresh;
        let engine_fresh = state.place_arc(arc.start, arc.len);
        total_new += engine_fresh;
        if engine_fresh != fresh {
            return Err(format!("arc {} newly covered {engine_fresh} vs {fresh}", arc.index));
        }
        if arc.index.is_power_of_two() && state.covered_mask() != naive {
            return Err(format!("covered sets differ after {} arcs", arc.index));
        }
        if state.is_fully_covered() != (covered == n) {
            return Err(format!("cover status differs after {} arcs", arc.index));
        }
        if covered == n {
            let run = run_to_cover(tail, n, seed).map_err(|e| e.to_string())?;
            if run.tau != arc.index || run.time.to_bits() != time.to_bits() || total_new != n {
                return Err(format!("tau {} vs {}", run.tau, arc.index));
            }
            return Ok(());
        }
    }
}

// 2. single-site and pair vacancy frequencies at fixed times
fn vacancy_formulas() -> Outcome {
    let tail = TailFunction::ConstantRadius(1);
    let m = 20_000u64;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for n in [100u64, 1_000] {
        let moments = TailMoments::new(tail, n).unwrap();
        for c in [0.5, 1.0, 2.0] {
            let t = c * n as f64 * (n as f64).ln();
            let hits: Vec<(bool, bool)> = (0..m)
                .into_par_iter()
                .map(|r| {
                    let s = snapshot_vacant(&tail, n as usize, t, derive_seed(SEED ^ 2, n, r)).unwrap();
                    let single = s.is_vacant(0);
                    (single, single && s.is_vacant(n as usize / 2))
                })
                .collect();
            let p1 = vacancy_probability_exact(&moments, n, t).unwrap();
            let p2 = pair_vacancy_exact(&moments, n, t, n / 2).unwrap();
            let f1 = hits.iter().filter(|h| h.0).count() as f64 / m as f64;
            let f2 = hits.iter().filter(|h| h.1).count() as f64 / m as f64;
            for (label, f, p) in [("single", f1, p1), ("pair", f2, p2)] {
                let sigma = (p * (1.0 - p) / m as f64).sqrt();
                let z = if sigma > 0.0 { (f - p).abs() / sigma } else if f == p { 0.0 } else { f64::INFINITY };
                // a frequency of 0 against p ~ 1e-12 is in range without a usable sigma
                let ok = (f - p).abs() <= 4.0 * sigma || (f == 0.0 && p * (m as f64) < 1e-3);
                if sigma > 0.0 && p * m as f64 >= 1e-3 {
                    worst = worst.max(z);
                }
                if !ok {
                    failures.push(format!("n={n} t={c}n ln n {label}: freq {f:.5} vs {p:.5}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("6 (n, t) cells x 2 frequencies within 4 sigma, worst {worst:.2} sigma")
        } else {
            failures.join("; ")
        },
    )
}

fn ks_of(s: &Summary, n: u64) -> f64 {
    s.group(n, None).and_then(|g| g.ks.as_ref()).map_or(f64::INFINITY, |k| k.d)
}

// 3. Gumbel phase
fn gumbel_phase(p: &mut Presets) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["gumbel-const", "gumbel-geom"] {
        let s = p.summary(name);
        let (d_small, d_large) = (ks_of(s, 1_000), ks_of(s, 100_000));
        let pass = d_large <= 0.05 && d_large <= d_small;
        ok &= pass;
        parts.push(format!(
            "{}: D(1e5)={d_large:.4} (<= 0.05: {}), D(1e3)={d_small:.4} (trend: {})",
            s.family,
            d_large <= 0.05,
            d_large <= d_small
        ));
    }
    outcome(ok, parts.join("; "))
}

// 4. size of the vacant set at alpha = 0.5
fn vacant_set_concentration() -> Outcome {
    let tail = TailFunction::Geometric(0.5);
    let n = 1_000_000u64;
    let alpha = 0.5;
    let moments = TailMoments::new(tail, n).unwrap();
    let mu = moments.mu().unwrap();
    let g_n = moments.g_value(n).unwrap();
    let t = alpha * n as f64 * (n as f64).ln() / mu;
    let counts: Vec<usize> = (0..100u64)
        .into_par_iter()
        .map(|r| snapshot_vacant(&tail, n as usize, t, derive_seed(SEED ^ 4, n, r)).unwrap().vacant_count)
        .collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let target = (n as f64).powf(1.0 - g_n * alpha);
    let rel = (mean - target).abs() / target;
    outcome(rel <= 0.05, format!("mean |V| = {mean:.1}, n^(1 - g_n alpha) = {target:.1}, relative error {rel:.4} (<= 0.05)"))
}

// 5. 1/r tail: law of T/n against the circle covering frequency
fn bstar_phase(p: &mut Presets) -> Outcome {
    let g = p.summary("bstar").group(100_000, None).unwrap().clone();
    let exceed = g.p_exceed.unwrap();
    let sd = g.std_dev.unwrap();
    let mut ok = exceed <= 0.01 && sd >= 0.05;
    let mut parts = vec![format!("P(T/n > 1.05) = {exceed:.4} (<= 0.01: {})", exceed <= 0.01), format!("sd = {sd:.4} (>= 0.05)")];
    for alpha in [0.5, 0.8] {
        let ecdf = g.checks.iter().find(|c| c.alpha == alpha).unwrap().ecdf;
        let pi = pi_hat(alpha, 10_000, 2_000, SEED ^ 5).unwrap().estimate;
        ok &= (ecdf - pi).abs() <= 0.05;
        parts.push(format!("alpha={alpha}: P(T/n <= alpha) = {ecdf:.4} vs pi_hat = {pi:.4}"));
    }
    outcome(ok, parts.join("; "))
}

// 6. pure power tail p = -1/2: sandwich bounds on the limit cdf
fn preexp_phase(p: &mut Presets) -> Outcome {
    let g = p.summary("preexp").group(1_000_000, None).unwrap().clone();
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let ecdf = g.checks.iter().find(|c| c.alpha == alpha).unwrap().ecdf;
        let b = preexp_bounds(alpha, -0.5).unwrap();
        let inside = b.lower - 0.03 <= ecdf && ecdf <= b.upper + 0.03;
        ok &= inside;
        parts.push(format!("alpha={alpha}: ECDF {ecdf:.4} in [{:.4}, {:.4}] +- 0.03: {inside}", b.lower, b.upper));
    }
    let ecdf2 = g.checks.iter().find(|c| c.alpha == 2.0).unwrap().ecdf;
    let weak = ecdf2 > 1.0 - (-2f64).exp();
    ok &= weak;
    parts.push(format!("ECDF(2) > 1 - e^-2: {weak}"));
    outcome(ok, parts.join("; "))
}

// 7. slowly varying tail: exponential limit
fn exponential_phase(p: &mut Presets) -> Outcome {
    let s = p.summary("exponential");
    let (d_small, d_large) = (ks_of(s, 1_000), ks_of(s, 1_000_000));
    outcome(
        d_large <= 0.15 && d_large < d_small,
        format!("D(1e6) = {d_large:.4} (<= 0.15: {}), D(1e3) = {d_small:.4} (strictly decreasing: {})", d_large <= 0.15, d_large < d_small),
    )
}

// 8. exponent of the missing lattice count
fn dimension_law(p: &mut Presets) -> Outcome {
    let s = p.summary("dimension");
    let small = s.group(1_000, Some(0.5)).unwrap();
    let large = s.group(100_000, Some(0.5)).unwrap();
    let (m_small, m_large) = (small.mean.unwrap_or(f64::NAN), large.mean.unwrap_or(f64::NAN));
    let ok = large.samples >= 200 && (m_large - 0.5).abs() <= 0.1 && (m_large - 0.5).abs() < (m_small - 0.5).abs();
    outcome(
        ok,
        format!(
            "n=1e5: {} accepted, mean {m_large:.4}; n=1e3: mean {m_small:.4}",
            large.samples
        ),
    )
}

// 9. covering frequency above and below the threshold
fn pi_threshold(p: &mut Presets) -> Outcome {
    let s = p.summary("shepp-pi");
    let get = |alpha: f64, n: u64| {
        let g = s.group(n, Some(alpha)).unwrap();
        (g.pi_hat.unwrap(), g.pi_half_width.unwrap())
    };
    let (hi, _) = get(1.5, 10_000);
    let (hi_small, _) = get(1.5, 100);
    let order: Vec<(f64, f64)> = [0.1, 0.8, 1.5].iter().map(|&a| get(a, 10_000)).collect();
    let ordered = order.windows(2).all(|w| w[0].0 - w[0].1 <= w[1].0 + w[1].1);
    outcome(
        hi >= 0.9 && hi >= hi_small && ordered,
        format!(
            "pi_hat(1.5): {hi:.4} at n=1e4, {hi_small:.4} at n=1e2; pi_hat(0.1, 0.8, 1.5) = {:.4}, {:.4}, {:.4}",
            order[0].0, order[1].0, order[2].0
        ),
    )
}

// 10. mean missing lattice count
fn missing_lattice_mean() -> Outcome {
    let (alpha, n, m) = (0.5, 10_000u64, 10_000usize);
    let counts = missing_lattice_counts(alpha, n, m, SEED ^ 10).unwrap();
    let xs: Vec<f64> = counts.iter().map(|&z| z as f64).collect();
    let mean = xs.iter().sum::<f64>() / m as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let se = (var / m as f64).sqrt();
    let target = (-alpha).exp() * (n as f64).powf(1.0 - alpha);
    let z = (mean - target).abs() / se;
    outcome(z <= 3.0, format!("mean Z = {mean:.3}, exact {target:.3}, |z| = {z:.2} (<= 3)"))
}

// 11. series classification
fn shepp_classification() -> Outcome {
    let n = 1_000_000;
    let cases: [(&str, f64, SeriesClass); 4] = [
        ("1/n", 1.0, SeriesClass::Diverging),
        ("0", 0.0, SeriesClass::Converging),
        ("0.75/n", 0.75, SeriesClass::Converging),
        ("1.25/n", 1.25, SeriesClass::Diverging),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, c, want) in cases {
        let s = shepp_series(|k| c / k as f64, n).unwrap();
        ok &= s.class == want;
        parts.push(format!("{label}: {:?} (slope {:.4})", s.class, s.tail_slope));
    }
    outcome(ok, parts.join(", "))
}

// 12. Karamata ratios and C_f
fn karamata() -> Outcome {
    let x = 1_000_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [-0.75, -0.5, -0.25] {
        let r = karamata_ratio(&TailFunction::PurePower(p), x);
        ok &= (r - (p + 1.0)).abs() <= 1e-2;
        parts.push(format!("p={p}: {r:.5}"));
    }
    let cf = cf_estimate(&TailFunction::PurePower(-0.5), x).unwrap();
    ok &= (cf - 2.0).abs() <= 2e-2;
    parts.push(format!("C_f = {cf:.5}"));
    outcome(ok, parts.join(", "))
}

// 13. Galton–Watson martingale moments and extinction
fn branching() -> Outcome {
    let law = OffspringLaw::binomial(4, 0.6).unwrap();
    let s = kesten_stigum_check(&law, 12, 5_000, SEED ^ 13).unwrap();
    let expected_var = 0.96 / 3.36;
    let var_ok = (s.variance / expected_var - 1.0).abs() <= 0.2;
    let mean_ok = (s.mean - 1.0).abs() <= 0.05;

    let bin = OffspringLaw::new(vec![0.25, 0.0, 0.75]).unwrap();
    let m = 20_000usize;
    let freq = extinction_frequency(&bin, 25, m, SEED ^ 14).unwrap();
    let q = 1.0 / 3.0;
    let sigma = (q * (1.0 - q) / m as f64).sqrt();
    let ext_ok = (freq - q).abs() <= 3.0 * sigma;
    outcome(
        mean_ok && var_ok && ext_ok,
        format!(
            "mean W = {:.4}, var W = {:.4} (target {expected_var:.4}), extinction {freq:.4} vs 1/3 +- {:.4}",
            s.mean,
            s.variance,
            3.0 * sigma
        ),
    )
}

// 14. W projection inside X projection
fn coupling_inclusion() -> Outcome {
    let m = 10_000u64;
    let mut violations = 0usize;
    let mut checked = 0u64;
    for (ai, alpha) in [0.3, 0.8, 1.5].into_iter().enumerate() {
        for n in [10u64, 1_000] {
            violations += (0..m)
                .into_par_iter()
                .map(|r| {
                    let c = CircleConfiguration::sample(alpha, 1.0 / n as f64, derive_seed(SEED ^ (14 + ai as u64), n, r)).unwrap();
                    let w = project_w(&c, n).unwrap();
                    let x = project_x(&c, n).unwrap();
                    w.violations_of_subset(&x).len()
                })
                .sum::<usize>();
            checked += m;
        }
    }
    outcome(violations == 0, format!("{checked} configurations, {violations} sites in W but not in X"))
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap()
}

// 15. byte-identical outputs across worker counts
fn reproducibility(p: &mut Presets) -> Outcome {
    let mut diffs = Vec::new();
    for name in PRESETS {
        let base = p.get(name);
        let (csv, summary) = (read(&base.csv_path), read(&base.summary_path));
        for workers in [4usize, 16] {
            let config = preset(name, p.dir.path().join(format!("w{workers}"))).unwrap();
            let out = run_experiment(&config, workers).unwrap();
            if read(&out.csv_path) != csv || read(&out.summary_path) != summary {
                diffs.push(format!("{name} with {workers} workers"));
            }
        }
    }
    outcome(
        diffs.is_empty(),
        if diffs.is_empty() {
            format!("{} presets, CSV and summary identical for 1, 4 and 16 workers", PRESETS.len())
        } else {
            format!("differences: {}", diffs.join(", "))
        },
    )
}

fn main() {
    let started = Instant::now();
    let mut presets = Presets {
        dir: tempfile::tempdir().unwrap(),
        runs: BTreeMap::new(),
    };
    type Check<'a> = Box<dyn FnMut(&mut Presets) -> Outcome + 'a>;
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "engine matches boolean-array oracle", Box::new(|_| oracle_equivalence())),
        (2, "exact single-site and pair vacancy", Box::new(|_| vacancy_formulas())),
        (3, "Gumbel limit for finite-mean tails", Box::new(gumbel_phase)),
        (4, "vacant-set size concentration", Box::new(|_| vacant_set_concentration())),
        (5, "1/r tail: support and law of T/n", Box::new(bstar_phase)),
        (6, "pure power tail: cdf sandwich", Box::new(preexp_phase)),
        (7, "slowly varying tail: exponential limit", Box::new(exponential_phase)),
        (8, "missing lattice exponent", Box::new(dimension_law)),
        (9, "circle covering threshold", Box::new(pi_threshold)),
        (10, "mean missing lattice count", Box::new(|_| missing_lattice_mean())),
        (11, "series classification", Box::new(|_| shepp_classification())),
        (12, "Karamata ratio and C_f", Box::new(|_| karamata())),
        (13, "branching martingale and extinction", Box::new(|_| branching())),
        (14, "W projection inside X projection", Box::new(|_| coupling_inclusion())),
        (15, "worker-count reproducibility", Box::new(reproducibility)),
    ];
    let mut failed = Vec::new();
    for (id, name, mut check) in criteria {
        let t = Instant::now();
        let o = check(&mut presets);
        println!(
            "{} [{id:2}] {name}: {} ({:.1}s)",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        std::io::stdout().flush().unwrap();
        if !o.passed {
            failed.push(id);
        }
    }
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !DOCUMENTED_RED.contains(id)).collect();
    println!(
        "acceptance: {}/15 passed, failed {:?} (documented red: {:?}), {:.0}s",
        15 - failed.len(),
        failed,
        DOCUMENTED_RED,
        started.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
