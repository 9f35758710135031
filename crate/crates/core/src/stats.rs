//! Empirical distributions, Kolmogorov–Smirnov distances, reference laws and the
//! branching-process oracles used by the acceptance checks.

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, exp1, rng_from_seed, unit_closed_open, SimRng};

/// Branching populations above this size abort the run.
pub const POPULATION_CAP: u64 = 1_000_000_000;

/// A sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("empirical distribution needs at least one sample"));
        }
        if let Some(bad) = samples.iter().find(|x| x.is_nan()) {
            return Err(Error::invalid(format!("sample {bad} is not a number")));
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalDistribution { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Unbiased sample variance (0 for a single sample).
    pub fn variance(&self) -> f64 {
        let m = self.sorted.len();
        if m < 2 {
            return 0.0;
        }
        let mean = self.mean();
        self.sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Empirical quantile, lower order statistic.
    pub fn quantile(&self, q: f64) -> f64 {
        let m = self.sorted.len();
        let i = ((q.clamp(0.0, 1.0) * m as f64).ceil() as usize).clamp(1, m);
        self.sorted[i - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub m: usize,
    /// Asymptotic 5% critical value `1.36 / sqrt(m)`.
    pub threshold_5pct: f64,
}

impl KsResult {
    pub fn rejects_at_5pct(&self) -> bool {
        self.d > self.threshold_5pct
    }
}

/// `sup_x |F_m(x) - F(x)|` against a continuous reference cdf.
pub fn ks_distance<F: Fn(f64) -> f64>(e: &EmpiricalDistribution, cdf: F) -> KsResult {
    let m = e.len();
    let mf = m as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < m {
        let x = e.sorted[i];
        let mut j = i;
        while j < m && e.sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((f - i as f64 / mf).abs()).max((j as f64 / mf - f).abs());
        i = j;
    }
    KsResult {
        d,
        m,
        threshold_5pct: 1.36 / mf.sqrt(),
    }
}

/// Standard Gumbel cdf `exp(-exp(-x))`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Standard exponential cdf.
pub fn exp_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// Poissonized coupon-collector time: the last of `k` coupons, each collected at
/// rate `p / k`. `(p / k) T - ln k` has the law [`coupon_collector_cdf_exact`].
pub fn coupon_collector_sample(k: u64, p: f64, seed: u64) -> Result<f64> {
    if k == 0 || !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("coupon collector needs k >= 1 and 0 < p <= 1, got k={k}, p={p}")));
    }
    let mut rng = rng_from_seed(seed);
    let kf = k as f64;
    let rate = p / kf;
    Ok((0..k).map(|_| exp1(&mut rng) / rate).fold(0.0f64, f64::max))
}

/// `P((p / k) T - ln k <= t) = (1 - e^-t / k)^k` for `t >= -ln k`.
pub fn coupon_collector_cdf_exact(k: u64, t: f64) -> f64 {
    let kf = k as f64;
    if t < -kf.ln() {
        return 0.0;
    }
    (1.0 - (-t).exp() / kf).powf(kf)
}

/// Bounds on `P(L <= alpha)` for the pre-exponential limit law with index `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreexpBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `lower = 1 - e^-a + e^-a (1 - exp(-a / 2^(1+p)))^2`, `upper = 1 - exp(-a / (1+p))`.
pub fn preexp_bounds(alpha: f64, p: f64) -> Result<PreexpBounds> {
    if !(alpha > 0.0) || !(-1.0 < p && p < 0.0) {
        return Err(Error::invalid(format!("preexp bounds need alpha > 0 and -1 < p < 0, got {alpha}, {p}")));
    }
    let e = (-alpha).exp();
    let inner = 1.0 - (-alpha / 2f64.powf(1.0 + p)).exp();
    Ok(PreexpBounds {
        lower: 1.0 - e + e * inner * inner,
        upper: 1.0 - (-alpha / (1.0 + p)).exp(),
    })
}

/// Offspring law on `{0, 1, ..., K}` with an alias table for O(1) draws.
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    pmf: Vec<f64>,
    mu: f64,
    sigma2: f64,
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl OffspringLaw {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("offspring pmf must be a non-empty vector of probabilities"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("offspring pmf sums to {total}, not 1")));
        }
        let mu: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let sigma2: f64 = pmf.iter().enumerate().map(|(k, p)| (k as f64 - mu).powi(2) * p).sum();

        // Vose's alias method
        let k = pmf.len();
        let mut scaled: Vec<f64> = pmf.iter().map(|p| p * k as f64 / total).collect();
        let mut prob = vec![1.0; k];
        let mut alias: Vec<usize> = (0..k).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..k).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        Ok(OffspringLaw {
            pmf,
            mu,
            sigma2,
            prob,
            alias,
        })
    }

    pub fn binomial(trials: u32, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("binomial p = {p} outside [0, 1]")));
        }
        let mut pmf = Vec::with_capacity(trials as usize + 1);
        let mut coef = 1.0f64;
        for k in 0..=trials {
            if k > 0 {
                coef *= (trials - k + 1) as f64 / k as f64;
            }
            pmf.push(coef * p.powi(k as i32) * (1.0 - p).powi((trials - k) as i32));
        }
        let total: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|q| *q /= total);
        OffspringLaw::new(pmf)
    }

    /// Every individual has exactly `k` children.
    pub fn deterministic(k: usize) -> Self {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        OffspringLaw::new(pmf).expect("point mass is a valid law")
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Limit variance `sigma^2 / (mu^2 - mu)` of `W_g = Z_g / mu^g`.
    pub fn limit_variance(&self) -> f64 {
        self.sigma2 / (self.mu * self.mu - self.mu)
    }

    pub fn draw(&self, rng: &mut SimRng) -> usize {
        let k = self.prob.len();
        let i = (rng.next_u64() % k as u64) as usize;
        if unit_closed_open(rng) < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

/// Generation sizes `Z_0 = 1, Z_1, ..., Z_g`.
pub fn branching_run(law: &OffspringLaw, generations: u32, seed: u64) -> Result<Vec<u64>> {
    let mut rng = rng_from_seed(seed);
    let mut sizes = Vec::with_capacity(generations as usize + 1);
    let mut z = 1u64;
    sizes.push(z);
    for _ in 0..generations {
        let mut next = 0u64;
        for _ in 0..z {
            next += law.draw(&mut rng) as u64;
        }
        if next > POPULATION_CAP {
            return Err(Error::PopulationCap(next));
        }
        z = next;
        sizes.push(z);
    }
    Ok(sizes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleSummary {
    pub mean: f64,
    pub variance: f64,
    pub expected_variance: f64,
    pub replicates: usize,
}

/// Sample mean and variance of `W_g = Z_g / mu^g` over independent runs.
pub fn kesten_stigum_check(law: &OffspringLaw, generations: u32, replicates: usize, seed: u64) -> Result<MartingaleSummary> {
    if !(law.mu() > 1.0) {
        return Err(Error::invalid(format!("martingale check needs a supercritical law, mu = {}", law.mu())));
    }
    if replicates < 2 {
        return Err(Error::invalid("martingale check needs at least 2 replicates"));
    }
    let scale = law.mu().powi(generations as i32);
    let w: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            branching_run(law, generations, derive_seed(seed, generations as u64, r))
                .map(|z| *z.last().unwrap() as f64 / scale)
        })
        .collect::<Result<_>>()?;
    let e = EmpiricalDistribution::new(w)?;
    Ok(MartingaleSummary {
        mean: e.mean(),
        variance: e.variance(),
        expected_variance: law.limit_variance(),
        replicates,
    })
}

/// Fraction of runs extinct by generation `generations`.
pub fn extinction_frequency(law: &OffspringLaw, generations: u32, replicates: usize, seed: u64) -> Result<f64> {
    if replicates == 0 {
        return Err(Error::invalid("extinction frequency needs at least one replicate"));
    }
    let extinct = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            branching_run_until_extinct(law, generations, derive_seed(seed, generations as u64, r))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&e| e)
        .count();
    Ok(extinct as f64 / replicates as f64)
}

// Stops early on extinction so that surviving lines do not cost more than needed.
fn branching_run_until_extinct(law: &OffspringLaw, generations: u32, seed: u64) -> Result<bool> {
    let mut rng = rng_from_seed(seed);
    let mut z = 1u64;
    for _ in 0..generations {
        let mut next = 0u64;
        for _ in 0..z {
            next += law.draw(&mut rng) as u64;
        }
        if next > POPULATION_CAP {
            return Err(Error::PopulationCap(next));
        }
        if next == 0 {
            return Ok(true);
        }
        z = next;
    }
    Ok(false)
}
