//! The discrete covering process on `Z/nZ`.
//!
//! Arcs `{u, u+1, ..., u+r-1} (mod n)` arrive one at a time. Coverage is tracked
//! with a "next uncovered index at or after `i`" pointer array, compressed on
//! lookup, so each site is visited a near-constant number of times over a whole
//! run no matter how long the arcs are. Heavy-tailed radii routinely exceed `n`;
//! they are clamped before placement.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{exp1, poisson, rng_from_seed, unit_open_closed, SimRng};
use crate::tails::{TailFunction, TailMoments};
use rand::Rng;

/// Hard cap on arcs per run; hitting it means the configuration cannot cover.
pub const ARC_CAP: u64 = 10_000_000_000;

/// Vacant index lists are only materialized below this size.
pub const VACANT_LIST_LIMIT: usize = 1_000_000;

/// Largest supported torus.
pub const MAX_TORUS: usize = u32::MAX as usize - 1;

/// Coverage state of the torus `Z/nZ`.
#[derive(Debug, Clone)]
pub struct TorusCoverState {
    n: usize,
    // next[i] == i  <=> i uncovered; next[n] == n is the wrap sentinel
    next: Vec<u32>,
    vacant: usize,
    arcs_placed: u64,
}

impl TorusCoverState {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("torus size must be >= 1"));
        }
        if n > MAX_TORUS {
            return Err(Error::invalid(format!("torus size {n} exceeds {MAX_TORUS}")));
        }
        Ok(TorusCoverState {
            n,
            next: (0..=n as u32).collect(),
            vacant: n,
            arcs_placed: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vacant_count(&self) -> usize {
        self.vacant
    }

    pub fn arcs_placed(&self) -> u64 {
        self.arcs_placed
    }

    pub fn is_fully_covered(&self) -> bool {
        self.vacant == 0
    }

    /// Smallest uncovered index `>= i`, or `n` if there is none.
    #[inline]
    fn find(&mut self, mut i: usize) -> usize {
        // path halving
        loop {
            let p = self.next[i] as usize;
            if p == i {
                return i;
            }
            let gp = self.next[p];
            self.next[i] = gp;
            i = gp as usize;
        }
    }

    /// Covers `[a, b)` with `b <= n`.
    #[inline]
    fn cover_segment(&mut self, a: usize, b: usize) -> usize {
        let mut newly = 0;
        let mut j = self.find(a);
        while j < b {
            self.next[j] = j as u32 + 1;
            newly += 1;
            j = self.find(j + 1);
        }
        self.vacant -= newly;
        newly
    }

    /// Covers `{u, ..., u+r-1} mod n` and returns the number of newly covered sites.
    pub fn place_arc(&mut self, u: usize, r: u64) -> usize {
        assert!(u < self.n, "arc start {u} outside torus of size {}", self.n);
        self.arcs_placed += 1;
        if self.vacant == 0 || r == 0 {
            return 0;
        }
        let r = r.min(self.n as u64) as usize;
        let end = u + r;
        if end <= self.n {
            self.cover_segment(u, end)
        } else {
            self.cover_segment(u, self.n) + self.cover_segment(0, end - self.n)
        }
    }

    pub fn is_vacant(&mut self, i: usize) -> bool {
        self.find(i) == i
    }

    /// Vacant sites in increasing order.
    pub fn vacant_indices(&mut self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.vacant);
        let mut j = self.find(0);
        while j < self.n {
            out.push(j);
            j = self.find(j + 1);
        }
        out
    }

    /// Coverage indicator per site.
    pub fn covered_mask(&mut self) -> Vec<bool> {
        let mut mask = vec![true; self.n];
        for i in self.vacant_indices() {
            mask[i] = false;
        }
        mask
    }
}

/// One arc arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcEvent {
    pub start: usize,
    pub len: u64,
    pub index: u64,
}

/// Draws arcs `(U_k, R_k)` for a fixed tail and torus size.
///
/// Each arc consumes, in order: one uniform index, one uniform in `(0, 1]` for the
/// radius. Runs that track Poissonized time draw one standard exponential after
/// each arc.
#[derive(Debug)]
pub struct ArcSampler<'a> {
    tail: &'a TailFunction,
    n: usize,
    count: u64,
}

impl<'a> ArcSampler<'a> {
    pub fn new(tail: &'a TailFunction, n: usize) -> Self {
        ArcSampler { tail, n, count: 0 }
    }

    #[inline]
    pub fn draw(&mut self, rng: &mut SimRng) -> ArcEvent {
        let start = rng.random_range(0..self.n);
        let len = self.tail.sample_radius(unit_open_closed(rng));
        self.count += 1;
        ArcEvent {
            start,
            len,
            index: self.count,
        }
    }
}

/// Outcome of one cover-time replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverResult {
    pub n: usize,
    /// Discrete cover time: arcs placed until the torus is covered.
    pub tau: u64,
    /// Poissonized cover time: sum of `tau` standard exponentials.
    pub time: f64,
    pub max_radius: u64,
    pub seed: u64,
}

/// Places arcs until every site is covered.
pub fn run_to_cover(tail: &TailFunction, n: usize, seed: u64) -> Result<CoverResult> {
    let mut state = TorusCoverState::new(n)?;
    let mut rng = rng_from_seed(seed);
    let mut sampler = ArcSampler::new(tail, n);
    let mut time = 0.0;
    let mut max_radius = 0;
    loop {
        let arc = sampler.draw(&mut rng);
        time += exp1(&mut rng);
        max_radius = max_radius.max(arc.len);
        state.place_arc(arc.start, arc.len);
        if state.is_fully_covered() {
            return Ok(CoverResult {
                n,
                tau: arc.index,
                time,
                max_radius,
                seed,
            });
        }
        if arc.index >= ARC_CAP {
            return Err(Error::ArcCapExceeded(arc.index));
        }
    }
}

/// Vacancy of the Poissonized process at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct VacancySnapshot {
    pub arcs: u64,
    pub vacant_count: usize,
    /// `None` when more than [`VACANT_LIST_LIMIT`] sites are vacant.
    pub vacant_indices: Option<Vec<usize>>,
}

impl VacancySnapshot {
    pub fn is_vacant(&self, i: usize) -> bool {
        self.vacant_indices
            .as_ref()
            .map(|v| v.binary_search(&i).is_ok())
            .unwrap_or(true)
    }
}

/// Places `N ~ Poisson(t)` arcs and reports the vacant set.
pub fn snapshot_vacant(tail: &TailFunction, n: usize, t: f64, seed: u64) -> Result<VacancySnapshot> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("snapshot time {t} must be finite and >= 0")));
    }
    let mut state = TorusCoverState::new(n)?;
    let mut rng = rng_from_seed(seed);
    let arcs = poisson(&mut rng, t);
    let mut sampler = ArcSampler::new(tail, n);
    for _ in 0..arcs {
        if state.is_fully_covered() {
            break;
        }
        let arc = sampler.draw(&mut rng);
        state.place_arc(arc.start, arc.len);
    }
    let vacant_count = state.vacant_count();
    let vacant_indices = (vacant_count <= VACANT_LIST_LIMIT).then(|| state.vacant_indices());
    Ok(VacancySnapshot {
        arcs,
        vacant_count,
        vacant_indices,
    })
}

/// `P(0 vacant at time t) = exp(-t F_n / n)`.
pub fn vacancy_probability_exact(moments: &TailMoments, n: u64, t: f64) -> Result<f64> {
    let f_n = moments.prefix_sum(n)?;
    Ok((-t * f_n / n as f64).exp())
}

/// `P(0 and k vacant at time t) = exp(-t (F_k + F_{n-k}) / n)`.
pub fn pair_vacancy_exact(moments: &TailMoments, n: u64, t: f64, k: u64) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(Error::OutOfRange {
            index: k,
            max: n.saturating_sub(1),
        });
    }
    let rate = moments.prefix_sum(k)? + moments.prefix_sum(n - k)?;
    Ok((-t * rate / n as f64).exp())
}

/// Runs `seeds.len()` cover replicates on the current rayon pool; results keep
/// the order of `seeds`.
pub fn run_replicates(tail: &TailFunction, n: usize, seeds: &[u64]) -> Result<Vec<CoverResult>> {
    seeds
        .par_iter()
        .map(|&s| run_to_cover(tail, n, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_state_examples() {
        assert_eq!(TorusCoverState::new(5).unwrap().vacant_count(), 5);
        assert_eq!(TorusCoverState::new(1).unwrap().vacant_count(), 1);
        assert!(TorusCoverState::new(0).is_err());
        let big = TorusCoverState::new(10_000_000).unwrap();
        assert_eq!(big.vacant_count(), 10_000_000);
        assert!(big.next.capacity() <= 10_000_002);
    }

    #[test]
    fn place_arc_examples() {
        let mut s = TorusCoverState::new(5).unwrap();
        assert_eq!(s.place_arc(3, 4), 4);
        assert_eq!(s.vacant_indices(), vec![2]);

        let mut s = TorusCoverState::new(5).unwrap();
        assert_eq!(s.place_arc(0, 5), 5);
        assert_eq!(s.place_arc(2, 3), 0);
        assert!(s.is_fully_covered());

        let mut s = TorusCoverState::new(3).unwrap();
        assert_eq!(s.place_arc(0, 100), 3);
    }

    #[test]
    fn huge_radius_does_not_overflow() {
        let mut s = TorusCoverState::new(7).unwrap();
        assert_eq!(s.place_arc(6, u64::MAX), 7);
    }

    #[test]
    fn run_to_cover_examples() {
        let c3 = TailFunction::ConstantRadius(3);
        for seed in 0..50 {
            assert_eq!(run_to_cover(&c3, 3, seed).unwrap().tau, 1);
            assert_eq!(run_to_cover(&TailFunction::SlowLog, 1, seed).unwrap().tau, 1);
        }
    }

    #[test]
    fn coupon_collector_mean_on_three_sites() {
        let c1 = TailFunction::ConstantRadius(1);
        let m = 100_000u64;
        let taus: Vec<f64> = (0..m)
            .map(|s| run_to_cover(&c1, 3, s).unwrap().tau as f64)
            .collect();
        let mean = taus.iter().sum::<f64>() / m as f64;
        // Var = sum_k (1-p_k)/p_k^2 with p_k = 1, 2/3, 1/3
        let var = 0.0 + (1.0 / 3.0) / (4.0 / 9.0) + (2.0 / 3.0) / (1.0 / 9.0);
        let sigma = (var / m as f64).sqrt();
        assert!((mean - 5.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn cover_result_is_deterministic_and_consistent() {
        let f = TailFunction::PurePower(-0.5);
        let a = run_to_cover(&f, 1_000, 42).unwrap();
        let b = run_to_cover(&f, 1_000, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.time > 0.0);
        let bound = (1_000f64 / a.max_radius.min(1_000) as f64).ceil() as u64;
        assert!(a.tau >= bound);
    }

    #[test]
    fn snapshot_examples() {
        let f = TailFunction::ConstantRadius(1);
        let s = snapshot_vacant(&f, 10, 0.0, 1).unwrap();
        assert_eq!(s.vacant_count, 10);
        assert_eq!(s.vacant_indices.unwrap(), (0..10).collect::<Vec<_>>());
        let n = 200usize;
        let t = 10.0 * n as f64 * (n as f64).ln();
        let g = TailFunction::Geometric(0.5);
        for seed in 0..20 {
            assert_eq!(snapshot_vacant(&g, n, t, seed).unwrap().vacant_count, 0);
        }
    }

    #[test]
    fn exact_vacancy_examples() {
        let m = TailMoments::new(TailFunction::ConstantRadius(1), 1_000).unwrap();
        let p = vacancy_probability_exact(&m, 4, 4.0).unwrap();
        assert!((p - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(vacancy_probability_exact(&m, 4, 0.0).unwrap(), 1.0);
        let n = 100u64;
        let t = 0.5 * n as f64 * (n as f64).ln();
        assert!((vacancy_probability_exact(&m, n, t).unwrap() - 0.1).abs() < 1e-12);
        assert!((pair_vacancy_exact(&m, n, t, 50).unwrap() - 0.01).abs() < 1e-12);
        assert_eq!(pair_vacancy_exact(&m, n, 0.0, 3).unwrap(), 1.0);
        let g = TailMoments::new(TailFunction::Geometric(0.7), 1_000).unwrap();
        assert_eq!(
            pair_vacancy_exact(&g, n, t, 30).unwrap(),
            pair_vacancy_exact(&g, n, t, 70).unwrap()
        );
        assert!(pair_vacancy_exact(&m, n, t, 0).is_err());
        assert!(pair_vacancy_exact(&m, n, t, n).is_err());
    }

    #[test]
    fn sqrt_n_vacancies_at_half_coupon_time() {
        let f = TailFunction::ConstantRadius(1);
        let n = 10_000usize;
        let t = 0.5 * n as f64 * (n as f64).ln();
        let seeds = 200u64;
        let counts: Vec<f64> = (0..seeds)
            .map(|s| snapshot_vacant(&f, n, t, s).unwrap().vacant_count as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / seeds as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
        let sigma = (var / seeds as f64).sqrt();
        assert!((mean - 100.0).abs() < 3.0 * sigma, "mean {mean} sigma {sigma}");
    }
}
