//! The Mandelbrot–Shepp arc process on the circle `[0, 1)`.
//!
//! Points `(x, y)` of a Poisson process with intensity `alpha dx dy / y^2` on
//! `[0, 1) × (0, inf)` project to open arcs `(x, x + y) mod 1`; an arc with
//! `y > 1` covers the whole circle. Only the truncated configuration `ω[z]`
//! (points with `y > z`) is ever sampled; it has `Poisson(alpha / z)` points.
//!
//! Two discrete processes on `Z/nZ` are read off the same configuration:
//!
//! * `X^n` covers, for each point, the run of lattice sites `j` with
//!   `j/n ∈ (x, x + y)`. Its vacant sites are exactly the lattice points left
//!   uncovered by the continuous arcs, so `Z_n = n - |X^n|`.
//! * `W^n` assigns each point the arc of `⌊n y⌋` sites starting at the first
//!   lattice site strictly right of `x`, which makes it a covering process with
//!   `P(R >= r) = 1/r` at time `alpha n` and gives `W^n ⊆ X^n` pointwise.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::engine::TorusCoverState;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, poisson, rng_from_seed, unit_closed_open, unit_open};
use crate::tails::CompensatedSum;

/// Minimum number of accepted configurations for [`dimension_estimate`].
pub const MIN_ACCEPTED: usize = 30;

/// Tolerance on the boundary slope `-1` when classifying Shepp series, absorbing
/// the `O(1/N)` curvature of `exp(H_n)/n^2`.
pub const SLOPE_TOLERANCE: f64 = 1e-3;

/// Half-width of the inconclusive band below slope `-1`.
pub const SLOPE_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcPoint {
    pub x: f64,
    pub y: f64,
}

/// A truncated configuration `ω[z]` at intensity `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleConfiguration {
    alpha: f64,
    z: f64,
    points: Vec<ArcPoint>,
}

impl CircleConfiguration {
    pub fn new(alpha: f64, z: f64, points: Vec<ArcPoint>) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("intensity {alpha} must be finite and >= 0")));
        }
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::invalid(format!("truncation height {z} must be > 0")));
        }
        for p in &points {
            if !(0.0..1.0).contains(&p.x) || !(p.y > z) || !p.y.is_finite() {
                return Err(Error::invalid(format!(
                    "point ({}, {}) outside [0,1) x (z, inf) with z = {z}",
                    p.x, p.y
                )));
            }
        }
        Ok(CircleConfiguration { alpha, z, points })
    }

    /// Samples `ω[z]`: `N ~ Poisson(alpha / z)` points with uniform positions and
    /// lengths `y = z / U`, `U ~ Unif(0, 1)`.
    pub fn sample(alpha: f64, z: f64, seed: u64) -> Result<Self> {
        let mut config = CircleConfiguration::new(alpha, z, Vec::new())?;
        let mut rng = rng_from_seed(seed);
        let count = poisson(&mut rng, alpha / z);
        config.points.reserve(count as usize);
        for _ in 0..count {
            let x = unit_closed_open(&mut rng);
            let y = loop {
                let y = z / unit_open(&mut rng);
                // z / U rounds to z only for U within an ulp of 1
                if y > z {
                    break y;
                }
            };
            config.points.push(ArcPoint { x, y });
        }
        Ok(config)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn points(&self) -> &[ArcPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sub-configuration of points with `y > z_new`, for `z_new >= z`.
    pub fn truncate(&self, z_new: f64) -> Result<Self> {
        if !(z_new >= self.z) {
            return Err(Error::invalid(format!(
                "cannot truncate at {z_new} below the sampled height {}",
                self.z
            )));
        }
        Ok(CircleConfiguration {
            alpha: self.alpha,
            z: z_new,
            points: self.points.iter().copied().filter(|p| p.y > z_new).collect(),
        })
    }

    /// Line-oriented text encoding: `alpha z count`, then one `x y` line per point,
    /// reals with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(48 * (self.points.len() + 1));
        let _ = writeln!(out, "{:.16e} {:.16e} {}", self.alpha, self.z, self.points.len());
        for p in &self.points {
            let _ = writeln!(out, "{:.16e} {:.16e}", p.x, p.y);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: 1,
                reason: "header must be `alpha z count`".into(),
            });
        }
        let real = |s: &str, line: usize| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                reason: e.to_string(),
            })
        };
        let alpha = real(fields[0], 1)?;
        let z = real(fields[1], 1)?;
        let count: usize = fields[2].parse().map_err(|_| Error::Parse {
            line: 1,
            reason: format!("bad point count {:?}", fields[2]),
        })?;
        let mut points = Vec::with_capacity(count);
        for (i, line) in lines {
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(x), Some(y), None) => points.push(ArcPoint {
                    x: real(x, i + 1)?,
                    y: real(y, i + 1)?,
                }),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        reason: "expected `x y`".into(),
                    })
                }
            }
        }
        if points.len() != count {
            return Err(Error::Parse {
                line: points.len() + 1,
                reason: format!("header announces {count} points, found {}", points.len()),
            });
        }
        CircleConfiguration::new(alpha, z, points)
    }
}

/// A closed vacant arc `[start, end]` of the circle, `0 <= start < 1`.
///
/// `end >= 1` means the arc runs through the origin; `end - start == 1` only for
/// the whole circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacantArc {
    pub start: f64,
    pub end: f64,
}

impl VacantArc {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn wraps(&self) -> bool {
        self.end >= 1.0
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.start <= p && p <= self.end) || (self.start <= p + 1.0 && p + 1.0 <= self.end)
    }
}

/// Complement of the union of the projected open arcs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VacantIntervals {
    arcs: Vec<VacantArc>,
}

impl VacantIntervals {
    /// Vacant arcs sorted by start, pairwise disjoint.
    pub fn arcs(&self) -> &[VacantArc] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(VacantArc::length).sum()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.arcs.iter().any(|a| a.contains(p))
    }
}

/// Open arcs of the configuration unrolled on the line: each point gives
/// `(x, x + y)`, plus `(x - 1, x + y - 1)` when it runs past 1. Merged components
/// with `start < 1` and `end > 0`, sorted. `None` when some arc covers everything.
fn covered_components(config: &CircleConfiguration) -> Option<Vec<(f64, f64)>> {
    let mut segs = Vec::with_capacity(config.points.len() + config.points.len() / 4);
    for p in &config.points {
        if p.y > 1.0 {
            return None;
        }
        let end = p.x + p.y;
        segs.push((p.x, end));
        if end > 1.0 {
            segs.push((p.x - 1.0, end - 1.0));
        }
    }
    segs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut comps: Vec<(f64, f64)> = Vec::new();
    for (a, b) in segs {
        match comps.last_mut() {
            // open intervals only merge when they overlap; a shared endpoint stays vacant
            Some(last) if a < last.1 => last.1 = last.1.max(b),
            _ => comps.push((a, b)),
        }
    }
    comps.retain(|&(a, b)| a < 1.0 && b > 0.0);
    Some(comps)
}

/// Exact vacant set of a configuration.
pub fn vacant_set(config: &CircleConfiguration) -> VacantIntervals {
    let Some(comps) = covered_components(config) else {
        return VacantIntervals::default();
    };
    let mut gaps: Vec<VacantArc> = Vec::new();
    let mut pos = 0.0f64;
    for &(a, b) in &comps {
        if a >= pos {
            gaps.push(VacantArc { start: pos, end: a });
        }
        pos = pos.max(b);
    }
    if pos < 1.0 {
        // the tail gap [pos, 1) continues through the origin into the first gap
        match gaps.first() {
            Some(first) if first.start == 0.0 => {
                let joined = VacantArc {
                    start: pos,
                    end: 1.0 + first.end,
                };
                gaps.remove(0);
                gaps.push(joined);
            }
            _ => gaps.push(VacantArc { start: pos, end: 1.0 }),
        }
    }
    VacantIntervals { arcs: gaps }
}

/// Length of the covered part of the circle.
pub fn covered_length(config: &CircleConfiguration) -> f64 {
    match covered_components(config) {
        None => 1.0,
        Some(comps) => comps.iter().map(|&(a, b)| b.min(1.0) - a.max(0.0)).sum(),
    }
}

/// True iff the open arcs cover every point of the circle.
pub fn is_covered(config: &CircleConfiguration) -> bool {
    vacant_set(config).is_empty()
}

/// First lattice index `j` (unrolled, possibly `n`) with `j / n > x`.
fn first_lattice_after(x: f64, n: u64) -> i64 {
    let nf = n as f64;
    let mut j = (x * nf).floor() as i64;
    while (j as f64) / nf <= x {
        j += 1;
    }
    while j > 0 && ((j - 1) as f64) / nf > x {
        j -= 1;
    }
    j
}

/// Last unrolled lattice index `j` with `j / n < e`.
fn last_lattice_before(e: f64, n: u64) -> i64 {
    let nf = n as f64;
    let mut j = (e * nf).ceil() as i64;
    while (j as f64) / nf >= e {
        j -= 1;
    }
    while ((j + 1) as f64) / nf < e {
        j += 1;
    }
    j
}

/// Lattice run `(start, len)` covered by the open arc of `p`.
fn lattice_run(p: &ArcPoint, n: u64) -> Option<(usize, u64)> {
    if p.y > 1.0 {
        return Some((0, n));
    }
    let j0 = first_lattice_after(p.x, n);
    let j1 = last_lattice_before(p.x + p.y, n);
    (j1 >= j0).then(|| ((j0 as u64 % n) as usize, ((j1 - j0 + 1) as u64).min(n)))
}

fn check_truncation(config: &CircleConfiguration, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("lattice size must be >= 1"));
    }
    if config.z > 1.0 / n as f64 {
        return Err(Error::TruncationMismatch { z: config.z, n });
    }
    Ok(())
}

fn x_state(config: &CircleConfiguration, n: u64) -> Result<TorusCoverState> {
    check_truncation(config, n)?;
    let mut state = TorusCoverState::new(n as usize)?;
    for p in &config.points {
        if let Some((start, len)) = lattice_run(p, n) {
            state.place_arc(start, len);
        }
        if state.is_fully_covered() {
            break;
        }
    }
    Ok(state)
}

/// `Z_n`: lattice points `k/n` left vacant by the configuration.
pub fn count_missing_lattice(config: &CircleConfiguration, n: u64) -> Result<u64> {
    Ok(x_state(config, n)?.vacant_count() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    W,
    X,
}

/// Sites of `Z/nZ` covered by one of the discrete projections.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub n: u64,
    pub variant: Projection,
    covered: Vec<bool>,
}

impl ProjectionSet {
    pub fn contains(&self, i: usize) -> bool {
        self.covered[i]
    }

    pub fn covered_count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }

    pub fn covers_all(&self) -> bool {
        self.covered.iter().all(|&c| c)
    }

    pub fn covered_indices(&self) -> Vec<usize> {
        (0..self.covered.len()).filter(|&i| self.covered[i]).collect()
    }

    /// Sites covered here but not in `other`.
    pub fn violations_of_subset(&self, other: &ProjectionSet) -> Vec<usize> {
        (0..self.covered.len())
            .filter(|&i| self.covered[i] && !other.covered[i])
            .collect()
    }

    pub fn is_subset_of(&self, other: &ProjectionSet) -> bool {
        self.n == other.n && self.violations_of_subset(other).is_empty()
    }
}

/// `W^n`: the arc `{j0, ..., j0 + ⌊n y⌋ - 1}` per point, `j0` the first lattice
/// site strictly right of `x`.
pub fn project_w(config: &CircleConfiguration, n: u64) -> Result<ProjectionSet> {
    check_truncation(config, n)?;
    let mut state = TorusCoverState::new(n as usize)?;
    let nf = n as f64;
    for p in &config.points {
        let k = (nf * p.y).floor();
        if k < 1.0 {
            continue;
        }
        let start = (first_lattice_after(p.x, n) as u64 % n) as usize;
        // saturating: k >= n covers everything
        state.place_arc(start, k as u64);
    }
    Ok(ProjectionSet {
        n,
        variant: Projection::W,
        covered: state.covered_mask(),
    })
}

/// `X^n`: the maximal lattice run inside each open arc.
pub fn project_x(config: &CircleConfiguration, n: u64) -> Result<ProjectionSet> {
    let mut state = x_state(config, n)?;
    Ok(ProjectionSet {
        n,
        variant: Projection::X,
        covered: state.covered_mask(),
    })
}

/// Estimate of `π_{1/n}(alpha)` with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub covered: usize,
    pub replicates: usize,
}

impl PiEstimate {
    pub fn lower(&self) -> f64 {
        self.estimate - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.half_width
    }
}

/// Seed of replicate `r` of ω[1/n] samples.
pub fn configuration_seed(seed: u64, n: u64, replicate: u64) -> u64 {
    derive_seed(seed, n, replicate)
}

/// Fraction of sampled `ω[1/n]` that cover the circle.
pub fn pi_hat(alpha: f64, n: u64, replicates: usize, seed: u64) -> Result<PiEstimate> {
    if replicates == 0 || n == 0 {
        return Err(Error::invalid("pi_hat needs replicates >= 1 and n >= 1"));
    }
    let z = 1.0 / n as f64;
    let flags: Vec<bool> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            CircleConfiguration::sample(alpha, z, configuration_seed(seed, n, r))
                .map(|c| is_covered(&c))
        })
        .collect::<Result<_>>()?;
    let covered = flags.iter().filter(|&&c| c).count();
    let m = replicates as f64;
    let p = covered as f64 / m;
    Ok(PiEstimate {
        estimate: p,
        half_width: 1.96 * (p * (1.0 - p) / m).sqrt(),
        covered,
        replicates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionEstimate {
    /// Mean of `ln Z_n / ln n` over configurations with `Z_n > 0`.
    pub mean_exponent: f64,
    pub accepted: usize,
    pub replicates: usize,
}

/// Conditional log-scale exponent of the missing lattice count.
pub fn dimension_estimate(alpha: f64, n: u64, replicates: usize, seed: u64) -> Result<DimensionEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("dimension estimate needs 0 < alpha < 1, got {alpha}")));
    }
    if n < 2 {
        return Err(Error::invalid("dimension estimate needs n >= 2"));
    }
    let counts = missing_lattice_counts(alpha, n, replicates, seed)?;
    let ln_n = (n as f64).ln();
    let exps: Vec<f64> = counts
        .iter()
        .filter(|&&z| z > 0)
        .map(|&z| (z as f64).ln() / ln_n)
        .collect();
    if exps.len() < MIN_ACCEPTED {
        return Err(Error::InsufficientAcceptances {
            accepted: exps.len(),
            required: MIN_ACCEPTED,
        });
    }
    Ok(DimensionEstimate {
        mean_exponent: exps.iter().sum::<f64>() / exps.len() as f64,
        accepted: exps.len(),
        replicates,
    })
}

/// `Z_n` for `replicates` independent `ω[1/n]`, in replicate order.
pub fn missing_lattice_counts(alpha: f64, n: u64, replicates: usize, seed: u64) -> Result<Vec<u64>> {
    let z = 1.0 / n as f64;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let c = CircleConfiguration::sample(alpha, z, configuration_seed(seed, n, r))?;
            count_missing_lattice(&c, n)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesClass {
    Diverging,
    Converging,
    Inconclusive,
}

/// Partial sums of `sum_k k^-2 exp(l_1 + ... + l_k)` and a heuristic verdict.
#[derive(Debug, Clone)]
pub struct SheppSeries {
    pub partial_sums: Vec<f64>,
    /// Least-squares slope of `ln term_k` against `ln k` over the last decade.
    pub tail_slope: f64,
    pub class: SeriesClass,
}

/// Evaluates the Shepp series for arc lengths `lengths(k)`, `k = 1..=terms`.
///
/// The lengths must be finite, non-negative and non-increasing. The series is
/// classed as diverging when the terms decay no faster than `1/k` (slope `>= -1`,
/// up to [`SLOPE_TOLERANCE`]), converging when the slope is below `-1 - 0.05`.
pub fn shepp_series<F: FnMut(u64) -> f64>(mut lengths: F, terms: u64) -> Result<SheppSeries> {
    if !(10..=10_000_000).contains(&terms) {
        return Err(Error::invalid(format!("terms = {terms} must be in 10..=10^7")));
    }
    let mut partial_sums = Vec::with_capacity(terms as usize);
    let mut log_terms = Vec::with_capacity(terms as usize);
    let mut cum = CompensatedSum::default();
    let mut total = CompensatedSum::default();
    let mut prev = f64::INFINITY;
    for k in 1..=terms {
        let l = lengths(k);
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::invalid(format!("length l_{k} = {l} must be finite and >= 0")));
        }
        if l > prev {
            return Err(Error::NonMonotone(k));
        }
        prev = l;
        cum.add(l);
        let log_term = cum.value() - 2.0 * (k as f64).ln();
        log_terms.push(log_term);
        total.add(log_term.exp());
        partial_sums.push(total.value());
    }
    let from = (terms / 10).max(1);
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0.0;
    for k in from..=terms {
        let x = (k as f64).ln();
        let y = log_terms[k as usize - 1];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        count += 1.0;
    }
    let tail_slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    let class = if tail_slope >= -1.0 - SLOPE_TOLERANCE {
        SeriesClass::Diverging
    } else if tail_slope < -1.0 - SLOPE_BAND {
        SeriesClass::Converging
    } else {
        SeriesClass::Inconclusive
    };
    Ok(SheppSeries {
        partial_sums,
        tail_slope,
        class,
    })
}
