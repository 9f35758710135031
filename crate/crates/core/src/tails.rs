//! Radius tail families `f(r) = P(R >= r)` and the quantities derived from them.
//!
//! A covering process on the torus is driven by a single distributional input:
//! the tail of the arc length `R`. Five parametric families are supported, spanning
//! the light-tailed regime (finite mean) down to slowly varying tails:
//!
//! | family            | tail `f(r)`                            | config string   |
//! |-------------------|----------------------------------------|-----------------|
//! | `ConstantRadius`  | `1` for `r <= c`, `0` afterwards       | `const:<c>`     |
//! | `Geometric`       | `q^(r-1)`                              | `geom:<q>`      |
//! | `LogPower`        | monotone envelope of `min(ln^b r / r, 1)` | `logpow:<b>` |
//! | `PurePower`       | `r^p`, `-1 < p < 0`                    | `pow:<p>`       |
//! | `SlowLog`         | `1 / (1 + ln r)`                       | `slowlog`       |
//!
//! Every family satisfies `f(1) = 1` and is non-increasing, so radius sampling by
//! inverse transform, `R = max{r : f(r) >= u}`, is exact.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Radii are capped here when the inverse transform would overflow.
pub const MAX_RADIUS: u64 = u64::MAX;

/// Beyond this the `f64` grid is too coarse for the ±1 correction of closed-form
/// inversions; the estimate is returned as is.
const EXACT_INVERSION_LIMIT: f64 = 4.5e15;

/// A parametric radius tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailFunction {
    /// `R = c` almost surely.
    ConstantRadius(u64),
    /// `f(r) = q^(r-1)`, mean `1 / (1 - q)`.
    Geometric(f64),
    /// `f(1) = 1`, `f(r) = min(f(r-1), ln^b(r) / r, 1)`.
    LogPower(f64),
    /// `f(r) = r^p` with `-1 < p < 0`.
    PurePower(f64),
    /// `f(r) = 1 / (1 + ln r)`.
    SlowLog,
}

impl TailFunction {
    pub fn constant(c: u64) -> Result<Self> {
        if c == 0 {
            return Err(Error::invalid("constant radius must be >= 1"));
        }
        Ok(TailFunction::ConstantRadius(c))
    }

    pub fn geometric(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("geometric ratio {q} not in (0, 1)")));
        }
        Ok(TailFunction::Geometric(q))
    }

    pub fn log_power(b: f64) -> Result<Self> {
        if !(b > -1.0 && b.is_finite()) {
            return Err(Error::invalid(format!("log-power exponent {b} must be > -1")));
        }
        Ok(TailFunction::LogPower(b))
    }

    pub fn pure_power(p: f64) -> Result<Self> {
        if !(p > -1.0 && p < 0.0) {
            return Err(Error::invalid(format!("power index {p} not in (-1, 0)")));
        }
        Ok(TailFunction::PurePower(p))
    }

    /// Tail value `f(r)`; `r = 0` is treated as `r = 1`.
    pub fn eval(&self, r: u64) -> f64 {
        if r <= 1 {
            return 1.0;
        }
        let rf = r as f64;
        match *self {
            TailFunction::ConstantRadius(c) => {
                if r <= c {
                    1.0
                } else {
                    0.0
                }
            }
            TailFunction::Geometric(q) => q.powf(rf - 1.0),
            TailFunction::LogPower(b) => {
                if b == 0.0 {
                    return 1.0 / rf;
                }
                // ln^b(r)/r is unimodal on [2, inf), so its running minimum from 2 is
                // min(raw(2), raw(r)).
                let raw = |x: f64| x.ln().powf(b) / x;
                raw(2.0).min(raw(rf)).min(1.0)
            }
            TailFunction::PurePower(p) => rf.powf(p),
            TailFunction::SlowLog => 1.0 / (1.0 + rf.ln()),
        }
    }

    /// Inverse transform: `max{r >= 1 : f(r) >= u}` for `u` in `(0, 1]`.
    pub fn sample_radius(&self, u: f64) -> u64 {
        debug_assert!(u > 0.0 && u <= 1.0);
        match *self {
            TailFunction::ConstantRadius(c) => c,
            TailFunction::Geometric(q) => self.correct(1.0 + (u.ln() / q.ln()).floor(), u),
            TailFunction::LogPower(b) if b == 0.0 => self.correct((1.0 / u).floor(), u),
            TailFunction::LogPower(_) => self.bisect(u),
            TailFunction::PurePower(p) => self.correct(u.powf(1.0 / p).floor(), u),
            TailFunction::SlowLog => self.correct((1.0 / u - 1.0).exp().floor(), u),
        }
    }

    /// Local ±1 repair of a closed-form estimate so the result is exact for the
    /// tail as evaluated by [`TailFunction::eval`].
    fn correct(&self, estimate: f64, u: f64) -> u64 {
        if !(estimate < EXACT_INVERSION_LIMIT) {
            // saturating cast; NaN cannot occur for u in (0, 1]
            return estimate as u64;
        }
        let mut r = (estimate as u64).max(1);
        while self.eval(r + 1) >= u {
            r += 1;
        }
        while r > 1 && self.eval(r) < u {
            r -= 1;
        }
        r
    }

    /// Galloping then bisection search over the monotone tail.
    fn bisect(&self, u: f64) -> u64 {
        let mut lo = 1u64;
        let mut hi = 2u64;
        while self.eval(hi) >= u {
            lo = hi;
            if hi >= 1 << 62 {
                return MAX_RADIUS;
            }
            hi *= 2;
        }
        // invariant: f(lo) >= u > f(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.eval(mid) >= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `E[R] = sum_r f(r)` when finite.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            TailFunction::ConstantRadius(c) => Some(c as f64),
            TailFunction::Geometric(q) => Some(1.0 / (1.0 - q)),
            _ => None,
        }
    }

    pub fn require_mean(&self) -> Result<f64> {
        self.mean().ok_or_else(|| Error::InfiniteMean(self.to_string()))
    }

    /// Regular-variation index `p` of the tail, when it is one of the heavy families.
    pub fn rv_index(&self) -> Option<f64> {
        match *self {
            TailFunction::LogPower(_) => Some(-1.0),
            TailFunction::PurePower(p) => Some(p),
            TailFunction::SlowLog => Some(0.0),
            _ => None,
        }
    }

    /// Short family name used in CSV rows.
    pub fn family_name(&self) -> &'static str {
        match self {
            TailFunction::ConstantRadius(_) => "const",
            TailFunction::Geometric(_) => "geom",
            TailFunction::LogPower(_) => "logpow",
            TailFunction::PurePower(_) => "pow",
            TailFunction::SlowLog => "slowlog",
        }
    }
}

impl fmt::Display for TailFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailFunction::ConstantRadius(c) => write!(f, "const:{c}"),
            TailFunction::Geometric(q) => write!(f, "geom:{q}"),
            TailFunction::LogPower(b) => write!(f, "logpow:{b}"),
            TailFunction::PurePower(p) => write!(f, "pow:{p}"),
            TailFunction::SlowLog => write!(f, "slowlog"),
        }
    }
}

impl FromStr for TailFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "slowlog" {
            return Ok(TailFunction::SlowLog);
        }
        let syntax = || Error::TailSyntax(s.to_string());
        let (name, arg) = s.split_once(':').ok_or_else(syntax)?;
        let real = || arg.parse::<f64>().map_err(|_| syntax());
        match name {
            "const" => TailFunction::constant(arg.parse().map_err(|_| syntax())?),
            "geom" => TailFunction::geometric(real()?),
            "logpow" => TailFunction::log_power(real()?),
            "pow" => TailFunction::pure_power(real()?),
            _ => Err(syntax()),
        }
    }
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `F_k = sum_{i=1..k} f(i)` without caching.
pub fn tail_sum(f: &TailFunction, k: u64) -> f64 {
    if let TailFunction::ConstantRadius(c) = *f {
        return k.min(c) as f64;
    }
    let mut acc = CompensatedSum::default();
    for i in 1..=k {
        let v = f.eval(i);
        if v == 0.0 {
            break;
        }
        acc.add(v);
    }
    acc.value()
}

/// Cached prefix sums `F_k` for `k <= n_max`, the mean `mu` when finite, and the
/// normalized sequence `g_k = F_k / mu`.
#[derive(Debug, Clone)]
pub struct TailMoments {
    tail: TailFunction,
    // prefix[k] = F_k, prefix[0] = 0
    prefix: Vec<f64>,
    mu: Option<f64>,
}

impl TailMoments {
    pub fn new(tail: TailFunction, n_max: u64) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::invalid("n_max must be >= 1"));
        }
        let mut prefix = Vec::with_capacity(n_max as usize + 1);
        prefix.push(0.0);
        let mut acc = CompensatedSum::default();
        for i in 1..=n_max {
            acc.add(tail.eval(i));
            prefix.push(acc.value());
        }
        Ok(TailMoments {
            tail,
            prefix,
            mu: tail.mean(),
        })
    }

    pub fn tail(&self) -> &TailFunction {
        &self.tail
    }

    pub fn n_max(&self) -> u64 {
        (self.prefix.len() - 1) as u64
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    fn check(&self, k: u64) -> Result<()> {
        if k == 0 || k > self.n_max() {
            return Err(Error::OutOfRange {
                index: k,
                max: self.n_max(),
            });
        }
        Ok(())
    }

    /// `F_k`.
    pub fn prefix_sum(&self, k: u64) -> Result<f64> {
        self.check(k)?;
        Ok(self.prefix[k as usize])
    }

    /// `g_k = F_k / mu`; fails for infinite-mean families.
    pub fn g_value(&self, k: u64) -> Result<f64> {
        let mu = self
            .mu
            .ok_or_else(|| Error::InfiniteMean(self.tail.to_string()))?;
        self.check(k)?;
        Ok((self.prefix[k as usize] / mu).min(1.0))
    }
}

/// `x f(x) / F_x`; tends to `p + 1` for tails regularly varying with index `p > -1`.
pub fn karamata_ratio(f: &TailFunction, x: u64) -> f64 {
    let x = x.max(1);
    x as f64 * f.eval(x) / tail_sum(f, x)
}

/// `f(floor(x t)) / f(x)`; tends to `t^p` for tails regularly varying with index `p`.
pub fn rv_limit_probe(f: &TailFunction, t: f64, x: u64) -> Result<f64> {
    if !(t > 0.0) || x == 0 {
        return Err(Error::invalid("need t > 0 and x >= 1"));
    }
    let scaled = (x as f64 * t).floor();
    if scaled < 1.0 {
        return Err(Error::invalid(format!("x t = {} < 1", x as f64 * t)));
    }
    let denom = f.eval(x);
    if denom == 0.0 {
        return Err(Error::TailExhausted(x));
    }
    Ok(f.eval(scaled as u64) / denom)
}

/// `f(k) k^(1+lambda) ln k`, which tends to zero exactly for tails light enough for
/// the Gumbel regime.
pub fn moment_diagnostic(f: &TailFunction, lambda: f64, k: u64) -> f64 {
    let kf = k as f64;
    let v = f.eval(k);
    if v == 0.0 {
        return 0.0;
    }
    v * kf.powf(1.0 + lambda) * kf.ln()
}

/// `F_n / (n f(n))`; converges to `1 / (1 + p)` for power tails.
pub fn cf_estimate(f: &TailFunction, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("cf_estimate needs n >= 2"));
    }
    let fn_ = f.eval(n);
    if fn_ == 0.0 {
        return Err(Error::TailExhausted(n));
    }
    Ok(tail_sum(f, n) / (n as f64 * fn_))
}
