use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{precondition, Error, Result};
use crate::generator::RadialFunction;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffspringMode {
    /// Binary law, branch events with probability `rate*dt` per step.
    #[default]
    BinaryExponential,
    /// Binary law, every particle branches at the epochs `k/rate`.
    BinaryDeterministic,
    /// Heavy-tailed law in the domain of attraction of a `p`-stable law.
    Stable,
}

/// Branching mechanism `beta(x) z - alpha(x) z^p` and the offspring model
/// that realizes it at resolution `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingTriplet {
    pub beta: RadialFunction,
    pub alpha: RadialFunction,
    pub p: f64,
    #[serde(default)]
    pub offspring_mode: OffspringMode,
    /// Branching-rate constant.
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

pub const DEFAULT_K_MAX: u64 = 1_000_000;

impl BranchingTriplet {
    pub fn new(beta: RadialFunction, alpha: RadialFunction, p: f64) -> Self {
        let offspring_mode = if p == 2.0 { OffspringMode::BinaryExponential } else { OffspringMode::Stable };
        BranchingTriplet { beta, alpha, p, offspring_mode, c: 1.0 }
    }

    /// `beta = 0` and constant `alpha`, quadratic branching.
    pub fn critical_binary(alpha: f64) -> Self {
        Self::new(RadialFunction::constant(0.0), RadialFunction::constant(alpha), 2.0)
    }

    pub fn with_mode(mut self, mode: OffspringMode) -> Self {
        self.offspring_mode = mode;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn beta(&self, r: f64) -> f64 {
        self.beta.eval(r)
    }

    pub fn alpha(&self, r: f64) -> f64 {
        self.alpha.eval(r)
    }

    pub fn validate(&self) -> Result<()> {
        precondition(self.p > 1.0 && self.p <= 2.0, || format!("p = {} is outside (1, 2]", self.p))?;
        precondition(self.c > 0.0, || "branching-rate constant c must be positive".into())?;
        match self.offspring_mode {
            OffspringMode::Stable => precondition(self.p < 2.0, || "stable offspring needs p < 2".into())?,
            _ => precondition(self.p == 2.0, || "binary offspring needs p = 2".into())?,
        }
        if let RadialFunction::PowerLaw { scale, exponent } = self.beta {
            if scale > 0.0 && exponent > 0.0 {
                return Err(Error::Coefficient("beta must be bounded above".into()));
            }
        }
        if let RadialFunction::PowerLaw { scale, .. } = self.alpha {
            if scale <= 0.0 {
                return Err(Error::Coefficient("alpha must be positive".into()));
            }
            return Ok(());
        }
        for k in 1..=200 {
            let r = 50.0 * k as f64 / 200.0;
            let a = self.alpha(r);
            if !(a > 0.0) {
                return Err(Error::Coefficient(format!("alpha({r}) = {a} is not positive")));
            }
            if !self.beta(r).is_finite() {
                return Err(Error::Coefficient(format!("beta({r}) is not finite")));
            }
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.alpha.is_constant() && self.beta.is_constant()
    }

    /// Per-particle branching rate at resolution `n`.
    pub fn rate(&self, n: u64) -> f64 {
        let n = n as f64;
        match self.offspring_mode {
            OffspringMode::Stable => self.c * n.powf(self.p - 1.0),
            _ => self.c * n,
        }
    }

    /// Offspring law of a particle at radius `r`.
    pub fn law_at(&self, r: f64, n: u64) -> Result<OffspringLaw> {
        let (alpha, beta) = (self.alpha(r), self.beta(r));
        match self.offspring_mode {
            OffspringMode::Stable => OffspringLaw::stable(alpha, beta, self.p, self.c, n, DEFAULT_K_MAX)
                .map_err(|detail| Error::ResolutionTooCoarse { position: r, detail }),
            _ => OffspringLaw::binary(alpha, beta, self.c, n)
                .map_err(|detail| Error::ResolutionTooCoarse { position: r, detail }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OffspringLaw {
    Binary {
        p0: f64,
        p1: f64,
        p2: f64,
    },
    /// Generating function `s + q((1-s)^p - a(1-s))`, truncated at `k_max`.
    Stable {
        p: f64,
        q: f64,
        a: f64,
        p0: f64,
        p1: f64,
        k_max: u64,
        ln_norm: f64,
    },
}

impl OffspringLaw {
    /// Variance `m = 2 alpha/c`, mean `1 + gamma/n` with `gamma = beta/c`.
    pub fn binary(alpha: f64, beta: f64, c: f64, n: u64) -> std::result::Result<Self, String> {
        let m = 2.0 * alpha / c;
        let drift = beta / c / n as f64;
        if m > 1.0 {
            return Err(format!("offspring variance 2*alpha/c = {m} exceeds 1; raise c"));
        }
        if drift.abs() > m {
            return Err(format!("|beta|/(c n) = {} exceeds 2*alpha/c = {m}; raise n", drift.abs()));
        }
        Ok(OffspringLaw::Binary { p0: 0.5 * (m - drift), p1: 1.0 - m, p2: 0.5 * (m + drift) })
    }

    /// `q = alpha/c`, `a = beta n^{1-p}/alpha`, so that at rate `c n^{p-1}`
    /// the scaled generating function reproduces `alpha lambda^p - beta lambda`.
    pub fn stable(alpha: f64, beta: f64, p: f64, c: f64, n: u64, k_max: u64) -> std::result::Result<Self, String> {
        let q = alpha / c;
        let a = beta * (n as f64).powf(1.0 - p) / alpha;
        let p0 = q * (1.0 - a);
        let p1 = 1.0 - q * (p - a);
        if p0 < 0.0 {
            return Err(format!("P(0) = {p0} < 0; raise n"));
        }
        if p1 < 0.0 {
            return Err(format!("P(1) = {p1} < 0; raise c above {}", alpha * (p - a)));
        }
        let ln_norm = (p - 1.0).ln() - ln_gamma(2.0 - p);
        Ok(OffspringLaw::Stable { p, q, a, p0, p1, k_max, ln_norm })
    }

    /// `P(count >= k)`.
    pub fn tail(&self, k: u64) -> f64 {
        match *self {
            OffspringLaw::Binary { p1, p2, .. } => match k {
                0 => 1.0,
                1 => p1 + p2,
                2 => p2,
                _ => 0.0,
            },
            OffspringLaw::Stable { p0, q, k_max, .. } => match k {
                0 => 1.0,
                1 => 1.0 - p0,
                k if k > k_max => 0.0,
                k => q * self.stable_tail(k),
            },
        }
    }

    /// `sum_{j >= k} c_j` where `(1-s)^p = 1 - p s + sum_{j>=2} c_j s^j`,
    /// equal to `(p-1) Γ(k-p) / (Γ(k) Γ(2-p))`.
    fn stable_tail(&self, k: u64) -> f64 {
        match *self {
            OffspringLaw::Stable { p, ln_norm, .. } => {
                let k = k as f64;
                (ln_norm + ln_gamma(k - p) - ln_gamma(k)).exp()
            }
            _ => unreachable!(),
        }
    }

    pub fn prob(&self, k: u64) -> f64 {
        match *self {
            OffspringLaw::Stable { p0, p1, k_max, .. } => match k {
                0 => p0,
                1 => p1,
                k if k == k_max => self.tail(k),
                k => self.tail(k) - self.tail(k + 1),
            },
            _ => self.tail(k) - self.tail(k + 1),
        }
    }

    /// Exact mean of the (truncated) law.
    pub fn mean(&self) -> f64 {
        match *self {
            OffspringLaw::Binary { p1, p2, .. } => p1 + 2.0 * p2,
            OffspringLaw::Stable { q, a, p, k_max, .. } => {
                // E = sum_{k>=1} P(>=k); the untruncated value is 1 + q a, and
                // the truncation removes sum_{k > k_max} q T_k.
                let mut lost = 0.0;
                let mut t = self.stable_tail(k_max + 1);
                let mut k = (k_max + 1) as f64;
                // T_{k+1} = T_k (k - p)/k; sum until negligible, then close
                // with the integral of the k^{-p} tail.
                for _ in 0..10_000 {
                    lost += t;
                    t *= (k - p) / k;
                    k += 1.0;
                }
                lost += t * k / (p - 1.0);
                1.0 + q * a - q * lost
            }
        }
    }

    /// `Φ(s) - s`, summed without cancellation.
    pub fn pgf_minus_identity(&self, s: f64) -> f64 {
        match *self {
            OffspringLaw::Binary { p0, p2, .. } => p0 * (1.0 - s) - p2 * s * (1.0 - s),
            OffspringLaw::Stable { p0, k_max, .. } => {
                // sum_k P(k) (s^k - s), with s^k - s = s * expm1((k-1) ln s)
                let ls = s.ln();
                let mut acc = p0 * (1.0 - s);
                let mut k = 2u64;
                let mut prev_tail = self.tail(2);
                while k <= k_max {
                    let next_tail = if k == k_max { 0.0 } else { self.tail(k + 1) };
                    let pk = prev_tail - next_tail;
                    let term = s * ((k - 1) as f64 * ls).exp_m1();
                    acc += pk * term;
                    if (k as f64 - 1.0) * ls < -745.0 {
                        // s^k underflowed; the rest contribute -s P(>= k+1)
                        acc -= s * next_tail;
                        break;
                    }
                    prev_tail = next_tail;
                    k += 1;
                }
                acc
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        match *self {
            OffspringLaw::Binary { p0, p1, .. } => {
                if u < p0 {
                    0
                } else if u < p0 + p1 {
                    1
                } else {
                    2
                }
            }
            OffspringLaw::Stable { p0, p1, .. } => {
                if u < p0 {
                    0
                } else if u < p0 + p1 {
                    1
                } else {
                    self.invert_tail(1.0 - u, 2)
                }
            }
        }
    }

    /// Sample conditioned on `count >= k_min` (stable law only).
    pub fn sample_tail_conditioned<R: Rng + ?Sized>(&self, k_min: u64, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let top = self.tail(k_min);
        self.invert_tail(top * (1.0 - u), k_min)
    }

    // largest k >= lo with P(>= k) >= v
    fn invert_tail(&self, v: f64, lo: u64) -> u64 {
        let k_max = match *self {
            OffspringLaw::Stable { k_max, .. } => k_max,
            _ => 2,
        };
        if self.tail(k_max) >= v {
            return k_max;
        }
        let (mut lo, mut hi) = (lo, k_max);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail(mid) >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}
