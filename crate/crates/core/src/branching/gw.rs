//! The critical binary Galton-Watson skeleton, `p0 = p2 = 1/2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::par::{map_indexed, Execution};
use crate::rng::{stream, ReplicaRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GWOracle {
    /// `survival[k] = P(Z_k > 0)`.
    pub survival: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioned_tail_samples: Option<Vec<f64>>,
}

/// Survival probabilities from the extinction iteration
/// `e_{k+1} = 1/2 + e_k^2 / 2`, carried as `s = 1 - e` through the
/// equivalent `s_{k+1} = s_k - s_k^2 / 2` so that small `s` keeps full
/// precision.
pub fn gw_survival_recursion(k: usize) -> Result<GWOracle> {
    precondition(k >= 1, || "need at least one generation".into())?;
    let mut survival = Vec::with_capacity(k + 1);
    let mut s = 1.0f64;
    survival.push(s);
    for _ in 0..k {
        s -= 0.5 * s * s;
        survival.push(s);
    }
    Ok(GWOracle { survival, conditioned_tail_samples: None })
}

/// One generation: each of `z` individuals leaves 0 or 2 children with
/// equal probability, so `Z' = 2 Binomial(z, 1/2)`.
pub fn next_generation<R: Rng + ?Sized>(z: u64, rng: &mut R) -> u64 {
    let mut left = z;
    let mut heads = 0u64;
    while left >= 64 {
        heads += u64::from(rng.random::<u64>().count_ones());
        left -= 64;
    }
    if left > 0 {
        let mask = (1u64 << left) - 1;
        heads += u64::from((rng.random::<u64>() & mask).count_ones());
    }
    2 * heads
}

/// Runs one tree from a single ancestor for at most `generations`
/// generations. Returns the generation of extinction, or `None` if the tree
/// is still alive, together with the final size.
pub fn run_tree<R: Rng + ?Sized>(generations: usize, rng: &mut R) -> (Option<usize>, u64) {
    let mut z = 1u64;
    for k in 1..=generations {
        z = next_generation(z, rng);
        if z == 0 {
            return (Some(k), 0);
        }
    }
    (None, z)
}

/// Monte Carlo survival estimates `P(Z_k > 0)` for each requested `k`,
/// from `trees` independent trees. Tree `i` uses stream `i` of `seed`.
pub fn gw_monte_carlo(ks: &[usize], trees: usize, seed: u64, exec: Execution) -> Result<Vec<(usize, usize)>> {
    precondition(trees >= 1, || "need at least one tree".into())?;
    let horizon = ks.iter().copied().max().unwrap_or(0);
    const CHUNK: usize = 4096;
    let chunks = trees.div_ceil(CHUNK);
    let counts = map_indexed(chunks, exec, |c| {
        let mut alive = vec![0usize; ks.len()];
        for i in c * CHUNK..((c + 1) * CHUNK).min(trees) {
            let mut rng = stream(seed, i as u64);
            let (died, _) = run_tree(horizon, &mut rng);
            for (slot, &k) in alive.iter_mut().zip(ks) {
                if died.is_none_or(|d| d > k) {
                    *slot += 1;
                }
            }
        }
        alive
    });
    let mut total = vec![0usize; ks.len()];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(ks.iter().copied().zip(total).collect())
}

/// `Z_n / n` for surviving trees, until `samples` survivors are collected.
///
/// Work is split into a fixed number of blocks, each with its own stream
/// and quota, so the output does not depend on the thread count.
pub fn conditioned_samples(n: usize, samples: usize, seed: u64, exec: Execution) -> Result<Vec<f64>> {
    precondition(n >= 1 && samples >= 1, || "need n >= 1 and samples >= 1".into())?;
    const BLOCKS: usize = 64;
    let blocks = BLOCKS.min(samples);
    let parts = map_indexed(blocks, exec, |b| {
        let quota = samples / blocks + usize::from(b < samples % blocks);
        let mut rng: ReplicaRng = stream(seed, b as u64);
        let mut out = Vec::with_capacity(quota);
        while out.len() < quota {
            if let (None, z) = run_tree(n, &mut rng) {
                out.push(z as f64 / n as f64);
            }
        }
        out
    });
    Ok(parts.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_survival_values() {
        let o = gw_survival_recursion(3).unwrap();
        assert_eq!(o.survival[0], 1.0);
        assert_eq!(o.survival[1], 0.5);
        assert_eq!(o.survival[2], 0.375);
    }

    #[test]
    fn zero_generations_rejected() {
        assert!(gw_survival_recursion(0).is_err());
    }

    #[test]
    fn offspring_are_even_and_bounded() {
        let mut rng = stream(1, 0);
        for z in [0u64, 1, 63, 64, 65, 1000] {
            let next = next_generation(z, &mut rng);
            assert_eq!(next % 2, 0);
            assert!(next <= 2 * z);
        }
    }
}
