//! Monte Carlo estimate of the discretized path integral at one point.
//!
//! Paths start at `x0` and take `n` independent `N(0, 2σδt)` increments; each
//! contributes `f(ξ(n))·Π_{i=0..n} exp(−w_i·V(ξ(i), τ_{n−i})·δt)`. Samples are
//! split into fixed-size shards with one RNG stream each, so the estimate
//! depends only on the seed and never on the execution policy.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::TimeGrid;
use crate::problems::ProblemSpec;

/// Paths per shard.
pub const SHARD_SIZE: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    /// Number of paths `K`.
    pub samples: u64,
    pub seed: u64,
    pub x0: f64,
    /// Pair each path with its mirror image; `samples` must then be even.
    pub antithetic: bool,
    pub exec: Exec,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 1,
            x0: 0.0,
            antithetic: false,
            exec: Exec::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean; infinite for a single sample.
    pub stderr: f64,
    pub samples: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let wa = self.count as f64 / n as f64;
        let wb = other.count as f64 / n as f64;
        Moments {
            count: n,
            mean: self.mean * wa + other.mean * wb,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * wb,
        }
    }
}

struct PathWeights<'a> {
    problem: &'a ProblemSpec,
    tg: &'a TimeGrid,
    scale: f64,
}

impl PathWeights<'_> {
    /// Integrand for the increments drawn into `z` (unit normals), with sign
    /// `s` applied to every increment.
    fn value(&self, x0: f64, z: &[f64], s: f64) -> f64 {
        let n = self.tg.steps();
        let dt = self.tg.dt();
        let mut x = x0;
        let mut exponent = self.tg.weight(0) * self.problem.potential(x, self.tg.tau(n));
        for (i, zi) in z.iter().enumerate() {
            x += s * self.scale * zi;
            let step = i + 1;
            exponent += self.tg.weight(step) * self.problem.potential(x, self.tg.tau(n - step));
        }
        self.problem.initial(x) * (-exponent * dt).exp()
    }
}

/// Sample mean and standard error of the path integral at `cfg.x0`.
pub fn mc_estimate(problem: &ProblemSpec, tg: &TimeGrid, cfg: &McConfig) -> Result<McEstimate> {
    if cfg.samples == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one sample"));
    }
    if cfg.antithetic && !cfg.samples.is_multiple_of(2) {
        return Err(Error::invalid("antithetic sampling needs an even sample count"));
    }
    if !cfg.x0.is_finite() {
        return Err(Error::invalid(format!("x0 must be finite, got {}", cfg.x0)));
    }
    let weights = PathWeights {
        problem,
        tg,
        scale: (2.0 * problem.sigma * tg.dt()).sqrt(),
    };
    // with antithetic pairs one statistical unit is the mean of a pair
    let units = if cfg.antithetic { cfg.samples / 2 } else { cfg.samples };
    let shards = units.div_ceil(SHARD_SIZE);
    let n = tg.steps();

    let parts = cfg.exec.map(shards as usize, |shard| {
        let shard = shard as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(shard);
        let count = SHARD_SIZE.min(units - shard * SHARD_SIZE);
        let mut z = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..count {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let v = if cfg.antithetic {
                0.5 * (weights.value(cfg.x0, &z, 1.0) + weights.value(cfg.x0, &z, -1.0))
            } else {
                weights.value(cfg.x0, &z, 1.0)
            };
            m.push(v);
        }
        m
    });
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    if !total.mean.is_finite() {
        return Err(Error::NonFinite {
            x: cfg.x0,
            t: tg.t_final(),
            value: total.mean,
        });
    }
    let stderr = if total.count > 1 {
        (total.m2 / (total.count - 1) as f64 / total.count as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(McEstimate {
        mean: total.mean,
        stderr,
        samples: cfg.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::QuadratureRule;
    use crate::problems::gaussian_density;
    use std::sync::Arc;

    fn grid(t: f64, n: usize) -> TimeGrid {
        TimeGrid::new(t, n, QuadratureRule::Trapezoid).unwrap()
    }

    #[test]
    fn constant_integrand() {
        let p = ProblemSpec::new("flat", 0.5, 1.0, Arc::new(|_, _| 0.0), Arc::new(|_| 1.0)).unwrap();
        let est = mc_estimate(&p, &grid(1.0, 8), &McConfig { samples: 1000, ..Default::default() }).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn single_sample_has_infinite_stderr() {
        let p = ProblemSpec::cauchy(0.5, 1.0).unwrap();
        let est = mc_estimate(&p, &grid(1.0, 4), &McConfig { samples: 1, ..Default::default() }).unwrap();
        assert!(est.stderr.is_infinite());
        assert!(est.mean.is_finite());
    }

    #[test]
    fn gaussian_convolution() {
        let (sigma, t, beta) = (0.5, 1.0, 2.0);
        let p = ProblemSpec::free_gaussian(sigma, t, beta).unwrap();
        let est = mc_estimate(&p, &grid(t, 4), &McConfig { samples: 200_000, ..Default::default() }).unwrap();
        let b = beta / (1.0 + 4.0 * beta * sigma * t);
        let exact = gaussian_density(b, 0.0);
        assert!((est.mean - exact).abs() < 4.0 * est.stderr, "{} vs {exact}", est.mean);
    }

    #[test]
    fn deterministic_across_policies() {
        let p = ProblemSpec::cauchy(0.5, 1.0).unwrap();
        let tg = grid(1.0, 16);
        let base = McConfig {
            samples: 40_000,
            seed: 9,
            ..Default::default()
        };
        let a = mc_estimate(&p, &tg, &base).unwrap();
        let b = mc_estimate(&p, &tg, &McConfig { exec: Exec::Parallel, ..base.clone() }).unwrap();
        let c = mc_estimate(&p, &tg, &base).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = mc_estimate(&p, &tg, &McConfig { seed: 10, ..base }).unwrap();
        assert_ne!(a.mean, d.mean);
    }

    #[test]
    fn antithetic_pairs() {
        let (sigma, t, beta) = (0.5, 1.0, 2.0);
        let p = ProblemSpec::free_gaussian(sigma, t, beta).unwrap();
        let tg = grid(t, 4);
        let cfg = McConfig {
            samples: 100_000,
            antithetic: true,
            ..Default::default()
        };
        let est = mc_estimate(&p, &tg, &cfg).unwrap();
        let exact = gaussian_density(beta / (1.0 + 4.0 * beta * sigma * t), 0.0);
        assert!((est.mean - exact).abs() < 4.0 * est.stderr);
        assert!(mc_estimate(&p, &tg, &McConfig { samples: 3, ..cfg }).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let p = ProblemSpec::cauchy(0.5, 1.0).unwrap();
        let tg = grid(1.0, 4);
        assert!(mc_estimate(&p, &tg, &McConfig { samples: 0, ..Default::default() }).is_err());
        assert!(mc_estimate(&p, &tg, &McConfig { x0: f64::NAN, ..Default::default() }).is_err());
    }

    #[test]
    fn merged_moments_match_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 37.0).collect();
        let mut a = Moments::default();
        let mut b = Moments::default();
        for (i, x) in xs.iter().enumerate() {
            if i < 313 { a.push(*x) } else { b.push(*x) }
        }
        let m = a.merge(b);
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        assert!((m.mean - mean).abs() < 1e-12);
        assert!((m.m2 - var).abs() < 1e-9 * var);
    }
}
