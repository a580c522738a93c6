//! Time grid, nested spatial meshes and the weighted Gaussian kernel.
//!
//! Level `k` of the mesh stack covers `[−k·a, k·a)` with `k·M` points of
//! spacing `h = a / N`, `M = 2N`. The kernel nodes `ξ_j = −a + j·h` tile one
//! window, so that `x^(k+1)_{i+j} = x^(k)_i + ξ_j`: one step of the iteration
//! maps level `k+1` onto level `k` by a discrete convolution. Levels are never
//! stored; points are produced from their index.

use crate::error::{Error, Result};

/// Quadrature rule used for the time integral of the potential, or for the
/// spatial weights of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    Rectangle,
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trapezoid" | "trapezoidal" => Ok(QuadratureRule::Trapezoid),
            "rectangle" | "rect" => Ok(QuadratureRule::Rectangle),
            other => Err(Error::invalid(format!("unknown quadrature rule `{other}`"))),
        }
    }
}

impl std::fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QuadratureRule::Trapezoid => "trapezoid",
            QuadratureRule::Rectangle => "rectangle",
        })
    }
}

/// Uniform time grid `τ_k = k·δt`, `0 ≤ k ≤ n`, with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
    dt: f64,
    weights: Vec<f64>,
    rule: QuadratureRule,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize, rule: QuadratureRule) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::invalid(format!("final time must be positive, got {t_final}")));
        }
        if steps == 0 {
            return Err(Error::invalid("number of time steps must be at least 1"));
        }
        let mut weights = vec![1.0; steps + 1];
        match rule {
            QuadratureRule::Trapezoid => {
                weights[0] = 0.5;
                weights[steps] = 0.5;
            }
            QuadratureRule::Rectangle => weights[steps] = 0.0,
        }
        Ok(Self {
            t_final,
            steps,
            dt: t_final / steps as f64,
            weights,
            rule,
        })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Number of steps `n`; the path integral has dimension `n`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    /// Weights `w_0..=w_n`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `τ_k = k·δt`; `τ_n` is returned as `T` exactly.
    pub fn tau(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }
}

/// The family of nested uniform meshes, one level per remaining time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStack {
    half_width: f64,
    half_count: usize,
    spacing: f64,
    window: usize,
    levels: usize,
}

impl GridStack {
    /// `levels` is the number of time steps `n`; the stack holds levels
    /// `1..=n+1` (the initial condition lives on level `n+1`).
    pub fn new(half_width: f64, half_count: usize, levels: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid(format!("half width must be positive, got {half_width}")));
        }
        if half_count == 0 {
            return Err(Error::invalid("half mesh count must be at least 1"));
        }
        let window = half_count
            .checked_mul(2)
            .ok_or_else(|| Error::Capacity("2·N overflows".into()))?;
        levels
            .checked_add(1)
            .and_then(|l| l.checked_mul(window))
            .filter(|&len| len <= isize::MAX as usize / std::mem::size_of::<f64>())
            .ok_or_else(|| {
                Error::Capacity(format!("level {} with {} points per window", levels + 1, window))
            })?;
        Ok(Self {
            half_width,
            half_count,
            spacing: half_width / half_count as f64,
            window,
            levels,
        })
    }

    /// `a`: the final mesh covers `[−a, a)`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `N`.
    pub fn half_count(&self) -> usize {
        self.half_count
    }

    /// `h = a / N`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `M = 2N`, points per window.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Number of points `k·M` on level `k`.
    pub fn level_len(&self, level: usize) -> usize {
        level * self.window
    }

    /// `x^(k)_i = −k·a + i·h`.
    #[inline]
    pub fn point(&self, level: usize, i: usize) -> f64 {
        -(level as f64) * self.half_width + i as f64 * self.spacing
    }

    /// `ξ_j = −a + j·h`, `0 ≤ j < M`.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.point(1, j)
    }

    /// `[x_0, x_end)` of level `k`.
    pub fn level_range(&self, level: usize) -> (f64, f64) {
        let a = level as f64 * self.half_width;
        (-a, a)
    }

    /// Points of the final (level 1) mesh.
    pub fn base_mesh(&self) -> Vec<f64> {
        (0..self.window).map(|i| self.point(1, i)).collect()
    }
}

/// Weighted Gaussian samples `p_j = μ_j·√(λ/π)·exp(−λ ξ_j²)`, `λ = 1/(4σδt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionKernel {
    lambda: f64,
    weights: Vec<f64>,
    samples: Vec<f64>,
    reversed: Vec<f64>,
}

impl ConvolutionKernel {
    pub fn new(sigma: f64, dt: f64, grid: &GridStack, spatial_rule: QuadratureRule) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("diffusivity must be positive, got {sigma}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        let m = grid.window();
        let h = grid.spacing();
        let mut weights = vec![h; m];
        if spatial_rule == QuadratureRule::Trapezoid {
            weights[0] *= 0.5;
            weights[m - 1] *= 0.5;
        }
        let lambda = 1.0 / (4.0 * sigma * dt);
        let norm = (lambda / std::f64::consts::PI).sqrt();
        let samples: Vec<f64> = weights
            .iter()
            .enumerate()
            .map(|(j, mu)| {
                let xi = grid.node(j);
                mu * norm * (-lambda * xi * xi).exp()
            })
            .collect();
        let reversed = samples.iter().rev().copied().collect();
        Ok(Self {
            lambda,
            weights,
            samples,
            reversed,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Spatial quadrature weights `μ_j`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `p_j`.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `p̂ = (p_{M−1}, …, p_0)`.
    pub fn reversed(&self) -> &[f64] {
        &self.reversed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.samples.iter().sum()
    }
}
