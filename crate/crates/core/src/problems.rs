//! Benchmark problems and their closed-form solutions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::TimeGrid;

pub type Potential = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `u_t = σ u_xx − V(x, t) u`, `u(x, 0) = f(x)` on `t ∈ [0, T]`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub sigma: f64,
    pub t_final: f64,
    potential: Potential,
    initial: Density,
    time_dependent: bool,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("sigma", &self.sigma)
            .field("t_final", &self.t_final)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        sigma: f64,
        t_final: f64,
        potential: Potential,
        initial: Density,
    ) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("diffusivity must be positive, got {sigma}")));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::invalid(format!("final time must be positive, got {t_final}")));
        }
        Ok(Self {
            name: name.into(),
            sigma,
            t_final,
            potential,
            initial,
            time_dependent: true,
        })
    }

    /// Problem from expression strings for `V(x, t)` and `f(x)`.
    pub fn from_expressions(
        name: impl Into<String>,
        sigma: f64,
        t_final: f64,
        potential: &str,
        initial: &str,
    ) -> Result<Self> {
        let v = Expr::parse(potential)?;
        let f = Expr::parse(initial)?;
        if f.uses_t() {
            return Err(Error::invalid("initial condition must not depend on t"));
        }
        let time_dependent = v.uses_t();
        let mut spec = Self::new(
            name,
            sigma,
            t_final,
            Arc::new(move |x, t| v.eval(x, t)),
            Arc::new(move |x| f.eval(x, 0.0)),
        )?;
        spec.time_dependent = time_dependent;
        Ok(spec)
    }

    #[inline]
    pub fn potential(&self, x: f64, t: f64) -> f64 {
        (self.potential)(x, t)
    }

    #[inline]
    pub fn initial(&self, x: f64) -> f64 {
        (self.initial)(x)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn with_time_independent(mut self) -> Self {
        self.time_dependent = false;
        self
    }

    /// Gaussian initial density and `V = x²/(t+1)`.
    pub fn harmonic(sigma: f64, t_final: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Self::new(
            "harmonic",
            sigma,
            t_final,
            Arc::new(|x, t| x * x / (t + 1.0)),
            Arc::new(move |x| gaussian_density(beta, x)),
        )
    }

    /// Cauchy density with the potential that keeps it self-similar:
    /// `u(x, t) = (t + 1) / (π (x² + 1))`.
    pub fn cauchy(sigma: f64, t_final: f64) -> Result<Self> {
        Self::new(
            "cauchy",
            sigma,
            t_final,
            Arc::new(move |x, t| cauchy_potential(sigma, x, t)),
            Arc::new(|x| cauchy_exact(x, 0.0)),
        )
    }

    /// Oscillating potential with a single well at `x = −a`, Gaussian start
    /// centred at `x = a`; `a = β = 0.5`.
    pub fn impurity(sigma: f64, t_final: f64) -> Result<Self> {
        Ok(Self::new(
            "impurity",
            sigma,
            t_final,
            Arc::new(|x, _| impurity_potential(x)),
            Arc::new(impurity_initial),
        )?
        .with_time_independent())
    }

    /// `V ≡ 0` with Gaussian initial density `p(β, x)`.
    pub fn free_gaussian(sigma: f64, t_final: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::new(
            "free",
            sigma,
            t_final,
            Arc::new(|_, _| 0.0),
            Arc::new(move |x| gaussian_density(beta, x)),
        )?
        .with_time_independent())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("Gaussian parameter must be positive, got {beta}")));
    }
    Ok(())
}

/// `p(β, x) = √(β/π)·exp(−β x²)`.
#[inline]
pub fn gaussian_density(beta: f64, x: f64) -> f64 {
    (beta / PI).sqrt() * (-beta * x * x).exp()
}

#[inline]
pub fn cauchy_potential(sigma: f64, x: f64, t: f64) -> f64 {
    let x2 = x * x;
    -1.0 / (t + 1.0) + 2.0 * sigma * (3.0 * x2 - 1.0) / ((x2 + 1.0) * (x2 + 1.0))
}

#[inline]
pub fn cauchy_exact(x: f64, t: f64) -> f64 {
    (t + 1.0) / (PI * (x * x + 1.0))
}

pub const IMPURITY_A: f64 = 0.5;
pub const IMPURITY_BETA: f64 = 0.5;

#[inline]
pub fn impurity_potential(x: f64) -> f64 {
    let s = x / IMPURITY_A + 1.0;
    let sn = (PI * s).sin();
    IMPURITY_A + sn * sn - 1.0 / (1.0 + s.powi(8))
}

#[inline]
pub fn impurity_initial(x: f64) -> f64 {
    let d = x - IMPURITY_A;
    (IMPURITY_BETA / PI).sqrt() * (-IMPURITY_BETA * d * d).exp()
}

/// Closed-form propagation of the harmonic problem through the discrete
/// scheme: every intermediate function stays a Gaussian, so the iteration
/// reduces to a recurrence on its width and amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorRecurrence {
    /// `β_n, β_{n−1}, …, β_0` (index `i` holds `β_{n−i}`).
    pub beta_seq: Vec<f64>,
    /// `γ_n, …, γ_1` (index `i` holds `γ_{n−i}`).
    pub gamma_seq: Vec<f64>,
    /// `Γ_n, …, Γ_1` with `Γ_k = Π_{j=k}^{n} √(β_j/γ_j)`.
    pub prefactors: Vec<f64>,
    weight0: f64,
    dt: f64,
    t_final: f64,
}

impl OscillatorRecurrence {
    pub fn new(tg: &TimeGrid, sigma: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(sigma > 0.0) {
            return Err(Error::invalid(format!("diffusivity must be positive, got {sigma}")));
        }
        let n = tg.steps();
        let dt = tg.dt();
        let lambda = 1.0 / (4.0 * sigma * dt);
        let mut beta_seq = Vec::with_capacity(n + 1);
        let mut gamma_seq = Vec::with_capacity(n);
        let mut prefactors = Vec::with_capacity(n);
        let mut b = beta;
        let mut gamma_prod = 1.0;
        beta_seq.push(b);
        for k in (1..=n).rev() {
            let g = b + tg.weight(k) * dt / (1.0 + (n - k) as f64 * dt);
            gamma_prod *= (b / g).sqrt();
            b = lambda * g / (lambda + g);
            gamma_seq.push(g);
            prefactors.push(gamma_prod);
            beta_seq.push(b);
        }
        Ok(Self {
            beta_seq,
            gamma_seq,
            prefactors,
            weight0: tg.weight(0),
            dt,
            t_final: tg.t_final(),
        })
    }

    /// `β_0`.
    pub fn final_beta(&self) -> f64 {
        *self.beta_seq.last().expect("nonempty")
    }

    /// `Γ_1`.
    pub fn final_prefactor(&self) -> f64 {
        *self.prefactors.last().expect("n ≥ 1")
    }

    /// `Ψ_1(x) = Γ_1·p(β_0, x)`.
    pub fn psi1(&self, x: f64) -> f64 {
        self.final_prefactor() * gaussian_density(self.final_beta(), x)
    }

    /// `u^(n)(x, T) = Ψ_1(x)·exp(−w_0·V(x, T)·δt)`.
    pub fn solution(&self, x: f64) -> f64 {
        self.psi1(x) * (-self.weight0 * x * x / (self.t_final + 1.0) * self.dt).exp()
    }
}

/// Exact discrete solution of the harmonic problem at the points `x`.
pub fn oscillator_exact(x: &[f64], tg: &TimeGrid, sigma: f64, beta: f64) -> Result<Vec<f64>> {
    let rec = OscillatorRecurrence::new(tg, sigma, beta)?;
    Ok(x.iter().map(|&x| rec.solution(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::QuadratureRule;

    #[test]
    fn harmonic_formulas() {
        let p = ProblemSpec::harmonic(0.25, 10.0, 1.0).unwrap();
        for t in [0.0, 1.0, 7.5] {
            assert_eq!(p.potential(0.0, t), 0.0);
        }
        assert_eq!(p.potential(1.0, 0.0), 1.0);
        // ∫ f = 1
        let h = 1e-3;
        let mass: f64 = (-10_000..10_000).map(|i| p.initial(i as f64 * h) * h).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(ProblemSpec::harmonic(0.25, 10.0, 0.0).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cauchy_formulas() {
        assert!((cauchy_exact(0.0, 1.0) - 2.0 / PI).abs() < 1e-16);
        assert!((cauchy_exact(0.0, 1.0) - 0.6366198).abs() < 1e-7);
        let p = ProblemSpec::cauchy(0.5, 1.0).unwrap();
        for x in [-3.0, 0.0, 0.7] {
            assert_eq!(p.initial(x), cauchy_exact(x, 0.0));
        }
        let sigma = 0.5;
        assert!((p.potential(0.0, 0.0) - (-1.0 - 2.0 * sigma)).abs() < 1e-15);
    }

    #[test]
    fn cauchy_solves_the_pde() {
        // u_t − σ u_xx + V u = 0 by central differences
        let sigma = 0.5;
        let h = 1e-3;
        let ht = 1e-4;
        for &x in &[-3.0, -1.0, -0.3, 0.0, 0.4, 2.5] {
            for &t in &[0.1, 0.5, 0.9] {
                let ut = (cauchy_exact(x, t + ht) - cauchy_exact(x, t - ht)) / (2.0 * ht);
                let uxx = (cauchy_exact(x + h, t) - 2.0 * cauchy_exact(x, t) + cauchy_exact(x - h, t))
                    / (h * h);
                let res = ut - sigma * uxx + cauchy_potential(sigma, x, t) * cauchy_exact(x, t);
                assert!(res.abs() < 1e-6, "x={x} t={t}: {res:e}");
            }
        }
    }

    #[test]
    fn impurity_formulas() {
        assert!((impurity_potential(-0.5) + 0.5).abs() < 1e-15);
        // peak at x = a
        assert!(impurity_initial(0.5) > impurity_initial(0.49));
        assert!(impurity_initial(0.5) > impurity_initial(0.51));
        // V ≥ a − 1 on a dense scan
        let min = (0..=400_000)
            .map(|i| impurity_potential(-20.0 + i as f64 * 1e-4))
            .fold(f64::INFINITY, f64::min);
        assert!(min >= IMPURITY_A - 1.0 - 1e-12, "{min}");
        assert!((min - (IMPURITY_A - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn impurity_tail_mass_is_gaussian() {
        // f·exp(−w V δt) is dominated by the Gaussian: V ≥ −0.5 bounds the growth
        let dt = 0.5;
        let tail: f64 = (0..200_000)
            .map(|i| 10.0 + i as f64 * 1e-4)
            .map(|x| impurity_initial(x) * (-0.5 * impurity_potential(x) * dt).exp() * 1e-4)
            .sum();
        let bound = (0.25f64 * dt).exp() * 0.5 * statrs::function::erf::erfc((0.5f64).sqrt() * 9.5);
        assert!(tail <= bound, "{tail:e} > {bound:e}");
    }

    #[test]
    fn expression_problem() {
        let p = ProblemSpec::from_expressions("custom", 0.5, 1.0, "x^2/(t+1)", "exp(-x^2)").unwrap();
        assert_eq!(p.potential(2.0, 1.0), 2.0);
        assert!(p.is_time_dependent());
        assert!(ProblemSpec::from_expressions("bad", 0.5, 1.0, "x", "t").is_err());
        assert!(ProblemSpec::from_expressions("bad", 0.5, 1.0, "x +", "1").is_err());
    }

    #[test]
    fn recurrence_single_step_matches_quadrature() {
        // one step: u(x) = ∫ p(β, x+ξ) e^{−w_1 (x+ξ)² δt} p(λ, ξ) dξ · e^{−w_0 x² δt/(T+1)}
        let sigma = 0.3;
        let beta = 1.7;
        let tg = TimeGrid::new(0.4, 1, QuadratureRule::Trapezoid).unwrap();
        let dt = tg.dt();
        let lambda = 1.0 / (4.0 * sigma * dt);
        let rec = OscillatorRecurrence::new(&tg, sigma, beta).unwrap();

        let g1 = beta + 0.5 * dt;
        assert!((rec.gamma_seq[0] - g1).abs() < 1e-15);
        assert!((rec.final_beta() - lambda * g1 / (lambda + g1)).abs() < 1e-14);
        assert!((rec.final_prefactor() - (beta / g1).sqrt()).abs() < 1e-15);

        let h = 1e-4;
        for &x in &[-1.0, 0.0, 0.3, 1.2] {
            let integral: f64 = (-200_000..200_000)
                .map(|i| {
                    let xi = i as f64 * h;
                    let y = x + xi;
                    gaussian_density(beta, y) * (-0.5 * y * y * dt).exp() * gaussian_density(lambda, xi) * h
                })
                .sum();
            let expected = integral * (-0.5 * x * x / (0.4 + 1.0) * dt).exp();
            assert!((rec.solution(x) - expected).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn recurrence_positive_and_concentrating() {
        let tg = TimeGrid::new(10.0, 100, QuadratureRule::Trapezoid).unwrap();
        let rec = OscillatorRecurrence::new(&tg, 0.25, 1.0).unwrap();
        assert_eq!(rec.beta_seq.len(), 101);
        assert!(rec.beta_seq.iter().all(|&b| b > 0.0));
        assert!(rec.gamma_seq.iter().all(|&g| g > 0.0));

        let wide = OscillatorRecurrence::new(&tg, 0.25, 1e8).unwrap();
        let at0 = wide.solution(0.0);
        assert!(at0.is_finite() && at0 > 0.0);
        assert!(oscillator_exact(&[0.0], &tg, 0.25, -1.0).is_err());
    }
}
