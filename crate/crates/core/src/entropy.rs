//! Quadratic-plus-relative-entropy functional: Gaussian KL divergence, the
//! closed-form Gaussian minimizer with its minimum value, and a discretized
//! Gibbs-posterior oracle used to check the closed forms independently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GaussianDist;
use crate::scalar::Scalar;

/// Quadratic cost (c2/2) a^2 + c1 a.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadraticCost<F> {
    pub c2: F,
    pub c1: F,
}

/// Density sampled on a uniform grid; `h * sum(weights) = 1`.
#[derive(Debug, Clone)]
pub struct DiscretizedDensity<F> {
    /// Leftmost grid point.
    pub lo: F,
    /// Grid spacing.
    pub h: F,
    pub weights: Vec<F>,
}

/// Priors with precision above this are treated as degenerate (Dirac limits
/// are only exercised through the closed-form TWAP corollaries).
const MAX_PRECISION: f64 = 1e15;

/// Default oracle grid size.
pub const DEFAULT_GRID_POINTS: usize = 20001;

impl<F: Scalar> DiscretizedDensity<F> {
    pub fn grid_point(&self, i: usize) -> F {
        self.lo + self.h * F::from_usize(i).unwrap()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn hi(&self) -> F {
        self.grid_point(self.len() - 1)
    }

    /// Uniform grid spanning `half_widths` standard deviations of the wider
    /// of (prior, posterior) beyond both means, so it covers both densities
    /// even when the posterior mean sits far in the prior's tail.
    pub fn gaussian_grid(
        prior: &GaussianDist<F>,
        posterior: Option<&GaussianDist<F>>,
        half_widths: F,
        n: usize,
    ) -> Result<Self> {
        if prior.precision > F::lit(MAX_PRECISION) {
            return Err(Error::PrecisionViolation(format!(
                "prior precision {} above degeneracy cap {MAX_PRECISION}",
                prior.precision
            )));
        }
        let mut sd = prior.std_dev();
        let mut mean_lo = prior.mean;
        let mut mean_hi = prior.mean;
        if let Some(p) = posterior {
            sd = sd.max(p.std_dev());
            mean_lo = mean_lo.min(p.mean);
            mean_hi = mean_hi.max(p.mean);
        }
        let lo = mean_lo - half_widths * sd;
        let h = (mean_hi - mean_lo + F::lit(2.0) * half_widths * sd)
            / F::from_usize(n - 1).unwrap();
        let mut d = Self { lo, h, weights: vec![F::zero(); n] };
        for i in 0..n {
            d.weights[i] = prior.pdf(d.grid_point(i));
        }
        d.normalize()?;
        Ok(d)
    }

    pub fn from_gaussian(dist: &GaussianDist<F>, half_widths: F, n: usize) -> Result<Self> {
        Self::gaussian_grid(dist, None, half_widths, n)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let total: F = self.weights.iter().copied().sum::<F>() * self.h;
        if !(total > F::zero()) || !total.is_finite() {
            return Err(Error::DegenerateNormalizer);
        }
        for w in &mut self.weights {
            *w = *w / total;
        }
        Ok(())
    }

    pub fn mean(&self) -> F {
        (0..self.len())
            .map(|i| self.grid_point(i) * self.weights[i])
            .sum::<F>()
            * self.h
    }

    pub fn variance(&self) -> F {
        let m = self.mean();
        (0..self.len())
            .map(|i| {
                let d = self.grid_point(i) - m;
                d * d * self.weights[i]
            })
            .sum::<F>()
            * self.h
    }

    pub fn precision(&self) -> F {
        self.variance().recip()
    }

    /// Total variation distance against another density on the same grid.
    pub fn total_variation(&self, other: &Self) -> F {
        debug_assert_eq!(self.len(), other.len());
        (0..self.len())
            .map(|i| (self.weights[i] - other.weights[i]).abs())
            .sum::<F>()
            * self.h
            / F::lit(2.0)
    }
}

/// KL(p || q) for Gaussians in mean/precision form; always >= 0.
pub fn kl_gaussian<F: Scalar>(p: &GaussianDist<F>, q: &GaussianDist<F>) -> Result<F> {
    if p.precision <= F::zero() || q.precision <= F::zero() {
        return Err(Error::PrecisionViolation(
            "kl_gaussian requires positive precisions".into(),
        ));
    }
    let half = F::lit(0.5);
    let d = p.mean - q.mean;
    Ok(half
        * (q.precision / p.precision - F::one()
            + q.precision * d * d
            + (p.precision / q.precision).ln()))
}

/// Minimizes F[pi] = E_pi[(c2/2) a^2 + c1 a] + KL(pi || prior) / beta over
/// all densities absolutely continuous w.r.t. the prior.
///
/// Returns the Gaussian minimizer (mean (s m - beta c1)/(s + beta c2),
/// precision s + beta c2) and the minimum value.
pub fn minimize_entropy_functional<F: Scalar>(
    cost: &QuadraticCost<F>,
    prior: &GaussianDist<F>,
    beta: F,
) -> Result<(GaussianDist<F>, F)> {
    if beta <= F::zero() {
        return Err(Error::Validation(format!("beta must be > 0, got {beta}")));
    }
    if prior.precision > F::lit(MAX_PRECISION) {
        return Err(Error::PrecisionViolation(format!(
            "prior precision {} above degeneracy cap {MAX_PRECISION}",
            prior.precision
        )));
    }
    let (s, m) = (prior.precision, prior.mean);
    let post_precision = s + beta * cost.c2;
    if post_precision <= F::zero() {
        return Err(Error::PrecisionViolation(format!(
            "s + beta c2 = {post_precision} must be > 0"
        )));
    }
    let num = s * m - beta * cost.c1;
    let posterior = GaussianDist { mean: num / post_precision, precision: post_precision };
    let two_beta = F::lit(2.0) * beta;
    let min_value =
        (post_precision / s).ln() / two_beta + s * m * m / two_beta - num * num / (two_beta * post_precision);
    Ok((posterior, min_value))
}

/// Evaluates F[pi] on a discretized density by the trapezoid-free Riemann sum
/// sum_i h w_i [(c2/2) a_i^2 + c1 a_i + ln(w_i / prior(a_i)) / beta], with the
/// convention 0 ln 0 = 0.
pub fn functional_value<F: Scalar>(
    pi: &DiscretizedDensity<F>,
    cost: &QuadraticCost<F>,
    prior: &GaussianDist<F>,
    beta: F,
) -> Result<F> {
    let (posterior, _) = minimize_entropy_functional(cost, prior, beta)?;
    let eight = F::lit(8.0);
    let sd = posterior.std_dev();
    for mean in [prior.mean, posterior.mean] {
        if pi.lo > mean - eight * sd || pi.hi() < mean + eight * sd {
            return Err(Error::SupportTooNarrow(format!(
                "grid [{}, {}] must cover {mean} +/- 8 posterior std devs",
                pi.lo,
                pi.hi()
            )));
        }
    }
    let half = F::lit(0.5);
    let mut acc = F::zero();
    for i in 0..pi.len() {
        let w = pi.weights[i];
        if w <= F::zero() {
            continue; // 0 ln 0 = 0
        }
        let a = pi.grid_point(i);
        let cost_term = half * cost.c2 * a * a + cost.c1 * a;
        // log-space ratio: prior.pdf underflows when the posterior mass sits
        // far out in the prior's tail, but the log-density stays finite
        let entropy_term = (w.ln() - prior.log_pdf(a)) / beta;
        acc = acc + w * (cost_term + entropy_term);
    }
    Ok(acc * pi.h)
}

/// Gibbs-form posterior pi*(a) proportional to prior(a) exp(-beta f(a)),
/// normalized on `grid` (whose weights are ignored). Taking the prior as
/// `log_prior` keeps the product representable when the posterior mass sits
/// where the prior density underflows.
pub fn gibbs_posterior_oracle<F: Scalar>(
    grid: &DiscretizedDensity<F>,
    log_prior: &[F],
    integrand: &[F],
    beta: F,
) -> Result<DiscretizedDensity<F>> {
    assert_eq!(grid.len(), log_prior.len(), "log_prior must be grid-sampled");
    assert_eq!(grid.len(), integrand.len(), "integrand must be grid-sampled");
    if integrand.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("integrand must be finite on the grid".into()));
    }
    // subtract the max exponent so at least one weight survives underflow
    let mut max_exp = F::neg_infinity();
    for i in 0..grid.len() {
        max_exp = max_exp.max(log_prior[i] - beta * integrand[i]);
    }
    if !max_exp.is_finite() {
        return Err(Error::DegenerateNormalizer);
    }
    let mut out = grid.clone();
    for i in 0..grid.len() {
        out.weights[i] = (log_prior[i] - beta * integrand[i] - max_exp).exp();
    }
    out.normalize().map_err(|_| Error::DegenerateNormalizer)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn prior() -> GaussianDist<f64> {
        GaussianDist::new(0.0, 1e-8).unwrap()
    }

    #[test]
    fn kl_identical_is_zero() {
        let p = GaussianDist::new(1.5, 3.0).unwrap();
        assert_eq!(kl_gaussian(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_equal_variance() {
        let p = GaussianDist::new(1.0, 1.0).unwrap();
        let q = GaussianDist::new(0.0, 1.0).unwrap();
        assert_relative_eq!(kl_gaussian(&p, &q).unwrap(), 0.5);
    }

    #[test]
    fn kl_against_quadrature() {
        // KL((0, prec 2) || (0, prec 1)) = (1/2 - 1 + ln 2) / 2, checked by
        // quadrature of p ln(p/q) on a +/- 10 sd grid.
        let p = GaussianDist::new(0.0, 2.0).unwrap();
        let q = GaussianDist::new(0.0, 1.0).unwrap();
        let closed = kl_gaussian(&p, &q).unwrap();
        assert_relative_eq!(closed, 0.5 * (0.5 - 1.0 + 2f64.ln()), max_relative = 1e-14);

        let n = 20001;
        let sd = 10.0; // 10 std devs of the wider (q)
        let h = 2.0 * sd / (n - 1) as f64;
        let mut quad = 0.0;
        for i in 0..n {
            let a = -sd + i as f64 * h;
            let pa = p.pdf(a);
            if pa > 0.0 {
                quad += pa * (pa / q.pdf(a)).ln() * h;
            }
        }
        assert_relative_eq!(closed, quad, max_relative = 1e-8);
    }

    #[test]
    fn zero_cost_keeps_prior() {
        let cost = QuadraticCost { c2: 0.0, c1: 0.0 };
        let (post, min_value) = minimize_entropy_functional(&cost, &prior(), 1.0).unwrap();
        assert_eq!(post, prior());
        assert_eq!(min_value, 0.0);
    }

    #[test]
    fn benchmark_posterior() {
        // Model 1 benchmark at x = 1e6: C1 = (gamma_M + R_xa) x = -2.5
        let cost = QuadraticCost { c2: 9e-7, c1: -2.5 };
        let (post, _) = minimize_entropy_functional(&cost, &prior(), 1.0).unwrap();
        assert_relative_eq!(post.precision, 9.1e-7, max_relative = 1e-14);
        assert_relative_eq!(post.mean, 2747252.7472527474, max_relative = 1e-12);
    }

    #[test]
    fn functional_value_of_prior_and_minimizer() {
        let cost0 = QuadraticCost { c2: 0.0, c1: 0.0 };
        let d = DiscretizedDensity::from_gaussian(&prior(), 10.0, DEFAULT_GRID_POINTS).unwrap();
        let v = functional_value(&d, &cost0, &prior(), 1.0).unwrap();
        assert!(v.abs() < 1e-6, "prior under zero cost should be ~0, got {v}");

        let cost = QuadraticCost { c2: 9e-7, c1: -2.5 };
        let (post, min_value) = minimize_entropy_functional(&cost, &prior(), 1.0).unwrap();
        let grid = DiscretizedDensity::gaussian_grid(&prior(), Some(&post), 10.0, DEFAULT_GRID_POINTS)
            .unwrap();
        let mut d = grid.clone();
        for i in 0..d.len() {
            d.weights[i] = post.pdf(d.grid_point(i));
        }
        d.normalize().unwrap();
        let v = functional_value(&d, &cost, &prior(), 1.0).unwrap();
        assert_relative_eq!(v, min_value, max_relative = 1e-6);

        // shifting by one posterior sd strictly increases the functional
        let mut shifted = grid.clone();
        let sd = post.std_dev();
        for i in 0..shifted.len() {
            let a = shifted.grid_point(i) - sd;
            shifted.weights[i] =
                (post.precision / std::f64::consts::TAU).sqrt()
                    * (-post.precision * (a - post.mean).powi(2) / 2.0).exp();
        }
        shifted.normalize().unwrap();
        let vs = functional_value(&shifted, &cost, &prior(), 1.0).unwrap();
        assert!(vs > min_value, "shifted value {vs} should exceed min {min_value}");
    }

    #[test]
    fn support_too_narrow() {
        let cost = QuadraticCost { c2: 0.0, c1: 0.0 };
        let d = DiscretizedDensity::from_gaussian(&prior(), 3.0, 501).unwrap();
        assert!(matches!(
            functional_value(&d, &cost, &prior(), 1.0),
            Err(Error::SupportTooNarrow(_))
        ));
    }

    #[test]
    fn gibbs_constant_integrand_keeps_prior() {
        let d = DiscretizedDensity::from_gaussian(&prior(), 10.0, 2001).unwrap();
        let log_prior: Vec<f64> = (0..d.len()).map(|i| prior().log_pdf(d.grid_point(i))).collect();
        let integrand = vec![42.0; d.len()];
        let post = gibbs_posterior_oracle(&d, &log_prior, &integrand, 1.0).unwrap();
        assert!(d.total_variation(&post) < 1e-12);
    }

    #[test]
    fn gibbs_matches_gaussian_minimizer() {
        let cost = QuadraticCost { c2: 9e-7, c1: -2.5 };
        let (post, _) = minimize_entropy_functional(&cost, &prior(), 1.0).unwrap();
        let grid =
            DiscretizedDensity::gaussian_grid(&prior(), Some(&post), 10.0, DEFAULT_GRID_POINTS)
                .unwrap();
        let log_prior: Vec<f64> =
            (0..grid.len()).map(|i| prior().log_pdf(grid.grid_point(i))).collect();
        let integrand: Vec<f64> = (0..grid.len())
            .map(|i| {
                let a = grid.grid_point(i);
                0.5 * cost.c2 * a * a + cost.c1 * a
            })
            .collect();
        let gibbs = gibbs_posterior_oracle(&grid, &log_prior, &integrand, 1.0).unwrap();
        assert_relative_eq!(gibbs.mean(), post.mean, max_relative = 1e-4);
        assert_relative_eq!(gibbs.precision(), post.precision, max_relative = 1e-4);
    }

    #[test]
    fn gibbs_vanishing_beta_recovers_prior() {
        let d = DiscretizedDensity::from_gaussian(&prior(), 10.0, 2001).unwrap();
        let log_prior: Vec<f64> = (0..d.len()).map(|i| prior().log_pdf(d.grid_point(i))).collect();
        let integrand: Vec<f64> = (0..d.len()).map(|i| d.grid_point(i).powi(2)).collect();
        let post = gibbs_posterior_oracle(&d, &log_prior, &integrand, 1e-16).unwrap();
        assert!(d.total_variation(&post) < 1e-6);
    }

    #[test]
    fn degenerate_prior_rejected() {
        let dirac = GaussianDist::new(0.0, 1e16).unwrap();
        let cost = QuadraticCost { c2: 0.0, c1: 0.0 };
        assert!(matches!(
            minimize_entropy_functional(&cost, &dirac, 1.0),
            Err(Error::PrecisionViolation(_))
        ));
    }
}
