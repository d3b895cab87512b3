//! Numerical verification of the saddle-point / duality structure of the
//! game Hamiltonians, and cross-checks of the inner-minimization reduction.
//!
//! The max over the trading rate v and the min over Gaussian posteriors pi
//! are both performed by successively zoomed grid searches, with closed-form
//! inner steps, so the two optimization orders are genuinely independent
//! routes to the game value.

use crate::entropy::{kl_gaussian, minimize_entropy_functional, QuadraticCost};
use crate::error::{Error, Result};
use crate::model::{GaussianDist, ModelParams};
pub use crate::model::RiskCtx;
use crate::scalar::Scalar;

/// A point at which the Hamiltonian is examined. The value gradient V_x is a
/// supplied surrogate, so the check is independent of any solver output.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianContext<F> {
    pub t: F,
    pub x: F,
    pub v_x: F,
    pub params: ModelParams<F>,
    pub prior: GaussianDist<F>,
    pub risk: RiskCtx<F>,
}

impl<F: Scalar> HamiltonianContext<F> {
    /// Coefficient of -v^2: eta for Model 1, eta - R_vv/2 for Model 2.
    /// Must be positive for the outer max to be concave.
    pub fn eta_eff(&self) -> F {
        match self.risk {
            RiskCtx::Model1(_) => self.params.eta,
            RiskCtx::Model2(r) => self.params.eta - r.r_vv.at(self.t) / F::lit(2.0),
        }
    }

    /// Coefficient coupling v to the market rate inside the expectation
    /// (R_va for Model 2, zero for Model 1).
    fn coupling(&self) -> F {
        match self.risk {
            RiskCtx::Model1(_) => F::zero(),
            RiskCtx::Model2(r) => r.r_va.at(self.t),
        }
    }

    /// v-independent linear-in-a cost coefficient.
    fn c1_base(&self) -> F {
        match self.risk {
            RiskCtx::Model1(r) => (r.r_xa.at(self.t) + self.params.gamma_m) * self.x,
            RiskCtx::Model2(_) => self.params.gamma_m * self.x,
        }
    }

    fn r_aa(&self) -> F {
        match self.risk {
            RiskCtx::Model1(r) => r.r_aa.at(self.t),
            RiskCtx::Model2(r) => r.r_aa.at(self.t),
        }
    }

    /// The quadratic cost in a entering the inner minimization at fixed v.
    pub fn cost_at(&self, v: F) -> QuadraticCost<F> {
        QuadraticCost {
            c2: self.r_aa(),
            c1: self.c1_base() + self.coupling() * v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.prior.precision <= F::zero() {
            return Err(Error::PrecisionViolation("prior precision must be > 0".into()));
        }
        if self.prior.precision + self.params.beta * self.r_aa() <= F::zero() {
            return Err(Error::PrecisionViolation("s + beta R_aa must be > 0".into()));
        }
        Ok(())
    }
}

/// H(v, pi) = -eta_eff v^2 + v V_x + E_pi[c1(v) a + (R_aa/2) a^2]
///          + KL(pi || prior) / beta,
/// with the pi-expectation in closed form from Gaussian moments.
pub fn hamiltonian<F: Scalar>(
    ctx: &HamiltonianContext<F>,
    v: F,
    pi: &GaussianDist<F>,
) -> Result<F> {
    ctx.validate()?;
    let cost = ctx.cost_at(v);
    let mu = pi.mean;
    let second_moment = mu * mu + pi.precision.recip();
    let kl = kl_gaussian(pi, &ctx.prior)?;
    Ok(-ctx.eta_eff() * v * v
        + v * ctx.v_x
        + cost.c1 * mu
        + cost.c2 / F::lit(2.0) * second_moment
        + kl / ctx.params.beta)
}

/// Search interval for one optimization axis.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec<F> {
    pub lo: F,
    pub hi: F,
    pub n: usize,
}

impl<F: Scalar> GridSpec<F> {
    pub fn new(lo: F, hi: F, n: usize) -> Self {
        assert!(hi > lo && n >= 4);
        Self { lo, hi, n }
    }
}

const MAX_WIDENINGS: usize = 5;
const ZOOM_ROUNDS: usize = 120;

/// Zoomed grid search for the maximizer of `f` on [lo, hi]. The bracket is
/// doubled (up to 5 times) whenever the best point lands on a boundary, then
/// repeatedly shrunk around the incumbent until the width hits rounding
/// scale.
fn zoom_max<F: Scalar>(spec: GridSpec<F>, f: impl Fn(F) -> Result<F>) -> Result<(F, F)> {
    let (mut lo, mut hi) = (spec.lo, spec.hi);
    let n = spec.n;
    let mut widenings = 0usize;
    let eps = F::lit(1e-15);
    for _ in 0..ZOOM_ROUNDS {
        let width = hi - lo;
        let step = width / F::from_usize(n).unwrap();
        let mut best_i = 0usize;
        let mut best = f(lo)?;
        let mut worst = best;
        for i in 1..=n {
            let xi = lo + step * F::from_usize(i).unwrap();
            let fi = f(xi)?;
            if fi > best {
                best = fi;
                best_i = i;
            }
            if fi < worst {
                worst = fi;
            }
        }
        // numerically flat: further zooming only samples rounding noise
        if best - worst <= F::lit(1e-13) * best.abs().max(F::one()) {
            let mid = (lo + hi) / F::lit(2.0);
            return Ok((mid, f(mid)?));
        }
        if best_i == 0 || best_i == n {
            widenings += 1;
            if widenings > MAX_WIDENINGS {
                return Err(Error::BoundaryHit(widenings));
            }
            if best_i == 0 {
                lo = lo - width;
            } else {
                hi = hi + width;
            }
            continue;
        }
        let x_best = lo + step * F::from_usize(best_i).unwrap();
        if width <= eps * (F::one() + x_best.abs()) {
            return Ok((x_best, best));
        }
        lo = x_best - step;
        hi = x_best + step;
    }
    let mid = (lo + hi) / F::lit(2.0);
    Ok((mid, f(mid)?))
}

fn zoom_min<F: Scalar>(spec: GridSpec<F>, f: impl Fn(F) -> Result<F>) -> Result<(F, F)> {
    let (x, neg) = zoom_max(spec, |x| f(x).map(|v| -v))?;
    Ok((x, -neg))
}

/// Result of a saddle-point check.
#[derive(Debug, Clone, Copy)]
pub struct SaddleReport<F> {
    pub maxmin: F,
    pub minmax: F,
    pub gap: F,
    pub argmax_v: F,
}

/// maxmin = max_v min_pi H(v, pi) with the inner min in closed form;
/// minmax = min over Gaussian (mean, precision) of max_v H(v, pi) with the
/// inner max at the quadratic vertex. Both searches auto-widen their
/// brackets; precision is searched in log space so positivity is structural.
pub fn saddle_check<F: Scalar>(
    ctx: &HamiltonianContext<F>,
    v_grid: GridSpec<F>,
    mean_grid: GridSpec<F>,
    log_precision_grid: GridSpec<F>,
) -> Result<SaddleReport<F>> {
    ctx.validate()?;
    let eta_eff = ctx.eta_eff();
    if eta_eff <= F::zero() {
        return Err(Error::NonConcave(eta_eff.to_f64().unwrap_or(f64::NAN)));
    }
    let beta = ctx.params.beta;

    let inner_min = |v: F| -> Result<F> {
        let (_, min_value) = minimize_entropy_functional(&ctx.cost_at(v), &ctx.prior, beta)?;
        Ok(-eta_eff * v * v + v * ctx.v_x + min_value)
    };
    let (argmax_v, maxmin) = zoom_max(v_grid, inner_min)?;

    let outer_max = |pi: &GaussianDist<F>| -> Result<F> {
        // max_v of -eta_eff v^2 + v (V_x + k mu) at the vertex
        let slope = ctx.v_x + ctx.coupling() * pi.mean;
        let mu = pi.mean;
        let second_moment = mu * mu + pi.precision.recip();
        Ok(slope * slope / (F::lit(4.0) * eta_eff)
            + ctx.c1_base() * mu
            + ctx.r_aa() / F::lit(2.0) * second_moment
            + kl_gaussian(pi, &ctx.prior)? / beta)
    };
    let (_, minmax) = zoom_min(log_precision_grid, |log_p| {
        let precision = log_p.exp();
        let (_, val) = zoom_min(mean_grid, |mu| {
            outer_max(&GaussianDist { mean: mu, precision })
        })?;
        Ok(val)
    })?;

    Ok(SaddleReport { maxmin, minmax, gap: (maxmin - minmax).abs(), argmax_v })
}

/// Default search brackets around the analytic optimizers: v around
/// V_x / (2 eta_eff), posterior mean around the Lemma minimizer, precision
/// around s + beta R_aa.
pub fn default_grids<F: Scalar>(
    ctx: &HamiltonianContext<F>,
) -> Result<(GridSpec<F>, GridSpec<F>, GridSpec<F>)> {
    let eta_eff = ctx.eta_eff();
    if eta_eff <= F::zero() {
        return Err(Error::NonConcave(eta_eff.to_f64().unwrap_or(f64::NAN)));
    }
    let v_star = ctx.v_x / (F::lit(2.0) * eta_eff);
    let v_scale = F::one() + v_star.abs();
    let (post, _) = minimize_entropy_functional(&ctx.cost_at(v_star), &ctx.prior, ctx.params.beta)?;
    let mu_scale = F::one() + post.mean.abs() + post.std_dev();
    let two = F::lit(2.0);
    Ok((
        GridSpec::new(v_star - two * v_scale, v_star + two * v_scale, 16),
        GridSpec::new(post.mean - two * mu_scale, post.mean + two * mu_scale, 16),
        GridSpec::new(post.precision.ln() - two, post.precision.ln() + two, 16),
    ))
}

/// Three independent evaluations of the inner-minimization value at fixed v
/// (plus a constant offset standing in for V_t + (sigma^X)^2 V_xx / 2):
/// the closed-form minimum, the completed-square log-integral, and numerical
/// log-sum-exp quadrature. Returns the maximum pairwise discrepancy.
pub fn inner_min_reduction_check<F: Scalar>(
    ctx: &HamiltonianContext<F>,
    v: F,
    offset: F,
) -> Result<F> {
    ctx.validate()?;
    if !matches!(ctx.risk, RiskCtx::Model1(_)) {
        return Err(Error::Validation("inner-min reduction check is a Model 1 statement".into()));
    }
    let beta = ctx.params.beta;
    let cost = ctx.cost_at(v);
    let (s, m) = (ctx.prior.precision, ctx.prior.mean);
    let denom = s + beta * cost.c2;
    if denom <= F::zero() {
        return Err(Error::PrecisionViolation("s + beta C2 must be > 0".into()));
    }
    let two = F::lit(2.0);
    let v_part = -ctx.params.eta * v * v + v * ctx.v_x + offset;

    // route 1: Lemma closed-form minimum over pi
    let (_, min_value) = minimize_entropy_functional(&cost, &ctx.prior, beta)?;
    let r1 = v_part + min_value;

    // route 2: -(1/beta) log of the Gaussian integral by completing the square
    let shifted = s * m - beta * cost.c1;
    let r2 = v_part
        + (denom / s).ln() / (two * beta)
        + s * m * m / (two * beta)
        - shifted * shifted / (two * beta * denom);

    // route 3: log-sum-exp quadrature of the same integral
    let post_mean = shifted / denom;
    let post_sd = denom.sqrt().recip();
    let prior_sd = ctx.prior.std_dev();
    let half_width = F::lit(12.0);
    let lo = (m - half_width * prior_sd).min(post_mean - half_width * post_sd);
    let hi = (m + half_width * prior_sd).max(post_mean + half_width * post_sd);
    let n = 200_000usize;
    let h = (hi - lo) / F::from_usize(n).unwrap();
    // log_pdf, not pdf().ln(): the integrand peaks where the prior density
    // underflows whenever the posterior mean sits far out in the prior's tail
    let log_term = |a: F| ctx.prior.log_pdf(a) - beta * (cost.c1 * a + cost.c2 * a * a / two);
    let mut max_log = F::neg_infinity();
    for i in 0..=n {
        let g = log_term(lo + h * F::from_usize(i).unwrap());
        if g > max_log {
            max_log = g;
        }
    }
    let mut acc = F::zero();
    for i in 0..=n {
        // trapezoid end weights
        let w = if i == 0 || i == n { F::lit(0.5) } else { F::one() };
        acc = acc + w * (log_term(lo + h * F::from_usize(i).unwrap()) - max_log).exp();
    }
    let r3 = v_part - (max_log + (acc * h).ln()) / beta;

    Ok((r1 - r2).abs().max((r1 - r3).abs()).max((r2 - r3).abs()))
}
