//! Model parameters and the derived constant coefficients that feed the
//! closed-form solutions.
//!
//! Units are plain reals in consistent units (shares, price units, 1/time);
//! no unit system is enforced beyond documentation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A scalar coefficient that may vary (affinely) in time.
///
/// Constant coefficients are the special case `Const`; the Riccati solver
/// samples schedules at RK4 stage times, closed forms require `Const`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule<F> {
    Const(F),
    /// value = a + b * t
    Linear { a: F, b: F },
}

impl<F: Scalar> Schedule<F> {
    pub fn at(&self, t: F) -> F {
        match *self {
            Schedule::Const(v) => v,
            Schedule::Linear { a, b } => a + b * t,
        }
    }

    /// The constant value, if this schedule does not depend on time.
    pub fn as_const(&self) -> Option<F> {
        match *self {
            Schedule::Const(v) => Some(v),
            Schedule::Linear { a, b } if b == F::zero() => Some(a),
            _ => None,
        }
    }
}

/// Market and agent constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams<F> {
    /// Agent permanent impact coefficient (price per share).
    pub gamma: F,
    /// Market permanent impact coefficient.
    pub gamma_m: F,
    /// Temporary impact coefficient, > 0.
    pub eta: F,
    /// Terminal inventory penalty, g(x) = -delta x^2.
    pub delta: F,
    /// Entropy regularization weight, > 0.
    pub beta: F,
    /// Price volatility (constant).
    pub sigma_s: F,
    /// Inventory volatility.
    pub sigma_x: F,
    /// Brownian correlation in [-1, 1].
    pub rho: F,
    /// Liquidation horizon T > 0.
    pub horizon: F,
    /// Initial inventory.
    pub x0: F,
    /// Initial price.
    pub s0: F,
}

impl<F: Scalar> ModelParams<F> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta > F::zero()
            && self.beta > F::zero()
            && self.horizon > F::zero()
            && self.rho.abs() <= F::one()
            && self.gamma >= F::zero()
            && self.delta >= F::zero()
            && self.sigma_s >= F::zero()
            && self.sigma_x >= F::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "require eta > 0, beta > 0, horizon > 0, |rho| <= 1, \
                 gamma/delta/sigmas >= 0; got {self:?}"
            )))
        }
    }

    /// g = delta - gamma / 2, the effective terminal penalty coefficient.
    pub fn g(&self) -> F {
        self.delta - self.gamma / F::lit(2.0)
    }
}

/// Gaussian in mean/precision form (precision = 1 / variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDist<F> {
    pub mean: F,
    pub precision: F,
}

impl<F: Scalar> GaussianDist<F> {
    pub fn new(mean: F, precision: F) -> Result<Self> {
        if precision > F::zero() {
            Ok(Self { mean, precision })
        } else {
            Err(Error::PrecisionViolation(format!(
                "Gaussian precision must be > 0, got {precision}"
            )))
        }
    }

    pub fn std_dev(&self) -> F {
        self.precision.sqrt().recip()
    }

    /// Density at `a`.
    pub fn pdf(&self, a: F) -> F {
        let two_pi = F::lit(std::f64::consts::TAU);
        (self.precision / two_pi).sqrt()
            * (-self.precision * (a - self.mean) * (a - self.mean) / F::lit(2.0)).exp()
    }

    /// Log density at `a`; stays finite far into the tails where `pdf`
    /// underflows to zero.
    pub fn log_pdf(&self, a: F) -> F {
        let two_pi = F::lit(std::f64::consts::TAU);
        (self.precision / two_pi).ln() / F::lit(2.0)
            - self.precision * (a - self.mean) * (a - self.mean) / F::lit(2.0)
    }
}

/// Time-dependent Gaussian prior for the market trading rate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PriorSchedule<F> {
    pub mean: Schedule<F>,
    pub precision: Schedule<F>,
}

impl<F: Scalar> PriorSchedule<F> {
    pub fn constant(mean: F, precision: F) -> Self {
        Self {
            mean: Schedule::Const(mean),
            precision: Schedule::Const(precision),
        }
    }

    pub fn at(&self, t: F) -> Result<GaussianDist<F>> {
        GaussianDist::new(self.mean.at(t), self.precision.at(t))
    }

    /// The prior as a single Gaussian, if both schedules are constant.
    pub fn as_const(&self) -> Option<GaussianDist<F>> {
        let (m, s) = (self.mean.as_const()?, self.precision.as_const()?);
        GaussianDist::new(m, s).ok()
    }

    /// Checks `precision > 0` on a sampled grid over `[0, horizon]`.
    pub fn validate(&self, horizon: F, n_samples: usize) -> Result<()> {
        for i in 0..=n_samples {
            let t = horizon * F::from_usize(i).unwrap() / F::from_usize(n_samples).unwrap();
            self.at(t)?;
        }
        Ok(())
    }
}

/// Quadratic risk in (x, a) for Model 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RiskSpecModel1<F> {
    pub r_xx: Schedule<F>,
    pub r_xa: Schedule<F>,
    pub r_aa: Schedule<F>,
}

/// Quadratic risk in (v, a) for Model 2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RiskSpecModel2<F> {
    pub r_vv: Schedule<F>,
    pub r_va: Schedule<F>,
    pub r_aa: Schedule<F>,
}

/// Risk specification tagged by the model it belongs to.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCtx<F> {
    Model1(RiskSpecModel1<F>),
    Model2(RiskSpecModel2<F>),
}

impl<F: Scalar> RiskCtx<F> {
    pub fn r_aa(&self) -> Schedule<F> {
        match self {
            RiskCtx::Model1(r) => r.r_aa,
            RiskCtx::Model2(r) => r.r_aa,
        }
    }

    pub fn validate(&self, params: &ModelParams<F>, prior: &PriorSchedule<F>) -> Result<()> {
        match self {
            RiskCtx::Model1(r) => r.validate(prior, params.beta, params.horizon),
            RiskCtx::Model2(r) => r.validate(params, prior, params.horizon),
        }
    }
}

const VALIDATION_SAMPLES: usize = 1024;

impl<F: Scalar> RiskSpecModel1<F> {
    /// Standing assumption: s_t + beta R_aa > 0 on the horizon.
    pub fn validate(&self, prior: &PriorSchedule<F>, beta: F, horizon: F) -> Result<()> {
        for i in 0..=VALIDATION_SAMPLES {
            let t = horizon * F::from_usize(i).unwrap() / F::from_usize(VALIDATION_SAMPLES).unwrap();
            let s = prior.at(t)?.precision;
            if s + beta * self.r_aa.at(t) <= F::zero() {
                return Err(Error::PrecisionViolation(format!(
                    "s_t + beta R_aa <= 0 at t = {t}"
                )));
            }
        }
        Ok(())
    }
}

impl<F: Scalar> RiskSpecModel2<F> {
    /// Standing assumptions: s_t + beta R_aa > 0 and eta_tilde > 0 on the horizon.
    pub fn validate(&self, params: &ModelParams<F>, prior: &PriorSchedule<F>, horizon: F) -> Result<()> {
        let beta = params.beta;
        for i in 0..=VALIDATION_SAMPLES {
            let t = horizon * F::from_usize(i).unwrap() / F::from_usize(VALIDATION_SAMPLES).unwrap();
            let s = prior.at(t)?.precision;
            let denom = s + beta * self.r_aa.at(t);
            if denom <= F::zero() {
                return Err(Error::PrecisionViolation(format!(
                    "s_t + beta R_aa <= 0 at t = {t}"
                )));
            }
            let r_va = self.r_va.at(t);
            let eta_tilde = params.eta - self.r_vv.at(t) / F::lit(2.0)
                + beta * r_va * r_va / (F::lit(2.0) * denom);
            if eta_tilde <= F::zero() {
                return Err(Error::EtaTildeViolation(eta_tilde.to_f64().unwrap_or(f64::NAN)));
            }
        }
        Ok(())
    }
}

/// Constant coefficients of the Model 1 ODE system and closed forms.
///
/// `a1_hat` and `alpha1` are present only in the closed-form regime
/// (A1 < 0 and g / (eta * A1_hat) > 1); their absence is not an error, it
/// routes to the numerical solver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Model1Coeffs<F> {
    pub a1: F,
    pub b1: F,
    pub c: F,
    pub g: F,
    pub a1_hat: Option<F>,
    pub alpha1: Option<F>,
}

impl<F: Scalar> Model1Coeffs<F> {
    pub fn closed_form_available(&self) -> bool {
        self.a1_hat.is_some() && self.alpha1.is_some()
    }
}

/// Constant coefficients of the Model 2 ODE system and closed forms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Model2Coeffs<F> {
    pub a2: F,
    pub b2: F,
    pub eta_tilde: F,
    /// C = beta gamma_M R_va / (s + beta R_aa).
    pub c_shift: F,
    /// D = -R_va s m / (s + beta R_aa).
    pub d_shift: F,
    pub g: F,
    /// A2_hat = sqrt(A2 / (2 eta_tilde)); zero when gamma_M = 0.
    pub a2_hat: F,
    pub alpha2: Option<F>,
}

impl<F: Scalar> Model2Coeffs<F> {
    pub fn closed_form_available(&self) -> bool {
        self.a2_hat > F::zero() && self.alpha2.is_some()
    }
}

/// acoth(y) = atanh(1/y), defined for |y| > 1.
pub fn acoth<F: Scalar>(y: F) -> Option<F> {
    if y.abs() > F::one() {
        Some(y.recip().atanh())
    } else {
        None
    }
}

fn constant_risk1<F: Scalar>(risk: &RiskSpecModel1<F>) -> Result<(F, F, F)> {
    match (risk.r_xx.as_const(), risk.r_xa.as_const(), risk.r_aa.as_const()) {
        (Some(xx), Some(xa), Some(aa)) => Ok((xx, xa, aa)),
        _ => Err(Error::Validation(
            "closed-form coefficients require constant risk schedules".into(),
        )),
    }
}

fn constant_risk2<F: Scalar>(risk: &RiskSpecModel2<F>) -> Result<(F, F, F)> {
    match (risk.r_vv.as_const(), risk.r_va.as_const(), risk.r_aa.as_const()) {
        (Some(vv), Some(va), Some(aa)) => Ok((vv, va, aa)),
        _ => Err(Error::Validation(
            "closed-form coefficients require constant risk schedules".into(),
        )),
    }
}

/// Derives A1, B1, c, g and, when defined, A1_hat and alpha1.
pub fn derive_model1_coeffs<F: Scalar>(
    params: &ModelParams<F>,
    prior: &GaussianDist<F>,
    risk: &RiskSpecModel1<F>,
) -> Result<Model1Coeffs<F>> {
    params.validate()?;
    let (r_xx, r_xa, r_aa) = constant_risk1(risk)?;
    let (s, m, beta) = (prior.precision, prior.mean, params.beta);
    let denom = s + beta * r_aa;
    if denom <= F::zero() {
        return Err(Error::PrecisionViolation(format!(
            "s + beta R_aa = {denom} must be > 0"
        )));
    }
    let k = params.gamma_m + r_xa;
    let a1 = r_xx - beta * k * k / denom;
    let b1 = k * s * m / denom;
    let c = s / denom;
    let g = params.g();

    let two = F::lit(2.0);
    let a1_hat = if a1 < F::zero() {
        Some((-a1 / (two * params.eta)).sqrt())
    } else {
        None
    };
    let alpha1 = a1_hat.and_then(|ah| acoth(g / (params.eta * ah)));
    Ok(Model1Coeffs { a1, b1, c, g, a1_hat, alpha1 })
}

/// Derives A2, B2, eta_tilde, C, D, g and, when defined, alpha2.
pub fn derive_model2_coeffs<F: Scalar>(
    params: &ModelParams<F>,
    prior: &GaussianDist<F>,
    risk: &RiskSpecModel2<F>,
) -> Result<Model2Coeffs<F>> {
    params.validate()?;
    let (r_vv, r_va, r_aa) = constant_risk2(risk)?;
    let (s, m, beta) = (prior.precision, prior.mean, params.beta);
    let denom = s + beta * r_aa;
    if denom <= F::zero() {
        return Err(Error::PrecisionViolation(format!(
            "s + beta R_aa = {denom} must be > 0"
        )));
    }
    let two = F::lit(2.0);
    let eta_tilde = params.eta - r_vv / two + beta * r_va * r_va / (two * denom);
    if eta_tilde <= F::zero() {
        return Err(Error::EtaTildeViolation(eta_tilde.to_f64().unwrap_or(f64::NAN)));
    }
    let a2 = beta * params.gamma_m * params.gamma_m / denom;
    let b2 = params.gamma_m * s * m / denom;
    let c_shift = beta * params.gamma_m * r_va / denom;
    let d_shift = -r_va * s * m / denom;
    let g = params.g();
    let a2_hat = (a2 / (two * eta_tilde)).sqrt();
    let alpha2 = if a2_hat > F::zero() {
        acoth((two * g + c_shift) / (two * eta_tilde * a2_hat))
    } else {
        None
    };
    Ok(Model2Coeffs { a2, b2, eta_tilde, c_shift, d_shift, g, a2_hat, alpha2 })
}
