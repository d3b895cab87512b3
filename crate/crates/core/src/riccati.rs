//! Backward RK4 integration of the Model 1 and Model 2 ODE systems for the
//! value-function coefficients H2, H1, H0, supporting time-dependent
//! coefficient schedules.
//!
//! Integration runs forward in reversed time tau = T - t, so the terminal
//! conditions H2(T) = -2g, H1(T) = H0(T) = 0 are the initial state.
//! Coefficient schedules are evaluated at the RK4 stage times rather than
//! interpolated from a table, preserving 4th-order accuracy for smooth
//! schedules.

use crate::error::{Error, Result};
use crate::model::{ModelParams, PriorSchedule, RiskSpecModel1, RiskSpecModel2};
use crate::scalar::Scalar;

/// |H2| above this signals a genuinely explosive Riccati solution.
const BLOWUP_THRESHOLD: f64 = 1e12;

/// Sampled time-curves of the quadratic value function on a uniform grid.
#[derive(Debug, Clone)]
pub struct ValueCoefficients<F> {
    /// Uniform grid on [0, T], n_steps + 1 points.
    pub grid: Vec<F>,
    pub h2: Vec<F>,
    pub h1: Vec<F>,
    pub h0: Option<Vec<F>>,
}

impl<F: Scalar> ValueCoefficients<F> {
    pub fn n_steps(&self) -> usize {
        self.grid.len() - 1
    }

    fn locate(&self, t: F) -> Result<(usize, F)> {
        let horizon = *self.grid.last().unwrap();
        if t < F::zero() || t > horizon {
            return Err(Error::OutOfHorizon {
                t: t.to_f64().unwrap_or(f64::NAN),
                horizon: horizon.to_f64().unwrap_or(f64::NAN),
            });
        }
        let h = horizon / F::from_usize(self.n_steps()).unwrap();
        let idx = (t / h).floor().to_usize().unwrap_or(0).min(self.n_steps() - 1);
        let frac = (t - self.grid[idx]) / h;
        Ok((idx, frac))
    }

    fn interp(&self, curve: &[F], t: F) -> Result<F> {
        let (i, frac) = self.locate(t)?;
        Ok(curve[i] + (curve[i + 1] - curve[i]) * frac)
    }

    /// Linear interpolation of H2 at `t`.
    pub fn h2_at(&self, t: F) -> Result<F> {
        self.interp(&self.h2, t)
    }

    pub fn h1_at(&self, t: F) -> Result<F> {
        self.interp(&self.h1, t)
    }

    pub fn h0_at(&self, t: F) -> Result<F> {
        let h0 = self.h0.as_ref().ok_or(Error::H0Unavailable)?;
        self.interp(h0, t)
    }
}

struct OdeSystem<'a, F, R> {
    params: &'a ModelParams<F>,
    prior: &'a PriorSchedule<F>,
    risk: &'a R,
}

fn rk4_backward<F: Scalar>(
    horizon: F,
    n_steps: usize,
    g: F,
    mut rhs: impl FnMut(F, [F; 3]) -> Result<[F; 3]>,
) -> Result<ValueCoefficients<F>> {
    let n = F::from_usize(n_steps).unwrap();
    let dt = horizon / n;
    let half = F::lit(0.5);
    let six = F::lit(6.0);
    let two = F::lit(2.0);

    let mut h2 = vec![F::zero(); n_steps + 1];
    let mut h1 = vec![F::zero(); n_steps + 1];
    let mut h0 = vec![F::zero(); n_steps + 1];
    let grid: Vec<F> = (0..=n_steps)
        .map(|i| horizon * F::from_usize(i).unwrap() / n)
        .collect();

    // state y(tau) = [H2, H1, H0](T - tau); dy/dtau = -rhs(t, y)
    let mut y = [-two * g, F::zero(), F::zero()];
    h2[n_steps] = y[0];

    for step in 0..n_steps {
        let t = horizon - dt * F::from_usize(step).unwrap();
        let neg = |v: [F; 3]| [-v[0], -v[1], -v[2]];
        let k1 = neg(rhs(t, y)?);
        let y2 = [y[0] + half * dt * k1[0], y[1] + half * dt * k1[1], y[2] + half * dt * k1[2]];
        let k2 = neg(rhs(t - half * dt, y2)?);
        let y3 = [y[0] + half * dt * k2[0], y[1] + half * dt * k2[1], y[2] + half * dt * k2[2]];
        let k3 = neg(rhs(t - half * dt, y3)?);
        let y4 = [y[0] + dt * k3[0], y[1] + dt * k3[1], y[2] + dt * k3[2]];
        let k4 = neg(rhs(t - dt, y4)?);
        for i in 0..3 {
            y[i] = y[i] + dt / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        if y[0].abs() > F::lit(BLOWUP_THRESHOLD) {
            return Err(Error::BlowUp {
                t: (t - dt).to_f64().unwrap_or(f64::NAN),
                h2: y[0].to_f64().unwrap_or(f64::NAN),
            });
        }
        let idx = n_steps - 1 - step;
        h2[idx] = y[0];
        h1[idx] = y[1];
        h0[idx] = y[2];
    }

    Ok(ValueCoefficients { grid, h2, h1, h0: Some(h0) })
}

impl<'a, F: Scalar> OdeSystem<'a, F, RiskSpecModel1<F>> {
    /// dH/dt for the Model 1 system:
    ///   H2' = -H2^2/(2 eta) - A1
    ///   H1' = -H1 H2/(2 eta) - B1
    ///   H0' = -(sigma_X^2/2) H2 - H1^2/(4 eta) - (gamma/2) sigma_X^2
    ///         - rho sigma_S sigma_X + log(c)/(2 beta) + s m^2 (c - 1)/(2 beta)
    fn rhs(&self, t: F, y: [F; 3]) -> Result<[F; 3]> {
        let p = self.params;
        let two = F::lit(2.0);
        let four = F::lit(4.0);
        let prior = self.prior.at(t)?;
        let (s, m) = (prior.precision, prior.mean);
        let denom = s + p.beta * self.risk.r_aa.at(t);
        if denom <= F::zero() {
            return Err(Error::PrecisionViolation(format!("s_t + beta R_aa <= 0 at t = {t}")));
        }
        let k = p.gamma_m + self.risk.r_xa.at(t);
        let a1 = self.risk.r_xx.at(t) - p.beta * k * k / denom;
        let b1 = k * s * m / denom;
        let c = s / denom;
        let [h2, h1, _] = y;
        let d_h2 = -h2 * h2 / (two * p.eta) - a1;
        let d_h1 = -h1 * h2 / (two * p.eta) - b1;
        let d_h0 = -(p.sigma_x * p.sigma_x / two) * h2
            - h1 * h1 / (four * p.eta)
            - p.gamma / two * p.sigma_x * p.sigma_x
            - p.rho * p.sigma_s * p.sigma_x
            + c.ln() / (two * p.beta)
            + s * m * m * (c - F::one()) / (two * p.beta);
        Ok([d_h2, d_h1, d_h0])
    }
}

impl<'a, F: Scalar> OdeSystem<'a, F, RiskSpecModel2<F>> {
    /// dH/dt for the Model 2 system:
    ///   H2' = -(H2 - C)^2/(2 eta~) + A2
    ///   H1' = -(H2 - C)(H1 - D)/(2 eta~) - B2
    ///   H0' = -(sigma_X^2/2) H2 - (H1 - D)^2/(4 eta~) - (gamma/2) sigma_X^2
    ///         - rho sigma_S sigma_X + log(c)/(2 beta) + s m^2 (c - 1)/(2 beta)
    ///
    /// The H0 equation is obtained by collecting the x-independent terms of
    /// the effective Hamilton-Jacobi equation under the quadratic ansatz.
    fn rhs(&self, t: F, y: [F; 3]) -> Result<[F; 3]> {
        let p = self.params;
        let two = F::lit(2.0);
        let four = F::lit(4.0);
        let prior = self.prior.at(t)?;
        let (s, m) = (prior.precision, prior.mean);
        let denom = s + p.beta * self.risk.r_aa.at(t);
        if denom <= F::zero() {
            return Err(Error::PrecisionViolation(format!("s_t + beta R_aa <= 0 at t = {t}")));
        }
        let r_va = self.risk.r_va.at(t);
        let eta_tilde = p.eta - self.risk.r_vv.at(t) / two + p.beta * r_va * r_va / (two * denom);
        if eta_tilde <= F::zero() {
            return Err(Error::EtaTildeViolation(eta_tilde.to_f64().unwrap_or(f64::NAN)));
        }
        let a2 = p.beta * p.gamma_m * p.gamma_m / denom;
        let b2 = p.gamma_m * s * m / denom;
        let c_shift = p.beta * p.gamma_m * r_va / denom;
        let d_shift = -r_va * s * m / denom;
        let c = s / denom;
        let [h2, h1, _] = y;
        let u2 = h2 - c_shift;
        let u1 = h1 - d_shift;
        let d_h2 = -u2 * u2 / (two * eta_tilde) + a2;
        let d_h1 = -u2 * u1 / (two * eta_tilde) - b2;
        let d_h0 = -(p.sigma_x * p.sigma_x / two) * h2
            - u1 * u1 / (four * eta_tilde)
            - p.gamma / two * p.sigma_x * p.sigma_x
            - p.rho * p.sigma_s * p.sigma_x
            + c.ln() / (two * p.beta)
            + s * m * m * (c - F::one()) / (two * p.beta);
        Ok([d_h2, d_h1, d_h0])
    }
}

/// Solves the Model 1 system backward from t = T on `n_steps` RK4 steps.
pub fn solve_model1<F: Scalar>(
    params: &ModelParams<F>,
    prior: &PriorSchedule<F>,
    risk: &RiskSpecModel1<F>,
    n_steps: usize,
) -> Result<ValueCoefficients<F>> {
    params.validate()?;
    risk.validate(prior, params.beta, params.horizon)?;
    assert!(n_steps >= 10, "n_steps must be >= 10");
    let sys = OdeSystem { params, prior, risk };
    rk4_backward(params.horizon, n_steps, params.g(), |t, y| sys.rhs(t, y))
}

/// Solves the Model 2 system backward from t = T on `n_steps` RK4 steps.
pub fn solve_model2<F: Scalar>(
    params: &ModelParams<F>,
    prior: &PriorSchedule<F>,
    risk: &RiskSpecModel2<F>,
    n_steps: usize,
) -> Result<ValueCoefficients<F>> {
    params.validate()?;
    risk.validate(params, prior, params.horizon)?;
    assert!(n_steps >= 10, "n_steps must be >= 10");
    let sys = OdeSystem { params, prior, risk };
    rk4_backward(params.horizon, n_steps, params.g(), |t, y| sys.rhs(t, y))
}
