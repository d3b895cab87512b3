//! Euler-Maruyama simulation of (X_t, S_t) under a chosen execution
//! strategy, with correlated Brownian increments, both P&L formulas, and the
//! additive performance decomposition V = V_PnL + V_risk + V_entropy.
//!
//! Everything here is f64: the Monte Carlo layer has no use for other
//! scalar types, and keeping it concrete simplifies the parallel plumbing.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::closed_form::{StrategyModel1, StrategyModel2};
use crate::error::{Error, Result};
use crate::model::{ModelParams, PriorSchedule, RiskCtx};
use crate::riccati::ValueCoefficients;

pub const DEFAULT_N_PATHS: usize = 4096;
pub const DEFAULT_N_STEPS: usize = 1000;

/// The strategy driving dX. Optimal strategies carry their coefficient
/// objects; `SolverFeedback` plays the same feedback law from numerically
/// integrated curves when no closed form exists.
#[derive(Debug, Clone)]
pub enum StrategyKind {
    OptimalModel1(StrategyModel1<f64>),
    OptimalModel2(StrategyModel2<f64>),
    /// v = ((H2 - c_shift) x + H1 - d_shift) / denom with denom = 2 eta
    /// (Model 1, zero shifts) or 2 eta~ (Model 2).
    SolverFeedback {
        curve: ValueCoefficients<f64>,
        c_shift: f64,
        d_shift: f64,
        denom: f64,
    },
    /// v = -x / (T - t), with T - t floored at dt for the final step.
    AdaptedTwap,
    /// No trading; exposes the mark-to-market drift in isolation.
    Zero,
}

impl StrategyKind {
    pub fn rate(&self, t: f64, x: f64, dt: f64, horizon: f64) -> Result<f64> {
        match self {
            StrategyKind::OptimalModel1(s) => s.rate(t, x),
            StrategyKind::OptimalModel2(s) => s.rate(t, x),
            StrategyKind::SolverFeedback { curve, c_shift, d_shift, denom } => Ok(
                ((curve.h2_at(t)? - c_shift) * x + curve.h1_at(t)? - d_shift) / denom,
            ),
            StrategyKind::AdaptedTwap => Ok(-x / (horizon - t).max(dt)),
            StrategyKind::Zero => Ok(0.0),
        }
    }

    fn wants_model(&self) -> Option<u8> {
        match self {
            StrategyKind::OptimalModel1(_) => Some(1),
            StrategyKind::OptimalModel2(_) => Some(2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub params: ModelParams<f64>,
    pub prior: PriorSchedule<f64>,
    pub risk: RiskCtx<f64>,
    pub antithetic: bool,
    /// Feed a draw a ~ pi*_t into dS instead of the posterior mean.
    /// Off by default: the price dynamics use <a>_t.
    pub sample_market_rate: bool,
}

impl SimConfig {
    pub fn new(
        params: ModelParams<f64>,
        prior: PriorSchedule<f64>,
        risk: RiskCtx<f64>,
        seed: u64,
    ) -> Self {
        Self {
            n_paths: DEFAULT_N_PATHS,
            n_steps: DEFAULT_N_STEPS,
            seed,
            params,
            prior,
            risk,
            antithetic: false,
            sample_market_rate: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 || self.n_steps < 2 {
            return Err(Error::Validation(format!(
                "need n_paths >= 1 and n_steps >= 2, got {} x {}",
                self.n_paths, self.n_steps
            )));
        }
        self.params.validate()?;
        self.prior.validate(self.params.horizon, 256)?;
        self.risk.validate(&self.params, &self.prior)
    }

    fn model_tag(&self) -> u8 {
        match self.risk {
            RiskCtx::Model1(_) => 1,
            RiskCtx::Model2(_) => 2,
        }
    }

    /// Posterior mean <a>_t of the market trading rate given the state and
    /// the agent's current rate.
    pub fn posterior_mean(&self, t: f64, x: f64, v: f64) -> f64 {
        let p = &self.params;
        let prior = self.prior.at(t).expect("validated prior");
        let (s, m) = (prior.precision, prior.mean);
        match self.risk {
            RiskCtx::Model1(r) => {
                let denom = s + p.beta * r.r_aa.at(t);
                (-p.beta * (p.gamma_m + r.r_xa.at(t)) * x + s * m) / denom
            }
            RiskCtx::Model2(r) => {
                let denom = s + p.beta * r.r_aa.at(t);
                (-p.beta * r.r_va.at(t) * v - p.beta * p.gamma_m * x + s * m) / denom
            }
        }
    }
}

/// One realized path with its stored Brownian increments (needed by
/// `pnl_transformed`).
#[derive(Debug, Clone)]
pub struct SimPath {
    pub path_id: usize,
    /// n_steps + 1 grid values.
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// per-interval values (n_steps entries).
    pub v: Vec<f64>,
    pub a_mean: Vec<f64>,
    pub dwx: Option<Vec<f64>>,
    pub dws: Option<Vec<f64>>,
}

impl SimPath {
    pub fn n_steps(&self) -> usize {
        self.v.len()
    }

    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    /// Drops the stored increments (used to exercise IncrementsMissing).
    pub fn without_increments(mut self) -> Self {
        self.dwx = None;
        self.dws = None;
        self
    }
}

/// Per-path terminal decomposition.
#[derive(Debug, Clone, Copy)]
pub struct Decomposition {
    pub v_pnl: f64,
    pub v_risk: f64,
    pub v_entropy: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.v_pnl + self.v_risk + self.v_entropy
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PathSummary {
    pub path_id: usize,
    pub x_terminal: f64,
    pub v_pnl: f64,
    pub v_risk: f64,
    pub v_entropy: f64,
    pub v_total: f64,
}

#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct ComponentStats {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    /// 5%, 25%, 50%, 75%, 95% empirical quantiles.
    pub quantiles: [f64; 5],
}

pub fn component_stats(values: &[f64]) -> ComponentStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
    ComponentStats {
        mean,
        variance,
        std_error: (variance / n).sqrt(),
        quantiles: [q(0.05), q(0.25), q(0.5), q(0.75), q(0.95)],
    }
}

#[derive(Debug, Clone)]
pub struct SimEnsemble {
    pub summaries: Vec<PathSummary>,
    pub pnl: ComponentStats,
    pub risk: ComponentStats,
    pub entropy: ComponentStats,
    pub total: ComponentStats,
    pub x_terminal: ComponentStats,
}

impl SimEnsemble {
    pub fn component(&self, name: &str) -> Vec<f64> {
        self.summaries
            .iter()
            .map(|s| match name {
                "v_pnl" => s.v_pnl,
                "v_risk" => s.v_risk,
                "v_entropy" => s.v_entropy,
                "v_total" => s.v_total,
                other => panic!("unknown component {other}"),
            })
            .collect()
    }
}

/// Histogram counts of `values` over `n_bins` uniform bins on [lo, hi].
pub fn histogram(values: &[f64], lo: f64, hi: f64, n_bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_bins];
    let width = (hi - lo) / n_bins as f64;
    for &v in values {
        let i = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    counts
}

/// Simulates a single path on the substream derived from
/// (seed, path_index). With antithetic sampling on, paths 2k and 2k+1 share
/// stream k with flipped increment signs.
pub fn simulate_one(
    config: &SimConfig,
    strategy: &StrategyKind,
    path_index: usize,
) -> Result<SimPath> {
    if let Some(model) = strategy.wants_model() {
        if model != config.model_tag() {
            return Err(Error::ConfigMismatch(format!(
                "strategy is Model {model}, config is Model {}",
                config.model_tag()
            )));
        }
    }
    let p = &config.params;
    let n = config.n_steps;
    let dt = p.horizon / n as f64;
    let sqrt_dt = dt.sqrt();
    let rho_perp = (1.0 - p.rho * p.rho).sqrt();

    let (stream, sign) = if config.antithetic {
        ((path_index / 2) as u64, if path_index % 2 == 1 { -1.0 } else { 1.0 })
    } else {
        (path_index as u64, 1.0)
    };
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);

    let mut t_grid = Vec::with_capacity(n + 1);
    let mut xs = Vec::with_capacity(n + 1);
    let mut ss = Vec::with_capacity(n + 1);
    let mut vs = Vec::with_capacity(n);
    let mut a_means = Vec::with_capacity(n);
    let mut dwxs = Vec::with_capacity(n);
    let mut dwss = Vec::with_capacity(n);

    let mut x = p.x0;
    let mut s = p.s0;
    t_grid.push(0.0);
    xs.push(x);
    ss.push(s);
    for step in 0..n {
        let t = step as f64 * dt;
        let v = strategy.rate(t, x, dt, p.horizon)?;
        let a_mean = config.posterior_mean(t, x, v);
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let z3: f64 = StandardNormal.sample(&mut rng);
        let dwx = sign * sqrt_dt * z1;
        let dws = p.rho * dwx + rho_perp * sign * sqrt_dt * z2;
        let a_for_price = if config.sample_market_rate {
            let prior = config.prior.at(t)?;
            let precision = prior.precision + p.beta * config.risk.r_aa().at(t);
            a_mean + sign * z3 / precision.sqrt()
        } else {
            a_mean
        };
        let dx = v * dt + p.sigma_x * dwx;
        x += dx;
        s += p.gamma * dx + p.gamma_m * a_for_price * dt + p.sigma_s * dws;
        if !x.is_finite() || !s.is_finite() {
            return Err(Error::NonfiniteState { path: path_index, step });
        }
        t_grid.push((step + 1) as f64 * dt);
        xs.push(x);
        ss.push(s);
        vs.push(v);
        a_means.push(a_mean);
        dwxs.push(dwx);
        dwss.push(dws);
    }
    Ok(SimPath {
        path_id: path_index,
        t: t_grid,
        x: xs,
        s: ss,
        v: vs,
        a_mean: a_means,
        dwx: Some(dwxs),
        dws: Some(dwss),
    })
}

/// P&L from the price-explicit definition:
/// X_T (S_T - S_0) + sum (S_0 - S~_t) dX_t + g(X_T), with S~ = S + eta v at
/// the left endpoint and dX the realized inventory increment.
pub fn pnl_definition(path: &SimPath, params: &ModelParams<f64>) -> f64 {
    let n = path.n_steps();
    let s0 = path.s[0];
    let x_t = path.x[n];
    let mut acc = x_t * (path.s[n] - s0);
    for i in 0..n {
        let s_tilde = path.s[i] + params.eta * path.v[i];
        acc += (s0 - s_tilde) * (path.x[i + 1] - path.x[i]);
    }
    acc - params.delta * x_t * x_t
}

/// P&L from the price-free rewriting. The two quadratic-variation integrals
/// are discretized with the realized increments (sum (sigma^X dW^X)^2 and
/// sigma^S sigma^X sum dW^X dW^S), not with dt, so the discrepancy against
/// `pnl_definition` vanishes at first order in dt.
pub fn pnl_transformed(path: &SimPath, params: &ModelParams<f64>) -> Result<f64> {
    let (dwx, dws) = match (&path.dwx, &path.dws) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::IncrementsMissing),
    };
    let n = path.n_steps();
    let dt = path.dt();
    let (x0, x_t) = (path.x[0], path.x[n]);
    let mut acc = params.gamma / 2.0 * (x_t * x_t - x0 * x0);
    for i in 0..n {
        let (x, v) = (path.x[i], path.v[i]);
        acc += params.gamma_m * x * path.a_mean[i] * dt
            + x * params.sigma_s * dws[i]
            + params.gamma / 2.0 * (params.sigma_x * dwx[i]).powi(2)
            + params.sigma_s * params.sigma_x * dwx[i] * dws[i]
            - params.eta * v * v * dt
            - params.eta * v * params.sigma_x * dwx[i];
    }
    Ok(acc - params.delta * x_t * x_t)
}

/// Left-endpoint Riemann sums of the performance components along the path.
pub fn performance_decompose(path: &SimPath, config: &SimConfig) -> Decomposition {
    let p = &config.params;
    let n = path.n_steps();
    let dt = path.dt();

    let x_t = path.x[n];
    let mut v_pnl = -p.delta * x_t * x_t + x_t * path.s[n] - path.x[0] * path.s[0];
    for i in 0..n {
        let s_tilde = path.s[i] + p.eta * path.v[i];
        v_pnl -= s_tilde * (path.x[i + 1] - path.x[i]);
    }

    let mut v_risk = 0.0;
    let mut v_entropy = 0.0;
    for i in 0..n {
        let t = path.t[i];
        let prior = config.prior.at(t).expect("validated prior");
        let (s_t, beta) = (prior.precision, p.beta);
        let a = path.a_mean[i];
        let r_aa = config.risk.r_aa().at(t);
        let denom = s_t + beta * r_aa;
        let second_moment = a * a + 1.0 / denom;
        v_risk += dt
            * match config.risk {
                RiskCtx::Model1(r) => {
                    let x = path.x[i];
                    0.5 * r.r_xx.at(t) * x * x
                        + r.r_xa.at(t) * x * a
                        + 0.5 * r_aa * second_moment
                }
                RiskCtx::Model2(r) => {
                    let v = path.v[i];
                    0.5 * r.r_vv.at(t) * v * v + r.r_va.at(t) * v * a + 0.5 * r_aa * second_moment
                }
            };
        v_entropy += dt
            * ((denom / s_t).ln() / (2.0 * beta) - 0.5 * r_aa * second_moment
                + denom / (2.0 * beta) * a * a);
    }
    Decomposition { v_pnl, v_risk, v_entropy }
}

/// Runs the full ensemble in parallel; aggregation is a deterministic
/// reduction in path-index order.
pub fn simulate_paths(config: &SimConfig, strategy: &StrategyKind) -> Result<SimEnsemble> {
    config.validate()?;
    let summaries: Vec<PathSummary> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let path = simulate_one(config, strategy, i)?;
            let d = performance_decompose(&path, config);
            Ok(PathSummary {
                path_id: i,
                x_terminal: path.x[path.n_steps()],
                v_pnl: d.v_pnl,
                v_risk: d.v_risk,
                v_entropy: d.v_entropy,
                v_total: d.total(),
            })
        })
        .collect::<Result<_>>()?;

    let grab = |f: fn(&PathSummary) -> f64| summaries.iter().map(f).collect::<Vec<_>>();
    Ok(SimEnsemble {
        pnl: component_stats(&grab(|s| s.v_pnl)),
        risk: component_stats(&grab(|s| s.v_risk)),
        entropy: component_stats(&grab(|s| s.v_entropy)),
        total: component_stats(&grab(|s| s.v_total)),
        x_terminal: component_stats(&grab(|s| s.x_terminal)),
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianDist, RiskSpecModel1, Schedule};
    use crate::presets_for_tests::*;
    use approx::assert_relative_eq;

    fn noiseless(params: &mut ModelParams<f64>) {
        params.sigma_x = 0.0;
        params.sigma_s = 0.0;
    }

    fn config_m1(seed: u64) -> SimConfig {
        SimConfig::new(
            benchmark_params_m1(),
            PriorSchedule::constant(0.0, 1e-8),
            RiskCtx::Model1(benchmark_risk_m1()),
            seed,
        )
    }

    fn config_m2(seed: u64) -> SimConfig {
        SimConfig::new(
            benchmark_params_m2(),
            PriorSchedule::constant(0.0, 1e-8),
            RiskCtx::Model2(benchmark_risk_m2()),
            seed,
        )
    }

    fn optimal_m1(config: &SimConfig) -> StrategyKind {
        StrategyKind::OptimalModel1(
            StrategyModel1::new(
                config.params,
                config.prior.as_const().unwrap(),
                match config.risk {
                    RiskCtx::Model1(r) => r,
                    _ => unreachable!(),
                },
            )
            .unwrap(),
        )
    }

    #[test]
    fn noiseless_path_tracks_expected_trajectory() {
        let mut config = config_m1(1);
        noiseless(&mut config.params);
        // Euler drift bias is O(dt); 10k steps keeps it under the 1e-4 band
        config.n_steps = 10_000;
        let strategy = optimal_m1(&config);
        let path = simulate_one(&config, &strategy, 0).unwrap();
        let analytic = match &strategy {
            StrategyKind::OptimalModel1(s) => s.clone(),
            _ => unreachable!(),
        };
        let mut prev = f64::INFINITY;
        for (i, &t) in path.t.iter().enumerate() {
            let expect = analytic.expected_trajectory(t).unwrap();
            assert!(
                (path.x[i] - expect).abs() <= 1e-4 * expect.abs(),
                "step {i}: {} vs {expect}",
                path.x[i]
            );
            assert!(path.x[i] < prev);
            prev = path.x[i];
        }
    }

    #[test]
    fn zero_strategy_pnl_is_markout_drift() {
        let mut config = config_m1(2);
        noiseless(&mut config.params);
        config.n_steps = 500;
        let path = simulate_one(&config, &StrategyKind::Zero, 0).unwrap();
        // no trading: Pi0_T = X0 (S_T - S0) = X0 gamma_M sum <a> dt
        let dt = path.dt();
        let drift: f64 =
            config.params.gamma_m * path.a_mean.iter().map(|a| a * dt).sum::<f64>();
        let expect = config.params.x0 * drift - config.params.delta * config.params.x0.powi(2);
        assert_relative_eq!(pnl_definition(&path, &config.params), expect, max_relative = 1e-12);
    }

    #[test]
    fn pnl_terminal_penalty_only() {
        let mut config = config_m1(3);
        noiseless(&mut config.params);
        // R_xa = -gamma_M makes <a> identically zero at m = 0
        config.risk = RiskCtx::Model1(RiskSpecModel1 {
            r_xx: Schedule::Const(0.0),
            r_xa: Schedule::Const(-config.params.gamma_m),
            r_aa: Schedule::Const(9e-7),
        });
        let path = simulate_one(&config, &StrategyKind::Zero, 0).unwrap();
        let expect = -config.params.delta * config.params.x0.powi(2);
        assert_eq!(pnl_definition(&path, &config.params), expect);
        assert_eq!(pnl_transformed(&path, &config.params).unwrap(), expect);
    }

    #[test]
    fn pnl_transformed_pure_drift_case() {
        // gamma = 0, eta = 0, sigmas = 0: only gamma_M sum X <a> dt remains
        let mut config = config_m1(4);
        noiseless(&mut config.params);
        config.params.gamma = 0.0;
        config.params.eta = 1e-30; // validation requires > 0; negligible
        config.params.delta = 0.0;
        let path = simulate_one(&config, &StrategyKind::AdaptedTwap, 0).unwrap();
        let dt = path.dt();
        let expect: f64 = (0..path.n_steps())
            .map(|i| config.params.gamma_m * path.x[i] * path.a_mean[i] * dt)
            .sum();
        let eta_residual: f64 = (0..path.n_steps())
            .map(|i| config.params.eta * path.v[i].powi(2) * dt)
            .sum();
        assert_relative_eq!(
            pnl_transformed(&path, &config.params).unwrap(),
            expect - eta_residual,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pnl_identity_first_order() {
        // mean |definition - transformed| over paths halves when dt halves
        let mut mean_gap = Vec::new();
        for n_steps in [250usize, 500, 1000] {
            let mut config = config_m1(5);
            config.n_steps = n_steps;
            let strategy = optimal_m1(&config);
            let mut acc = 0.0;
            for i in 0..40 {
                let path = simulate_one(&config, &strategy, i).unwrap();
                acc += (pnl_definition(&path, &config.params)
                    - pnl_transformed(&path, &config.params).unwrap())
                .abs();
            }
            mean_gap.push(acc / 40.0);
        }
        let r1 = mean_gap[0] / mean_gap[1];
        let r2 = mean_gap[1] / mean_gap[2];
        assert!(r1 > 1.5 && r2 > 1.5, "gaps {mean_gap:?}");
    }

    #[test]
    fn increments_missing() {
        let config = config_m1(6);
        let path = simulate_one(&config, &StrategyKind::AdaptedTwap, 0)
            .unwrap()
            .without_increments();
        assert!(matches!(
            pnl_transformed(&path, &config.params),
            Err(Error::IncrementsMissing)
        ));
    }

    #[test]
    fn config_mismatch() {
        let config = config_m2(7);
        let m1 = optimal_m1(&config_m1(7));
        assert!(matches!(
            simulate_one(&config, &m1, 0),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn decomposition_additivity_and_zero_risk() {
        let mut config = config_m1(8);
        config.n_steps = 200;
        let path = simulate_one(&config, &StrategyKind::AdaptedTwap, 0).unwrap();
        let d = performance_decompose(&path, &config);
        assert_eq!(d.total(), d.v_pnl + d.v_risk + d.v_entropy);

        // all risk coefficients zero: v_risk = 0 and
        // v_entropy = sum (s / 2 beta) <a>^2 dt
        config.risk = RiskCtx::Model1(RiskSpecModel1 {
            r_xx: Schedule::Const(0.0),
            r_xa: Schedule::Const(0.0),
            r_aa: Schedule::Const(0.0),
        });
        let path = simulate_one(&config, &StrategyKind::AdaptedTwap, 0).unwrap();
        let d = performance_decompose(&path, &config);
        assert_eq!(d.v_risk, 0.0);
        let dt = path.dt();
        let expect: f64 = path
            .a_mean
            .iter()
            .map(|a| 1e-8 / 2.0 * a * a * dt)
            .sum();
        assert_relative_eq!(d.v_entropy, expect, max_relative = 1e-12);
    }

    #[test]
    fn model2_zero_strategy_risk_term() {
        let mut config = config_m2(9);
        config.n_steps = 100;
        let path = simulate_one(&config, &StrategyKind::Zero, 0).unwrap();
        let d = performance_decompose(&path, &config);
        let dt = path.dt();
        let denom = 1e-8 + 9e-7;
        let expect: f64 = path
            .a_mean
            .iter()
            .map(|a| 0.5 * 9e-7 * (a * a + 1.0 / denom) * dt)
            .sum();
        assert_relative_eq!(d.v_risk, expect, max_relative = 1e-12);
    }

    #[test]
    fn seed_determinism() {
        let mut config = config_m1(42);
        config.n_paths = 32;
        config.n_steps = 64;
        let strategy = optimal_m1(&config);
        let a = simulate_paths(&config, &strategy).unwrap();
        let b = simulate_paths(&config, &strategy).unwrap();
        for (x, y) in a.summaries.iter().zip(&b.summaries) {
            assert_eq!(x.v_total.to_bits(), y.v_total.to_bits());
            assert_eq!(x.x_terminal.to_bits(), y.x_terminal.to_bits());
        }
    }

    #[test]
    fn increment_correlation() {
        let config = {
            let mut c = config_m1(10);
            c.n_paths = 128;
            c.n_steps = 256;
            c
        };
        let (mut sxx, mut sss, mut sxs) = (0.0, 0.0, 0.0);
        for i in 0..config.n_paths {
            let path = simulate_one(&config, &StrategyKind::AdaptedTwap, i).unwrap();
            let (dwx, dws) = (path.dwx.unwrap(), path.dws.unwrap());
            for k in 0..dwx.len() {
                sxx += dwx[k] * dwx[k];
                sss += dws[k] * dws[k];
                sxs += dwx[k] * dws[k];
            }
        }
        let corr = sxs / (sxx * sss).sqrt();
        assert!((corr - 0.3).abs() < 0.02, "sample correlation {corr}");
    }

    #[test]
    fn antithetic_pairs_mirror_increments() {
        let mut config = config_m1(11);
        config.antithetic = true;
        config.n_steps = 16;
        let a = simulate_one(&config, &StrategyKind::Zero, 0).unwrap();
        let b = simulate_one(&config, &StrategyKind::Zero, 1).unwrap();
        for (u, w) in a.dwx.unwrap().iter().zip(b.dwx.unwrap().iter()) {
            assert_eq!(*u, -*w);
        }
    }

    #[test]
    fn twap_liquidates_linearly() {
        let mut config = config_m1(12);
        noiseless(&mut config.params);
        config.n_steps = 400;
        let path = simulate_one(&config, &StrategyKind::AdaptedTwap, 0).unwrap();
        // x(t) = x0 (1 - t/T) up to the final-step floor
        let k = 200;
        assert_relative_eq!(path.x[k], 1e6 * (1.0 - path.t[k]), max_relative = 1e-9);
        assert!(path.x[400].abs() < 1e-6 * 1e6);
    }

    #[test]
    fn monte_carlo_mean_matches_analytic_trajectory() {
        let mut config = config_m1(13);
        config.n_paths = 512;
        config.n_steps = 250;
        let strategy = optimal_m1(&config);
        let ens = simulate_paths(&config, &strategy).unwrap();
        let analytic = GaussianDist::new(0.0, 1e-8)
            .map(|prior| {
                StrategyModel1::new(config.params, prior, benchmark_risk_m1()).unwrap()
            })
            .unwrap()
            .expected_trajectory(1.0)
            .unwrap();
        let gap = (ens.x_terminal.mean - analytic).abs();
        assert!(
            gap < 3.0 * ens.x_terminal.std_error,
            "gap {gap} vs 3 SE {}",
            3.0 * ens.x_terminal.std_error
        );
    }

    #[test]
    fn nonfinite_state_reported() {
        let mut config = config_m1(14);
        config.n_steps = 8;
        // a curve with a NaN coefficient poisons the state immediately
        let curve = ValueCoefficients {
            grid: vec![0.0, 0.5, 1.0],
            h2: vec![f64::INFINITY, f64::INFINITY, f64::INFINITY],
            h1: vec![0.0, 0.0, 0.0],
            h0: None,
        };
        let bad = StrategyKind::SolverFeedback {
            curve,
            c_shift: 0.0,
            d_shift: 0.0,
            denom: 2.0 * config.params.eta,
        };
        assert!(matches!(
            simulate_one(&config, &bad, 3),
            Err(Error::NonfiniteState { path: 3, .. })
        ));
    }
}
