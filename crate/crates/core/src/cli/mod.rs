//! Command-line front end: config ingestion, presets, experiment execution,
//! and artifact emission (CSV curves, decompositions, histograms, JSON
//! summaries).

pub mod checks;
pub mod presets;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::closed_form::{StrategyModel1, StrategyModel2};
use crate::error::{Error, Result};
use crate::model::{
    derive_model1_coeffs, derive_model2_coeffs, ModelParams, PriorSchedule, RiskCtx,
};
use crate::riccati;
use crate::sim::{self, histogram, SimConfig, SimEnsemble, StrategyKind};

pub const SCHEMA_VERSION: u32 = 1;
const HISTOGRAM_BINS: usize = 60;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimSettings {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

/// A fully explicit experiment: model, parameters, prior, risk, simulation
/// settings, and the strategies to run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: u8,
    pub params: ModelParams<f64>,
    pub prior: PriorSchedule<f64>,
    pub risk: RiskCtx<f64>,
    pub sim: SimSettings,
    pub strategies: Vec<String>,
    #[serde(default)]
    pub preset: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let tag = match self.risk {
            RiskCtx::Model1(_) => 1,
            RiskCtx::Model2(_) => 2,
        };
        if self.model != tag {
            return Err(Error::ConfigMismatch(format!(
                "config.model = {} but risk spec is Model {tag}",
                self.model
            )));
        }
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.to_sim_config().validate()
    }

    pub fn to_sim_config(&self) -> SimConfig {
        let mut c = SimConfig::new(self.params, self.prior, self.risk, self.sim.seed);
        c.n_paths = self.sim.n_paths;
        c.n_steps = self.sim.n_steps;
        c.antithetic = self.sim.antithetic;
        c
    }
}

/// Builds the optimal strategy, preferring the closed form and falling back
/// to the ODE solver. Returns the provenance tag written into coeffs.json.
pub fn build_optimal(config: &ExperimentConfig) -> Result<(StrategyKind, &'static str)> {
    let prior = config
        .prior
        .as_const()
        .ok_or_else(|| Error::Validation("optimal strategy requires a constant prior".into()))?;
    match config.risk {
        RiskCtx::Model1(risk) => match StrategyModel1::new(config.params, prior, risk) {
            Ok(s) => Ok((StrategyKind::OptimalModel1(s.with_value_curve()), "closed_form")),
            Err(Error::Validation(_)) => {
                let curve =
                    riccati::solve_model1(&config.params, &config.prior, &risk, config.sim.n_steps.max(1000))?;
                Ok((
                    StrategyKind::SolverFeedback {
                        curve,
                        c_shift: 0.0,
                        d_shift: 0.0,
                        denom: 2.0 * config.params.eta,
                    },
                    "solver",
                ))
            }
            Err(e) => Err(e),
        },
        RiskCtx::Model2(risk) => match StrategyModel2::new(config.params, prior, risk) {
            Ok(s) => Ok((StrategyKind::OptimalModel2(s.with_value_curve()), "closed_form")),
            Err(Error::Validation(_)) => {
                let co = derive_model2_coeffs(&config.params, &prior, &risk)?;
                let curve =
                    riccati::solve_model2(&config.params, &config.prior, &risk, config.sim.n_steps.max(1000))?;
                Ok((
                    StrategyKind::SolverFeedback {
                        curve,
                        c_shift: co.c_shift,
                        d_shift: co.d_shift,
                        denom: 2.0 * co.eta_tilde,
                    },
                    "solver",
                ))
            }
            Err(e) => Err(e),
        },
    }
}

pub fn build_strategy(config: &ExperimentConfig, name: &str) -> Result<StrategyKind> {
    match name {
        "optimal" => build_optimal(config).map(|(s, _)| s),
        "twap" => Ok(StrategyKind::AdaptedTwap),
        "zero" => Ok(StrategyKind::Zero),
        other => Err(Error::Validation(format!("unknown strategy '{other}'"))),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn write_expanded_config(config: &ExperimentConfig, out: &Path) -> Result<()> {
    write_file(&out.join("config.json"), &serde_json::to_string_pretty(config)?)
}

/// Writes curves.csv (t, H2, H1, H0, v_star_per_unit_x, x_star) and
/// coeffs.json with every derived scalar plus provenance.
pub fn run_solve(config: &ExperimentConfig, out: &Path) -> Result<()> {
    config.validate()?;
    write_expanded_config(config, out)?;
    let (strategy, provenance) = build_optimal(config)?;
    let n = config.sim.n_steps;
    let horizon = config.params.horizon;
    let dt = horizon / n as f64;

    let mut rows = Vec::with_capacity(n + 1);
    let mut x_star = config.params.x0;
    for i in 0..=n {
        let t = i as f64 * dt;
        let (h2, h1, h0, v_unit) = match &strategy {
            StrategyKind::OptimalModel1(s) => (
                s.h2(t)?,
                s.h1(t)?,
                s.value(t, 0.0)?,
                s.h2(t)? / (2.0 * config.params.eta),
            ),
            StrategyKind::OptimalModel2(s) => (
                s.h2(t)?,
                s.h1(t)?,
                s.value(t, 0.0)?,
                (s.h2(t)? - s.coeffs.c_shift) / (2.0 * s.coeffs.eta_tilde),
            ),
            StrategyKind::SolverFeedback { curve, c_shift, denom, .. } => (
                curve.h2_at(t)?,
                curve.h1_at(t)?,
                curve.h0_at(t)?,
                (curve.h2_at(t)? - c_shift) / denom,
            ),
            _ => unreachable!("build_optimal returns optimal strategies only"),
        };
        let x_here = match &strategy {
            StrategyKind::OptimalModel1(s) => s.expected_trajectory(t)?,
            StrategyKind::OptimalModel2(s) => s.expected_trajectory(t)?,
            _ => x_star,
        };
        rows.push(format!(
            "{},{},{},{},{},{}",
            fmt(t),
            fmt(h2),
            fmt(h1),
            fmt(h0),
            fmt(v_unit),
            fmt(x_here)
        ));
        // advance the solver-route trajectory by RK4 on the feedback ODE
        if i < n {
            if let StrategyKind::SolverFeedback { .. } = &strategy {
                let k1 = strategy.rate(t, x_star, dt, horizon)?;
                let k2 = strategy.rate(t + dt / 2.0, x_star + dt / 2.0 * k1, dt, horizon)?;
                let k3 = strategy.rate(t + dt / 2.0, x_star + dt / 2.0 * k2, dt, horizon)?;
                let k4 = strategy.rate((t + dt).min(horizon), x_star + dt * k3, dt, horizon)?;
                x_star += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
    }
    let mut csv = String::from("t,h2,h1,h0,v_star_per_unit_x,x_star\n");
    csv.push_str(&rows.join("\n"));
    csv.push('\n');
    write_file(&out.join("curves.csv"), &csv)?;

    let prior = config.prior.as_const();
    let coeffs = match (config.risk, prior) {
        (RiskCtx::Model1(risk), Some(prior)) => {
            let c = derive_model1_coeffs(&config.params, &prior, &risk)?;
            json!({
                "model": 1, "a1": c.a1, "b1": c.b1, "c": c.c, "g": c.g,
                "a1_hat": c.a1_hat, "alpha1": c.alpha1,
            })
        }
        (RiskCtx::Model2(risk), Some(prior)) => {
            let c = derive_model2_coeffs(&config.params, &prior, &risk)?;
            json!({
                "model": 2, "a2": c.a2, "b2": c.b2, "eta_tilde": c.eta_tilde,
                "c_shift": c.c_shift, "d_shift": c.d_shift, "g": c.g,
                "a2_hat": c.a2_hat, "alpha2": c.alpha2,
            })
        }
        _ => json!({ "model": config.model }),
    };
    let mut coeffs = coeffs;
    coeffs["schema_version"] = json!(SCHEMA_VERSION);
    coeffs["provenance"] = json!(provenance);
    write_file(&out.join("coeffs.json"), &serde_json::to_string_pretty(&coeffs)?)?;
    Ok(())
}

fn stats_json(e: &SimEnsemble) -> serde_json::Value {
    json!({
        "v_pnl": e.pnl, "v_risk": e.risk, "v_entropy": e.entropy,
        "v_total": e.total, "x_terminal": e.x_terminal,
    })
}

/// Runs every configured strategy, writing per-strategy decomposition CSVs,
/// pooled histograms, and summary.json with optimal-vs-TWAP deltas.
pub fn run_simulate(config: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    config.validate()?;
    write_expanded_config(config, out)?;
    let sim_config = config.to_sim_config();

    let mut ensembles: Vec<(String, SimEnsemble)> = Vec::new();
    for name in &config.strategies {
        let strategy = build_strategy(config, name)?;
        let ens = sim::simulate_paths(&sim_config, &strategy)?;
        let mut csv = String::from("path_id,v_pnl,v_risk,v_entropy,v_total\n");
        for s in &ens.summaries {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                s.path_id,
                fmt(s.v_pnl),
                fmt(s.v_risk),
                fmt(s.v_entropy),
                fmt(s.v_total)
            ));
        }
        write_file(&out.join(format!("decomposition-{name}.csv")), &csv)?;
        ensembles.push((name.clone(), ens));
    }

    // pooled 60-bin histograms per component across all strategies
    let mut hist_csv = String::from("component,strategy,bin_lo,bin_hi,count\n");
    for component in ["v_pnl", "v_risk", "v_entropy", "v_total"] {
        let pooled: Vec<f64> = ensembles.iter().flat_map(|(_, e)| e.component(component)).collect();
        let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let width = (hi - lo) / HISTOGRAM_BINS as f64;
        for (name, e) in &ensembles {
            let counts = histogram(&e.component(component), lo, hi, HISTOGRAM_BINS);
            for (b, c) in counts.iter().enumerate() {
                hist_csv.push_str(&format!(
                    "{component},{name},{},{},{c}\n",
                    fmt(lo + b as f64 * width),
                    fmt(lo + (b + 1) as f64 * width),
                ));
            }
        }
    }
    write_file(&out.join("histograms.csv"), &hist_csv)?;

    let mut summary = json!({
        "schema_version": SCHEMA_VERSION,
        "preset": config.preset,
        "seed": config.sim.seed,
        "n_paths": config.sim.n_paths,
        "n_steps": config.sim.n_steps,
        "strategies": ensembles.iter()
            .map(|(n, e)| (n.clone(), stats_json(e)))
            .collect::<serde_json::Map<_, _>>(),
    });
    let find = |n: &str| ensembles.iter().find(|(name, _)| name == n).map(|(_, e)| e);
    if let (Some(opt), Some(twap)) = (find("optimal"), find("twap")) {
        let delta = |a: &sim::ComponentStats, b: &sim::ComponentStats| {
            json!({
                "mean_diff": a.mean - b.mean,
                "pooled_se": (a.std_error.powi(2) + b.std_error.powi(2)).sqrt(),
                "variance_optimal": a.variance,
                "variance_twap": b.variance,
            })
        };
        summary["optimal_minus_twap"] = json!({
            "v_pnl": delta(&opt.pnl, &twap.pnl),
            "v_risk": delta(&opt.risk, &twap.risk),
            "v_entropy": delta(&opt.entropy, &twap.entropy),
            "v_total": delta(&opt.total, &twap.total),
        });
    }
    write_file(&out.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Runs every row of the selected comparison table and writes a report with
/// per-scenario optimal-minus-TWAP deltas.
pub fn run_stress(
    table: u8,
    out: &Path,
    paths_override: Option<usize>,
    steps_override: Option<usize>,
) -> Result<serde_json::Value> {
    let rows = presets::table_rows(table);
    if rows.is_empty() {
        return Err(Error::Validation(format!("table must be 1 or 2, got {table}")));
    }
    let mut scenarios = serde_json::Map::new();
    for name in rows {
        let mut config = presets::preset(name).expect("table rows are presets");
        if let Some(p) = paths_override {
            config.sim.n_paths = p;
        }
        if let Some(s) = steps_override {
            config.sim.n_steps = s;
        }
        let dir = out.join(name);
        let summary = run_simulate(&config, &dir)?;
        scenarios.insert(
            name.to_string(),
            json!({
                "seed": config.sim.seed,
                "optimal_minus_twap": summary.get("optimal_minus_twap").cloned(),
            }),
        );
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "table": table,
        "scenarios": scenarios,
    });
    write_file(&out.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[derive(Parser, Debug)]
#[command(name = "entrex", version, about = "Entropy-regularized optimal execution toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (see `--preset list`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve the coefficient ODEs / closed forms and emit curves.
    Solve(RunArgs),
    /// Monte Carlo comparison of the configured strategies.
    Simulate(RunArgs),
    /// Run all rows of a comparison table.
    Stress {
        #[arg(long)]
        table: u8,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Structural invariant suites: saddle | identity | limits.
    Check {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match (&args.config, &args.preset) {
        (Some(_), Some(_)) => {
            return Err(Error::Validation("--config and --preset are mutually exclusive".into()))
        }
        (Some(path), None) => serde_json::from_str(&fs::read_to_string(path)?)?,
        (None, Some(name)) if name == "list" => {
            return Err(Error::Validation(format!(
                "available presets: {}",
                presets::preset_names().join(", ")
            )))
        }
        (None, Some(name)) => presets::preset(name).ok_or_else(|| {
            Error::Validation(format!(
                "unknown preset '{name}'; available: {}",
                presets::preset_names().join(", ")
            ))
        })?,
        (None, None) => {
            return Err(Error::Validation("one of --config or --preset is required".into()))
        }
    };
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    if let Some(paths) = args.paths {
        config.sim.n_paths = paths;
    }
    if let Some(steps) = args.steps {
        config.sim.n_steps = steps;
    }
    Ok(config)
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Validation(_)
        | Error::ConfigMismatch(_)
        | Error::PrecisionViolation(_)
        | Error::EtaTildeViolation(_)
        | Error::Json(_) => 1,
        _ => 3,
    }
}

/// Parses argv and runs; returns the process exit code
/// (0 ok, 1 validation, 2 invariant failure, 3 runtime error).
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result: Result<i32> = (|| match cli.cmd {
        Cmd::Solve(args) => {
            let config = load_config(&args)?;
            run_solve(&config, &args.out)?;
            println!("wrote {}", args.out.display());
            Ok(0)
        }
        Cmd::Simulate(args) => {
            let config = load_config(&args)?;
            run_simulate(&config, &args.out)?;
            println!("wrote {}", args.out.display());
            Ok(0)
        }
        Cmd::Stress { table, out, paths, steps } => {
            run_stress(table, &out, paths, steps)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
        Cmd::Check { suite, out } => {
            let report = checks::run_suite(&suite)?;
            write_file(
                &out.join(format!("check-{suite}.json")),
                &serde_json::to_string_pretty(&report.details)?,
            )?;
            if report.passed {
                println!("{suite}: pass");
                Ok(0)
            } else {
                eprintln!("{suite}: FAIL\n{}", serde_json::to_string_pretty(&report.details)?);
                Ok(2)
            }
        }
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
