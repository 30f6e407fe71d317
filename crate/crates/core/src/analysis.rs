//! Liquidation rates, batch statistics and risk/return frontiers.

use std::io::{self, Write};

use log::info;

use crate::error::AnalysisError;
use crate::params::ModelParams;
use crate::simulate::{PathRecord, SimOptions, SimState, Simulator};
use crate::solver::{Solver, SolverOptions};

/// Terminal wealth over the frictionless value `x0 * p0`.
///
/// The terminal block is already booked into the path's cash, so this is
/// `Y_T / (x0 p0)`. Nothing to liquidate counts as a rate of 1.
pub fn liquidation_rate(path: &PathRecord, params: &ModelParams) -> Result<f64, AnalysisError> {
    rate_from_cash(path.terminal_cash(), params)
}

fn rate_from_cash(cash: f64, params: &ModelParams) -> Result<f64, AnalysisError> {
    let notional = params.x0 * params.p0;
    if notional == 0.0 {
        if params.x0 == 0.0 {
            return Ok(1.0);
        }
        return Err(AnalysisError::ZeroNotional);
    }
    Ok(cash / notional)
}

/// `Y + (P - Ξ - Γ(X)) X` evaluated at a pre-liquidation state.
pub fn terminal_wealth(state: &SimState, params: &ModelParams) -> f64 {
    let x = state.x as f64 * params.delta_x;
    let xi = state.xi as f64 * params.delta_xi;
    state.cash + (state.price - xi - params.impact_unchecked(x)) * x
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceStats {
    pub horizon: f64,
    pub n_paths: usize,
    pub mean_r: f64,
    pub sd_r: f64,
    pub std_error: f64,
    /// Per-path rates, when retained.
    pub values: Option<Vec<f64>>,
}

impl PerformanceStats {
    /// Approximate standard error of `sd_r` under normality.
    pub fn sd_std_error(&self) -> f64 {
        self.sd_r / (2.0 * (self.n_paths as f64 - 1.0)).sqrt()
    }
}

/// Sample mean and unbiased standard deviation of `rates`.
///
/// Values are summed in sorted order, so the result does not depend on
/// the order paths finished in.
pub fn aggregate(horizon: f64, rates: &[f64]) -> Result<PerformanceStats, AnalysisError> {
    let n = rates.len();
    if n < 2 {
        return Err(AnalysisError::TooFewPaths(n));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    // shifted by the smallest value so identical inputs give exactly zero spread
    let shift = sorted[0];
    let mean = shift + sorted.iter().map(|r| r - shift).sum::<f64>() / n as f64;
    let mut dev: Vec<f64> = sorted.iter().map(|r| (r - mean) * (r - mean)).collect();
    dev.sort_by(f64::total_cmp);
    let var = dev.iter().sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    Ok(PerformanceStats {
        horizon,
        n_paths: n,
        mean_r: mean,
        sd_r: sd,
        std_error: sd / (n as f64).sqrt(),
        values: None,
    })
}

/// Rates for a batch of paths, in path order.
pub fn rates(paths: &[PathRecord], params: &ModelParams) -> Result<Vec<f64>, AnalysisError> {
    paths.iter().map(|p| liquidation_rate(p, params)).collect()
}

#[derive(Debug, Clone)]
pub struct FrontierConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub solver: SolverOptions,
    pub keep_values: bool,
}

/// Solves and simulates once per horizon; rows come back sorted by `T`.
pub fn frontier(
    params: &ModelParams,
    horizons: &[f64],
    cfg: &FrontierConfig,
) -> Result<Vec<PerformanceStats>, AnalysisError> {
    let mut sorted = horizons.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(sorted.len());
    for t in sorted {
        let row = evaluate_horizon(&params.with_horizon(t), cfg)?;
        info!(
            "T = {t}: mean_R = {:.6}, sd_R = {:.6}",
            row.mean_r, row.sd_r
        );
        rows.push(row);
    }
    Ok(rows)
}

/// One solve plus one batch simulation at `params.horizon`.
pub fn evaluate_horizon(
    params: &ModelParams,
    cfg: &FrontierConfig,
) -> Result<PerformanceStats, AnalysisError> {
    let solver = Solver::new(params, cfg.solver.clone())?;
    let sol = solver.solve()?;
    let sim = Simulator::new(
        params,
        &sol.disc,
        &sol.policy,
        SimOptions {
            intensity_cap: cfg.solver.intensity_cap,
            record_events: false,
        },
    )?;
    let paths = sim.simulate_batch(cfg.seed, cfg.n_paths);
    let r = rates(&paths, params)?;
    let mut stats = aggregate(params.horizon, &r)?;
    if cfg.keep_values {
        stats.values = Some(r);
    }
    Ok(stats)
}

pub fn write_stats_csv<W: Write>(rows: &[PerformanceStats], mut out: W) -> io::Result<()> {
    writeln!(out, "T,n_paths,mean_R,sd_R,std_error")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.horizon, r.n_paths, r.mean_r, r.sd_r, r.std_error
        )?;
    }
    Ok(())
}

/// `(sd_R, mean_R)` pairs for plotting a frontier.
pub fn write_frontier_points_csv<W: Write>(rows: &[PerformanceStats], mut out: W) -> io::Result<()> {
    writeln!(out, "sd_R,mean_R,T")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.sd_r, r.mean_r, r.horizon)?;
    }
    Ok(())
}
