use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use execqvi::analysis::{aggregate, frontier, rates, write_frontier_points_csv, write_stats_csv, FrontierConfig};
use execqvi::artifact::SolveArtifact;
use execqvi::simulate::{SimOptions, Simulator};
use execqvi::Solver;
use log::info;

use crate::error::CliError;
use crate::run_config::RunConfig;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(CliError::io(path))?))
}

fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(CliError::io(path))
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let opts = cfg.solver_options();
    let solver = Solver::new(&cfg.params, opts.clone())?;
    let d = solver.discretization();
    let h = solver.h();
    println!(
        "grid: n_t = {}, n_x = {}, n_xi = {} (xi_max = {})",
        d.n_t, d.n_x, d.n_xi, d.xi_max
    );
    println!(
        "h = {} (contraction factor {:.6})",
        h.h,
        h.contraction_factor(d.delta_t)
    );
    let sol = solver.solve()?;
    let it = &sol.diagnostics.iterations;
    let max_it = it.iter().copied().max().unwrap_or(0);
    let mean_it = it.iter().map(|&n| n as f64).sum::<f64>() / it.len().max(1) as f64;
    println!(
        "sweeps per step: max {max_it}, mean {mean_it:.2}; max final change {:e}",
        sol.diagnostics.max_residual
    );
    if sol.diagnostics.clamped_targets > 0 {
        println!(
            "clamped market-order targets: {}",
            sol.diagnostics.clamped_targets
        );
    }
    println!("phi0(x0, 0) = {}", sol.phi0.get(d.n_x, 0));
    let path = cfg.artifact_path();
    SolveArtifact::from_solution(&cfg.params, &opts, &sol).save(&path)?;
    println!("artifact: {}", path.display());
    Ok(())
}

pub fn policy_export(cfg: &RunConfig) -> Result<(), CliError> {
    let art = SolveArtifact::load(&cfg.artifact_path())?;
    let d = &art.disc;
    let times = if cfg.snapshot_times.is_empty() {
        vec![0.0, d.t_at(d.n_t - 1)]
    } else {
        cfg.snapshot_times.clone()
    };
    let mut steps = Vec::with_capacity(times.len());
    for &t in &times {
        match d.time_index(t) {
            Some(k) if k < d.n_t => steps.push((t, k)),
            _ => {
                return Err(CliError::Config(format!(
                    "snapshot time {t} is not a decision time on the grid (multiples of {} below {})",
                    d.delta_t,
                    d.t_at(d.n_t)
                )))
            }
        }
    }
    for (t, k) in steps {
        let path = cfg.output_dir.join(format!("policy_t{t}.csv"));
        write_with(&path, |w| art.policy.write_snapshot_csv(d, k, w))?;
        println!("t = {t} (k = {k}): {}", path.display());
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let art = SolveArtifact::load(&cfg.artifact_path())?;
    art.check_params(&cfg.params)?;
    let p = &art.params;
    let opts = SimOptions {
        intensity_cap: art.solver.intensity_cap,
        record_events: false,
    };
    let sim = Simulator::new(p, &art.disc, &art.policy, opts)?;
    let paths = sim.simulate_batch(cfg.seed, cfg.n_paths);

    let recorder = Simulator::new(
        p,
        &art.disc,
        &art.policy,
        SimOptions {
            record_events: true,
            ..opts
        },
    )?;
    for i in 0..cfg.paths_to_write.min(cfg.n_paths) as u64 {
        let rec = recorder.simulate_path(cfg.seed, i);
        let path = cfg.output_dir.join(format!("path_{i:05}.csv"));
        write_with(&path, |w| rec.write_csv(p.delta_t, w))?;
    }

    let quote_steps: usize = paths.iter().map(|r| r.quote_steps).sum();
    let fills: usize = paths.iter().map(|r| r.fills).sum();
    let expected = quote_steps as f64 * sim.fill_probability();
    println!("limit fills: observed {fills}, expected {expected:.2} over {quote_steps} quoting steps");

    let r = rates(&paths, p)?;
    let stats_path = cfg.output_dir.join("stats.csv");
    if r.len() >= 2 {
        let stats = aggregate(p.horizon, &r)?;
        println!(
            "mean_R = {:.6}, sd_R = {:.6}, std_error = {:.6} ({} paths)",
            stats.mean_r, stats.sd_r, stats.std_error, stats.n_paths
        );
        write_with(&stats_path, |w| write_stats_csv(&[stats], w))?;
    } else {
        // a single path has no spread estimate
        println!("R = {:.6} (1 path)", r[0]);
        write_with(&stats_path, |w| {
            writeln!(w, "T,n_paths,mean_R,sd_R,std_error")?;
            writeln!(w, "{},1,{},,", p.horizon, r[0])
        })?;
    }
    info!("wrote {}", stats_path.display());
    Ok(())
}

pub fn frontier_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.t_list.is_empty() {
        return Err(CliError::Config("t_list is empty".into()));
    }
    let fc = FrontierConfig {
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        solver: cfg.solver_options(),
        keep_values: false,
    };
    let rows = frontier(&cfg.params, &cfg.t_list, &fc)?;
    for r in &rows {
        println!(
            "T = {}: mean_R = {:.6}, sd_R = {:.6}, std_error = {:.6}",
            r.horizon, r.mean_r, r.sd_r, r.std_error
        );
    }
    let a = cfg.output_dir.join("frontier.csv");
    let b = cfg.output_dir.join("frontier_points.csv");
    write_with(&a, |w| write_stats_csv(&rows, w))?;
    write_with(&b, |w| write_frontier_points_csv(&rows, w))?;
    println!("wrote {} and {}", a.display(), b.display());
    Ok(())
}
