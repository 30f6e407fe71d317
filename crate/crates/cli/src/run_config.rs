//! Model parameters plus run controls, resolved from a config file and
//! command-line overrides.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use execqvi::config::{render_kv, KvMap};
use execqvi::solver::DEFAULT_INTENSITY_CAP;
use execqvi::{ModelParams, ParamError, SolverOptions, Sweep};

pub const RUN_KEYS: &[&str] = &[
    "n_paths",
    "seed",
    "output_dir",
    "artifact",
    "t_list",
    "snapshot_times",
    "time_stride",
    "paths_to_write",
    "threads",
    "tol",
    "max_iter",
    "intensity_cap",
    "sweep",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub n_paths: usize,
    /// 64-bit master seed; path `i` uses stream `i` of it.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/policy.qvi`.
    pub artifact: Option<PathBuf>,
    pub t_list: Vec<f64>,
    /// Empty means `0` and `T - δt`.
    pub snapshot_times: Vec<f64>,
    pub time_stride: usize,
    pub paths_to_write: usize,
    /// 0 uses every available core.
    pub threads: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub intensity_cap: f64,
    pub sweep: Sweep,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        RunConfig {
            params: ModelParams::default(),
            n_paths: 1000,
            seed: 42,
            output_dir: PathBuf::from("out"),
            artifact: None,
            t_list: vec![1.0, 3.0, 5.0, 10.0],
            snapshot_times: Vec::new(),
            time_stride: 1,
            paths_to_write: 5,
            threads: 0,
            tol: s.tol,
            max_iter: s.max_iter,
            intensity_cap: DEFAULT_INTENSITY_CAP,
            sweep: s.sweep,
        }
    }
}

fn list(key: &str, raw: &str) -> Result<Vec<f64>, ParamError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|e| ParamError::InvalidValue {
                key: key.into(),
                value: raw.into(),
                message: e.to_string(),
            })
        })
        .collect()
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn take<T>(kv: &mut KvMap, key: &str, slot: &mut T) -> Result<(), ParamError>
where
    T: FromStr,
    T::Err: Display,
{
    if let Some(v) = kv.take(key)? {
        *slot = v;
    }
    Ok(())
}

impl RunConfig {
    /// Builds a config from file text and `key=value` overrides, applied in
    /// order. Unknown keys are an error.
    pub fn resolve(file: Option<&str>, overrides: &[(String, String)]) -> Result<Self, ParamError> {
        let mut kv = match file {
            Some(text) => KvMap::parse(text)?,
            None => KvMap::default(),
        };
        for (k, v) in overrides {
            kv.set(k, v);
        }
        let params = ModelParams::from_kv(&mut kv)?;
        let mut c = RunConfig {
            params,
            ..RunConfig::default()
        };
        take(&mut kv, "n_paths", &mut c.n_paths)?;
        take(&mut kv, "seed", &mut c.seed)?;
        take(&mut kv, "output_dir", &mut c.output_dir)?;
        if let Some(a) = kv.take_raw("artifact") {
            c.artifact = (!a.is_empty()).then(|| PathBuf::from(a));
        }
        if let Some(raw) = kv.take_raw("t_list") {
            c.t_list = list("t_list", &raw)?;
        }
        if let Some(raw) = kv.take_raw("snapshot_times") {
            c.snapshot_times = list("snapshot_times", &raw)?;
        }
        take(&mut kv, "time_stride", &mut c.time_stride)?;
        take(&mut kv, "paths_to_write", &mut c.paths_to_write)?;
        take(&mut kv, "threads", &mut c.threads)?;
        take(&mut kv, "tol", &mut c.tol)?;
        take(&mut kv, "max_iter", &mut c.max_iter)?;
        take(&mut kv, "intensity_cap", &mut c.intensity_cap)?;
        take(&mut kv, "sweep", &mut c.sweep)?;
        kv.finish()?;
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), ParamError> {
        let bad = |name, requirement, value: f64| Err(ParamError::OutOfRange { name, requirement, value });
        if self.n_paths < 1 {
            return bad("n_paths", ">= 1", self.n_paths as f64);
        }
        if self.time_stride < 1 {
            return bad("time_stride", ">= 1", self.time_stride as f64);
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tol", "> 0", self.tol);
        }
        if self.max_iter < 1 {
            return bad("max_iter", ">= 1", self.max_iter as f64);
        }
        if self.intensity_cap.is_nan() || self.intensity_cap <= 0.0 {
            return bad("intensity_cap", "> 0", self.intensity_cap);
        }
        if let Some(t) = self.t_list.iter().find(|t| t.is_nan() || **t <= 0.0) {
            return bad("t_list entries", "> 0", *t);
        }
        Ok(())
    }

    pub fn artifact_path(&self) -> PathBuf {
        self.artifact
            .clone()
            .unwrap_or_else(|| self.output_dir.join("policy.qvi"))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            intensity_cap: self.intensity_cap,
            sweep: self.sweep,
            time_stride: self.time_stride,
            ..SolverOptions::default()
        }
    }

    /// Every key with its resolved value, in a form `resolve` reads back.
    pub fn render(&self) -> String {
        let mut pairs = self.params.to_kv();
        let run = [
            self.n_paths.to_string(),
            self.seed.to_string(),
            self.output_dir.display().to_string(),
            self.artifact_path().display().to_string(),
            join(&self.t_list),
            join(&self.snapshot_times),
            self.time_stride.to_string(),
            self.paths_to_write.to_string(),
            self.threads.to_string(),
            self.tol.to_string(),
            self.max_iter.to_string(),
            self.intensity_cap.to_string(),
            self.sweep.to_string(),
        ];
        pairs.extend(RUN_KEYS.iter().copied().zip(run));
        render_kv(pairs)
    }
}
