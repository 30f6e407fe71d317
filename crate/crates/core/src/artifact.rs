//! On-disk solved policies.
//!
//! Layout: a UTF-8 header of `[section]` lines and `key = value` pairs,
//! terminated by a line `end_header`, followed by a little-endian binary
//! payload in the order declared under `[payload]`:
//!
//! ```text
//! execqvi-artifact 1
//! [params]            model parameters, same keys as the config file
//! [grid]              n_t, n_x, n_xi, xi_max
//! [solver]            tol, max_iter, intensity_cap, h_margin, sweep, h
//! [diagnostics]       max_residual, clamped_targets
//! [payload]           byte_order, time_stride, policy_slices,
//!                     policy = i16 <count>, phi0 = f64 <count>,
//!                     iterations = u32 <count>
//! end_header
//! <policy i16 LE><phi0 f64 LE><iterations u32 LE>
//! ```
//!
//! Policy codes are `0` wait, `+l` quote `l` lots, `-z` sell `z` lots,
//! slice-major then inventory then impact. Files are written to a
//! temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::KvMap;
use crate::error::ArtifactError;
use crate::grid::Discretization;
use crate::params::ModelParams;
use crate::policy::PolicyGrid;
use crate::solver::{Diagnostics, HTransform, Solution, SolverOptions, ValueSurface};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "execqvi-artifact";
const END_HEADER: &str = "end_header";

#[derive(Debug, Clone, PartialEq)]
pub struct SolveArtifact {
    pub params: ModelParams,
    /// Parameter values exactly as written in the header.
    params_echo: Vec<(String, String)>,
    pub disc: Discretization,
    pub solver: SolverOptions,
    pub h: f64,
    pub policy: PolicyGrid,
    pub phi0: ValueSurface,
    pub diagnostics: Diagnostics,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl SolveArtifact {
    pub fn from_solution(params: &ModelParams, solver: &SolverOptions, sol: &Solution) -> Self {
        SolveArtifact {
            params: params.clone(),
            params_echo: params
                .to_kv()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            disc: sol.disc.clone(),
            solver: solver.clone(),
            h: sol.h.h,
            policy: sol.policy.clone(),
            phi0: sol.phi0.clone(),
            diagnostics: sol.diagnostics.clone(),
        }
    }

    pub fn h_transform(&self) -> HTransform {
        crate::solver::compute_h(
            &self.params,
            &self.disc,
            self.solver.intensity_cap,
            self.solver.h_margin,
        )
    }

    /// Fails on the first parameter whose rendered value differs.
    pub fn check_params(&self, config: &ModelParams) -> Result<(), ArtifactError> {
        let mine = self.params_echo.iter();
        for ((key, artifact), (_, config)) in mine.zip(config.to_kv()) {
            if *artifact != config {
                return Err(ArtifactError::ParamMismatch {
                    key: key.clone(),
                    artifact: artifact.clone(),
                    config,
                });
            }
        }
        Ok(())
    }

    fn header(&self) -> String {
        let d = &self.disc;
        let s = &self.solver;
        let mut h = format!("{MAGIC} {FORMAT_VERSION}\n[params]\n");
        for (k, v) in &self.params_echo {
            h += &format!("{k} = {v}\n");
        }
        h += &format!(
            "[grid]\nn_t = {}\nn_x = {}\nn_xi = {}\nxi_max = {}\n",
            d.n_t, d.n_x, d.n_xi, d.xi_max
        );
        h += &format!(
            "[solver]\ntol = {}\nmax_iter = {}\nintensity_cap = {}\nh_margin = {}\nsweep = {}\nh = {}\n",
            s.tol, s.max_iter, s.intensity_cap, s.h_margin, s.sweep, self.h
        );
        h += &format!(
            "[diagnostics]\nmax_residual = {}\nclamped_targets = {}\n",
            self.diagnostics.max_residual, self.diagnostics.clamped_targets
        );
        h += &format!(
            "[payload]\nbyte_order = little-endian\ntime_stride = {}\npolicy_slices = {}\npolicy = i16 {}\nphi0 = f64 {}\niterations = u32 {}\n{END_HEADER}\n",
            self.policy.stride(),
            self.policy.codes().len() / d.n_cells(),
            self.policy.codes().len(),
            self.phi0.values().len(),
            self.diagnostics.iterations.len(),
        );
        h
    }

    /// Serialized file contents.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = self.header();
        let mut out = Vec::with_capacity(
            header.len()
                + 2 * self.policy.codes().len()
                + 8 * self.phi0.values().len()
                + 4 * self.diagnostics.iterations.len(),
        );
        out.extend_from_slice(header.as_bytes());
        for c in self.policy.codes() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for v in self.phi0.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for n in &self.diagnostics.iterations {
            out.extend_from_slice(&n.to_le_bytes());
        }
        out
    }

    /// Writes atomically: temp file in the target directory, then rename.
    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(path))?;
        tmp.write_all(&self.to_bytes()).map_err(io_err(path))?;
        tmp.as_file().sync_all().map_err(io_err(path))?;
        tmp.persist(path).map_err(|e| ArtifactError::Io {
            path: path.to_path_buf(),
            source: e.error,
        })?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let bytes = fs::read(path).map_err(io_err(path))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self, ArtifactError> {
        let header_err = |message: String| ArtifactError::Header {
            path: path.to_path_buf(),
            message,
        };
        let payload_err = |message: String| ArtifactError::Payload {
            path: path.to_path_buf(),
            message,
        };

        // the magic line is read first so a newer format is reported as such
        let first_end = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
        let first = String::from_utf8_lossy(&bytes[..first_end]);
        let version = first
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| header_err(format!("not an artifact file (first line `{first}`)")))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(ArtifactError::UnsupportedVersion {
                path: path.to_path_buf(),
                found: version.to_string(),
                supported: FORMAT_VERSION,
            });
        }

        let marker = format!("\n{END_HEADER}\n");
        let split = bytes
            .windows(marker.len())
            .position(|w| w == marker.as_bytes())
            .ok_or_else(|| header_err("missing end_header line".into()))?;
        let header = std::str::from_utf8(&bytes[..split])
            .map_err(|_| header_err("header is not UTF-8".into()))?;
        let payload = &bytes[split + marker.len()..];
        let lines = header.lines().skip(1);

        let mut sections: Vec<(String, Vec<(String, String)>)> = Vec::new();
        for line in lines {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                sections.push((name.to_string(), Vec::new()));
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| header_err(format!("bad line `{line}`")))?;
            let cur = sections
                .last_mut()
                .ok_or_else(|| header_err(format!("`{line}` outside any section")))?;
            cur.1.push((k.to_string(), v.to_string()));
        }
        let section = |name: &str| -> Result<KvMap, ArtifactError> {
            let (_, pairs) = sections
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| header_err(format!("missing [{name}] section")))?;
            let mut kv = KvMap::default();
            for (k, v) in pairs {
                kv.set(k, v);
            }
            Ok(kv)
        };
        fn need<T: std::str::FromStr>(
            kv: &mut KvMap,
            key: &str,
            path: &Path,
        ) -> Result<T, ArtifactError>
        where
            T::Err: std::fmt::Display,
        {
            kv.take::<T>(key)?.ok_or_else(|| ArtifactError::Header {
                path: path.to_path_buf(),
                message: format!("missing key `{key}`"),
            })
        }

        let params_echo = sections
            .iter()
            .find(|(n, _)| n == "params")
            .map(|(_, p)| p.clone())
            .ok_or_else(|| header_err("missing [params] section".into()))?;
        let mut pkv = section("params")?;
        let params = ModelParams::from_kv(&mut pkv)?;
        pkv.finish()?;
        let disc = Discretization::new(&params)?;

        let mut g = section("grid")?;
        let shape: (usize, usize, usize) = (
            need(&mut g, "n_t", path)?,
            need(&mut g, "n_x", path)?,
            need(&mut g, "n_xi", path)?,
        );
        if shape != (disc.n_t, disc.n_x, disc.n_xi) {
            return Err(header_err(format!(
                "grid {shape:?} inconsistent with params {:?}",
                (disc.n_t, disc.n_x, disc.n_xi)
            )));
        }

        let mut s = section("solver")?;
        let solver = SolverOptions {
            tol: need(&mut s, "tol", path)?,
            max_iter: need(&mut s, "max_iter", path)?,
            intensity_cap: need(&mut s, "intensity_cap", path)?,
            h_margin: need(&mut s, "h_margin", path)?,
            sweep: need(&mut s, "sweep", path)?,
            keep_surfaces: false,
            time_stride: 1,
        };
        let h: f64 = need(&mut s, "h", path)?;

        let mut dg = section("diagnostics")?;
        let max_residual: f64 = need(&mut dg, "max_residual", path)?;
        let clamped_targets: u64 = need(&mut dg, "clamped_targets", path)?;

        let mut pl = section("payload")?;
        let order: String = need(&mut pl, "byte_order", path)?;
        if order != "little-endian" {
            return Err(header_err(format!("unsupported byte order `{order}`")));
        }
        let stride: usize = need(&mut pl, "time_stride", path)?;
        let count = |kv: &mut KvMap, key: &str, ty: &str| -> Result<usize, ArtifactError> {
            let raw: String = need(kv, key, path)?;
            let n = raw
                .strip_prefix(ty)
                .and_then(|r| r.trim().parse::<usize>().ok())
                .ok_or_else(|| header_err(format!("`{key} = {raw}` is not `{ty} <count>`")))?;
            Ok(n)
        };
        let n_policy = count(&mut pl, "policy", "i16")?;
        let n_phi = count(&mut pl, "phi0", "f64")?;
        let n_iter = count(&mut pl, "iterations", "u32")?;

        let expected = 2 * n_policy + 8 * n_phi + 4 * n_iter;
        if payload.len() != expected {
            return Err(payload_err(format!(
                "{} bytes present, header declares {expected}",
                payload.len()
            )));
        }
        let (pol_bytes, rest) = payload.split_at(2 * n_policy);
        let (phi_bytes, iter_bytes) = rest.split_at(8 * n_phi);
        let codes: Vec<i16> = pol_bytes
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect();
        let policy = PolicyGrid::from_codes(shape, stride, codes)
            .ok_or_else(|| payload_err("policy length does not match grid and stride".into()))?;
        let phi: Vec<f64> = phi_bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        let phi0 = ValueSurface::from_values(0, disc.n_x, disc.n_xi, phi)
            .ok_or_else(|| payload_err("phi0 length does not match grid".into()))?;
        let iterations: Vec<u32> = iter_bytes
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        if iterations.len() != disc.n_t {
            return Err(payload_err(format!(
                "{} iteration counts for {} steps",
                iterations.len(),
                disc.n_t
            )));
        }

        Ok(SolveArtifact {
            params,
            params_echo,
            disc,
            solver: SolverOptions {
                time_stride: stride,
                ..solver
            },
            h,
            policy,
            phi0,
            diagnostics: Diagnostics {
                iterations,
                max_residual,
                clamped_targets,
            },
        })
    }
}
