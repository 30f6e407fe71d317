//! Backward-in-time solver for the discretized reduced quasi-variational
//! inequality.
//!
//! At each time step the reduced value `phi^k` is the fixed point of
//!
//! ```text
//! phi = max( max_l { Lbar^l phi + fbar^{l,k} },  max_z { M^z phi + K^z } )
//! ```
//!
//! where `Lbar^l` is the h-scaled continuation operator (wait or quote
//! `l` lots) and `M^z`, `K^z` describe an immediate market sale of `z`
//! lots. `K^z = -x Γ(z)`: selling marks the whole position down by the
//! impact of the sale.
//!
//! Every cell only references itself, the cell one impact step below and
//! cells with strictly smaller inventory. Sweeping inventory-major with
//! impact ascending is therefore a topological order, and the default
//! [`Sweep::GaussSeidel`] solves the self-reference of each cell exactly.
//! One sweep reaches the fixed point; the next certifies it.
//! [`Sweep::Jacobi`] applies the fixed-point map to the whole previous
//! iterate and can run cells in parallel. Chains of sales are
//! non-expansive, so it is only guaranteed to contract by `1 - 1/(h δt)`
//! over `n_x + 1` consecutive sweeps, and that factor is close to 1 once
//! strong intensities hit the cap.

use log::{debug, info, warn};
use rayon::prelude::*;

use crate::error::SolveError;
use crate::grid::Discretization;
use crate::params::ModelParams;
use crate::policy::{Action, PolicyGrid, MAX_LOTS};

/// Default bound on recovery intensities inside the solver and simulator.
pub const DEFAULT_INTENSITY_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    GaussSeidel,
    Jacobi,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gauss-seidel" | "gauss_seidel" | "gs" => Ok(Sweep::GaussSeidel),
            "jacobi" => Ok(Sweep::Jacobi),
            other => Err(format!("unknown sweep `{other}`")),
        }
    }
}

impl std::fmt::Display for Sweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sweep::GaussSeidel => "gauss-seidel",
            Sweep::Jacobi => "jacobi",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop when the sup-norm change between sweeps drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub intensity_cap: f64,
    /// `h` is this factor times its lower bound.
    pub h_margin: f64,
    pub sweep: Sweep,
    /// Keep `phi^k` for every `k` (memory heavy; for analysis and tests).
    pub keep_surfaces: bool,
    /// Store the policy every `time_stride` steps.
    pub time_stride: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 10_000,
            intensity_cap: DEFAULT_INTENSITY_CAP,
            h_margin: 1.001,
            sweep: Sweep::GaussSeidel,
            keep_surfaces: false,
            time_stride: 1,
        }
    }
}

/// Scaling constant making the continuation operator a contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HTransform {
    pub h: f64,
    /// `1/δt + 2 (λ^Ξ(ξ_max) + λ^L)`; `h` must exceed it.
    pub bound: f64,
}

impl HTransform {
    /// Row sum of every continuation operator, `1 - 1/(h δt)`.
    pub fn contraction_factor(&self, delta_t: f64) -> f64 {
        1.0 - 1.0 / (self.h * delta_t)
    }
}

/// `h = margin * (1/δt + 2 (min(λ^Ξ(ξ_max), cap) + λ^L))`.
pub fn compute_h(params: &ModelParams, disc: &Discretization, cap: f64, margin: f64) -> HTransform {
    let top = params.recovery_intensity_unchecked(disc.xi_max).min(cap);
    let bound = 1.0 / disc.delta_t + 2.0 * (top + params.lambda_l);
    HTransform {
        h: margin * bound,
        bound,
    }
}

/// `phi^k` on the (inventory, impact) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub k: usize,
    n_x: usize,
    n_xi: usize,
    values: Vec<f64>,
}

impl ValueSurface {
    pub fn from_values(k: usize, n_x: usize, n_xi: usize, values: Vec<f64>) -> Option<Self> {
        (values.len() == (n_x + 1) * (n_xi + 1)).then_some(ValueSurface {
            k,
            n_x,
            n_xi,
            values,
        })
    }

    pub fn constant(disc: &Discretization, k: usize, c: f64) -> Self {
        ValueSurface {
            k,
            n_x: disc.n_x,
            n_xi: disc.n_xi,
            values: vec![c; disc.n_cells()],
        }
    }

    #[inline]
    pub fn get(&self, i_x: usize, i_xi: usize) -> f64 {
        self.values[i_x * (self.n_xi + 1) + i_xi]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_x, self.n_xi)
    }
}

/// Nonzero entries of one continuation-operator row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowWeights {
    pub diagonal: f64,
    /// Weight on `(i_x, i_xi - 1)`.
    pub recovery: f64,
    /// Weight on `(i_x - l, i_xi)`; lands on the diagonal when `l = 0`.
    pub limit: f64,
}

impl RowWeights {
    pub fn sum(&self) -> f64 {
        self.diagonal + self.recovery + self.limit
    }
}

#[derive(Debug, Clone)]
pub struct StepSolution {
    pub surface: ValueSurface,
    pub actions: Vec<i16>,
    pub iterations: usize,
    /// Sup-norm change after each sweep.
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Sweeps used at each time step, indexed by `k`.
    pub iterations: Vec<u32>,
    /// Largest final sweep change over all steps.
    pub max_residual: f64,
    /// Intervention targets above the impact grid that were clamped,
    /// counted over reachable cells of the final sweep of each step.
    pub clamped_targets: u64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub disc: Discretization,
    pub h: HTransform,
    pub policy: PolicyGrid,
    pub phi0: ValueSurface,
    /// `surfaces[k]` for `k = 0..=n_t` when requested.
    pub surfaces: Option<Vec<ValueSurface>>,
    pub diagnostics: Diagnostics,
}

pub struct Solver {
    params: ModelParams,
    disc: Discretization,
    options: SolverOptions,
    h: HTransform,
    /// Capped `λ^Ξ(ξ_i)` per impact index.
    intensity: Vec<f64>,
}

impl Solver {
    pub fn new(params: &ModelParams, options: SolverOptions) -> Result<Self, SolveError> {
        let disc = Discretization::new(params)?;
        if disc.n_x > MAX_LOTS {
            return Err(SolveError::Params(crate::error::ParamError::OutOfRange {
                name: "x0 / delta_x",
                requirement: "at most 32767 lots",
                value: disc.n_x as f64,
            }));
        }
        let cap = options.intensity_cap;
        let mut capped_from = None;
        let intensity: Vec<f64> = (0..=disc.n_xi)
            .map(|i| {
                let raw = params.recovery_intensity_unchecked(disc.xi_at(i));
                if raw > cap && capped_from.is_none() {
                    capped_from = Some(i);
                }
                raw.min(cap)
            })
            .collect();
        if let Some(i) = capped_from {
            info!(
                "recovery intensity capped at {cap:e} for xi >= {}",
                disc.xi_at(i)
            );
        }
        let h = compute_h(params, &disc, cap, options.h_margin);
        let solver = Solver {
            params: params.clone(),
            disc,
            options,
            h,
            intensity,
        };
        solver.check_contraction()?;
        Ok(solver)
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn h(&self) -> HTransform {
        self.h
    }

    /// Capped recovery intensity at impact index `i_xi`.
    pub fn intensity(&self, i_xi: usize) -> f64 {
        self.intensity[i_xi]
    }

    pub fn row_weights(&self, i_xi: usize, l: usize) -> RowWeights {
        let h = self.h.h;
        let lam = self.intensity[i_xi];
        let ll = self.params.lambda_l;
        let mut diagonal = 1.0 - (1.0 / self.disc.delta_t + lam + ll) / h;
        let limit = if l == 0 {
            diagonal += ll / h;
            0.0
        } else {
            ll / h
        };
        RowWeights {
            diagonal,
            recovery: lam / h,
            limit,
        }
    }

    /// Every row of every `Lbar^l` must be nonnegative and sum to
    /// `1 - 1/(h δt)`.
    pub fn check_contraction(&self) -> Result<(), SolveError> {
        let target = self.h.contraction_factor(self.disc.delta_t);
        let l_top = self.disc.l_max_steps.min(self.disc.n_x);
        for i_xi in 0..=self.disc.n_xi {
            for l in 0..=l_top {
                let w = self.row_weights(i_xi, l);
                if w.diagonal < 0.0 || w.recovery < 0.0 || w.limit < 0.0 {
                    return Err(SolveError::NotContraction {
                        cell: i_xi,
                        detail: format!("negative weight {w:?}"),
                    });
                }
                if (w.sum() - target).abs() > 1e-12 {
                    return Err(SolveError::NotContraction {
                        cell: i_xi,
                        detail: format!("row sum {} != {target}", w.sum()),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn terminal_surface(&self) -> ValueSurface {
        let d = &self.disc;
        let mut values = Vec::with_capacity(d.n_cells());
        for i_x in 0..=d.n_x {
            let x = d.x_at(i_x);
            let v = -x * d.impact_of(i_x);
            values.extend(std::iter::repeat_n(v, d.n_xi + 1));
        }
        ValueSurface {
            k: d.n_t,
            n_x: d.n_x,
            n_xi: d.n_xi,
            values,
        }
    }

    /// `(Lbar^l phi_k)(cell) + fbar^{l,k}(cell)`.
    pub fn continuation_value(
        &self,
        phi_k: &ValueSurface,
        phi_k1: &ValueSurface,
        i_x: usize,
        i_xi: usize,
        l: usize,
    ) -> f64 {
        continuation_h(self, &phi_k.values, &phi_k1.values, i_x, i_xi, l)
    }

    /// `phi_k(i_x - z, i_xi + steps(z)) - x Γ(z)`.
    pub fn intervention_value(
        &self,
        phi_k: &ValueSurface,
        i_x: usize,
        i_xi: usize,
        zeta: usize,
    ) -> Result<f64, SolveError> {
        if zeta > i_x || zeta == 0 {
            return Err(SolveError::VolumeExceedsInventory {
                volume: zeta,
                inventory: i_x,
            });
        }
        Ok(intervention(&self.disc, &phi_k.values, i_x, i_xi, zeta).0)
    }

    /// Solves one time step from the surface at `k + 1`.
    pub fn solve_timestep(
        &self,
        phi_k1: &ValueSurface,
        k: usize,
    ) -> Result<StepSolution, SolveError> {
        let (values, actions, deltas, _) = match self.options.sweep {
            Sweep::GaussSeidel => self.gauss_seidel(&phi_k1.values, k)?,
            Sweep::Jacobi => self.jacobi(&phi_k1.values, k)?,
        };
        Ok(StepSolution {
            surface: ValueSurface {
                k,
                n_x: self.disc.n_x,
                n_xi: self.disc.n_xi,
                values,
            },
            actions,
            iterations: deltas.len(),
            deltas,
        })
    }

    /// Backward induction from the terminal surface to `k = 0`.
    pub fn solve(&self) -> Result<Solution, SolveError> {
        let d = &self.disc;
        let mut policy = PolicyGrid::new(d, self.options.time_stride);
        let mut diagnostics = Diagnostics {
            iterations: vec![0; d.n_t],
            ..Diagnostics::default()
        };
        let mut kept = self.options.keep_surfaces.then(Vec::new);
        let mut next = self.terminal_surface();
        for k in (0..d.n_t).rev() {
            let (values, actions, deltas, clamped) = match self.options.sweep {
                Sweep::GaussSeidel => self.gauss_seidel(&next.values, k)?,
                Sweep::Jacobi => self.jacobi(&next.values, k)?,
            };
            let residual = deltas.last().copied().unwrap_or(0.0);
            debug!("step {k}: {} sweeps, residual {residual:e}", deltas.len());
            diagnostics.iterations[k] = deltas.len() as u32;
            diagnostics.max_residual = diagnostics.max_residual.max(residual);
            diagnostics.clamped_targets += clamped;
            policy.set_slice(k, &actions);
            let current = ValueSurface {
                k,
                n_x: d.n_x,
                n_xi: d.n_xi,
                values,
            };
            let done = std::mem::replace(&mut next, current);
            if let Some(v) = kept.as_mut() {
                v.push(done);
            }
        }
        if diagnostics.clamped_targets > 0 {
            warn!(
                "{} market-order targets on reachable cells were clamped to xi_max; the solution is approximate there",
                diagnostics.clamped_targets
            );
        }
        let surfaces = kept.map(|mut v| {
            v.push(next.clone());
            v.reverse();
            v
        });
        Ok(Solution {
            disc: d.clone(),
            h: self.h,
            policy,
            phi0: next,
            surfaces,
            diagnostics,
        })
    }

    fn gauss_seidel(&self, next: &[f64], k: usize) -> Result<SweepOutput, SolveError> {
        let d = &self.disc;
        let mut cur = next.to_vec();
        let mut actions = vec![0i16; d.n_cells()];
        let mut deltas = Vec::new();
        loop {
            let mut delta: f64 = 0.0;
            let mut clamped = 0;
            for i_x in 0..=d.n_x {
                for i_xi in 0..=d.n_xi {
                    let c = d.cell(i_x, i_xi);
                    let (v, a, cl) = local_solve(self, &cur, next, i_x, i_xi);
                    if cl && d.reachable(i_x, i_xi) {
                        clamped += 1;
                    }
                    delta = delta.max((v - cur[c]).abs());
                    cur[c] = v;
                    actions[c] = a;
                }
            }
            deltas.push(delta);
            if delta < self.options.tol {
                return Ok((cur, actions, deltas, clamped));
            }
            if deltas.len() >= self.options.max_iter {
                return Err(SolveError::NonConvergence {
                    step: k,
                    iterations: deltas.len(),
                    residual: delta,
                });
            }
        }
    }

    fn jacobi(&self, next: &[f64], k: usize) -> Result<SweepOutput, SolveError> {
        let d = &self.disc;
        let width = d.n_xi + 1;
        let mut cur = next.to_vec();
        let mut new = vec![0.0; d.n_cells()];
        let mut actions = vec![0i16; d.n_cells()];
        let mut deltas = Vec::new();
        loop {
            new.par_chunks_mut(width)
                .zip(actions.par_chunks_mut(width))
                .enumerate()
                .for_each(|(i_x, (row, acts))| {
                    for (i_xi, (slot, act)) in row.iter_mut().zip(acts.iter_mut()).enumerate() {
                        let (v, a, _) = jacobi_cell(self, &cur, next, i_x, i_xi);
                        *slot = v;
                        *act = a;
                    }
                });
            let delta = new
                .iter()
                .zip(&cur)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            std::mem::swap(&mut cur, &mut new);
            deltas.push(delta);
            if delta < self.options.tol {
                break;
            }
            if deltas.len() >= self.options.max_iter {
                return Err(SolveError::NonConvergence {
                    step: k,
                    iterations: deltas.len(),
                    residual: delta,
                });
            }
        }
        // actions were taken against the previous iterate; re-read them at the fixed point
        let mut clamped = 0;
        for i_x in 0..=d.n_x {
            for i_xi in 0..=d.n_xi {
                let (_, a, cl) = jacobi_cell(self, &cur, next, i_x, i_xi);
                actions[d.cell(i_x, i_xi)] = a;
                if cl && d.reachable(i_x, i_xi) {
                    clamped += 1;
                }
            }
        }
        Ok((cur, actions, deltas, clamped))
    }
}

type SweepOutput = (Vec<f64>, Vec<i16>, Vec<f64>, u64);

/// Relative margin a later candidate must clear to displace the current
/// best. Only roundoff-level ties fall back to the earlier action.
const TIE_MARGIN: f64 = 64.0 * f64::EPSILON;

#[inline]
fn improves(candidate: f64, best: f64) -> bool {
    candidate > best + TIE_MARGIN * best.abs().max(1.0)
}

#[inline]
fn intervention(d: &Discretization, phi: &[f64], i_x: usize, i_xi: usize, z: usize) -> (f64, bool) {
    let (target, clamped) = d.impact_after_sale(i_xi, z);
    (
        phi[d.cell(i_x - z, target)] - d.x_at(i_x) * d.impact_of(z),
        clamped,
    )
}

/// Best market sale at a cell, scanning `z = 1..=i_x`.
#[inline]
fn best_intervention(d: &Discretization, phi: &[f64], i_x: usize, i_xi: usize) -> Option<(f64, usize, bool)> {
    let mut best: Option<(f64, usize, bool)> = None;
    for z in 1..=i_x {
        let (v, cl) = intervention(d, phi, i_x, i_xi, z);
        match best {
            Some((b, _, _)) if !improves(v, b) => {}
            _ => best = Some((v, z, cl)),
        }
    }
    best
}

fn continuation_h(s: &Solver, phi: &[f64], next: &[f64], i_x: usize, i_xi: usize, l: usize) -> f64 {
    let d = &s.disc;
    let w = s.row_weights(i_xi, l);
    let c = d.cell(i_x, i_xi);
    let lam = s.intensity[i_xi];
    let mut v = w.diagonal * phi[c];
    if i_xi > 0 {
        v += w.recovery * phi[c - 1];
    }
    if l > 0 {
        v += w.limit * phi[d.cell(i_x - l, i_xi)];
    }
    let x = d.x_at(i_x);
    let fbar = (next[c] / d.delta_t
        + lam * x * d.delta_xi
        + s.params.lambda_l * l as f64 * d.delta_x * s.params.spread)
        / s.h.h;
    v + fbar
}

/// One application of the fixed-point map at a cell, with the maximizing
/// action (ties go to wait, then small quotes, then small sales).
fn jacobi_cell(s: &Solver, phi: &[f64], next: &[f64], i_x: usize, i_xi: usize) -> (f64, i16, bool) {
    let mut best = continuation_h(s, phi, next, i_x, i_xi, 0);
    let mut action = 0i16;
    let l_top = s.disc.l_max_steps.min(i_x);
    for l in 1..=l_top {
        let v = continuation_h(s, phi, next, i_x, i_xi, l);
        if improves(v, best) {
            best = v;
            action = l as i16;
        }
    }
    let mut clamped = false;
    if let Some((v, z, cl)) = best_intervention(&s.disc, phi, i_x, i_xi) {
        clamped = cl;
        if improves(v, best) {
            best = v;
            action = Action::MarketSell(z as u16).encode();
        }
    }
    (best, action, clamped)
}

/// Exact solution of a single cell's equation given its neighbours.
///
/// For a continuation branch the map is `c phi + b` with `c < 1`, whose
/// fixed point `b / (1 - c)` does not depend on `h`; the cell value is the
/// larger of that and the best sale.
fn local_solve(s: &Solver, phi: &[f64], next: &[f64], i_x: usize, i_xi: usize) -> (f64, i16, bool) {
    let d = &s.disc;
    let c = d.cell(i_x, i_xi);
    let lam = s.intensity[i_xi];
    let ll = s.params.lambda_l;
    let inv_dt = 1.0 / d.delta_t;
    let x = d.x_at(i_x);

    let mut num = next[c] * inv_dt;
    let mut den = inv_dt;
    if lam > 0.0 {
        num += lam * (phi[c - 1] + x * d.delta_xi);
        den += lam;
    }
    let mut best = num / den;
    let mut action = 0i16;
    if ll > 0.0 {
        let l_top = d.l_max_steps.min(i_x);
        for l in 1..=l_top {
            let v = (num + ll * (phi[d.cell(i_x - l, i_xi)] + l as f64 * d.delta_x * s.params.spread))
                / (den + ll);
            if improves(v, best) {
                best = v;
                action = l as i16;
            }
        }
    }
    let mut clamped = false;
    if let Some((v, z, cl)) = best_intervention(d, phi, i_x, i_xi) {
        clamped = cl;
        if improves(v, best) {
            best = v;
            action = Action::MarketSell(z as u16).encode();
        }
    }
    (best, action, clamped)
}

/// Solves with default options.
pub fn solve(params: &ModelParams) -> Result<Solution, SolveError> {
    Solver::new(params, SolverOptions::default())?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RecoveryKind;

    fn small(kind: RecoveryKind) -> ModelParams {
        ModelParams {
            x0: 4.0,
            horizon: 0.02,
            recovery_kind: kind,
            ..ModelParams::default()
        }
    }

    #[test]
    fn h_examples() {
        let p = ModelParams {
            lambda_l: 0.1,
            ..ModelParams::default()
        };
        let d = Discretization::new(&p).unwrap();
        let h = compute_h(&p, &d, DEFAULT_INTENSITY_CAP, 1.001);
        assert!((h.bound - 1200.2).abs() < 1e-9);
        assert!((h.h - 1201.4002).abs() < 1e-9);

        let p = ModelParams {
            lambda_bar1: 0.0,
            lambda_l: 0.0,
            delta_t: 1.0,
            horizon: 1.0,
            ..ModelParams::default()
        };
        let d = Discretization::new(&p).unwrap();
        let h = compute_h(&p, &d, DEFAULT_INTENSITY_CAP, 1.001);
        assert_eq!(h.bound, 1.0);
        assert!((h.h - 1.001).abs() < 1e-15);
    }

    #[test]
    fn strong_intensity_is_capped_in_h() {
        let p = ModelParams {
            recovery_kind: RecoveryKind::Strong,
            ..ModelParams::default()
        };
        let d = Discretization::new(&p).unwrap();
        let h = compute_h(&p, &d, DEFAULT_INTENSITY_CAP, 1.001);
        assert!(h.h.is_finite());
        assert!((h.bound - (1000.0 + 2e12)).abs() < 1.0);
    }

    #[test]
    fn rows_are_contractions() {
        for kind in [RecoveryKind::Strong, RecoveryKind::Weak] {
            let p = ModelParams {
                lambda_l: 0.1,
                l_max: 3.0,
                ..small(kind)
            };
            let s = Solver::new(&p, SolverOptions::default()).unwrap();
            s.check_contraction().unwrap();
            let w = s.row_weights(0, 0);
            assert_eq!(w.recovery, 0.0);
        }
    }

    #[test]
    fn terminal_surface_is_flat_in_xi() {
        let s = Solver::new(&small(RecoveryKind::Weak), SolverOptions::default()).unwrap();
        let t = s.terminal_surface();
        for i_x in 0..=4 {
            for i_xi in 0..=8 {
                assert_eq!(t.get(i_x, i_xi), -(i_x as f64) * 2.0 * i_x as f64);
            }
        }
    }

    #[test]
    fn quote_zero_continuation_is_pure_wait() {
        let p = ModelParams {
            lambda_l: 0.1,
            l_max: 3.0,
            ..small(RecoveryKind::Weak)
        };
        let s = Solver::new(&p, SolverOptions::default()).unwrap();
        let d = s.discretization();
        let phi = ValueSurface::from_values(
            0,
            d.n_x,
            d.n_xi,
            (0..d.n_cells()).map(|i| -(i as f64) * 0.37).collect(),
        )
        .unwrap();
        let next = s.terminal_surface();
        let (i_x, i_xi) = (3, 2);
        let lam = s.intensity(i_xi);
        let h = s.h().h;
        let c = phi.get(i_x, i_xi);
        let expected = (1.0 - (1000.0 + lam) / h) * c
            + lam / h * phi.get(i_x, i_xi - 1)
            + (next.get(i_x, i_xi) / 0.001 + lam * 3.0) / h;
        let got = s.continuation_value(&phi, &next, i_x, i_xi, 0);
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn constant_is_fixed_at_zero_impact() {
        let s = Solver::new(&small(RecoveryKind::Weak), SolverOptions::default()).unwrap();
        let d = s.discretization();
        let c = -17.25;
        let phi = ValueSurface::constant(d, 0, c);
        let v = s.continuation_value(&phi, &phi, 2, 0, 0);
        assert!((v - c).abs() < 1e-12);
    }

    #[test]
    fn intervention_sell_everything() {
        let p = ModelParams {
            x0: 1.0,
            horizon: 0.001,
            ..ModelParams::default()
        };
        let s = Solver::new(&p, SolverOptions::default()).unwrap();
        let phi = ValueSurface::constant(s.discretization(), 0, 0.0);
        assert_eq!(s.intervention_value(&phi, 1, 0, 1).unwrap(), -2.0);
        assert!(s.intervention_value(&phi, 1, 0, 2).is_err());
    }

    #[test]
    fn full_sale_lands_on_grid_top() {
        let d = Discretization::new(&ModelParams::default()).unwrap();
        assert_eq!(d.impact_after_sale(0, d.n_x), (d.n_xi, false));
    }

    #[test]
    fn one_cell_fixed_point() {
        // x = 1, xi = 0, no fills: waiting keeps -2 and selling costs Γ(1) = 2.
        let p = ModelParams {
            x0: 1.0,
            horizon: 0.001,
            ..ModelParams::default()
        };
        for sweep in [Sweep::GaussSeidel, Sweep::Jacobi] {
            let s = Solver::new(
                &p,
                SolverOptions {
                    sweep,
                    ..SolverOptions::default()
                },
            )
            .unwrap();
            let step = s.solve_timestep(&s.terminal_surface(), 0).unwrap();
            assert!((step.surface.get(1, 0) + 2.0).abs() < 1e-9);
            assert_eq!(Action::decode(step.actions[s.discretization().cell(1, 0)]), Action::Wait);
        }
    }

    #[test]
    fn jacobi_from_zero_reaches_scalar_fixed_point() {
        let p = ModelParams {
            x0: 1.0,
            horizon: 0.001,
            ..ModelParams::default()
        };
        let s = Solver::new(
            &p,
            SolverOptions {
                sweep: Sweep::Jacobi,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        let d = s.discretization();
        let next = s.terminal_surface();
        let mut phi = ValueSurface::constant(d, 0, 0.0);
        for _ in 0..200 {
            let cont = s.continuation_value(&phi, &next, 1, 0, 0);
            let sell = s.intervention_value(&phi, 1, 0, 1).unwrap();
            let mut vals = phi.values().to_vec();
            vals[d.cell(1, 0)] = cont.max(sell);
            phi = ValueSurface::from_values(0, d.n_x, d.n_xi, vals).unwrap();
        }
        assert!((phi.get(1, 0) + 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_inventory_row_is_zero() {
        let s = Solver::new(&small(RecoveryKind::Weak), SolverOptions::default()).unwrap();
        let step = s.solve_timestep(&s.terminal_surface(), s.discretization().n_t - 1).unwrap();
        for i_xi in 0..=s.discretization().n_xi {
            assert_eq!(step.surface.get(0, i_xi), 0.0);
            assert_eq!(step.actions[i_xi], 0);
        }
    }

    #[test]
    fn sweeps_agree() {
        for kind in [RecoveryKind::Weak, RecoveryKind::Strong] {
            let p = ModelParams {
                lambda_l: 0.1,
                l_max: 2.0,
                lambda_bar2: 0.3,
                ..small(kind)
            };
            let gs = Solver::new(&p, SolverOptions::default()).unwrap().solve().unwrap();
            let jac = Solver::new(
                &p,
                SolverOptions {
                    sweep: Sweep::Jacobi,
                    ..SolverOptions::default()
                },
            )
            .unwrap()
            .solve()
            .unwrap();
            for (a, b) in gs.phi0.values().iter().zip(jac.phi0.values()) {
                assert!((a - b).abs() < 1e-7, "{a} vs {b}");
            }
            assert!(gs.diagnostics.iterations.iter().all(|&n| n == 2));
        }
    }

    #[test]
    fn zero_impact_gives_zero_value() {
        let p = ModelParams {
            theta1: 0.0,
            horizon: 0.05,
            ..ModelParams::default()
        };
        let sol = Solver::new(
            &p,
            SolverOptions {
                keep_surfaces: true,
                ..SolverOptions::default()
            },
        )
        .unwrap()
        .solve()
        .unwrap();
        assert_eq!(sol.disc.n_xi, 0);
        for s in sol.surfaces.unwrap() {
            assert!(s.values().iter().all(|v| v.abs() < 1e-9));
        }
    }
}
