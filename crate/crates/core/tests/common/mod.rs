//! Test-only reference implementations, written without touching the
//! solver's grid, operators or h-scaling.

#![allow(dead_code)]

use execqvi::{ModelParams, RecoveryKind};

/// Raw per-step equation solved cell by cell with bisection:
///
/// max( (next - v)/dt + max_l λL [φ(x-l) - v + l s] + λ [φ(ξ-1) - v + x dΞ],
///      max_z φ(x-z, ξ+steps(z)) - x Γ(z) - v ) = 0
///
/// Cells are revisited in reverse order until nothing moves, so no
/// ordering of the dependency graph is assumed.
pub struct BellmanOracle {
    pub n_t: usize,
    pub n_x: usize,
    pub n_xi: usize,
    dt: f64,
    dx: f64,
    dxi: f64,
    spread: f64,
    lambda_l: f64,
    l_max: usize,
    gamma: Vec<f64>,
    steps: Vec<usize>,
    intensity: Vec<f64>,
}

impl BellmanOracle {
    pub fn new(p: &ModelParams, cap: f64) -> Self {
        let n_x = (p.x0 / p.delta_x).round() as usize;
        let n_t = (p.horizon / p.delta_t).round() as usize;
        let gamma: Vec<f64> = (0..=n_x)
            .map(|j| {
                let z = j as f64 * p.delta_x;
                if j == 0 { 0.0 } else { p.theta1 * z.powf(p.theta2) }
            })
            .collect();
        let steps: Vec<usize> = gamma
            .iter()
            .map(|g| {
                let r = g / p.delta_xi;
                if (r - r.round()).abs() < 1e-9 { r.round() as usize } else { r.ceil() as usize }
            })
            .collect();
        let n_xi = if p.theta2 >= 1.0 { steps[n_x] } else { n_x * steps[1] };
        let intensity = (0..=n_xi)
            .map(|i| {
                let xi = i as f64 * p.delta_xi;
                let raw = match p.recovery_kind {
                    RecoveryKind::Weak => p.lambda_bar1 * xi,
                    RecoveryKind::Strong => {
                        if p.lambda_bar1 == 0.0 { 0.0 } else { p.lambda_bar1 * ((p.lambda_bar2 * xi).exp() - 1.0) }
                    }
                };
                if raw.is_nan() || raw > cap { cap } else { raw }
            })
            .collect();
        BellmanOracle {
            n_t,
            n_x,
            n_xi,
            dt: p.delta_t,
            dx: p.delta_x,
            dxi: p.delta_xi,
            spread: p.spread,
            lambda_l: p.lambda_l,
            l_max: (p.l_max / p.delta_x).round() as usize,
            gamma,
            steps,
            intensity,
        }
    }

    fn at(&self, phi: &[f64], i_x: usize, i_xi: usize) -> f64 {
        phi[i_x * (self.n_xi + 1) + i_xi]
    }

    fn residual(&self, phi: &[f64], next: f64, i_x: usize, i_xi: usize, v: f64) -> f64 {
        let x = i_x as f64 * self.dx;
        let lam = self.intensity[i_xi];
        let mut limit_best: f64 = 0.0; // l = 0 contributes exactly zero
        for l in 1..=self.l_max.min(i_x) {
            let term = self.lambda_l * (self.at(phi, i_x - l, i_xi) - v + l as f64 * self.dx * self.spread);
            limit_best = limit_best.max(term);
        }
        let recovery = if i_xi > 0 {
            lam * (self.at(phi, i_x, i_xi - 1) - v + x * self.dxi)
        } else {
            0.0
        };
        let cont = (next - v) / self.dt + limit_best + recovery;
        let mut sell = f64::NEG_INFINITY;
        for z in 1..=i_x {
            let t = (i_xi + self.steps[z]).min(self.n_xi);
            sell = sell.max(self.at(phi, i_x - z, t) - x * self.gamma[z] - v);
        }
        cont.max(sell)
    }

    fn solve_cell(&self, phi: &[f64], next: f64, i_x: usize, i_xi: usize, guess: f64) -> f64 {
        let f = |v: f64| self.residual(phi, next, i_x, i_xi, v);
        let mut step = 1.0;
        let (mut lo, mut hi) = (guess - step, guess + step);
        while f(lo) <= 0.0 {
            step *= 2.0;
            lo = guess - step;
        }
        while f(hi) >= 0.0 {
            step *= 2.0;
            hi = guess + step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) > 0.0 { lo = mid } else { hi = mid }
        }
        0.5 * (lo + hi)
    }

    /// Surfaces for `k = 0..=n_t`, each inventory-major.
    pub fn solve(&self) -> Vec<Vec<f64>> {
        let w = self.n_xi + 1;
        let terminal: Vec<f64> = (0..=self.n_x)
            .flat_map(|i| {
                let x = i as f64 * self.dx;
                std::iter::repeat_n(-x * self.gamma[i], w)
            })
            .collect();
        let mut out = vec![terminal];
        for _ in 0..self.n_t {
            let next = out.last().unwrap().clone();
            let mut phi = next.clone();
            loop {
                let mut moved: f64 = 0.0;
                for i_x in (0..=self.n_x).rev() {
                    for i_xi in (0..=self.n_xi).rev() {
                        let c = i_x * w + i_xi;
                        let v = self.solve_cell(&phi, next[c], i_x, i_xi, phi[c]);
                        moved = moved.max((v - phi[c]).abs());
                        phi[c] = v;
                    }
                }
                if moved < 1e-11 {
                    break;
                }
            }
            out.push(phi);
        }
        out.reverse();
        out
    }
}

/// A small instance on the unit grids used across the test suites.
pub fn small(kind: RecoveryKind, x0: f64, horizon: f64) -> ModelParams {
    ModelParams {
        x0,
        horizon,
        recovery_kind: kind,
        ..ModelParams::default()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Largest cumulative impact reachable by any sequence of sales that
/// empties `lots`, enumerating every composition of the inventory.
pub fn brute_force_xi_max(p: &ModelParams, lots: usize) -> f64 {
    fn walk(p: &ModelParams, left: usize, acc: f64, best: &mut f64) {
        if left == 0 {
            *best = best.max(acc);
            return;
        }
        for z in 1..=left {
            let g = p.theta1 * (z as f64 * p.delta_x).powf(p.theta2);
            let snapped = (g / p.delta_xi - 1e-9).ceil() * p.delta_xi;
            walk(p, left - z, acc + snapped, best);
        }
    }
    let mut best = 0.0;
    walk(p, lots, 0.0, &mut best);
    best
}
