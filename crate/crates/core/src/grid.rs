//! The (time, inventory, impact) lattice and its index maps.

use crate::error::ParamError;
use crate::params::ModelParams;

/// Ceil that forgives rounding noise, so `2.0000000000004` maps to 2.
pub(crate) fn ceil_index(value: f64, step: f64) -> usize {
    let r = value / step;
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        r.ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub n_t: usize,
    pub n_x: usize,
    pub n_xi: usize,
    pub xi_max: f64,
    pub delta_t: f64,
    pub delta_x: f64,
    pub delta_xi: f64,
    pub l_max_steps: usize,
    /// `impact[j] = Γ(j δx)` for `j in 0..=n_x`.
    impact: Vec<f64>,
    /// `impact_steps[j] = ceil(Γ(j δx) / δΞ)`.
    impact_steps: Vec<usize>,
    convex_impact: bool,
}

impl Discretization {
    /// Builds the grid. With `theta2 >= 1` the impact axis ends at `Γ(x0)`;
    /// with a concave impact the worst case is selling one lot at a time,
    /// so it ends at `n_x * ceil(Γ(δx) / δΞ)` lattice steps.
    pub fn new(params: &ModelParams) -> Result<Self, ParamError> {
        params.validate()?;
        let n_t = params.time_steps();
        let n_x = params.inventory_steps();
        let impact: Vec<f64> = (0..=n_x)
            .map(|j| params.impact_unchecked(j as f64 * params.delta_x))
            .collect();
        let impact_steps: Vec<usize> = impact
            .iter()
            .map(|&g| ceil_index(g, params.delta_xi))
            .collect();
        let convex_impact = params.theta2 >= 1.0;
        let n_xi = if convex_impact {
            impact_steps[n_x]
        } else {
            n_x * impact_steps[1]
        };
        Ok(Discretization {
            n_t,
            n_x,
            n_xi,
            xi_max: n_xi as f64 * params.delta_xi,
            delta_t: params.delta_t,
            delta_x: params.delta_x,
            delta_xi: params.delta_xi,
            l_max_steps: params.l_max_steps(),
            impact,
            impact_steps,
            convex_impact,
        })
    }

    pub fn x_at(&self, i_x: usize) -> f64 {
        i_x as f64 * self.delta_x
    }

    pub fn xi_at(&self, i_xi: usize) -> f64 {
        i_xi as f64 * self.delta_xi
    }

    pub fn t_at(&self, k: usize) -> f64 {
        k as f64 * self.delta_t
    }

    /// Cells per time slice.
    pub fn n_cells(&self) -> usize {
        (self.n_x + 1) * (self.n_xi + 1)
    }

    /// Flat index, inventory-major.
    #[inline]
    pub fn cell(&self, i_x: usize, i_xi: usize) -> usize {
        i_x * (self.n_xi + 1) + i_xi
    }

    /// `Γ` of a volume given in lots.
    #[inline]
    pub fn impact_of(&self, volume: usize) -> f64 {
        self.impact[volume]
    }

    /// Impact-lattice steps added by selling `volume` lots at once.
    #[inline]
    pub fn impact_steps_of(&self, volume: usize) -> usize {
        self.impact_steps[volume]
    }

    /// Landing impact index after a market sale, clamped to the grid top.
    /// The flag reports whether clamping happened.
    #[inline]
    pub fn impact_after_sale(&self, i_xi: usize, volume: usize) -> (usize, bool) {
        let target = i_xi + self.impact_steps[volume];
        if target > self.n_xi {
            (self.n_xi, true)
        } else {
            (target, false)
        }
    }

    /// Whether `(i_x, i_xi)` can be reached from `(n_x, 0)` when impact is
    /// convex: `ξ ≤ Γ(x0 - x)`. Always true for concave impact.
    pub fn reachable(&self, i_x: usize, i_xi: usize) -> bool {
        if !self.convex_impact {
            return true;
        }
        i_xi <= self.impact_steps[self.n_x - i_x]
    }

    pub fn convex_impact(&self) -> bool {
        self.convex_impact
    }

    /// Time index for `t`, if it lies on the grid.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        crate::params::integer_ratio(t, self.delta_t).filter(|&k| k <= self.n_t)
    }
}
