//! Optimal actions on the full (time, inventory, impact) grid.

use std::io::{self, Write};

use crate::grid::Discretization;

/// What to do in a cell. Volumes are in lots of `delta_x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Wait,
    QuoteLimit(u16),
    MarketSell(u16),
}

impl Action {
    /// Packed form: `0` wait, `+l` quote `l`, `-z` sell `z`.
    pub fn encode(self) -> i16 {
        match self {
            Action::Wait | Action::QuoteLimit(0) => 0,
            Action::QuoteLimit(l) => l as i16,
            Action::MarketSell(z) => -(z as i16),
        }
    }

    pub fn decode(code: i16) -> Self {
        match code {
            0 => Action::Wait,
            c if c > 0 => Action::QuoteLimit(c as u16),
            c => Action::MarketSell(c.unsigned_abs()),
        }
    }

    pub fn is_market_sell(self) -> bool {
        matches!(self, Action::MarketSell(_))
    }

    /// Short label used in CSV exports.
    pub fn label(self) -> &'static str {
        match self {
            Action::Wait | Action::QuoteLimit(0) => "wait",
            Action::QuoteLimit(_) => "limit",
            Action::MarketSell(_) => "market",
        }
    }

    pub fn volume(self) -> u16 {
        match self {
            Action::Wait => 0,
            Action::QuoteLimit(v) | Action::MarketSell(v) => v,
        }
    }
}

/// One packed action per cell for every stored time slice.
///
/// With `stride = m` only slices `k = 0, m, 2m, ...` are kept and a
/// lookup at `k` reads the nearest earlier stored slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyGrid {
    n_t: usize,
    n_x: usize,
    n_xi: usize,
    stride: usize,
    codes: Vec<i16>,
}

/// Largest inventory (in lots) whose actions fit the packed encoding.
pub const MAX_LOTS: usize = i16::MAX as usize;

impl PolicyGrid {
    /// All-`Wait` grid.
    pub fn new(disc: &Discretization, stride: usize) -> Self {
        let stride = stride.max(1);
        let slices = Self::slice_count(disc.n_t, stride);
        PolicyGrid {
            n_t: disc.n_t,
            n_x: disc.n_x,
            n_xi: disc.n_xi,
            stride,
            codes: vec![0; slices * disc.n_cells()],
        }
    }

    /// Wraps raw codes, checking the length against the declared shape.
    pub fn from_codes(
        shape: (usize, usize, usize),
        stride: usize,
        codes: Vec<i16>,
    ) -> Option<Self> {
        let (n_t, n_x, n_xi) = shape;
        let stride = stride.max(1);
        let expected = Self::slice_count(n_t, stride) * (n_x + 1) * (n_xi + 1);
        (codes.len() == expected).then_some(PolicyGrid {
            n_t,
            n_x,
            n_xi,
            stride,
            codes,
        })
    }

    fn slice_count(n_t: usize, stride: usize) -> usize {
        n_t.div_ceil(stride)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_t, self.n_x, self.n_xi)
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn codes(&self) -> &[i16] {
        &self.codes
    }

    fn cells(&self) -> usize {
        (self.n_x + 1) * (self.n_xi + 1)
    }

    /// Whether slice `k` is kept under the stride.
    pub fn stores(&self, k: usize) -> bool {
        k < self.n_t && k.is_multiple_of(self.stride)
    }

    fn slice_range(&self, k: usize) -> std::ops::Range<usize> {
        let s = k.min(self.n_t.saturating_sub(1)) / self.stride;
        let c = self.cells();
        s * c..(s + 1) * c
    }

    pub fn get(&self, k: usize, i_x: usize, i_xi: usize) -> Action {
        let range = self.slice_range(k);
        Action::decode(self.codes[range.start + i_x * (self.n_xi + 1) + i_xi])
    }

    /// Packed actions of the slice used at time index `k`.
    pub fn slice(&self, k: usize) -> &[i16] {
        let range = self.slice_range(k);
        &self.codes[range]
    }

    /// Stores a solved slice; ignored when the stride skips `k`.
    pub fn set_slice(&mut self, k: usize, actions: &[i16]) {
        if !self.stores(k) {
            return;
        }
        let range = self.slice_range(k);
        self.codes[range].copy_from_slice(actions);
    }

    pub fn set(&mut self, k: usize, i_x: usize, i_xi: usize, action: Action) {
        let range = self.slice_range(k);
        self.codes[range.start + i_x * (self.n_xi + 1) + i_xi] = action.encode();
    }

    /// Writes `x,xi,action,volume` rows for slice `k`, inventory outer,
    /// impact inner. Cells outside the reachable triangle are skipped.
    pub fn write_snapshot_csv<W: Write>(
        &self,
        disc: &Discretization,
        k: usize,
        mut out: W,
    ) -> io::Result<()> {
        writeln!(out, "x,xi,action,volume")?;
        for i_x in 0..=self.n_x {
            for i_xi in 0..=self.n_xi {
                if !disc.reachable(i_x, i_xi) {
                    continue;
                }
                let a = self.get(k, i_x, i_xi);
                writeln!(
                    out,
                    "{},{},{},{}",
                    disc.x_at(i_x),
                    disc.xi_at(i_xi),
                    a.label(),
                    a.volume() as f64 * disc.delta_x
                )?;
            }
        }
        Ok(())
    }
}
