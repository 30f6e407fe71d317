//! Monte Carlo evaluation of a solved policy.
//!
//! Each step of length `δt` runs in a fixed order: market sales chosen by
//! the policy (re-reading the policy after each sale), a limit-order fill
//! draw, a recovery draw, then a lognormal price step. Events are
//! Bernoulli draws with probability `min(1, rate * δt)`. Every step draws
//! the same three variates whether or not they are used, so two runs with
//! the same seed stay paired across parameter changes.
//!
//! Cash is booked at the post-impact price for market sales
//! (`P - Ξ - Γ(ζ)`), at `P - Ξ + s` for limit fills, and the position left
//! at maturity is dumped at `P - Ξ - Γ(X)`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::SimError;
use crate::grid::Discretization;
use crate::params::ModelParams;
use crate::policy::{Action, PolicyGrid};
use crate::solver::DEFAULT_INTENSITY_CAP;

/// Action codes in exported path files.
pub mod codes {
    pub const WAIT: u8 = 0;
    pub const QUOTE_LIMIT: u8 = 1;
    pub const MARKET_SELL: u8 = 2;
    pub const TERMINAL_BLOCK: u8 = 3;
    /// Final state after the terminal block.
    pub const END: u8 = 4;
}

/// Independent stream for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Exact zero-drift lognormal step.
pub fn gbm_step<R: Rng + ?Sized>(price: f64, sigma: f64, delta_t: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    price * (-0.5 * sigma * sigma * delta_t + sigma * delta_t.sqrt() * z).exp()
}

/// `min(1, rate * δt)`.
pub fn event_probability(rate: f64, delta_t: f64) -> f64 {
    (rate * delta_t).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub k: usize,
    /// Inventory in lots.
    pub x: usize,
    /// Impact in lattice steps.
    pub xi: usize,
    pub price: f64,
    pub cash: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeKind {
    Market,
    LimitFill,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trade {
    pub k: usize,
    pub kind: TradeKind,
    /// Shares.
    pub volume: f64,
    pub price: f64,
}

/// One exported row: the state before an action and the action taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRow {
    pub k: usize,
    pub x: f64,
    pub xi: f64,
    pub price: f64,
    pub cash: f64,
    pub code: u8,
    pub volume: f64,
    pub fill: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path_index: u64,
    /// Empty unless step recording was requested.
    pub events: Vec<EventRow>,
    pub trades: Vec<Trade>,
    /// State at maturity before the terminal block.
    pub at_maturity: SimState,
    /// State after the terminal block.
    pub terminal: SimState,
    pub quote_steps: usize,
    pub fills: usize,
    pub recoveries: usize,
}

impl PathRecord {
    /// Cash recomputed from the trade log, in booking order.
    pub fn replay_cash(&self) -> f64 {
        self.trades
            .iter()
            .fold(0.0, |cash, t| cash + t.volume * t.price)
    }

    pub fn terminal_cash(&self) -> f64 {
        self.terminal.cash
    }

    /// Shares sold before the terminal block.
    pub fn sold_before_maturity(&self) -> f64 {
        self.trades
            .iter()
            .filter(|t| t.kind != TradeKind::Terminal)
            .map(|t| t.volume)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, delta_t: f64, mut out: W) -> io::Result<()> {
        writeln!(out, "k,t,X,Xi,P,Y,action_code,action_volume,fill_volume")?;
        for r in &self.events {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.k,
                r.k as f64 * delta_t,
                r.x,
                r.xi,
                r.price,
                r.cash,
                r.code,
                r.volume,
                r.fill
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub intensity_cap: f64,
    pub record_events: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            intensity_cap: DEFAULT_INTENSITY_CAP,
            record_events: false,
        }
    }
}

pub struct Simulator<'a> {
    params: &'a ModelParams,
    disc: &'a Discretization,
    policy: &'a PolicyGrid,
    options: SimOptions,
    recovery_prob: Vec<f64>,
    fill_prob: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        params: &'a ModelParams,
        disc: &'a Discretization,
        policy: &'a PolicyGrid,
        options: SimOptions,
    ) -> Result<Self, SimError> {
        let grid = (disc.n_t, disc.n_x, disc.n_xi);
        if policy.shape() != grid {
            return Err(SimError::GridMismatch {
                policy: policy.shape(),
                grid,
            });
        }
        let recovery_prob = (0..=disc.n_xi)
            .map(|i| {
                let rate = params
                    .recovery_intensity_unchecked(disc.xi_at(i))
                    .min(options.intensity_cap);
                event_probability(rate, disc.delta_t)
            })
            .collect();
        Ok(Simulator {
            params,
            disc,
            policy,
            options,
            recovery_prob,
            fill_prob: event_probability(params.lambda_l, disc.delta_t),
        })
    }

    pub fn initial_state(&self) -> SimState {
        SimState {
            k: 0,
            x: self.disc.n_x,
            xi: 0,
            price: self.params.p0,
            cash: 0.0,
        }
    }

    pub fn recovery_probability(&self, xi: usize) -> f64 {
        self.recovery_prob[xi]
    }

    pub fn fill_probability(&self) -> f64 {
        self.fill_prob
    }

    /// Draws one recovery Bernoulli at impact index `xi`.
    pub fn recovery_event<R: Rng + ?Sized>(&self, xi: usize, rng: &mut R) -> bool {
        let u: f64 = rng.random();
        u < self.recovery_prob[xi]
    }

    /// Draws one fill Bernoulli for a quote of `l` lots; never fills at 0.
    pub fn fill_event<R: Rng + ?Sized>(&self, l: usize, rng: &mut R) -> bool {
        let u: f64 = rng.random();
        l > 0 && u < self.fill_prob
    }

    /// Sells `zeta` lots at market and returns the booked trade.
    pub fn apply_market_order(&self, state: &mut SimState, zeta: usize) -> Result<Trade, SimError> {
        if zeta == 0 {
            return Err(SimError::ZeroVolume);
        }
        if zeta > state.x {
            return Err(SimError::OverSell {
                volume: zeta,
                inventory: state.x,
            });
        }
        let d = self.disc;
        let price = state.price - d.xi_at(state.xi) - d.impact_of(zeta);
        let volume = d.x_at(zeta);
        state.cash += volume * price;
        state.x -= zeta;
        state.xi = d.impact_after_sale(state.xi, zeta).0;
        Ok(Trade {
            k: state.k,
            kind: TradeKind::Market,
            volume,
            price,
        })
    }

    fn row(&self, s: &SimState, code: u8, volume: f64, fill: f64) -> EventRow {
        EventRow {
            k: s.k,
            x: self.disc.x_at(s.x),
            xi: self.disc.xi_at(s.xi),
            price: s.price,
            cash: s.cash,
            code,
            volume,
            fill,
        }
    }

    /// Runs path `index` of the batch seeded by `seed`.
    pub fn simulate_path(&self, seed: u64, index: u64) -> PathRecord {
        let mut rng = path_rng(seed, index);
        let mut rec = self.simulate_from(self.initial_state(), &mut rng);
        rec.path_index = index;
        rec
    }

    /// Runs from an arbitrary starting state to maturity.
    pub fn simulate_from<R: Rng + ?Sized>(&self, start: SimState, rng: &mut R) -> PathRecord {
        let d = self.disc;
        let p = self.params;
        let record = self.options.record_events;
        let mut s = start;
        let mut events = Vec::new();
        let mut trades = Vec::new();
        let (mut quote_steps, mut fills, mut recoveries) = (0, 0, 0);

        for k in start.k..d.n_t {
            s.k = k;
            let mut chained = 0;
            let mut action = self.policy.get(k, s.x, s.xi);
            while let Action::MarketSell(z) = action {
                if chained >= d.n_x || s.x == 0 {
                    break;
                }
                let z = (z as usize).min(s.x);
                if record {
                    events.push(self.row(&s, codes::MARKET_SELL, d.x_at(z), 0.0));
                }
                let trade = self
                    .apply_market_order(&mut s, z)
                    .expect("volume clamped to inventory");
                trades.push(trade);
                chained += 1;
                action = self.policy.get(k, s.x, s.xi);
            }
            let l = match action {
                Action::QuoteLimit(l) => (l as usize).min(s.x),
                _ => 0,
            };
            if l > 0 {
                quote_steps += 1;
            }
            let filled = self.fill_event(l, rng);
            if record {
                let code = if l > 0 { codes::QUOTE_LIMIT } else { codes::WAIT };
                let fill = if filled { d.x_at(l) } else { 0.0 };
                events.push(self.row(&s, code, d.x_at(l), fill));
            }
            if filled {
                let price = s.price - d.xi_at(s.xi) + p.spread;
                let volume = d.x_at(l);
                s.cash += volume * price;
                s.x -= l;
                fills += 1;
                trades.push(Trade {
                    k,
                    kind: TradeKind::LimitFill,
                    volume,
                    price,
                });
            }
            if self.recovery_event(s.xi, rng) {
                s.xi -= 1;
                recoveries += 1;
            }
            s.price = gbm_step(s.price, p.sigma, d.delta_t, rng);
        }

        s.k = d.n_t;
        let at_maturity = s;
        let volume = d.x_at(s.x);
        if record {
            events.push(self.row(&s, codes::TERMINAL_BLOCK, volume, 0.0));
        }
        if s.x > 0 {
            let price = s.price - d.xi_at(s.xi) - d.impact_of(s.x);
            s.cash += volume * price;
            s.x = 0;
            trades.push(Trade {
                k: d.n_t,
                kind: TradeKind::Terminal,
                volume,
                price,
            });
        }
        if record {
            events.push(self.row(&s, codes::END, 0.0, 0.0));
        }
        PathRecord {
            path_index: 0,
            events,
            trades,
            at_maturity,
            terminal: s,
            quote_steps,
            fills,
            recoveries,
        }
    }

    /// Paths `0..n_paths`, run in parallel, returned in index order.
    pub fn simulate_batch(&self, seed: u64, n_paths: usize) -> Vec<PathRecord> {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| self.simulate_path(seed, i))
            .collect()
    }
}
