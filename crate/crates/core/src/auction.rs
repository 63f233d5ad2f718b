//! Walrasian auction: the auctioneer announces state-contingent prices, every
//! agent answers with its demand, and prices move with excess demand
//! `p ← p + α z(p)` until every market clears within `ε`.
//!
//! Rounds are synchronous. Within a round the `N × S` demand problems are
//! independent and may be evaluated in parallel; aggregation always sums in
//! agent order so reports are bitwise reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::{
    endowment_shares, EndowmentShares, PriceSystem, ShareProfile, ValidatedScenario,
};
use crate::utility::{demand, expected_utility};

/// Prices never fall below this after an update.
pub const PRICE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPrices {
    UniformOnes,
    /// `[task][state]` matrix.
    Given(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub initial_prices: InitialPrices,
    /// After the `ε` stop, rounds keep running until `max |z| ≤ settle_epsilon`
    /// so the agreed allocation is an equilibrium to solver precision.
    pub settle_epsilon: f64,
    pub settle_max_iters: usize,
    pub parallel: bool,
}

impl Default for AuctionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            epsilon: 0.01,
            max_iters: 100_000,
            initial_prices: InitialPrices::UniformOnes,
            settle_epsilon: 1e-10,
            settle_max_iters: 200_000,
            parallel: true,
        }
    }
}

impl AuctionConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        use crate::error::Error;
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::parameter("alpha must be positive"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::parameter("epsilon must be positive"));
        }
        if !(self.settle_epsilon.is_finite() && self.settle_epsilon > 0.0) {
            return Err(Error::parameter("settle epsilon must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::parameter("max iterations must be positive"));
        }
        Ok(())
    }
}

/// Aggregate demand minus supply (one unit per market) and the individual demands.
#[derive(Debug, Clone)]
pub struct ExcessDemand {
    /// `z[m][s]`, stored like a price system.
    pub z: Vec<f64>,
    pub demands: ShareProfile,
    tasks: usize,
    states: usize,
}

impl ExcessDemand {
    pub fn get(&self, m: usize, s: usize) -> f64 {
        self.z[m * self.states + s]
    }

    pub fn max_abs(&self) -> f64 {
        self.z.iter().fold(0.0, |a, z| a.max(z.abs()))
    }

    /// `p^(s) · z^(s)` for every state.
    pub fn walras_residuals(&self, prices: &PriceSystem) -> Vec<f64> {
        (0..self.states)
            .map(|s| {
                (0..self.tasks)
                    .map(|m| prices.get(m, s) * self.get(m, s))
                    .sum()
            })
            .collect()
    }
}

struct Market<'a> {
    scn: &'a ValidatedScenario,
    endowment: EndowmentShares,
    parallel: bool,
}

impl<'a> Market<'a> {
    fn new(scn: &'a ValidatedScenario, parallel: bool) -> Result<Self> {
        Ok(Self {
            scn,
            endowment: endowment_shares(scn)?,
            parallel,
        })
    }

    fn excess(&self, prices: &PriceSystem) -> Result<ExcessDemand> {
        let (n_count, m_count, s_count) =
            (self.scn.n_agents(), self.scn.n_tasks(), self.scn.n_states());
        let jobs: Vec<(usize, usize)> = (0..n_count)
            .flat_map(|n| (0..s_count).map(move |s| (n, s)))
            .collect();
        let solve = |&(n, s): &(usize, usize)| {
            demand(
                self.scn,
                n,
                s,
                &prices.state(s),
                &self.endowment.agent_state(n, s),
            )
        };
        let results: Vec<_> = if self.parallel {
            jobs.par_iter().map(solve).collect()
        } else {
            jobs.iter().map(solve).collect()
        };
        let mut demands = ShareProfile::for_scenario(self.scn);
        for (&(n, s), res) in jobs.iter().zip(results) {
            demands.set_agent_state(n, s, &res?.shares);
        }
        let mut z = Vec::with_capacity(m_count * s_count);
        for m in 0..m_count {
            for s in 0..s_count {
                z.push(demands.column_sum(m, s) - 1.0);
            }
        }
        Ok(ExcessDemand {
            z,
            demands,
            tasks: m_count,
            states: s_count,
        })
    }
}

/// Excess demand in share space at the given prices.
pub fn excess_demand(prices: &PriceSystem, scn: &ValidatedScenario) -> Result<ExcessDemand> {
    Market::new(scn, false)?.excess(prices)
}

/// `p + α z`, floored at [`PRICE_FLOOR`].
pub fn price_update(prices: &PriceSystem, z: &[f64], alpha: f64) -> PriceSystem {
    let (tasks, states) = prices.dims();
    let mut next = prices.clone();
    for m in 0..tasks {
        for s in 0..states {
            let p = prices.get(m, s) + alpha * z[m * states + s];
            next.set(m, s, p.max(PRICE_FLOOR));
        }
    }
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub max_abs_z: f64,
    /// Prices announced in this round, `[task][state]` flattened.
    pub prices: Vec<f64>,
    /// `p^(s)·z^(s)` per state.
    pub walras: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// Final prices, each state divided by its first-task price.
    pub prices: PriceSystem,
    pub raw_prices: PriceSystem,
    /// Demands announced in the round that met `ε`.
    pub shares: ShareProfile,
    /// Settled demands rescaled to clear every market exactly: the agreed allocation.
    pub allocation: ShareProfile,
    /// Price updates before `max |z| ≤ ε`.
    pub iterations: usize,
    pub converged: bool,
    pub settle_iterations: usize,
    pub settled: bool,
    pub final_max_abs_z: f64,
    pub trace: Vec<TraceRow>,
    /// Expected deterministic-equivalent utility of each agent under `allocation`.
    pub per_agent_expected_utility: Vec<f64>,
}

fn initial_prices(scn: &ValidatedScenario, cfg: &AuctionConfig) -> Result<PriceSystem> {
    match &cfg.initial_prices {
        InitialPrices::UniformOnes => Ok(PriceSystem::uniform(scn.n_tasks(), scn.n_states(), 1.0)),
        InitialPrices::Given(matrix) => {
            let p = PriceSystem::from_matrix(matrix)?;
            if p.dims() != (scn.n_tasks(), scn.n_states()) {
                return Err(crate::error::Error::parameter(
                    "initial prices must be a task-by-state matrix",
                ));
            }
            Ok(p)
        }
    }
}

/// Runs the auction to `ε`-clearing, then settles.
///
/// Hitting `max_iters` is not an error: the report comes back with
/// `converged = false` and the full trace.
pub fn run_auction(scn: &ValidatedScenario, cfg: &AuctionConfig) -> Result<EquilibriumReport> {
    cfg.validate()?;
    let market = Market::new(scn, cfg.parallel)?;
    let mut prices = initial_prices(scn, cfg)?;
    let mut trace = Vec::new();

    let mut iterations = 0;
    let mut ed = market.excess(&prices)?;
    let converged = loop {
        let max_abs_z = ed.max_abs();
        trace.push(TraceRow {
            iter: iterations,
            max_abs_z,
            prices: prices.values().to_vec(),
            walras: ed.walras_residuals(&prices),
        });
        if max_abs_z <= cfg.epsilon {
            break true;
        }
        if iterations >= cfg.max_iters {
            break false;
        }
        prices = price_update(&prices, &ed.z, cfg.alpha);
        ed = market.excess(&prices)?;
        iterations += 1;
    };
    let shares = ed.demands.clone();

    let mut settle_iterations = 0;
    let settled = converged
        && loop {
            if ed.max_abs() <= cfg.settle_epsilon {
                break true;
            }
            if settle_iterations >= cfg.settle_max_iters {
                break false;
            }
            prices = price_update(&prices, &ed.z, cfg.alpha);
            ed = market.excess(&prices)?;
            settle_iterations += 1;
        };

    let allocation = ed.demands.normalized_columns();
    let per_agent_expected_utility = (0..scn.n_agents())
        .map(|n| expected_utility(scn, n, &allocation))
        .collect();
    Ok(EquilibriumReport {
        prices: prices.normalized(),
        raw_prices: prices,
        shares,
        allocation,
        iterations,
        converged,
        settle_iterations,
        settled,
        final_max_abs_z: ed.max_abs(),
        trace,
        per_agent_expected_utility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{validate_scenario, AgentSpec, ArrivalSpec, Scenario};

    fn symmetric_pair() -> ValidatedScenario {
        let agent = AgentSpec {
            rho: vec![vec![0.6], vec![0.6]],
            arrival: vec![vec![ArrivalSpec::Exponential { rate: 2.0 }]; 2],
            beliefs: vec![1.0],
        };
        validate_scenario(Scenario {
            tasks: 2,
            states: 1,
            seed: 0,
            agents: vec![agent.clone(), agent],
        })
        .unwrap()
    }

    #[test]
    fn price_update_examples() {
        let p = PriceSystem::from_matrix(&[vec![1.0], vec![1.0]]).unwrap();
        let next = price_update(&p, &[0.5, -0.5], 0.01);
        assert!((next.get(0, 0) - 1.005).abs() < 1e-15);
        assert!((next.get(1, 0) - 0.995).abs() < 1e-15);
        assert_eq!(price_update(&p, &[0.0, 0.0], 0.01), p);
        let low = PriceSystem::from_matrix(&[vec![0.0001], vec![1.0]]).unwrap();
        let next = price_update(&low, &[-1.0, 0.0], 0.01);
        assert_eq!(next.get(0, 0), PRICE_FLOOR);
        assert_eq!(next.get(1, 0), 1.0);
    }

    #[test]
    fn symmetric_pair_clears_at_equal_prices() {
        let scn = symmetric_pair();
        let ed = excess_demand(&PriceSystem::uniform(2, 1, 1.0), &scn).unwrap();
        assert!(ed.max_abs() < 1e-10, "{:?}", ed.z);
    }

    #[test]
    fn single_agent_converges_immediately() {
        let mut raw = crate::scenario::general_example();
        raw.agents.truncate(1);
        let scn = validate_scenario(raw).unwrap();
        let rep = run_auction(&scn, &AuctionConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert!(rep.shares.values().iter().all(|&r| r == 1.0));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let scn = validate_scenario(crate::scenario::general_example()).unwrap();
        let cfg = AuctionConfig {
            max_iters: 3,
            ..AuctionConfig::default()
        };
        let rep = run_auction(&scn, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        assert_eq!(rep.trace.len(), 4);
    }

    #[test]
    fn config_validation() {
        let bad = AuctionConfig {
            alpha: -1.0,
            ..AuctionConfig::default()
        };
        assert!(bad
            .validate()
            .unwrap_err()
            .to_string()
            .contains("alpha must be positive"));
        let bad = AuctionConfig {
            epsilon: 0.0,
            ..AuctionConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
