//! Reference allocations to compare the market outcome against, plus Monte
//! Carlo and welfare reporting.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{run_auction, AuctionConfig};
use crate::ce::sample_arrival;
use crate::error::{Error, Result};
use crate::matching::lexicographic_max_weight_assignment;
use crate::scenario::{ShareProfile, ValidatedScenario};
use crate::seed;
use crate::utility::{expected_utility, state_utility, task_utility};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Walrasian,
    WeightedMatching,
    Random,
    Equal,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Walrasian,
        Method::WeightedMatching,
        Method::Random,
        Method::Equal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Walrasian => "walrasian",
            Method::WeightedMatching => "weighted_matching",
            Method::Random => "random",
            Method::Equal => "equal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineAllocation {
    pub method: Method,
    pub shares: ShareProfile,
}

/// Whole-task assignment in one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Agent receiving each task.
    pub agents: Vec<usize>,
    /// Sum of the assigned performance indices.
    pub weight: f64,
}

/// Maximum-weight matching of tasks to distinct agents with edge weights `ρ_nm^(s)`.
/// Ties go to the lowest agent index, earliest task first.
pub fn weighted_matching_assignment(scn: &ValidatedScenario, s: usize) -> Result<Assignment> {
    let (tasks, agents) = (scn.n_tasks(), scn.n_agents());
    if tasks > agents {
        return Err(Error::MatchingUndefined { tasks, agents });
    }
    if s >= scn.n_states() {
        return Err(Error::parameter(format!("state {s} out of range")));
    }
    let weights: Vec<Vec<f64>> = (0..tasks)
        .map(|m| (0..agents).map(|n| scn.rho(n, m, s)).collect())
        .collect();
    let (agents, weight) = lexicographic_max_weight_assignment(&weights);
    Ok(Assignment { agents, weight })
}

/// Matching baseline in every state.
pub fn weighted_matching_allocation(scn: &ValidatedScenario) -> Result<BaselineAllocation> {
    let mut shares = ShareProfile::for_scenario(scn);
    for s in 0..scn.n_states() {
        let a = weighted_matching_assignment(scn, s)?;
        for (m, &n) in a.agents.iter().enumerate() {
            shares.set(n, m, s, 1.0);
        }
    }
    Ok(BaselineAllocation {
        method: Method::WeightedMatching,
        shares,
    })
}

/// Independent uniforms per market, normalized to sum to one.
pub fn random_allocation(scn: &ValidatedScenario, seed: u64) -> BaselineAllocation {
    let mut shares = ShareProfile::for_scenario(scn);
    for m in 0..scn.n_tasks() {
        for s in 0..scn.n_states() {
            let mut rng = seed::stream(seed, "random-allocation", &[m as u64, s as u64]);
            // Open interval keeps the total positive.
            let draws: Vec<f64> = (0..scn.n_agents())
                .map(|_| rng.random::<f64>() + f64::EPSILON)
                .collect();
            let total: f64 = draws.iter().sum();
            for (n, d) in draws.iter().enumerate() {
                shares.set(n, m, s, d / total);
            }
        }
    }
    BaselineAllocation {
        method: Method::Random,
        shares,
    }
}

pub fn equal_allocation(scn: &ValidatedScenario) -> BaselineAllocation {
    let n = scn.n_agents();
    BaselineAllocation {
        method: Method::Equal,
        shares: ShareProfile::filled(n, scn.n_tasks(), scn.n_states(), 1.0 / n as f64),
    }
}

/// Market allocation after the auction has settled.
pub fn walrasian_allocation(
    scn: &ValidatedScenario,
    cfg: &AuctionConfig,
) -> Result<BaselineAllocation> {
    let report = run_auction(scn, cfg)?;
    Ok(BaselineAllocation {
        method: Method::Walrasian,
        shares: report.allocation,
    })
}

pub fn allocation_for(
    scn: &ValidatedScenario,
    method: Method,
    cfg: &AuctionConfig,
    seed: u64,
) -> Result<BaselineAllocation> {
    match method {
        Method::Walrasian => walrasian_allocation(scn, cfg),
        Method::WeightedMatching => weighted_matching_allocation(scn),
        Method::Random => Ok(random_allocation(scn, seed)),
        Method::Equal => Ok(equal_allocation(scn)),
    }
}

/// Monte Carlo utility of one agent next to its certainty-equivalent prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedUtility {
    pub agent: usize,
    /// Belief-weighted mean of realized utility.
    pub mean: f64,
    pub std_error: f64,
    pub predicted: f64,
    /// Per-state mean of realized utility.
    pub state_means: Vec<f64>,
    /// Per-state certainty-equivalent prediction.
    pub state_predicted: Vec<f64>,
}

/// Draws per work unit; fixed so results do not depend on thread count.
pub const SIMULATION_CHUNK: usize = 4096;

/// Samples task loads, realizes every agent's utility per state, and compares
/// the belief-weighted average with the certainty-equivalent value.
pub fn simulate_realized_utilities(
    scn: &ValidatedScenario,
    shares: &ShareProfile,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<RealizedUtility>> {
    if n_draws == 0 {
        return Err(Error::parameter("draws must be at least 1"));
    }
    if shares.dims() != (scn.n_agents(), scn.n_tasks(), scn.n_states()) {
        return Err(Error::parameter(
            "share profile does not match the scenario",
        ));
    }
    let (agents, tasks, states) = shares.dims();
    let chunks = n_draws.div_ceil(SIMULATION_CHUNK);
    // [state][agent] -> (sum, sum of squares)
    let mut moments = vec![vec![(0.0, 0.0); agents]; states];
    for (s, state_moments) in moments.iter_mut().enumerate() {
        let arrivals: Vec<_> = (0..tasks).map(|m| scn.market_arrivals(m, s)).collect();
        let rho: Vec<Vec<f64>> = (0..agents)
            .map(|n| (0..tasks).map(|m| scn.rho(n, m, s)).collect())
            .collect();
        let partial: Vec<Vec<(f64, f64)>> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut rng = seed::stream(seed, "simulate", &[s as u64, k as u64]);
                let count = SIMULATION_CHUNK.min(n_draws - k * SIMULATION_CHUNK);
                let mut acc = vec![(0.0, 0.0); agents];
                let mut load = vec![0.0; tasks];
                for _ in 0..count {
                    for (m, specs) in arrivals.iter().enumerate() {
                        load[m] = specs.iter().map(|a| sample_arrival(a, &mut rng)).sum();
                    }
                    for (n, slot) in acc.iter_mut().enumerate() {
                        let u: f64 = (0..tasks)
                            .map(|m| {
                                task_utility(rho[n][m], shares.get(n, m, s) * load[m])
                                    .expect("validated parameters")
                            })
                            .sum();
                        slot.0 += u;
                        slot.1 += u * u;
                    }
                }
                acc
            })
            .collect();
        for chunk in partial {
            for (total, part) in state_moments.iter_mut().zip(chunk) {
                total.0 += part.0;
                total.1 += part.1;
            }
        }
    }

    let count = n_draws as f64;
    Ok((0..agents)
        .map(|n| {
            let state_means: Vec<f64> = (0..states).map(|s| moments[s][n].0 / count).collect();
            let variance = |s: usize| {
                let (sum, sq) = moments[s][n];
                if n_draws > 1 {
                    ((sq - sum * sum / count) / (count - 1.0)).max(0.0)
                } else {
                    0.0
                }
            };
            let beliefs = scn.beliefs(n);
            let mean = (0..states).map(|s| beliefs[s] * state_means[s]).sum();
            let std_error = (0..states)
                .map(|s| beliefs[s].powi(2) * variance(s) / count)
                .sum::<f64>()
                .sqrt();
            RealizedUtility {
                agent: n,
                mean,
                std_error,
                predicted: expected_utility(scn, n, shares),
                state_means,
                state_predicted: (0..states)
                    .map(|s| state_utility(scn, n, s, shares))
                    .collect(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareRow {
    pub method: Method,
    /// `Σ_n` expected utility.
    pub welfare: f64,
    pub per_agent: Vec<f64>,
    /// Sum of agents' deterministic-equivalent utilities in each state.
    pub per_state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareComparison {
    pub rows: Vec<WelfareRow>,
}

impl WelfareComparison {
    pub fn welfare(&self, method: Method) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method)
            .map(|r| r.welfare)
    }
}

pub fn welfare_report(
    scn: &ValidatedScenario,
    allocations: &[BaselineAllocation],
) -> Result<WelfareComparison> {
    let mut rows = Vec::with_capacity(allocations.len());
    for alloc in allocations {
        let shares = &alloc.shares;
        if shares.dims() != (scn.n_agents(), scn.n_tasks(), scn.n_states()) {
            return Err(Error::parameter(format!(
                "{} allocation does not match the scenario",
                alloc.method
            )));
        }
        let per_agent: Vec<f64> = (0..scn.n_agents())
            .map(|n| expected_utility(scn, n, shares))
            .collect();
        let per_state = (0..scn.n_states())
            .map(|s| {
                (0..scn.n_agents())
                    .map(|n| state_utility(scn, n, s, shares))
                    .sum()
            })
            .collect();
        rows.push(WelfareRow {
            method: alloc.method,
            welfare: per_agent.iter().sum(),
            per_agent,
            per_state,
        });
    }
    Ok(WelfareComparison { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub agent: usize,
    pub task: usize,
    pub state: usize,
    /// `ρ_nm^(s) / Σ_j ρ_jm^(s)`.
    pub relative_index: f64,
    pub share: f64,
}

pub fn efficiency_share_table(
    scn: &ValidatedScenario,
    shares: &ShareProfile,
) -> Vec<EfficiencyRow> {
    let mut rows = Vec::new();
    for s in 0..scn.n_states() {
        for m in 0..scn.n_tasks() {
            let total: f64 = (0..scn.n_agents()).map(|n| scn.rho(n, m, s)).sum();
            for n in 0..scn.n_agents() {
                rows.push(EfficiencyRow {
                    agent: n,
                    task: m,
                    state: s,
                    relative_index: scn.rho(n, m, s) / total,
                    share: shares.get(n, m, s),
                });
            }
        }
    }
    rows
}
