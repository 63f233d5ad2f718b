//! Agent preferences in share space and the per-state demand problem.
//!
//! Agent `n` holding share `r` of market `(m, s)` enjoys the composite utility
//! `g(r) = u(d(r·Q))` where `u` is the exponential task utility and `d` the
//! certainty equivalent of the stochastic load. Each `g` is increasing and
//! strictly concave, so the demand problem
//!
//! `max Σ_m g_m(r_m)  s.t.  p·r ≤ p·w,  r ∈ [0, 1]^M`
//!
//! is a separable concave knapsack solved through its KKT conditions: bisection on the budget multiplier
//! outside, a safeguarded root search per task inside.

use crate::error::{Error, Result};
use crate::scenario::{ShareProfile, ValidatedScenario};

/// Width at which both bisections stop.
pub const BISECTION_TOLERANCE: f64 = 1e-12;
/// Iteration cap for each bisection.
pub const BISECTION_MAX_ITERS: usize = 200;

/// `ρ(1 − e^{−x/ρ})`.
pub fn task_utility(rho: f64, x: f64) -> Result<f64> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::parameter(format!(
            "rho must be strictly positive, got {rho}"
        )));
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::parameter(format!(
            "task load must be nonnegative, got {x}"
        )));
    }
    Ok(-rho * (-x / rho).exp_m1())
}

/// Value and derivative of agent `n`'s composite utility for share `r` of market `(m, s)`.
pub fn composite_share_utility(
    scn: &ValidatedScenario,
    n: usize,
    m: usize,
    s: usize,
    r: f64,
) -> (f64, f64) {
    scn.total_load(m, s)
        .utility_and_marginal(scn.rho(n, m, s), r)
}

/// Deterministic-equivalent utility of agent `n` in state `s` (ex-post value).
pub fn state_utility(scn: &ValidatedScenario, n: usize, s: usize, profile: &ShareProfile) -> f64 {
    (0..scn.n_tasks())
        .map(|m| composite_share_utility(scn, n, m, s, profile.get(n, m, s)).0)
        .sum()
}

/// Belief-weighted deterministic-equivalent utility of agent `n` (ex-ante value).
pub fn expected_utility(scn: &ValidatedScenario, n: usize, profile: &ShareProfile) -> f64 {
    (0..scn.n_states())
        .map(|s| scn.belief(n, s) * state_utility(scn, n, s, profile))
        .sum()
}

/// Optimal bundle of one agent in one state at given prices.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandResult {
    pub shares: Vec<f64>,
    /// Shadow price of the budget constraint.
    pub multiplier: f64,
    /// `p·w − p·r`.
    pub budget_slack: f64,
}

struct StateProblem<'a> {
    scn: &'a ValidatedScenario,
    agent: usize,
    state: usize,
    prices: &'a [f64],
    /// `(g′(0), g′(1))` per task.
    edges: Vec<(f64, f64)>,
}

impl<'a> StateProblem<'a> {
    fn new(scn: &'a ValidatedScenario, agent: usize, state: usize, prices: &'a [f64]) -> Self {
        let edges = (0..prices.len())
            .map(|m| {
                let load = scn.total_load(m, state);
                let rho = scn.rho(agent, m, state);
                (load.marginal(rho, 0.0), load.marginal(rho, 1.0))
            })
            .collect();
        Self {
            scn,
            agent,
            state,
            prices,
            edges,
        }
    }

    /// Share of task `m` satisfying the KKT condition for budget multiplier `mu`.
    ///
    /// `g′` is strictly decreasing, so the root of `g′(r) = μ p_m` is kept in a
    /// bisection bracket; Newton steps are taken whenever they land inside it.
    fn share_at(&self, m: usize, mu: f64) -> f64 {
        let target = mu * self.prices[m];
        let (at_zero, at_one) = self.edges[m];
        if at_zero <= target {
            return 0.0;
        }
        if at_one >= target {
            return 1.0;
        }
        let load = self.scn.total_load(m, self.state);
        let rho = self.scn.rho(self.agent, m, self.state);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut r = 0.5;
        for _ in 0..BISECTION_MAX_ITERS {
            let (dg, d2g) = load.marginal_and_curvature(rho, r);
            let f = dg - target;
            if f > 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            if hi - lo <= BISECTION_TOLERANCE || f == 0.0 {
                break;
            }
            let newton = r - f / d2g;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - r).abs() <= 0.25 * BISECTION_TOLERANCE {
                r = next;
                break;
            }
            r = next;
        }
        r
    }

    fn bundle(&self, mu: f64) -> Vec<f64> {
        (0..self.prices.len())
            .map(|m| self.share_at(m, mu))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves agent `n`'s demand problem in state `s`.
///
/// The outer bisection runs on the budget multiplier `μ`, whose cost
/// `p·r(μ)` is nonincreasing; the returned bundle is taken from the
/// affordable end of the final bracket.
pub fn demand(
    scn: &ValidatedScenario,
    n: usize,
    s: usize,
    prices: &[f64],
    endowment: &[f64],
) -> Result<DemandResult> {
    let m_count = scn.n_tasks();
    if prices.len() != m_count || endowment.len() != m_count {
        return Err(Error::parameter(
            "price and endowment vectors must have one entry per task",
        ));
    }
    if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::parameter(format!(
            "prices must be strictly positive, got {p}"
        )));
    }
    let budget = dot(prices, endowment);

    // A single good: the budget line is the endowment itself.
    if m_count == 1 {
        let r = endowment[0].min(1.0);
        let multiplier = if r < 1.0 {
            composite_share_utility(scn, n, 0, s, r).1 / prices[0]
        } else {
            0.0
        };
        return Ok(DemandResult {
            shares: vec![r],
            multiplier,
            budget_slack: budget - prices[0] * r,
        });
    }

    let full_cost: f64 = prices.iter().sum();
    if full_cost <= budget {
        return Ok(DemandResult {
            shares: vec![1.0; m_count],
            multiplier: 0.0,
            budget_slack: budget - full_cost,
        });
    }

    let problem = StateProblem::new(scn, n, s, prices);
    // At this multiplier every task's marginal at zero is priced out, so the bundle is empty.
    let mut hi = (0..m_count)
        .map(|m| problem.edges[m].0 / prices[m])
        .fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut converged = false;
    for _ in 0..BISECTION_MAX_ITERS {
        if hi - lo <= BISECTION_TOLERANCE {
            converged = true;
            break;
        }
        let mid = 0.5 * (lo + hi);
        if dot(prices, &problem.bundle(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !converged {
        return Err(Error::DemandNonConvergence { agent: n, state: s });
    }
    let shares = problem.bundle(hi);
    let budget_slack = budget - dot(prices, &shares);
    Ok(DemandResult {
        shares,
        multiplier: hi,
        budget_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{general_example, validate_scenario, AgentSpec, ArrivalSpec, Scenario};

    fn symmetric(tasks: usize) -> ValidatedScenario {
        let agent = AgentSpec {
            rho: vec![vec![0.8]; tasks],
            arrival: vec![vec![ArrivalSpec::Exponential { rate: 1.0 }]; tasks],
            beliefs: vec![1.0],
        };
        validate_scenario(Scenario {
            tasks,
            states: 1,
            seed: 0,
            agents: vec![agent.clone(), agent],
        })
        .unwrap()
    }

    #[test]
    fn task_utility_examples() {
        assert_eq!(task_utility(1.0, 0.0).unwrap(), 0.0);
        let a = task_utility(0.9, 1.0).unwrap();
        let b = task_utility(0.4, 1.0).unwrap();
        assert!((a - 0.603_726_310_973).abs() < 1e-9, "{a}");
        assert!((b - 0.367_166_000_550).abs() < 1e-9, "{b}");
        assert!(b < a);
        assert!(task_utility(-1.0, 1.0).is_err());
        assert!(task_utility(1.0, -0.1).is_err());
    }

    #[test]
    fn composite_single_contributor() {
        let agent = AgentSpec {
            rho: vec![vec![1.0]],
            arrival: vec![vec![ArrivalSpec::Exponential { rate: 1.0 }]],
            beliefs: vec![1.0],
        };
        let scn = validate_scenario(Scenario {
            tasks: 1,
            states: 1,
            seed: 0,
            agents: vec![agent],
        })
        .unwrap();
        let (g, _) = composite_share_utility(&scn, 0, 0, 0, 1.0);
        assert!((g - 0.5).abs() < 1e-15);
        let via_ce = task_utility(1.0, std::f64::consts::LN_2).unwrap();
        assert!((g - via_ce).abs() < 1e-15);
        let (g0, dg0) = composite_share_utility(&scn, 0, 0, 0, 0.0);
        assert_eq!(g0, 0.0);
        assert!((dg0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_good_demands_endowment() {
        let scn = symmetric(1);
        for (p, w) in [(0.3, 0.5), (7.0, 0.25), (1.0, 0.9)] {
            let d = demand(&scn, 0, 0, &[p], &[w]).unwrap();
            assert_eq!(d.shares, vec![w]);
        }
    }

    #[test]
    fn symmetric_tasks_split_evenly() {
        let scn = symmetric(2);
        let d = demand(&scn, 0, 0, &[1.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!(
            (d.shares[0] - 0.5).abs() < 1e-10 && (d.shares[1] - 0.5).abs() < 1e-10,
            "{d:?}"
        );
        assert!(d.budget_slack >= 0.0 && d.budget_slack < 1e-10);
    }

    #[test]
    fn kkt_and_complementary_slackness_on_general_example() {
        let scn = validate_scenario(general_example()).unwrap();
        let w = crate::scenario::endowment_shares(&scn).unwrap();
        let prices = [1.0, 1.7, 0.6];
        for n in 0..4 {
            for s in 0..3 {
                let d = demand(&scn, n, s, &prices, &w.agent_state(n, s)).unwrap();
                assert!(d.budget_slack >= -1e-9);
                assert!((d.multiplier * d.budget_slack).abs() <= 1e-8);
                for (m, &r) in d.shares.iter().enumerate() {
                    let dg = composite_share_utility(&scn, n, m, s, r).1;
                    let target = d.multiplier * prices[m];
                    if r > 1e-9 && r < 1.0 - 1e-9 {
                        assert!((dg - target).abs() < 1e-8, "interior KKT n={n} s={s} m={m}");
                    } else if r <= 1e-9 {
                        assert!(dg <= target + 1e-8);
                    } else {
                        assert!(dg >= target - 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_prices() {
        let scn = symmetric(2);
        assert!(demand(&scn, 0, 0, &[0.0, 1.0], &[0.5, 0.5]).is_err());
    }
}
