//! The economy: agents, states, state-contingent tasks, efficiencies,
//! stochastic arrivals and beliefs, plus the share-space objects built on it.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ce::TotalLoad;
use crate::error::{Error, Result};

/// Belief rows closer than this to a unit sum are renormalized; farther rows are rejected.
pub const BELIEF_SUM_TOLERANCE: f64 = 1e-9;

/// Distribution of the initial load an agent receives for one state-contingent task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalSpec {
    Exponential { rate: f64 },
    Poisson { rate: f64 },
    NormalTruncatedAtZero { mean: f64, stddev: f64 },
    Deterministic { value: f64 },
}

impl ArrivalSpec {
    pub fn mean(&self) -> Option<f64> {
        match *self {
            ArrivalSpec::Exponential { rate } => Some(1.0 / rate),
            ArrivalSpec::Poisson { rate } => Some(rate),
            ArrivalSpec::Deterministic { value } => Some(value),
            // Needs the normal cdf; only used for diagnostics, so left open.
            ArrivalSpec::NormalTruncatedAtZero { .. } => None,
        }
    }

    pub(crate) fn check(&self) -> std::result::Result<(), String> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            ArrivalSpec::Exponential { rate } | ArrivalSpec::Poisson { rate } if !ok(rate) => Err(
                format!("rate must be strictly positive and finite, got {rate}"),
            ),
            ArrivalSpec::NormalTruncatedAtZero { mean, stddev } if !ok(mean) || !ok(stddev) => Err(
                format!("truncated normal needs mean > 0 and stddev > 0, got ({mean}, {stddev})"),
            ),
            ArrivalSpec::Deterministic { value } if !(value.is_finite() && value >= 0.0) => Err(
                format!("deterministic load must be finite and nonnegative, got {value}"),
            ),
            _ => Ok(()),
        }
    }

    /// Scenario arrivals must also put mass on positive loads.
    pub(crate) fn check_support(&self) -> std::result::Result<(), String> {
        self.check()?;
        match *self {
            ArrivalSpec::Deterministic { value } if value == 0.0 => {
                Err("arrival must have positive support mass (deterministic load of 0)".into())
            }
            _ => Ok(()),
        }
    }
}

/// One agent's parameters. `rho` and `arrival` are indexed `[task][state]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub rho: Vec<Vec<f64>>,
    pub arrival: Vec<Vec<ArrivalSpec>>,
    pub beliefs: Vec<f64>,
}

/// Raw, unvalidated scenario as read from a file or built in code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub tasks: usize,
    pub states: usize,
    #[serde(default)]
    pub seed: u64,
    pub agents: Vec<AgentSpec>,
}

impl Scenario {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    /// Parses the JSON scenario format; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A scenario whose invariants have been checked, with the per-market
/// total-load models prepared for utility evaluation.
#[derive(Debug, Clone)]
pub struct ValidatedScenario {
    raw: Scenario,
    loads: Vec<TotalLoad>,
}

impl ValidatedScenario {
    pub fn scenario(&self) -> &Scenario {
        &self.raw
    }

    pub fn n_agents(&self) -> usize {
        self.raw.agents.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.raw.tasks
    }

    pub fn n_states(&self) -> usize {
        self.raw.states
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    pub fn rho(&self, agent: usize, task: usize, state: usize) -> f64 {
        self.raw.agents[agent].rho[task][state]
    }

    pub fn arrival(&self, agent: usize, task: usize, state: usize) -> ArrivalSpec {
        self.raw.agents[agent].arrival[task][state]
    }

    pub fn belief(&self, agent: usize, state: usize) -> f64 {
        self.raw.agents[agent].beliefs[state]
    }

    pub fn beliefs(&self, agent: usize) -> &[f64] {
        &self.raw.agents[agent].beliefs
    }

    /// Model of `Q_m^(s)`, the sum of every agent's arrival for the market.
    pub fn total_load(&self, task: usize, state: usize) -> &TotalLoad {
        &self.loads[task * self.raw.states + state]
    }

    /// Arrivals of all agents for one market, in agent order.
    pub fn market_arrivals(&self, task: usize, state: usize) -> Vec<ArrivalSpec> {
        self.raw
            .agents
            .iter()
            .map(|a| a.arrival[task][state])
            .collect()
    }
}

/// Checks every invariant of the economy and returns the validated form.
///
/// Belief rows within [`BELIEF_SUM_TOLERANCE`] of a unit sum are rescaled to sum to one.
pub fn validate_scenario(raw: Scenario) -> Result<ValidatedScenario> {
    let mut raw = raw;
    let (m_count, s_count) = (raw.tasks, raw.states);
    if raw.agents.is_empty() {
        return Err(Error::validation("scenario needs at least one agent"));
    }
    if m_count == 0 {
        return Err(Error::validation("scenario needs at least one task"));
    }
    if s_count == 0 {
        return Err(Error::validation("scenario needs at least one state"));
    }
    for (n, agent) in raw.agents.iter_mut().enumerate() {
        if agent.rho.len() != m_count || agent.rho.iter().any(|row| row.len() != s_count) {
            return Err(Error::validation(format!(
                "agent {n}: rho must be a {m_count}x{s_count} task-by-state matrix"
            )));
        }
        if agent.arrival.len() != m_count || agent.arrival.iter().any(|row| row.len() != s_count) {
            return Err(Error::validation(format!(
                "agent {n}: arrival must be a {m_count}x{s_count} task-by-state matrix"
            )));
        }
        if agent.beliefs.len() != s_count {
            return Err(Error::validation(format!(
                "agent {n}: beliefs must have one entry per state ({s_count})"
            )));
        }
        for m in 0..m_count {
            for s in 0..s_count {
                let rho = agent.rho[m][s];
                if !(rho.is_finite() && rho > 0.0) {
                    return Err(Error::validation(format!(
                        "rho must be strictly positive and finite (agent {n}, task {m}, state {s}, got {rho})"
                    )));
                }
                agent.arrival[m][s].check_support().map_err(|msg| {
                    Error::validation(format!("agent {n}, task {m}, state {s}: {msg}"))
                })?;
            }
        }
        for (s, &b) in agent.beliefs.iter().enumerate() {
            if !(b.is_finite() && (0.0..=1.0).contains(&b)) {
                return Err(Error::validation(format!(
                    "belief must lie in [0, 1] (agent {n}, state {s}, got {b})"
                )));
            }
        }
        let sum: f64 = agent.beliefs.iter().sum();
        if (sum - 1.0).abs() > BELIEF_SUM_TOLERANCE {
            return Err(Error::validation(format!(
                "belief row must sum to 1 (agent {n}, sum {sum})"
            )));
        }
        if sum != 1.0 {
            agent.beliefs.iter_mut().for_each(|b| *b /= sum);
        }
    }

    let mut loads = Vec::with_capacity(m_count * s_count);
    for m in 0..m_count {
        for s in 0..s_count {
            let specs: Vec<ArrivalSpec> = raw.agents.iter().map(|a| a.arrival[m][s]).collect();
            loads.push(TotalLoad::new(&specs, raw.seed, &[m as u64, s as u64]));
        }
    }
    Ok(ValidatedScenario { raw, loads })
}

/// `r[n][m][s]`: fraction of the total load `Q_m^(s)` performed by agent `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareProfile {
    agents: usize,
    tasks: usize,
    states: usize,
    data: Vec<f64>,
}

impl ShareProfile {
    pub fn zeros(agents: usize, tasks: usize, states: usize) -> Self {
        Self::filled(agents, tasks, states, 0.0)
    }

    pub fn filled(agents: usize, tasks: usize, states: usize, value: f64) -> Self {
        Self {
            agents,
            tasks,
            states,
            data: vec![value; agents * tasks * states],
        }
    }

    pub fn for_scenario(scn: &ValidatedScenario) -> Self {
        Self::zeros(scn.n_agents(), scn.n_tasks(), scn.n_states())
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.agents, self.tasks, self.states)
    }

    fn idx(&self, n: usize, m: usize, s: usize) -> usize {
        debug_assert!(n < self.agents && m < self.tasks && s < self.states);
        (n * self.tasks + m) * self.states + s
    }

    pub fn get(&self, n: usize, m: usize, s: usize) -> f64 {
        self.data[self.idx(n, m, s)]
    }

    pub fn set(&mut self, n: usize, m: usize, s: usize, value: f64) {
        let i = self.idx(n, m, s);
        self.data[i] = value;
    }

    /// Shares of one agent in one state, indexed by task.
    pub fn agent_state(&self, n: usize, s: usize) -> Vec<f64> {
        (0..self.tasks).map(|m| self.get(n, m, s)).collect()
    }

    pub fn set_agent_state(&mut self, n: usize, s: usize, shares: &[f64]) {
        for (m, &r) in shares.iter().enumerate() {
            self.set(n, m, s, r);
        }
    }

    /// `Σ_n r[n][m][s]`, summed in agent order.
    pub fn column_sum(&self, m: usize, s: usize) -> f64 {
        (0..self.agents).map(|n| self.get(n, m, s)).sum()
    }

    /// Largest `|Σ_n r[n][m][s] − 1|` over all markets.
    pub fn max_clearing_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.tasks {
            for s in 0..self.states {
                worst = worst.max((self.column_sum(m, s) - 1.0).abs());
            }
        }
        worst
    }

    pub fn is_market_clearing(&self, tol: f64) -> bool {
        self.data.iter().all(|&r| (-tol..=1.0 + tol).contains(&r))
            && self.max_clearing_error() <= tol
    }

    /// Rescales every market column to sum to exactly one (up to rounding).
    pub fn normalized_columns(&self) -> Self {
        let mut out = self.clone();
        for m in 0..self.tasks {
            for s in 0..self.states {
                let total = self.column_sum(m, s);
                if total > 0.0 {
                    for n in 0..self.agents {
                        out.set(n, m, s, self.get(n, m, s) / total);
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims(), "profile dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Virtual prices `p[m][s]`, strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSystem {
    tasks: usize,
    states: usize,
    data: Vec<f64>,
}

impl PriceSystem {
    pub fn uniform(tasks: usize, states: usize, value: f64) -> Self {
        Self {
            tasks,
            states,
            data: vec![value; tasks * states],
        }
    }

    /// Builds from a `[task][state]` matrix; every entry must be positive and finite.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let tasks = matrix.len();
        let states = matrix.first().map_or(0, Vec::len);
        if tasks == 0 || states == 0 || matrix.iter().any(|row| row.len() != states) {
            return Err(Error::parameter(
                "price matrix must be a nonempty rectangle",
            ));
        }
        let data: Vec<f64> = matrix.iter().flatten().copied().collect();
        if let Some(p) = data.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::parameter(format!(
                "prices must be strictly positive, got {p}"
            )));
        }
        Ok(Self {
            tasks,
            states,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.tasks, self.states)
    }

    pub fn get(&self, m: usize, s: usize) -> f64 {
        self.data[m * self.states + s]
    }

    pub fn set(&mut self, m: usize, s: usize, value: f64) {
        self.data[m * self.states + s] = value;
    }

    /// Price vector of one state, indexed by task.
    pub fn state(&self, s: usize) -> Vec<f64> {
        (0..self.tasks).map(|m| self.get(m, s)).collect()
    }

    /// Divides each state's prices by that state's first-task price.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for s in 0..self.states {
            let base = self.get(0, s);
            for m in 0..self.tasks {
                out.set(m, s, self.get(m, s) / base);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims(), "price dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// `w[n][m][s] = q_{nm,D}^(s) / Σ_j q_{jm,D}^(s)`: each agent's share of the
/// certainty-equivalent total endowment of every market.
#[derive(Debug, Clone, PartialEq)]
pub struct EndowmentShares(ShareProfile);

impl EndowmentShares {
    pub fn get(&self, n: usize, m: usize, s: usize) -> f64 {
        self.0.get(n, m, s)
    }

    pub fn agent_state(&self, n: usize, s: usize) -> Vec<f64> {
        self.0.agent_state(n, s)
    }

    pub fn as_profile(&self) -> &ShareProfile {
        &self.0
    }
}

/// Certainty-equivalent endowment shares, each agent's load valued with its own ρ.
pub fn endowment_shares(scn: &ValidatedScenario) -> Result<EndowmentShares> {
    endowment_shares_raw(scn.scenario())
}

pub(crate) fn endowment_shares_raw(raw: &Scenario) -> Result<EndowmentShares> {
    let (n_count, m_count, s_count) = (raw.agents.len(), raw.tasks, raw.states);
    let mut w = ShareProfile::zeros(n_count, m_count, s_count);
    for m in 0..m_count {
        for s in 0..s_count {
            let specs: Vec<ArrivalSpec> = raw.agents.iter().map(|a| a.arrival[m][s]).collect();
            let load = TotalLoad::new(&specs, raw.seed, &[m as u64, s as u64]);
            let own: Vec<f64> = (0..n_count)
                .map(|n| load.part_ce(n, raw.agents[n].rho[m][s], 1.0))
                .collect();
            let total: f64 = own.iter().sum();
            if !(total > 0.0) {
                return Err(Error::EmptyMarket { task: m, state: s });
            }
            for (n, q) in own.iter().enumerate() {
                w.set(n, m, s, q / total);
            }
        }
    }
    Ok(EndowmentShares(w))
}

/// Names of the scenarios that ship with the library.
pub const BUILTIN_SCENARIOS: [&str; 2] = ["general-example", "toy-sbs"];

/// Four agents, three tasks, three states; arrival rates `λ_nm^(s) = n`.
pub fn general_example() -> Scenario {
    // [state][task][agent]
    const RHO: [[[f64; 4]; 3]; 3] = [
        [
            [0.80, 0.34, 0.72, 0.42],
            [0.21, 0.68, 0.22, 0.78],
            [0.26, 0.19, 0.65, 0.71],
        ],
        [
            [0.90, 0.70, 0.74, 0.90],
            [0.89, 0.19, 0.50, 0.61],
            [0.33, 0.20, 0.48, 0.62],
        ],
        [
            [0.86, 0.21, 0.19, 0.98],
            [0.81, 0.24, 0.49, 0.71],
            [0.88, 0.89, 0.21, 0.50],
        ],
    ];
    const BELIEFS: [[f64; 3]; 4] = [
        [0.10, 0.30, 0.60],
        [0.20, 0.50, 0.30],
        [0.34, 0.33, 0.33],
        [0.90, 0.05, 0.05],
    ];
    let agents = (0..4)
        .map(|n| AgentSpec {
            rho: (0..3)
                .map(|m| (0..3).map(|s| RHO[s][m][n]).collect())
                .collect(),
            arrival: vec![
                vec![
                    ArrivalSpec::Exponential {
                        rate: (n + 1) as f64
                    };
                    3
                ];
                3
            ],
            beliefs: BELIEFS[n].to_vec(),
        })
        .collect();
    Scenario {
        tasks: 3,
        states: 3,
        seed: 1,
        agents,
    }
}

/// Two small base stations; task 0 is transmission, task 1 computation;
/// state 0 is sunny, state 1 windy.
pub fn toy_sbs() -> Scenario {
    let agent = |alpha: f64, compute: [f64; 2], beliefs: [f64; 2]| AgentSpec {
        rho: vec![vec![alpha, alpha], compute.to_vec()],
        arrival: vec![vec![ArrivalSpec::Exponential { rate: 1.0 }; 2]; 2],
        beliefs: beliefs.to_vec(),
    };
    Scenario {
        tasks: 2,
        states: 2,
        seed: 1,
        agents: vec![
            agent(0.9, [0.9, 0.1], [0.2, 0.8]),
            agent(0.7, [0.4, 0.6], [0.4, 0.6]),
        ],
    }
}

pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "general-example" => Some(general_example()),
        "toy-sbs" => Some(toy_sbs()),
        _ => None,
    }
}

/// Where a scenario came from; used in run manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    Builtin(String),
    File(String),
}

impl fmt::Display for ScenarioSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioSource::Builtin(name) => write!(f, "builtin:{name}"),
            ScenarioSource::File(path) => write!(f, "file:{path}"),
        }
    }
}

/// Resolves a built-in name or a path to a JSON file, then validates.
pub fn load_scenario(path_or_name: &str) -> Result<(ValidatedScenario, ScenarioSource)> {
    if let Some(raw) = builtin(path_or_name) {
        return Ok((
            validate_scenario(raw)?,
            ScenarioSource::Builtin(path_or_name.to_owned()),
        ));
    }
    let path = Path::new(path_or_name);
    if !path.exists() {
        return Err(Error::UnknownScenario(path_or_name.to_owned()));
    }
    let raw = Scenario::from_file(path)?;
    Ok((
        validate_scenario(raw)?,
        ScenarioSource::File(path_or_name.to_owned()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_agent(rate_b: f64) -> Scenario {
        let agent = |rate: f64| AgentSpec {
            rho: vec![vec![1.0]],
            arrival: vec![vec![ArrivalSpec::Exponential { rate }]],
            beliefs: vec![1.0],
        };
        Scenario {
            tasks: 1,
            states: 1,
            seed: 3,
            agents: vec![agent(1.0), agent(rate_b)],
        }
    }

    #[test]
    fn builtins_validate() {
        let g = validate_scenario(general_example()).unwrap();
        assert_eq!((g.n_agents(), g.n_tasks(), g.n_states()), (4, 3, 3));
        assert_eq!(g.rho(0, 0, 0), 0.80);
        assert_eq!(g.rho(3, 1, 0), 0.78);
        assert_eq!(g.rho(1, 2, 2), 0.89);
        assert_eq!(g.arrival(2, 1, 1), ArrivalSpec::Exponential { rate: 3.0 });
        assert_eq!(g.beliefs(3), &[0.90, 0.05, 0.05]);
        let t = validate_scenario(toy_sbs()).unwrap();
        assert_eq!(t.rho(0, 0, 1), 0.9);
        assert_eq!(t.rho(1, 0, 0), 0.7);
        assert_eq!(t.rho(0, 1, 1), 0.1);
        assert_eq!(t.rho(1, 1, 0), 0.4);
    }

    #[test]
    fn rejects_zero_rho() {
        let mut raw = general_example();
        raw.agents[0].rho[0][0] = 0.0;
        let err = validate_scenario(raw).unwrap_err().to_string();
        assert!(err.contains("rho must be strictly positive"), "{err}");
    }

    #[test]
    fn rejects_bad_belief_row() {
        let mut raw = toy_sbs();
        raw.agents[0].beliefs = vec![0.5, 0.6];
        let err = validate_scenario(raw).unwrap_err().to_string();
        assert!(err.contains("belief row must sum to 1"), "{err}");
    }

    #[test]
    fn renormalizes_nearly_unit_belief_rows() {
        let mut raw = toy_sbs();
        raw.agents[1].beliefs = vec![0.4 + 5e-10, 0.6];
        let v = validate_scenario(raw).unwrap();
        let sum: f64 = v.beliefs(1).iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_rate_and_zero_load() {
        let mut raw = toy_sbs();
        raw.agents[1].arrival[1][0] = ArrivalSpec::Exponential { rate: 0.0 };
        assert!(validate_scenario(raw)
            .unwrap_err()
            .to_string()
            .contains("rate"));
        let mut raw = toy_sbs();
        raw.agents[1].arrival[1][0] = ArrivalSpec::Deterministic { value: 0.0 };
        assert!(validate_scenario(raw)
            .unwrap_err()
            .to_string()
            .contains("positive support"));
    }

    #[test]
    fn rejects_ragged_matrices() {
        let mut raw = toy_sbs();
        raw.agents[0].rho[1].pop();
        assert!(validate_scenario(raw).is_err());
    }

    #[test]
    fn endowment_symmetric_and_sole_owner() {
        let w = endowment_shares(&validate_scenario(two_agent(1.0)).unwrap()).unwrap();
        assert_eq!(w.get(0, 0, 0), 0.5);
        assert_eq!(w.get(1, 0, 0), 0.5);

        let mut single = two_agent(1.0);
        single.agents.truncate(1);
        let w = endowment_shares(&validate_scenario(single).unwrap()).unwrap();
        assert_eq!(w.get(0, 0, 0), 1.0);
    }

    #[test]
    fn endowment_exponential_rates_one_and_two() {
        // q_D = ln 2 vs ln 1.5; frozen from the Monte Carlo check in tests/oracles.rs.
        let w = endowment_shares(&validate_scenario(two_agent(2.0)).unwrap()).unwrap();
        let expected = 2f64.ln() / (2f64.ln() + 1.5f64.ln());
        assert!((w.get(0, 0, 0) - expected).abs() < 1e-12);
        assert!((w.get(0, 0, 0) - 0.631).abs() < 1e-3);
        assert!((w.get(1, 0, 0) - 0.369).abs() < 1e-3);
    }

    #[test]
    fn empty_market_is_reported() {
        let mut raw = two_agent(1.0);
        for a in &mut raw.agents {
            a.arrival[0][0] = ArrivalSpec::Deterministic { value: 0.0 };
        }
        match endowment_shares_raw(&raw) {
            Err(Error::EmptyMarket { task: 0, state: 0 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let raw = general_example();
        let back = Scenario::from_json(&raw.to_json()).unwrap();
        assert_eq!(raw, back);

        let broken = raw
            .to_json()
            .replacen("\"rate\": 1.0", "\"rate\": \"fast\"", 1);
        let err = Scenario::from_json(&broken).unwrap_err().to_string();
        assert!(err.contains("agents[0].arrival[0][0]"), "{err}");
    }

    #[test]
    fn price_normalization_uses_first_task() {
        let p = PriceSystem::from_matrix(&[vec![2.0, 4.0], vec![1.0, 8.0]]).unwrap();
        let n = p.normalized();
        assert_eq!(n.state(0), vec![1.0, 0.5]);
        assert_eq!(n.state(1), vec![1.0, 2.0]);
        assert!(PriceSystem::from_matrix(&[vec![0.0]]).is_err());
    }
}
