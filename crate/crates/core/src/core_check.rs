//! Coalitional stability of an allocation: the strong sequential core.
//!
//! An allocation passes when it clears every market and no coalition can
//! redistribute its own endowment to improve on it, neither ex-ante (expected
//! utility, trades across states allowed) nor ex-post in any realized state.
//!
//! Each blocking question is a concave program over a product of scaled
//! simplices (one per market, holding the coalition's wealth). It is solved by
//! projected-gradient ascent on an augmented Lagrangian: a quadratic penalty on
//! the member floors plus multiplier updates, with several starts.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{endowment_shares, EndowmentShares, ShareProfile, ValidatedScenario};
use crate::seed;
use crate::utility::composite_share_utility;

/// Nonempty set of agents, bit `n` standing for agent `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coalition(u32);

impl Coalition {
    pub fn new(mask: u32) -> Result<Self> {
        if mask == 0 {
            return Err(Error::parameter("coalition must be nonempty"));
        }
        Ok(Self(mask))
    }

    pub fn singleton(agent: usize) -> Self {
        Self(1 << agent)
    }

    pub fn grand(agents: usize) -> Self {
        assert!((1..=31).contains(&agents), "coalitions hold 1 to 31 agents");
        Self(((1u64 << agents) - 1) as u32)
    }

    /// Every nonempty coalition of `agents` agents, in mask order.
    pub fn all(agents: usize) -> impl Iterator<Item = Coalition> {
        (1..=Self::grand(agents).0).map(Coalition)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn contains(self, agent: usize) -> bool {
        agent < 32 && self.0 & (1 << agent) != 0
    }

    pub fn members(self) -> Vec<usize> {
        (0..32).filter(|&n| self.contains(n)).collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.members().iter().map(|n| (n + 1).to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Which utility a blocking coalition compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Expected utility before the state is known.
    ExAnte,
    /// Deterministic-equivalent utility once state `s` is realized.
    ExPost(usize),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::ExAnte => write!(f, "ex-ante"),
            Mode::ExPost(s) => write!(f, "ex-post-s{}", s + 1),
        }
    }
}

/// `W_c[m][s] = Σ_{n∈c} w[n][m][s]`; the grand coalition owns exactly one unit of every market.
pub fn coalition_endowment(scn: &ValidatedScenario, c: Coalition) -> Result<Vec<Vec<f64>>> {
    check_coalition(scn, c)?;
    let w = endowment_shares(scn)?;
    Ok(wealth(scn, &w, c))
}

fn wealth(scn: &ValidatedScenario, w: &EndowmentShares, c: Coalition) -> Vec<Vec<f64>> {
    let grand = c == Coalition::grand(scn.n_agents());
    let members = c.members();
    (0..scn.n_tasks())
        .map(|m| {
            (0..scn.n_states())
                .map(|s| {
                    if grand {
                        1.0
                    } else {
                        members.iter().map(|&n| w.get(n, m, s)).sum()
                    }
                })
                .collect()
        })
        .collect()
}

fn check_coalition(scn: &ValidatedScenario, c: Coalition) -> Result<()> {
    if c.is_empty() || c.members().iter().any(|&n| n >= scn.n_agents()) {
        return Err(Error::parameter(format!(
            "coalition {c} is not a nonempty set of scenario agents"
        )));
    }
    Ok(())
}

/// Solver knobs for the blocking programs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Largest tolerated floor violation, relative to each member's reference utility.
    pub feasibility_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            feasibility_tol: 1e-9,
            max_outer: 60,
            max_inner: 4000,
        }
    }
}

/// Outcome of one blocking program.
#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    /// Gain relative to the reference utility. For the all-members program it is
    /// the smallest relative gain across members.
    pub relative: f64,
    /// Gain in utility units (target programs only; `NaN` for all-members programs).
    pub absolute: f64,
    /// `false` when no redistribution keeps the other members at their reference utility.
    pub feasible: bool,
    pub converged: bool,
}

/// Best gain of `target` over `reference` that coalition `c` can secure from its
/// own wealth while every other member stays at least as well off.
pub fn best_improvement(
    scn: &ValidatedScenario,
    c: Coalition,
    reference: &ShareProfile,
    mode: Mode,
    target: usize,
    opts: &SolverOptions,
) -> Result<Improvement> {
    check_coalition(scn, c)?;
    if !c.contains(target) {
        return Err(Error::parameter(format!(
            "target {} is not in coalition {c}",
            target + 1
        )));
    }
    let w = endowment_shares(scn)?;
    let program = Program::new(scn, &w, c, reference, mode)?;
    let t = c
        .members()
        .iter()
        .position(|&n| n == target)
        .expect("target in coalition");
    Ok(program.target_gain(t, opts, restart_key(c, mode, Some(target))))
}

/// Largest common relative gain that all members of `c` can secure at once.
/// Positive means the coalition blocks strictly.
pub fn strong_improvement(
    scn: &ValidatedScenario,
    c: Coalition,
    reference: &ShareProfile,
    mode: Mode,
    opts: &SolverOptions,
) -> Result<Improvement> {
    check_coalition(scn, c)?;
    let w = endowment_shares(scn)?;
    let program = Program::new(scn, &w, c, reference, mode)?;
    let all: Vec<usize> = (0..program.members.len()).collect();
    Ok(program.common_gain(&all, opts, restart_key(c, mode, None)))
}

fn restart_key(c: Coalition, mode: Mode, target: Option<usize>) -> Vec<u64> {
    let mode_key = match mode {
        Mode::ExAnte => 0,
        Mode::ExPost(s) => s as u64 + 1,
    };
    vec![
        c.mask() as u64,
        mode_key,
        target.map_or(u64::MAX, |t| t as u64),
    ]
}

/// A coalition's redistribution problem against a reference allocation.
///
/// Variables are laid out market-major: `x[k * C + i]` is member `i`'s share of market `k`.
struct Program<'a> {
    scn: &'a ValidatedScenario,
    members: Vec<usize>,
    markets: Vec<(usize, usize)>,
    caps: Vec<f64>,
    /// `[member][state]` weight of each state in the compared utility.
    weights: Vec<Vec<f64>>,
    reference: Vec<f64>,
    scales: Vec<f64>,
    start: Vec<f64>,
}

const SCALE_FLOOR: f64 = 1e-9;
const STATIONARY: f64 = 1e-10;
const STALLED_STATIONARY: f64 = 1e-7;

impl<'a> Program<'a> {
    fn new(
        scn: &'a ValidatedScenario,
        w: &EndowmentShares,
        c: Coalition,
        reference: &ShareProfile,
        mode: Mode,
    ) -> Result<Self> {
        if reference.dims() != (scn.n_agents(), scn.n_tasks(), scn.n_states()) {
            return Err(Error::parameter(
                "reference profile does not match the scenario",
            ));
        }
        let members = c.members();
        let states: Vec<usize> = match mode {
            Mode::ExAnte => (0..scn.n_states()).collect(),
            Mode::ExPost(s) if s < scn.n_states() => vec![s],
            Mode::ExPost(s) => return Err(Error::parameter(format!("state {s} out of range"))),
        };
        let markets: Vec<(usize, usize)> = (0..scn.n_tasks())
            .flat_map(|m| states.iter().map(move |&s| (m, s)))
            .collect();
        let wealth = wealth(scn, w, c);
        let caps: Vec<f64> = markets.iter().map(|&(m, s)| wealth[m][s]).collect();
        let weights: Vec<Vec<f64>> = members
            .iter()
            .map(|&n| match mode {
                Mode::ExAnte => scn.beliefs(n).to_vec(),
                Mode::ExPost(s) => (0..scn.n_states())
                    .map(|k| if k == s { 1.0 } else { 0.0 })
                    .collect(),
            })
            .collect();
        let mut start = Vec::with_capacity(markets.len() * members.len());
        for &(m, s) in &markets {
            for &n in &members {
                start.push(reference.get(n, m, s).max(0.0));
            }
        }
        let mut program = Self {
            scn,
            members,
            markets,
            caps,
            weights,
            reference: Vec::new(),
            scales: Vec::new(),
            start,
        };
        let reference_x = program.start.clone();
        program.reference = (0..program.members.len())
            .map(|i| program.value(i, &reference_x))
            .collect();
        program.scales = program
            .reference
            .iter()
            .map(|v| v.abs().max(SCALE_FLOOR))
            .collect();
        program
            .project(&mut program.start.clone())
            .clone_into(&mut program.start);
        Ok(program)
    }

    fn width(&self) -> usize {
        self.members.len()
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.members[i];
        let c = self.width();
        self.markets
            .iter()
            .enumerate()
            .map(|(k, &(m, s))| {
                let wgt = self.weights[i][s];
                if wgt == 0.0 {
                    0.0
                } else {
                    wgt * composite_share_utility(self.scn, n, m, s, x[k * c + i]).0
                }
            })
            .sum()
    }

    /// Relative gain of member `i` and its gradient (nonzero only on `i`'s own coordinates).
    fn gain(&self, i: usize, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.members[i];
        let c = self.width();
        let mut v = 0.0;
        for (k, &(m, s)) in self.markets.iter().enumerate() {
            let wgt = self.weights[i][s];
            if wgt == 0.0 {
                continue;
            }
            let (g, dg) = composite_share_utility(self.scn, n, m, s, x[k * c + i]);
            v += wgt * g;
            grad[k * c + i] = wgt * dg / self.scales[i];
        }
        (v - self.reference[i]) / self.scales[i]
    }

    fn gain_value(&self, i: usize, x: &[f64]) -> f64 {
        (self.value(i, x) - self.reference[i]) / self.scales[i]
    }

    /// Euclidean projection of every market block onto `{y ≥ 0, Σ y = cap}`.
    fn project<'x>(&self, x: &'x mut [f64]) -> &'x mut [f64] {
        let c = self.width();
        for (k, cap) in self.caps.iter().enumerate() {
            project_simplex(&mut x[k * c..(k + 1) * c], *cap);
        }
        x
    }

    fn random_start(&self, rng: &mut impl Rng) -> Vec<f64> {
        let c = self.width();
        let mut x = vec![0.0; self.markets.len() * c];
        for (k, cap) in self.caps.iter().enumerate() {
            let draws: Vec<f64> = (0..c).map(|_| rng.random::<f64>() + 1e-12).collect();
            let total: f64 = draws.iter().sum();
            for i in 0..c {
                x[k * c + i] = cap * draws[i] / total;
            }
        }
        x
    }

    fn starts(&self, opts: &SolverOptions, key: &[u64]) -> Vec<Vec<f64>> {
        let mut rng = seed::stream(opts.seed, "blocking-start", key);
        let mut starts = vec![self.start.clone()];
        while starts.len() < opts.restarts.max(1) {
            starts.push(self.random_start(&mut rng));
        }
        starts
    }

    fn target_gain(&self, t: usize, opts: &SolverOptions, key: Vec<u64>) -> Improvement {
        let c = self.width();
        if c == 1 {
            // The only feasible point hands the member its own wealth.
            let x = self.start.clone();
            let relative = self.gain_value(0, &x);
            return Improvement {
                relative,
                absolute: relative * self.scales[0],
                feasible: true,
                converged: true,
            };
        }
        let others: Vec<usize> = (0..c).filter(|&i| i != t).collect();
        let phase_one = self.common_gain(&others, opts, [key.clone(), vec![1]].concat());
        if phase_one.converged && phase_one.relative < -opts.feasibility_tol {
            return Improvement {
                relative: f64::NEG_INFINITY,
                absolute: f64::NEG_INFINITY,
                feasible: false,
                converged: true,
            };
        }
        let goal = Goal::Target {
            target: t,
            floors: others,
        };
        let best = self.solve_multistart(&goal, opts, &key);
        Improvement {
            relative: best.objective,
            absolute: best.objective * self.scales[t],
            feasible: best.violation <= opts.feasibility_tol.max(1e-8),
            converged: best.converged && phase_one.converged,
        }
    }

    fn common_gain(&self, group: &[usize], opts: &SolverOptions, key: Vec<u64>) -> Improvement {
        if self.width() == 1 {
            let relative = self.gain_value(0, &self.start);
            return Improvement {
                relative,
                absolute: f64::NAN,
                feasible: true,
                converged: true,
            };
        }
        let goal = Goal::Common {
            group: group.to_vec(),
        };
        let best = self.solve_multistart(&goal, opts, &key);
        Improvement {
            relative: best.objective,
            absolute: f64::NAN,
            feasible: true,
            converged: best.converged,
        }
    }

    fn solve_multistart(&self, goal: &Goal, opts: &SolverOptions, key: &[u64]) -> Solution {
        let mut best: Option<Solution> = None;
        for x0 in self.starts(opts, key) {
            let sol = self.solve(goal, x0, opts);
            let better = match &best {
                None => true,
                Some(b) => rank(&sol, opts) > rank(b, opts),
            };
            if better {
                best = Some(sol);
            }
        }
        best.expect("at least one start")
    }

    /// Augmented Lagrangian method with projected-gradient inner solves.
    fn solve(&self, goal: &Goal, x0: Vec<f64>, opts: &SolverOptions) -> Solution {
        let dim = x0.len();
        let mut y = x0;
        let uses_tau = matches!(goal, Goal::Common { .. });
        if uses_tau {
            let tau = goal
                .floors()
                .iter()
                .map(|&i| self.gain_value(i, &y))
                .fold(f64::INFINITY, f64::min);
            y.push(tau);
        }
        let n_cons = goal.floors().len();
        let mut lambda = vec![0.0; n_cons];
        let mut kappa = 100.0;
        let mut prev_violation = f64::INFINITY;
        let mut converged = false;
        let mut violation = f64::INFINITY;

        for _ in 0..opts.max_outer {
            let residual = self.maximize_lagrangian(goal, &mut y, &lambda, kappa, opts.max_inner);
            let cons = self.constraints(goal, &y, None);
            violation = cons.iter().fold(0.0, |a: f64, c| a.max(-c));
            let mut complementarity: f64 = 0.0;
            for (l, c) in lambda.iter_mut().zip(&cons) {
                *l = (*l - kappa * c).max(0.0);
                complementarity = complementarity.max((*l * c).abs());
            }
            if residual <= STALLED_STATIONARY
                && violation <= opts.feasibility_tol
                && complementarity <= opts.feasibility_tol
            {
                converged = true;
                break;
            }
            if violation > opts.feasibility_tol && violation > 0.25 * prev_violation {
                kappa = (kappa * 10.0).min(1e9);
            }
            prev_violation = violation;
        }
        let objective = match goal {
            Goal::Target { target, .. } => self.gain_value(*target, &y[..dim]),
            Goal::Common { group } => group
                .iter()
                .map(|&i| self.gain_value(i, &y[..dim]))
                .fold(f64::INFINITY, f64::min),
        };
        Solution {
            objective,
            violation,
            converged,
        }
    }

    /// Constraint values `c_j(y) ≥ 0`, optionally accumulating `Σ_j mult_j ∇c_j` into `grad`.
    fn constraints(
        &self,
        goal: &Goal,
        y: &[f64],
        mut grad: Option<(&mut [f64], &[f64])>,
    ) -> Vec<f64> {
        let dim = self.markets.len() * self.width();
        let mut scratch = vec![0.0; dim];
        let tau = if matches!(goal, Goal::Common { .. }) {
            y[dim]
        } else {
            0.0
        };
        goal.floors()
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                scratch.iter_mut().for_each(|g| *g = 0.0);
                let h = self.gain(i, &y[..dim], &mut scratch) - tau;
                if let Some((g, mult)) = grad.as_mut() {
                    let mu = mult[j];
                    if mu != 0.0 {
                        for (gk, sk) in g[..dim].iter_mut().zip(&scratch) {
                            *gk += mu * sk;
                        }
                        if matches!(goal, Goal::Common { .. }) {
                            g[dim] -= mu;
                        }
                    }
                }
                h
            })
            .collect()
    }

    /// Augmented Lagrangian value and gradient at `y`.
    fn lagrangian(
        &self,
        goal: &Goal,
        y: &[f64],
        lambda: &[f64],
        kappa: f64,
        grad: &mut [f64],
    ) -> f64 {
        let dim = self.markets.len() * self.width();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let objective = match goal {
            Goal::Target { target, .. } => self.gain(*target, &y[..dim], &mut grad[..dim]),
            Goal::Common { .. } => {
                grad[dim] = 1.0;
                y[dim]
            }
        };
        let cons = self.constraints(goal, y, None);
        let mults: Vec<f64> = lambda
            .iter()
            .zip(&cons)
            .map(|(l, c)| (l - kappa * c).max(0.0))
            .collect();
        let penalty: f64 = mults
            .iter()
            .zip(lambda)
            .map(|(m, l)| m * m - l * l)
            .sum::<f64>()
            / (2.0 * kappa);
        self.constraints(goal, y, Some((grad, &mults)));
        objective - penalty
    }

    /// Spectral projected-gradient ascent with Armijo backtracking.
    /// Returns the final unit-step projected-gradient residual.
    fn maximize_lagrangian(
        &self,
        goal: &Goal,
        y: &mut Vec<f64>,
        lambda: &[f64],
        kappa: f64,
        max_iter: usize,
    ) -> f64 {
        let dim = self.markets.len() * self.width();
        let len = y.len();
        let mut grad = vec![0.0; len];
        let mut value = self.lagrangian(goal, y, lambda, kappa, &mut grad);
        let mut step = 1.0;
        let mut trial = vec![0.0; len];
        let mut trial_grad = vec![0.0; len];
        let mut stalled = 0;
        let mut residual = f64::INFINITY;
        for _ in 0..max_iter {
            // Stationarity: unit-step projected gradient.
            let mut probe: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a + g).collect();
            self.project(&mut probe[..dim]);
            residual = probe
                .iter()
                .zip(y.iter())
                .fold(0.0, |a: f64, (p, q)| a.max((p - q).abs()));
            if residual <= STATIONARY {
                return residual;
            }
            let mut accepted = false;
            for _ in 0..60 {
                for k in 0..len {
                    trial[k] = y[k] + step * grad[k];
                }
                self.project(&mut trial[..dim]);
                let ascent: f64 = trial
                    .iter()
                    .zip(y.iter())
                    .zip(&grad)
                    .map(|((t, a), g)| g * (t - a))
                    .sum();
                let trial_value = self.lagrangian(goal, &trial, lambda, kappa, &mut trial_grad);
                // Near the optimum values differ only by rounding; there the slope at the
                // trial point still pointing forward certifies ascent.
                let flat = (trial_value - value).abs() <= 1e-12 * value.abs().max(1.0);
                let forward = || {
                    trial
                        .iter()
                        .zip(y.iter())
                        .zip(&trial_grad)
                        .map(|((t, a), g)| g * (t - a))
                        .sum::<f64>()
                        >= 0.0
                };
                if trial_value >= value + 1e-4 * ascent || (flat && ascent > 0.0 && forward()) {
                    // Barzilai-Borwein estimate for the next step.
                    let (mut ss, mut sy) = (0.0, 0.0);
                    for k in 0..len {
                        let s = trial[k] - y[k];
                        ss += s * s;
                        sy += s * (trial_grad[k] - grad[k]);
                    }
                    step = if sy < 0.0 {
                        (ss / -sy).clamp(1e-12, 1e12)
                    } else {
                        (step * 2.0).min(1e12)
                    };
                    let moved = trial
                        .iter()
                        .zip(y.iter())
                        .fold(0.0, |a: f64, (t, q)| a.max((t - q).abs()));
                    stalled = if moved <= 1e-15 { stalled + 1 } else { 0 };
                    std::mem::swap(y, &mut trial);
                    std::mem::swap(&mut grad, &mut trial_grad);
                    value = trial_value;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            // Progress below rounding.
            if !accepted || stalled >= 20 {
                return residual;
            }
        }
        residual
    }
}

enum Goal {
    /// Maximize one member's gain; the others must not lose.
    Target { target: usize, floors: Vec<usize> },
    /// Maximize the smallest gain within the group.
    Common { group: Vec<usize> },
}

impl Goal {
    fn floors(&self) -> &[usize] {
        match self {
            Goal::Target { floors, .. } => floors,
            Goal::Common { group } => group,
        }
    }
}

struct Solution {
    objective: f64,
    violation: f64,
    converged: bool,
}

/// Ordering of candidate solutions: converged feasible results first, then by objective.
fn rank(sol: &Solution, opts: &SolverOptions) -> (bool, bool, f64) {
    let feasible = sol.violation <= opts.feasibility_tol.max(1e-8);
    (sol.converged && feasible, feasible, sol.objective)
}

/// Euclidean projection of `v` onto `{y ≥ 0, Σ y = mass}`.
pub fn project_simplex(v: &mut [f64], mass: f64) {
    if v.len() == 1 {
        v[0] = mass;
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - mass) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// One weak-blocking program result.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockingEntry {
    pub coalition: Coalition,
    pub target: usize,
    pub mode: Mode,
    pub reference_utility: f64,
    pub improvement: Improvement,
}

/// One all-members (strong blocking) program result.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongEntry {
    pub coalition: Coalition,
    pub mode: Mode,
    pub improvement: Improvement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SscConfig {
    /// Blocking threshold relative to the reference utility.
    pub tol: f64,
    /// Largest `|Σ_n r − 1|` accepted as market clearing.
    pub clearing_tol: f64,
    pub max_agents: usize,
    pub solver: SolverOptions,
    pub parallel: bool,
}

impl Default for SscConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            clearing_tol: 0.01,
            max_agents: 20,
            solver: SolverOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SscReport {
    pub market_clearing: bool,
    pub clearing_error: f64,
    pub ex_ante: Vec<BlockingEntry>,
    /// Indexed by state.
    pub ex_post: Vec<Vec<BlockingEntry>>,
    pub strong: Vec<StrongEntry>,
    /// No coalition makes one member better off and none worse off.
    pub weak_verdict: bool,
    /// No coalition makes every member strictly better off.
    pub strong_verdict: bool,
    /// Programs whose solver did not converge; any such program fails the verdict.
    pub inconclusive: usize,
    pub worst_offender: Option<BlockingEntry>,
    pub tol: f64,
}

impl SscReport {
    /// Market clearing and no blocking under either predicate.
    pub fn verdict(&self) -> bool {
        self.market_clearing && self.weak_verdict && self.strong_verdict
    }

    pub fn entries(&self) -> impl Iterator<Item = &BlockingEntry> {
        self.ex_ante.iter().chain(self.ex_post.iter().flatten())
    }
}

/// Enumerates all coalitions and checks the allocation ex-ante and in every state.
pub fn check_ssc(
    scn: &ValidatedScenario,
    allocation: &ShareProfile,
    cfg: &SscConfig,
) -> Result<SscReport> {
    let n_count = scn.n_agents();
    if n_count > cfg.max_agents || n_count > 31 {
        return Err(Error::TooManyAgents {
            agents: n_count,
            limit: cfg.max_agents.min(31),
        });
    }
    if allocation.dims() != (n_count, scn.n_tasks(), scn.n_states()) {
        return Err(Error::parameter("allocation does not match the scenario"));
    }
    let clearing_error = allocation.max_clearing_error();
    let market_clearing = allocation.is_market_clearing(cfg.clearing_tol);
    let mut report = SscReport {
        market_clearing,
        clearing_error,
        ex_ante: Vec::new(),
        ex_post: vec![Vec::new(); scn.n_states()],
        strong: Vec::new(),
        weak_verdict: false,
        strong_verdict: false,
        inconclusive: 0,
        worst_offender: None,
        tol: cfg.tol,
    };
    if !market_clearing {
        return Ok(report);
    }

    let w = endowment_shares(scn)?;
    let modes: Vec<Mode> = std::iter::once(Mode::ExAnte)
        .chain((0..scn.n_states()).map(Mode::ExPost))
        .collect();
    let jobs: Vec<(Coalition, Mode)> = Coalition::all(n_count)
        .flat_map(|c| modes.iter().map(move |&m| (c, m)))
        .collect();
    let run = |&(c, mode): &(Coalition, Mode)| -> Result<(Vec<BlockingEntry>, StrongEntry)> {
        let program = Program::new(scn, &w, c, allocation, mode)?;
        let members = c.members();
        let all: Vec<usize> = (0..members.len()).collect();
        let strong = StrongEntry {
            coalition: c,
            mode,
            improvement: program.common_gain(&all, &cfg.solver, restart_key(c, mode, None)),
        };
        let weak = members
            .iter()
            .enumerate()
            .map(|(i, &n)| BlockingEntry {
                coalition: c,
                target: n,
                mode,
                reference_utility: program.reference[i],
                improvement: program.target_gain(i, &cfg.solver, restart_key(c, mode, Some(n))),
            })
            .collect();
        Ok((weak, strong))
    };
    let results: Vec<Result<_>> = if cfg.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };

    let mut weak_ok = true;
    let mut strong_ok = true;
    let mut worst: Option<BlockingEntry> = None;
    for res in results {
        let (weak, strong) = res?;
        if !strong.improvement.converged {
            report.inconclusive += 1;
            strong_ok = false;
        } else if strong.improvement.relative > cfg.tol {
            strong_ok = false;
        }
        report.strong.push(strong);
        for entry in weak {
            let imp = &entry.improvement;
            if !imp.converged {
                report.inconclusive += 1;
                weak_ok = false;
            } else if imp.feasible && imp.relative > cfg.tol {
                weak_ok = false;
            }
            if imp.feasible
                && worst
                    .as_ref()
                    .is_none_or(|w| imp.relative > w.improvement.relative)
            {
                worst = Some(entry.clone());
            }
            match entry.mode {
                Mode::ExAnte => report.ex_ante.push(entry),
                Mode::ExPost(s) => report.ex_post[s].push(entry),
            }
        }
    }
    report.weak_verdict = weak_ok;
    report.strong_verdict = strong_ok;
    report.worst_offender = worst;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{general_example, validate_scenario};

    #[test]
    fn coalition_basics() {
        let g = Coalition::grand(4);
        assert_eq!(g.mask(), 0b1111);
        assert_eq!(g.members(), vec![0, 1, 2, 3]);
        assert_eq!(Coalition::all(4).count(), 15);
        assert_eq!(Coalition::singleton(2).to_string(), "{3}");
        assert!(Coalition::new(0).is_err());
    }

    #[test]
    fn simplex_projection() {
        let mut v = [0.2, 0.9, -0.3];
        project_simplex(&mut v, 1.0);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(v.iter().all(|&x| x >= 0.0));
        assert!((v[0] - 0.15).abs() < 1e-12 && (v[1] - 0.85).abs() < 1e-12 && v[2] == 0.0);
        let mut inside = [0.25, 0.5];
        project_simplex(&mut inside, 0.75);
        assert_eq!(inside, [0.25, 0.5]);
    }

    #[test]
    fn endowment_of_coalitions() {
        let scn = validate_scenario(general_example()).unwrap();
        let w = endowment_shares(&scn).unwrap();
        let single = coalition_endowment(&scn, Coalition::singleton(1)).unwrap();
        assert_eq!(single[2][1], w.get(1, 2, 1));
        let grand = coalition_endowment(&scn, Coalition::grand(4)).unwrap();
        assert!(grand.iter().flatten().all(|&x| x == 1.0));
    }
}
