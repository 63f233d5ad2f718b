//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the library's numerical code: oracles sample,
//! enumerate or evaluate closed forms directly so they can catch library bugs.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use taskmarket::scenario::{AgentSpec, ArrivalSpec, Scenario};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn draw(spec: &ArrivalSpec, rng: &mut impl Rng) -> f64 {
    match *spec {
        ArrivalSpec::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
        ArrivalSpec::Poisson { rate } => Poisson::new(rate).unwrap().sample(rng),
        ArrivalSpec::Deterministic { value } => value,
        ArrivalSpec::NormalTruncatedAtZero { mean, stddev } => loop {
            let x = Normal::new(mean, stddev).unwrap().sample(rng);
            if x > 0.0 {
                break x;
            }
        },
    }
}

pub fn total_draws(specs: &[ArrivalSpec], k: usize, seed: u64) -> Vec<f64> {
    let mut g = rng(seed);
    (0..k)
        .map(|_| specs.iter().map(|s| draw(s, &mut g)).sum())
        .collect()
}

/// Certainty equivalent `−ρ ln mean(e^{−x/ρ})` of the given rewards, with a
/// delta-method standard error. Uses a log-sum-exp shift.
pub fn ce_of_rewards(rho: f64, rewards: &[f64]) -> (f64, f64) {
    let k = rewards.len() as f64;
    let lo = rewards.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = rewards.iter().map(|x| (-(x - lo) / rho).exp()).collect();
    let mean = e.iter().sum::<f64>() / k;
    let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let value = lo - rho * mean.ln();
    let se = rho * (var / k).sqrt() / mean;
    (value, se)
}

/// `ρ Σ_j ln(1 + r/(ρ λ_j))`.
pub fn ce_exp_closed(rho: f64, rates: &[f64], r: f64) -> f64 {
    rates.iter().map(|l| rho * (1.0 + r / (rho * l)).ln()).sum()
}

/// Composite utility with exponential arrivals, `ρ(1 − Π_j λ_jρ/(λ_jρ + r))`.
pub fn g_exp(rho: f64, rates: &[f64], r: f64) -> f64 {
    rho * (1.0
        - rates
            .iter()
            .map(|l| l * rho / (l * rho + r))
            .product::<f64>())
}

pub fn exp_rates(specs: &[ArrivalSpec]) -> Vec<f64> {
    specs
        .iter()
        .map(|s| match s {
            ArrivalSpec::Exponential { rate } => *rate,
            other => panic!("expected exponential arrivals, got {other:?}"),
        })
        .collect()
}

/// Budget-feasible grid maximizer of `Σ_m f_m(r_m)` over `{0, h, …, 1}^2`.
pub fn demand_grid_2(
    f: impl Fn(usize, f64) -> f64,
    prices: [f64; 2],
    budget: f64,
    steps: usize,
) -> [f64; 2] {
    let h = 1.0 / steps as f64;
    let f0: Vec<f64> = (0..=steps).map(|i| f(0, i as f64 * h)).collect();
    let f1: Vec<f64> = (0..=steps).map(|i| f(1, i as f64 * h)).collect();
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
    for i in 0..=steps {
        for j in 0..=steps {
            let (a, b) = (i as f64 * h, j as f64 * h);
            if prices[0] * a + prices[1] * b <= budget + 1e-12 && f0[i] + f1[j] > best.0 {
                best = (f0[i] + f1[j], [a, b]);
            }
        }
    }
    best.1
}

/// Best total weight over all injective task→agent maps, ties to the
/// lexicographically smallest agent sequence.
pub fn brute_matching(weights: &[Vec<f64>]) -> (Vec<usize>, f64) {
    fn go(
        w: &[Vec<f64>],
        row: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        acc: f64,
        best: &mut (Vec<usize>, f64),
    ) {
        if row == w.len() {
            if acc > best.1 + 1e-12 {
                *best = (cur.clone(), acc);
            }
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                go(w, row + 1, used, cur, acc + w[row][j], best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    go(
        weights,
        0,
        &mut vec![false; weights[0].len()],
        &mut Vec::new(),
        0.0,
        &mut best,
    );
    best
}

/// Random exponential-arrival economy with `ρ ∈ [0.1, 1]`, `λ ∈ [0.5, 4]` and
/// strictly positive beliefs.
pub fn random_scenario(g: &mut impl Rng, agents: usize, tasks: usize, states: usize) -> Scenario {
    let agents = (0..agents)
        .map(|_| {
            let raw: Vec<f64> = (0..states).map(|_| g.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            AgentSpec {
                rho: (0..tasks)
                    .map(|_| (0..states).map(|_| g.random_range(0.1..=1.0)).collect())
                    .collect(),
                arrival: (0..tasks)
                    .map(|_| {
                        (0..states)
                            .map(|_| ArrivalSpec::Exponential {
                                rate: g.random_range(0.5..=4.0),
                            })
                            .collect()
                    })
                    .collect(),
                beliefs: raw.iter().map(|x| x / total).collect(),
            }
        })
        .collect();
    Scenario {
        tasks,
        states,
        seed: g.random(),
        agents,
    }
}
