//! Certainty (deterministic) equivalents of stochastic task loads under the
//! exponential utility `u(x) = ρ(1 − e^{−x/ρ})`:
//!
//! `d(r·Q) = −ρ ln E[e^{−r Q/ρ}]`.
//!
//! For a total load `Q = Σ_j q_j` of independent arrivals the expectation
//! factorizes, so `d` is the sum of per-arrival terms. Exponential, Poisson
//! and deterministic arrivals have closed forms; the truncated normal is
//! represented by a fixed seeded sample.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::error::{Error, Result};
use crate::scenario::ArrivalSpec;
use crate::seed;

/// Sample size backing the truncated-normal certainty equivalent.
pub const TRUNCATED_NORMAL_SAMPLES: usize = 4096;

fn check_rho_share(rho: f64, r: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::parameter(format!(
            "rho must be strictly positive, got {rho}"
        )));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::parameter(format!(
            "share must lie in [0, 1], got {r}"
        )));
    }
    Ok(())
}

/// `ρ Σ_j ln(1 + r/(ρ λ_j))`: certainty equivalent of share `r` of a sum of
/// independent exponential loads with the given rates.
pub fn ce_exponential_load(rho: f64, rates: &[f64], r: f64) -> Result<f64> {
    check_rho_share(rho, r)?;
    if let Some(l) = rates.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::parameter(format!(
            "exponential rate must be strictly positive, got {l}"
        )));
    }
    Ok(rho * rates.iter().map(|l| (r / (rho * l)).ln_1p()).sum::<f64>())
}

/// Certainty equivalent of share `r` of the sum of independent arrivals `specs`.
///
/// `seed` only matters for truncated-normal components.
pub fn ce_generic(rho: f64, specs: &[ArrivalSpec], r: f64, seed: u64) -> Result<f64> {
    check_rho_share(rho, r)?;
    for spec in specs {
        spec.check().map_err(Error::Parameter)?;
    }
    let rates: Option<Vec<f64>> = specs
        .iter()
        .map(|s| match *s {
            ArrivalSpec::Exponential { rate } => Some(rate),
            _ => None,
        })
        .collect();
    if let Some(rates) = rates {
        return ce_exponential_load(rho, &rates, r);
    }
    Ok(TotalLoad::new(specs, seed, &[]).ce(rho, r))
}

/// Draws one arrival.
pub fn sample_arrival<R: Rng + ?Sized>(spec: &ArrivalSpec, rng: &mut R) -> f64 {
    match *spec {
        ArrivalSpec::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
        ArrivalSpec::Poisson { rate } => Poisson::new(rate).expect("validated rate").sample(rng),
        ArrivalSpec::Deterministic { value } => value,
        ArrivalSpec::NormalTruncatedAtZero { mean, stddev } => {
            let normal = Normal::new(mean, stddev).expect("validated normal");
            loop {
                let x = normal.sample(rng);
                if x > 0.0 {
                    return x;
                }
            }
        }
    }
}

/// Monte Carlo estimate with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `−ρ ln((1/K) Σ_k e^{−r Q_k/ρ})` over `K` independent draws of the total load.
///
/// Reproducible for a fixed seed. Draws are shifted by their minimum before
/// exponentiation, so a deterministic load returns `r·k` exactly.
pub fn mc_ce_oracle(
    rho: f64,
    specs: &[ArrivalSpec],
    r: f64,
    n_samples: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    check_rho_share(rho, r)?;
    if n_samples == 0 {
        return Err(Error::parameter("n_samples must be at least 1"));
    }
    for spec in specs {
        spec.check().map_err(Error::Parameter)?;
    }
    let mut rng = seed::stream(seed, "mc-ce-oracle", &[]);
    let totals: Vec<f64> = (0..n_samples)
        .map(|_| specs.iter().map(|s| sample_arrival(s, &mut rng)).sum())
        .collect();
    Ok(ce_from_draws(rho, r, &totals))
}

/// Certainty equivalent of `r·Q` from explicit draws of `Q`.
pub fn ce_from_draws(rho: f64, r: f64, totals: &[f64]) -> OracleEstimate {
    let k = totals.len() as f64;
    let shift = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = totals
        .iter()
        .map(|q| (-r * (q - shift) / rho).exp())
        .collect();
    let mean = weights.iter().sum::<f64>() / k;
    let var = if totals.len() > 1 {
        weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    OracleEstimate {
        value: r * shift - rho * mean.ln(),
        std_error: rho * (var / k).sqrt() / mean,
    }
}

#[derive(Debug, Clone)]
enum LoadPart {
    Exponential(f64),
    Poisson(f64),
    Deterministic(f64),
    Sampled(Vec<f64>),
}

impl LoadPart {
    /// `E[e^{−t q}]` for `t = r/ρ ≥ 0`.
    fn laplace(&self, t: f64) -> f64 {
        match self {
            LoadPart::Exponential(l) => l / (l + t),
            LoadPart::Poisson(l) => (l * (-t).exp_m1()).exp(),
            LoadPart::Deterministic(k) => (-t * k).exp(),
            LoadPart::Sampled(xs) => {
                xs.iter().map(|q| (-t * q).exp()).sum::<f64>() / xs.len() as f64
            }
        }
    }

    /// `−ln E[e^{−t q}]`.
    fn log_term(&self, t: f64) -> f64 {
        match self {
            LoadPart::Exponential(l) => (t / l).ln_1p(),
            LoadPart::Poisson(l) => -l * (-t).exp_m1(),
            LoadPart::Deterministic(k) => t * k,
            LoadPart::Sampled(_) => -self.laplace(t).ln(),
        }
    }

    /// Tilted mean and variance of `q` under weights `e^{−t q}`; the mean is
    /// `d/dt [−ln E[e^{−t q}]]` and the variance its negated derivative.
    fn tilted_moments(&self, t: f64) -> (f64, f64) {
        match self {
            LoadPart::Exponential(l) => {
                let m = 1.0 / (l + t);
                (m, m * m)
            }
            LoadPart::Poisson(l) => {
                let m = l * (-t).exp();
                (m, m)
            }
            LoadPart::Deterministic(k) => (*k, 0.0),
            LoadPart::Sampled(xs) => {
                let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
                for q in xs {
                    let w = (-t * q).exp();
                    s0 += w;
                    s1 += q * w;
                    s2 += q * q * w;
                }
                let m = s1 / s0;
                (m, (s2 / s0 - m * m).max(0.0))
            }
        }
    }

    /// `d/dt [−ln E[e^{−t q}]]`, the tilted mean of `q`.
    fn tilted_mean(&self, t: f64) -> f64 {
        match self {
            LoadPart::Exponential(l) => 1.0 / (l + t),
            LoadPart::Poisson(l) => l * (-t).exp(),
            LoadPart::Deterministic(k) => *k,
            LoadPart::Sampled(xs) => {
                let (mut num, mut den) = (0.0, 0.0);
                for q in xs {
                    let w = (-t * q).exp();
                    num += q * w;
                    den += w;
                }
                num / den
            }
        }
    }
}

/// Model of a market's total load `Q_m^(s) = Σ_j q_jm^(s)` with independent parts.
#[derive(Debug, Clone)]
pub struct TotalLoad {
    parts: Vec<LoadPart>,
}

impl TotalLoad {
    /// Truncated-normal parts are sampled from a stream keyed by `seed`,
    /// `market` and the part index.
    pub fn new(specs: &[ArrivalSpec], seed: u64, market: &[u64]) -> Self {
        let parts = specs
            .iter()
            .enumerate()
            .map(|(j, spec)| match *spec {
                ArrivalSpec::Exponential { rate } => LoadPart::Exponential(rate),
                ArrivalSpec::Poisson { rate } => LoadPart::Poisson(rate),
                ArrivalSpec::Deterministic { value } => LoadPart::Deterministic(value),
                ArrivalSpec::NormalTruncatedAtZero { .. } => {
                    let mut idx = market.to_vec();
                    idx.push(j as u64);
                    let mut rng = seed::stream(seed, "truncated-normal-ce", &idx);
                    LoadPart::Sampled(
                        (0..TRUNCATED_NORMAL_SAMPLES)
                            .map(|_| sample_arrival(spec, &mut rng))
                            .collect(),
                    )
                }
            })
            .collect();
        Self { parts }
    }

    pub fn is_exponential(&self) -> bool {
        self.parts
            .iter()
            .all(|p| matches!(p, LoadPart::Exponential(_)))
    }

    /// Certainty equivalent `d(r·Q)` for an agent with efficiency `rho`.
    pub fn ce(&self, rho: f64, r: f64) -> f64 {
        let t = r / rho;
        let (mut exact, mut scaled) = (0.0, 0.0);
        for p in &self.parts {
            match p {
                LoadPart::Deterministic(k) => exact += r * k,
                _ => scaled += p.log_term(t),
            }
        }
        exact + rho * scaled
    }

    /// Certainty equivalent of share `r` of part `j` alone; the same sample
    /// backs a truncated-normal part here and in the total.
    pub fn part_ce(&self, j: usize, rho: f64, r: f64) -> f64 {
        match self.parts[j] {
            LoadPart::Deterministic(k) => r * k,
            ref p => rho * p.log_term(r / rho),
        }
    }

    /// `E[e^{−r Q/ρ}]`, the factor that turns the certainty equivalent into utility.
    pub fn laplace(&self, rho: f64, r: f64) -> f64 {
        let t = r / rho;
        self.parts.iter().map(|p| p.laplace(t)).product()
    }

    /// Composite utility `g(r) = ρ(1 − E[e^{−rQ/ρ}])` and its derivative in `r`.
    pub fn utility_and_marginal(&self, rho: f64, r: f64) -> (f64, f64) {
        let t = r / rho;
        let mut lap = 1.0;
        let mut slope = 0.0;
        for p in &self.parts {
            lap *= p.laplace(t);
            slope += p.tilted_mean(t);
        }
        (rho * (1.0 - lap), lap * slope)
    }

    /// `g′(r)` and `g″(r)`; the second derivative is strictly negative for any
    /// nondegenerate load.
    pub fn marginal_and_curvature(&self, rho: f64, r: f64) -> (f64, f64) {
        let t = r / rho;
        let mut lap = 1.0;
        let (mut mean, mut var) = (0.0, 0.0);
        for p in &self.parts {
            lap *= p.laplace(t);
            let (m, v) = p.tilted_moments(t);
            mean += m;
            var += v;
        }
        (lap * mean, -lap * (mean * mean + var) / rho)
    }

    /// `g′(r)` alone.
    pub fn marginal(&self, rho: f64, r: f64) -> f64 {
        self.utility_and_marginal(rho, r).1
    }

    /// `E[Q]`, when every part has a finite closed-form mean.
    pub fn mean(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| match p {
                LoadPart::Exponential(l) => 1.0 / l,
                LoadPart::Poisson(l) => *l,
                LoadPart::Deterministic(k) => *k,
                LoadPart::Sampled(xs) => xs.iter().sum::<f64>() / xs.len() as f64,
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn exponential_closed_form_examples() {
        assert_eq!(ce_exponential_load(1.0, &[1.0], 0.0).unwrap(), 0.0);
        assert!((ce_exponential_load(1.0, &[1.0], 1.0).unwrap() - LN2).abs() < 1e-15);
        assert!((ce_exponential_load(0.5, &[1.0, 1.0], 0.5).unwrap() - LN2).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(ce_exponential_load(0.0, &[1.0], 0.5).is_err());
        assert!(ce_exponential_load(1.0, &[-1.0], 0.5).is_err());
        assert!(ce_exponential_load(1.0, &[1.0], 1.5).is_err());
        assert!(mc_ce_oracle(1.0, &[ArrivalSpec::Exponential { rate: 1.0 }], 0.5, 0, 1).is_err());
    }

    #[test]
    fn generic_dispatch() {
        let det = ArrivalSpec::Deterministic { value: 3.0 };
        assert!((ce_generic(0.37, &[det], 1.0, 0).unwrap() - 3.0).abs() < 1e-15);
        let pois = ArrivalSpec::Poisson { rate: 1.0 };
        let expected = -((-1f64).exp() - 1.0);
        assert!((ce_generic(1.0, &[pois], 1.0, 0).unwrap() - expected).abs() < 1e-15);
        let exp1 = ArrivalSpec::Exponential { rate: 1.0 };
        assert_eq!(
            ce_generic(1.0, &[exp1], 1.0, 0).unwrap().to_bits(),
            ce_exponential_load(1.0, &[1.0], 1.0).unwrap().to_bits()
        );
    }

    #[test]
    fn oracle_deterministic_is_exact() {
        let det = ArrivalSpec::Deterministic { value: 2.0 };
        for k in [1, 7, 1000] {
            let est = mc_ce_oracle(1.0, &[det], 1.0, k, 9).unwrap();
            assert_eq!(est.value, 2.0);
            assert_eq!(est.std_error, 0.0);
        }
    }

    #[test]
    fn oracle_is_reproducible() {
        let spec = [ArrivalSpec::Exponential { rate: 1.0 }];
        let a = mc_ce_oracle(1.0, &spec, 1.0, 1, 42).unwrap();
        let b = mc_ce_oracle(1.0, &spec, 1.0, 1, 42).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn composite_matches_product_form() {
        let load = TotalLoad::new(
            &[
                ArrivalSpec::Exponential { rate: 1.0 },
                ArrivalSpec::Exponential { rate: 3.0 },
            ],
            0,
            &[],
        );
        let (rho, r) = (0.7, 0.4);
        let prod: f64 = [1.0f64, 3.0]
            .iter()
            .map(|l| l * rho / (l * rho + r))
            .product();
        let sum: f64 = [1.0f64, 3.0].iter().map(|l| 1.0 / (l * rho + r)).sum();
        let (g, dg) = load.utility_and_marginal(rho, r);
        assert!((g - rho * (1.0 - prod)).abs() < 1e-15);
        assert!((dg - rho * prod * sum).abs() < 1e-14);
        // marginal at zero is E[Q]
        assert!((load.marginal(rho, 0.0) - (1.0 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn truncated_normal_load_is_seeded() {
        let spec = [ArrivalSpec::NormalTruncatedAtZero {
            mean: 1.0,
            stddev: 0.5,
        }];
        let a = ce_generic(1.0, &spec, 0.5, 11).unwrap();
        let b = ce_generic(1.0, &spec, 0.5, 11).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        // Jensen: below the risk-neutral value
        let mean = TotalLoad::new(&spec, 11, &[]).mean();
        assert!(a < 0.5 * mean);
    }
}
