//! Scenario generation, Monte Carlo loss estimation, and portfolio
//! accumulation under shared-practice shocks.
//!
//! Determinism contract: draw `k` depends only on `(seed, k)` — every draw
//! uses its own ChaCha8 stream — so serial and parallel runs produce
//! bit-identical results for any worker count.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maturity::{
    self, LayerAssessment, MaturityError, MaturityModelSpec, MuRecord, PracticeStatus,
};
use crate::money::Money;
use crate::pricing::{
    breach_probability, indifference_premium, layer_loss, LayerEconomics, PricingError, Scenario,
    UtilitySpec,
};

/// Name of the pinned draw generator, recorded in every report.
pub const GENERATOR: &str = "chacha8-stream-per-draw";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    Point { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Beta { a: f64, b: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            DistributionSpec::Point { value } => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(SimError::InvalidDistribution(format!(
                        "point value {value} outside [0,1]"
                    )));
                }
            }
            DistributionSpec::Uniform { lo, hi } => {
                if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                    return Err(SimError::InvalidDistribution(format!(
                        "uniform bounds ({lo},{hi}) must satisfy 0 <= lo <= hi <= 1"
                    )));
                }
            }
            DistributionSpec::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(SimError::InvalidDistribution(format!(
                        "beta shapes ({a},{b}) must be positive"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parse `point(v)`, `uniform(lo,hi)`, or `beta(a,b)`.
    pub fn parse(text: &str) -> Result<DistributionSpec, SimError> {
        let text = text.trim();
        let (name, rest) = text
            .split_once('(')
            .ok_or_else(|| SimError::InvalidDistribution(format!("bad distribution `{text}`")))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| SimError::InvalidDistribution(format!("bad distribution `{text}`")))?;
        let numbers: Result<Vec<f64>, _> = args.split(',').map(|a| a.trim().parse()).collect();
        let numbers = numbers
            .map_err(|_| SimError::InvalidDistribution(format!("bad parameters in `{text}`")))?;
        let spec = match (name.trim(), numbers.as_slice()) {
            ("point", [value]) => DistributionSpec::Point { value: *value },
            ("uniform", [lo, hi]) => DistributionSpec::Uniform { lo: *lo, hi: *hi },
            ("beta", [a, b]) => DistributionSpec::Beta { a: *a, b: *b },
            _ => {
                return Err(SimError::InvalidDistribution(format!(
                    "bad distribution `{text}`"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            DistributionSpec::Point { value } => {
                // consume one variate so mixed configurations stay aligned
                let _: f64 = rng.gen();
                value
            }
            DistributionSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            DistributionSpec::Beta { a, b } => rand_distr::Beta::new(a, b)
                .expect("validated shapes")
                .sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(SimError::InvalidDistribution(
                "draw count must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// A distribution-block scenario configuration:
/// `dist_c=<spec>;dist_s=<spec>;n=<int>;seed=<int>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBlock {
    pub dist_c: DistributionSpec,
    pub dist_s: DistributionSpec,
    pub n: usize,
    /// Optional: callers fall back to their own default seed when absent.
    pub seed: Option<u64>,
}

impl ScenarioBlock {
    pub fn parse(text: &str) -> Result<ScenarioBlock, SimError> {
        let mut dist_c = None;
        let mut dist_s = None;
        let mut n = None;
        let mut seed = None;
        for part in text.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part.split_once('=').ok_or_else(|| {
                SimError::InvalidDistribution(format!("expected `key=value`, got `{part}`"))
            })?;
            match key.trim() {
                "dist_c" => dist_c = Some(DistributionSpec::parse(value)?),
                "dist_s" => dist_s = Some(DistributionSpec::parse(value)?),
                "n" => {
                    n = Some(value.trim().parse().map_err(|_| {
                        SimError::InvalidDistribution(format!("bad draw count `{value}`"))
                    })?)
                }
                "seed" => {
                    seed = Some(value.trim().parse().map_err(|_| {
                        SimError::InvalidDistribution(format!("bad seed `{value}`"))
                    })?)
                }
                other => {
                    return Err(SimError::InvalidDistribution(format!(
                        "unknown scenario key `{other}`"
                    )))
                }
            }
        }
        let missing =
            |name: &str| SimError::InvalidDistribution(format!("scenario block missing `{name}`"));
        let block = ScenarioBlock {
            dist_c: dist_c.ok_or_else(|| missing("dist_c"))?,
            dist_s: dist_s.ok_or_else(|| missing("dist_s"))?,
            n: n.ok_or_else(|| missing("n"))?,
            seed,
        };
        SimConfig {
            n: block.n,
            seed: block.seed.unwrap_or(0),
        }
        .validate()?;
        Ok(block)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub p: f64,
    pub value: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean: Money,
    pub sd: Money,
    /// Nearest-rank order statistics at 0.5, 0.9, 0.95, 0.99.
    pub quantiles: Vec<QuantileEstimate>,
    pub n: usize,
    pub seed: u64,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("practice `{0}` is not a shared practice of this portfolio")]
    UnknownPractice(String),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Maturity(#[from] MaturityError),
}

fn draw_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw one (delta_c, delta_s) pair; the result is a pure function of
/// `(seed, stream)`.
fn sample_pair(
    dist_c: &DistributionSpec,
    dist_s: &DistributionSpec,
    seed: u64,
    stream: u64,
) -> (f64, f64) {
    let mut rng = draw_rng(seed, stream);
    (dist_c.sample(&mut rng), dist_s.sample(&mut rng))
}

/// Generate `n` equal-weight scenarios from the configured distributions.
pub fn sample_deltas(
    dist_c: &DistributionSpec,
    dist_s: &DistributionSpec,
    config: &SimConfig,
) -> Result<Vec<Scenario>, SimError> {
    dist_c.validate()?;
    dist_s.validate()?;
    config.validate()?;
    let weight = 1.0 / config.n as f64;
    Ok((0..config.n)
        .map(|k| {
            let (delta_c, delta_s) = sample_pair(dist_c, dist_s, config.seed, k as u64);
            Scenario {
                delta_c,
                delta_s,
                weight,
            }
        })
        .collect())
}

fn summarize(mut cents: Vec<i64>, config: &SimConfig) -> SimResult {
    let n = cents.len();
    let mean = cents.iter().map(|&c| c as f64).sum::<f64>() / n as f64;
    let variance = cents
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n as f64;
    cents.sort_unstable();
    let quantiles = [0.5, 0.9, 0.95, 0.99]
        .iter()
        .map(|&p| {
            // nearest-rank: the ceil(p*n)-th order statistic, 1-indexed
            let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
            QuantileEstimate {
                p,
                value: Money::from_minor(cents[rank - 1]),
            }
        })
        .collect();
    SimResult {
        mean: Money::from_minor_f64(mean),
        sd: Money::from_minor_f64(variance.sqrt()),
        quantiles,
        n,
        seed: config.seed,
        generator: GENERATOR.to_string(),
    }
}

/// Evaluate draws `0..n` with `eval(k)` across `workers` threads, results
/// ordered by draw index regardless of scheduling.
fn parallel_draws<F>(n: usize, workers: usize, eval: F) -> Vec<i64>
where
    F: Fn(usize) -> i64 + Sync,
{
    let workers = workers.max(1).min(n.max(1));
    if workers == 1 {
        return (0..n).map(eval).collect();
    }
    let mut out = vec![0i64; n];
    let chunk = n.div_ceil(workers);
    std::thread::scope(|scope| {
        for (w, slot) in out.chunks_mut(chunk).enumerate() {
            let eval = &eval;
            scope.spawn(move || {
                let base = w * chunk;
                for (i, cell) in slot.iter_mut().enumerate() {
                    *cell = eval(base + i);
                }
            });
        }
    });
    out
}

/// Monte Carlo distribution of the layer loss under the configured
/// degradation distributions.
pub fn simulate_losses(
    econ: &LayerEconomics,
    mu: &MuRecord,
    dist_c: &DistributionSpec,
    dist_s: &DistributionSpec,
    config: &SimConfig,
) -> Result<SimResult, SimError> {
    simulate_losses_with_workers(econ, mu, dist_c, dist_s, config, 1)
}

pub fn simulate_losses_with_workers(
    econ: &LayerEconomics,
    mu: &MuRecord,
    dist_c: &DistributionSpec,
    dist_s: &DistributionSpec,
    config: &SimConfig,
    workers: usize,
) -> Result<SimResult, SimError> {
    dist_c.validate()?;
    dist_s.validate()?;
    config.validate()?;
    econ.validate().map_err(SimError::Pricing)?;
    let cents = parallel_draws(config.n, workers, |k| {
        let (delta_c, delta_s) = sample_pair(dist_c, dist_s, config.seed, k as u64);
        layer_loss(
            econ,
            mu,
            &Scenario {
                delta_c,
                delta_s,
                weight: 1.0,
            },
        )
        .minor()
    });
    Ok(summarize(cents, config))
}

/// Indifference premium over an empirical scenario set drawn from the
/// configured distributions. Degenerate (point) distributions reproduce
/// the deterministic price exactly.
pub fn mc_price_layer(
    econ: &LayerEconomics,
    mu: &MuRecord,
    dist_c: &DistributionSpec,
    dist_s: &DistributionSpec,
    config: &SimConfig,
    utility: &UtilitySpec,
) -> Result<Money, SimError> {
    let scenarios = sample_deltas(dist_c, dist_s, config)?;
    let pi = breach_probability(econ, mu);
    let premium = indifference_premium(utility, pi, &scenarios, econ, mu)?;
    Ok(Money::from_major_f64(premium))
}

/// One insured party in a portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioMember {
    pub name: String,
    pub layers: Vec<MemberLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberLayer {
    pub assessment: LayerAssessment,
    pub econ: LayerEconomics,
    pub dist_c: DistributionSpec,
    pub dist_s: DistributionSpec,
}

/// A portfolio of insured parties sharing one maturity model, with a map of
/// practices known to be common dependencies (shared vendors, shared
/// platforms) across members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    pub members: Vec<PortfolioMember>,
    pub shared_practices: BTreeMap<String, BTreeSet<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulationResult {
    pub baseline: SimResult,
    pub shocked: SimResult,
    pub affected_members: Vec<String>,
}

struct PreparedLayer {
    econ: LayerEconomics,
    mu: MuRecord,
    pi: f64,
    dist_c: DistributionSpec,
    dist_s: DistributionSpec,
    stream_base: u64,
}

fn prepare_portfolio(
    portfolio: &PortfolioSpec,
    model: &MaturityModelSpec,
    force_not_met: Option<(&str, &BTreeSet<usize>)>,
    max_level: u32,
) -> Result<Vec<PreparedLayer>, SimError> {
    let mut prepared = Vec::new();
    for (member_idx, member) in portfolio.members.iter().enumerate() {
        for (layer_idx, layer) in member.layers.iter().enumerate() {
            let mut assessment = layer.assessment.clone();
            if let Some((practice, members)) = force_not_met {
                if members.contains(&member_idx) {
                    assessment
                        .practice_status
                        .insert(practice.to_string(), PracticeStatus::NotMet);
                }
            }
            let (mu, _warnings) = maturity::mu(&assessment, model, max_level)?;
            let pi = breach_probability(&layer.econ, &mu);
            prepared.push(PreparedLayer {
                econ: layer.econ.clone(),
                mu,
                pi,
                dist_c: layer.dist_c,
                dist_s: layer.dist_s,
                stream_base: ((member_idx * 16 + layer_idx) as u64) << 32,
            });
        }
    }
    Ok(prepared)
}

fn simulate_portfolio(layers: &[PreparedLayer], config: &SimConfig, workers: usize) -> SimResult {
    let cents = parallel_draws(config.n, workers, |k| {
        let mut total = 0i64;
        for layer in layers {
            let mut rng = draw_rng(config.seed, layer.stream_base | k as u64);
            let breach: f64 = rng.gen();
            let delta_c = layer.dist_c.sample(&mut rng);
            let delta_s = layer.dist_s.sample(&mut rng);
            if breach < layer.pi {
                total += layer_loss(
                    &layer.econ,
                    &layer.mu,
                    &Scenario {
                        delta_c,
                        delta_s,
                        weight: 1.0,
                    },
                )
                .minor();
            }
        }
        total
    });
    summarize(cents, config)
}

/// Compare the portfolio loss distribution with and without a shared
/// practice failing across every member that depends on it. Both runs use
/// the same seed, so the shocked distribution dominates the baseline
/// draw-by-draw whenever the shock only lowers practice attainment.
pub fn portfolio_accumulation(
    portfolio: &PortfolioSpec,
    model: &MaturityModelSpec,
    shocked_practice: &str,
    config: &SimConfig,
    max_level: u32,
    workers: usize,
) -> Result<AccumulationResult, SimError> {
    config.validate()?;
    let members = portfolio
        .shared_practices
        .get(shocked_practice)
        .ok_or_else(|| SimError::UnknownPractice(shocked_practice.to_string()))?;
    for &idx in members {
        if idx >= portfolio.members.len() {
            return Err(SimError::InvalidDistribution(format!(
                "shared practice `{shocked_practice}` references member index {idx} out of range"
            )));
        }
    }
    let baseline_layers = prepare_portfolio(portfolio, model, None, max_level)?;
    let shocked_layers =
        prepare_portfolio(portfolio, model, Some((shocked_practice, members)), max_level)?;
    let baseline = simulate_portfolio(&baseline_layers, config, workers);
    let shocked = simulate_portfolio(&shocked_layers, config, workers);
    let affected_members = members
        .iter()
        .map(|&idx| portfolio.members[idx].name.clone())
        .collect();
    Ok(AccumulationResult {
        baseline,
        shocked,
        affected_members,
    })
}
