//! Breach probabilities, scenario losses, and utility-indifference premiums.
//!
//! The breach probability comes from a type-1 security breach function with
//! the met-objectives score standing in for security investment. Losses
//! scale maximum-loss figures by the degradation drawn for a scenario and
//! discount them by practice attainment. The premium is the value at which
//! the insurer's expected utility of writing the layer equals the utility of
//! not writing it, so linear utility reproduces the actuarially fair
//! premium and concave (CARA) utility adds a risk loading.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maturity::MuRecord;
use crate::money::Money;
use crate::org::Layer;
use crate::report::Warning;

/// Insurer-side economic parameters for one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEconomics {
    pub layer: Layer,
    /// Baseline loss probability before any credit for met objectives.
    pub v: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Maximum potential loss from a criticality degradation, major units.
    pub lambda_c: f64,
    /// Maximum potential loss from a sensitivity degradation, major units.
    pub lambda_s: f64,
    /// Policy limit, major units. Effective cover is `m * kappa`.
    pub kappa: f64,
    pub c_bar: f64,
    pub s_bar: f64,
}

impl LayerEconomics {
    pub fn validate(&self) -> Result<(), PricingError> {
        if !(0.0..=1.0).contains(&self.v) {
            return Err(PricingError::Parameter(format!("v {} outside [0,1]", self.v)));
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return Err(PricingError::Parameter(
                "alpha and beta must be positive".to_string(),
            ));
        }
        if self.gamma < 0.0 || self.lambda_c < 0.0 || self.lambda_s < 0.0 || self.kappa < 0.0 {
            return Err(PricingError::Parameter(
                "gamma, lambda_c, lambda_s, kappa must be non-negative".to_string(),
            ));
        }
        for (name, value) in [("c_bar", self.c_bar), ("s_bar", self.s_bar)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PricingError::Parameter(format!(
                    "{name} {value} outside [0,1]"
                )));
            }
        }
        Ok(())
    }

    /// Effective cover m*kappa for a given maturity, in cents.
    pub fn effective_limit(&self, mu: &MuRecord) -> Money {
        Money::from_major_f64(mu.m * self.kappa)
    }
}

/// Risk preferences of the insurer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UtilitySpec {
    Linear,
    Cara { a: f64 },
}

impl UtilitySpec {
    /// Parse `linear` or `cara,a=<positive real>`.
    pub fn parse(text: &str) -> Result<UtilitySpec, PricingError> {
        let text = text.trim();
        if text == "linear" {
            return Ok(UtilitySpec::Linear);
        }
        if let Some(rest) = text.strip_prefix("cara,") {
            if let Some(value) = rest.trim().strip_prefix("a=") {
                let a: f64 = value
                    .parse()
                    .map_err(|_| PricingError::Parameter(format!("bad CARA coefficient `{value}`")))?;
                if a <= 0.0 {
                    return Err(PricingError::Parameter(
                        "CARA coefficient must be positive".to_string(),
                    ));
                }
                return Ok(UtilitySpec::Cara { a });
            }
        }
        Err(PricingError::Parameter(format!(
            "utility must be `linear` or `cara,a=<real>`, got `{text}`"
        )))
    }
}

/// One degradation draw: magnitudes by which criticality and sensitivity
/// fall short of their intended states. Negative values model improvements
/// (premium discounts) and are only accepted outside strict mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub delta_c: f64,
    pub delta_s: f64,
    pub weight: f64,
}

impl Scenario {
    pub fn new(delta_c: f64, delta_s: f64, weight: f64) -> Result<Scenario, PricingError> {
        for (name, delta) in [("delta_c", delta_c), ("delta_s", delta_s)] {
            if !(-1.0..=1.0).contains(&delta) || delta.is_nan() {
                return Err(PricingError::Parameter(format!(
                    "{name} {delta} outside [-1,1]"
                )));
            }
        }
        if !(weight > 0.0) {
            return Err(PricingError::Parameter(format!(
                "scenario weight {weight} must be positive"
            )));
        }
        Ok(Scenario {
            delta_c,
            delta_s,
            weight,
        })
    }
}

/// Scale scenario weights to sum to one.
pub fn normalize_weights(scenarios: &mut [Scenario]) -> Result<(), PricingError> {
    if scenarios.is_empty() {
        return Err(PricingError::EmptyScenarios);
    }
    let total: f64 = scenarios.iter().map(|s| s.weight).sum();
    if !(total > 0.0) {
        return Err(PricingError::Parameter(
            "scenario weights must sum to a positive value".to_string(),
        ));
    }
    for scenario in scenarios {
        scenario.weight /= total;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerQuote {
    pub layer: Layer,
    pub pi: f64,
    pub expected_loss: Money,
    pub premium: Money,
    /// Premium over effective limit; absent when the limit is zero.
    pub rate: Option<f64>,
    pub limit: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub layers: Vec<LayerQuote>,
    pub total_premium: Money,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("security effort must be non-negative, got {0}")]
    NegativeEffort(f64),
    #[error("scenario set is empty")]
    EmptyScenarios,
    #[error("indifference premium search did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("layer {0} has zero effective cover but positive expected loss")]
    UninsurableLayer(Layer),
    #[error("risk aversion check applies to CARA utility only")]
    NotApplicable,
    #[error("a*L = {0} overflows the CARA expectation; rescale loss units")]
    Overflow(f64),
    #[error("layer {0:?} appears {1} times in the quote input, need exactly one")]
    LayerCount(Layer, usize),
}

/// Type-1 security breach function: v / (alpha*z + 1)^beta.
pub fn gordon_loeb_sbf(z: f64, v: f64, alpha: f64, beta: f64) -> Result<f64, PricingError> {
    if z < 0.0 || z.is_nan() {
        return Err(PricingError::NegativeEffort(z));
    }
    Ok(v / (alpha * z + 1.0).powf(beta))
}

/// Breach probability for a layer, with the met-objectives score in place
/// of security investment.
pub fn breach_probability(econ: &LayerEconomics, mu: &MuRecord) -> f64 {
    econ.v / (econ.alpha * mu.o + 1.0).powf(econ.beta)
}

fn raw_layer_loss(econ: &LayerEconomics, mu: &MuRecord, scenario: &Scenario) -> f64 {
    (econ.lambda_c * scenario.delta_c + econ.lambda_s * scenario.delta_s)
        / (1.0 + mu.p_bar).powf(econ.gamma)
}

/// Monetary loss for one scenario, rounded to cents.
pub fn layer_loss(econ: &LayerEconomics, mu: &MuRecord, scenario: &Scenario) -> Money {
    Money::from_major_f64(raw_layer_loss(econ, mu, scenario))
}

/// Probability-weighted loss over a normalized scenario set. Per-scenario
/// figures are already cents; the expectation is rounded once at the end.
pub fn expected_loss(
    econ: &LayerEconomics,
    mu: &MuRecord,
    scenarios: &[Scenario],
) -> Result<Money, PricingError> {
    if scenarios.is_empty() {
        return Err(PricingError::EmptyScenarios);
    }
    let cents: f64 = scenarios
        .iter()
        .map(|s| s.weight * layer_loss(econ, mu, s).minor() as f64)
        .sum();
    Ok(Money::from_minor_f64(cents))
}

/// Evaluate the utility of a monetary outcome `x` (major units).
pub fn utility_value(spec: &UtilitySpec, x: f64) -> f64 {
    match spec {
        UtilitySpec::Linear => x,
        UtilitySpec::Cara { a } => {
            let ax = a * x;
            if ax.abs() < 1e-8 {
                // second-order expansion; avoids catastrophic cancellation
                x - a * x * x / 2.0
            } else {
                (1.0 - (-ax).exp()) / a
            }
        }
    }
}

/// Numerically estimate -u''/u' by central differences at a few points and
/// return the maximum relative deviation from the configured coefficient.
/// A test-suite aid, not part of the pricing path.
pub fn risk_aversion_check(spec: &UtilitySpec) -> Result<f64, PricingError> {
    let UtilitySpec::Cara { a } = spec else {
        return Err(PricingError::NotApplicable);
    };
    // Wide step: the second difference divides rounding noise by a^2 h^2,
    // while the truncation bias only grows as (a h)^2 / 12.
    let h = 50.0;
    let mut max_deviation: f64 = 0.0;
    for x in [-1000.0, 0.0, 1000.0] {
        let up = utility_value(spec, x + h);
        let mid = utility_value(spec, x);
        let down = utility_value(spec, x - h);
        let first = (up - down) / (2.0 * h);
        let second = (up - 2.0 * mid + down) / (h * h);
        let estimate = -second / first;
        max_deviation = max_deviation.max((estimate - a).abs() / a);
    }
    Ok(max_deviation)
}

/// Expected utility for the insurer writing one layer at a given premium
/// (major units): breach with probability `pi` incurs a scenario loss.
pub fn insurer_utility(
    spec: &UtilitySpec,
    pi: f64,
    premium: f64,
    scenarios: &[Scenario],
    econ: &LayerEconomics,
    mu: &MuRecord,
) -> f64 {
    let breach: f64 = scenarios
        .iter()
        .map(|s| s.weight * utility_value(spec, premium - layer_loss(econ, mu, s).to_f64()))
        .sum();
    pi * breach + (1.0 - pi) * utility_value(spec, premium)
}

const MAX_ITERATIONS: usize = 200;

/// Solve the indifference equation by bracketed bisection. Kept as an
/// independent route to cross-check the closed forms.
pub fn indifference_premium_bisection(
    spec: &UtilitySpec,
    pi: f64,
    scenarios: &[Scenario],
    econ: &LayerEconomics,
    mu: &MuRecord,
) -> Result<f64, PricingError> {
    let g = |p: f64| insurer_utility(spec, pi, p, scenarios, econ, mu);
    let max_loss = scenarios
        .iter()
        .map(|s| layer_loss(econ, mu, s).to_f64())
        .fold(0.0f64, f64::max);
    let mut lo = 0.0;
    let mut hi = (pi * max_loss).max(1.0);
    let mut iterations = 0usize;
    // widen until the root is bracketed: g is increasing in the premium
    while g(hi) < 0.0 {
        hi *= 2.0;
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(PricingError::NonConvergence(MAX_ITERATIONS));
        }
    }
    while g(lo) > 0.0 {
        lo = if lo == 0.0 { -1.0 } else { lo * 2.0 };
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(PricingError::NonConvergence(MAX_ITERATIONS));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-9 * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(PricingError::NonConvergence(MAX_ITERATIONS));
        }
    }
}

/// Indifference premium in major units, by closed form where one exists.
pub fn indifference_premium(
    spec: &UtilitySpec,
    pi: f64,
    scenarios: &[Scenario],
    econ: &LayerEconomics,
    mu: &MuRecord,
) -> Result<f64, PricingError> {
    if scenarios.is_empty() {
        return Err(PricingError::EmptyScenarios);
    }
    match spec {
        UtilitySpec::Linear => {
            let expected: f64 = scenarios
                .iter()
                .map(|s| s.weight * layer_loss(econ, mu, s).to_f64())
                .sum();
            Ok(pi * expected)
        }
        UtilitySpec::Cara { a } => {
            // ln(1 + pi (E[e^{aL}] - 1)) / a, via exp_m1/ln_1p so the
            // a -> 0 limit degrades gracefully to the linear premium.
            let mut mgf_m1 = 0.0;
            for scenario in scenarios {
                let al = a * layer_loss(econ, mu, scenario).to_f64();
                if al > 700.0 {
                    return Err(PricingError::Overflow(al));
                }
                mgf_m1 += scenario.weight * al.exp_m1();
            }
            Ok((pi * mgf_m1).ln_1p() / a)
        }
    }
}

/// Price one layer: breach probability, expected loss, indifference
/// premium, and the premium rate against the effective limit.
pub fn price_layer(
    econ: &LayerEconomics,
    mu: &MuRecord,
    scenarios: &[Scenario],
    spec: &UtilitySpec,
) -> Result<LayerQuote, PricingError> {
    econ.validate()?;
    let pi = breach_probability(econ, mu);
    let expected = expected_loss(econ, mu, scenarios)?;
    let premium_major = indifference_premium(spec, pi, scenarios, econ, mu)?;
    let premium = Money::from_major_f64(premium_major);
    let limit = econ.effective_limit(mu);
    let rate = if limit.minor() > 0 {
        Some(premium_major / limit.to_f64())
    } else if expected == Money::ZERO {
        Some(0.0)
    } else {
        return Err(PricingError::UninsurableLayer(econ.layer));
    };
    Ok(LayerQuote {
        layer: econ.layer,
        pi,
        expected_loss: expected,
        premium,
        rate,
        limit,
    })
}

/// Coverage sanity check: maximum potential losses should not exceed the
/// effective cover. Reported as a warning; strict callers may escalate.
pub fn check_coverage_constraint(econ: &LayerEconomics, mu: &MuRecord) -> Vec<Warning> {
    let exposure = Money::from_major_f64(econ.lambda_c + econ.lambda_s);
    let limit = econ.effective_limit(mu);
    if exposure > limit {
        vec![Warning::new(
            "coverage-constraint",
            format!(
                "layer {}: maximum potential loss {} exceeds effective cover {}",
                econ.layer, exposure, limit
            ),
        )]
    } else {
        Vec::new()
    }
}

/// Price all three layers and roll up the total. Expects exactly one
/// (assessment-derived mu, economics, scenario set) triple per layer;
/// output ordering is Operations, Service, Systems.
pub fn quote(
    inputs: &[(MuRecord, LayerEconomics, Vec<Scenario>)],
    spec: &UtilitySpec,
) -> Result<Quote, PricingError> {
    for layer in Layer::ALL {
        let count = inputs.iter().filter(|(mu, ..)| mu.layer == layer).count();
        if count != 1 {
            return Err(PricingError::LayerCount(layer, count));
        }
    }
    let mut layers = Vec::with_capacity(3);
    let mut warnings = Vec::new();
    for layer in Layer::ALL {
        let (mu, econ, scenarios) = inputs.iter().find(|(mu, ..)| mu.layer == layer).unwrap();
        if econ.layer != mu.layer {
            return Err(PricingError::Parameter(format!(
                "economics for layer {} paired with assessment for layer {}",
                econ.layer, mu.layer
            )));
        }
        layers.push(price_layer(econ, mu, scenarios, spec)?);
        warnings.extend(check_coverage_constraint(econ, mu));
    }
    let total_premium = layers.iter().map(|l| l.premium).sum();
    Ok(Quote {
        layers,
        total_premium,
        warnings,
    })
}

/// Load per-layer economics from CSV with header
/// `layer,v,alpha,beta,gamma,lambda_c,lambda_s,kappa,c_bar,s_bar`.
pub fn load_economics(csv_text: &str) -> Result<Vec<LayerEconomics>, PricingError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let expected = [
        "layer", "v", "alpha", "beta", "gamma", "lambda_c", "lambda_s", "kappa", "c_bar", "s_bar",
    ];
    let headers = reader
        .headers()
        .map_err(|e| PricingError::Parameter(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(PricingError::Parameter(format!(
            "economics header must be `{}`",
            expected.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| PricingError::Parameter(e.to_string()))?;
        if record.len() != expected.len() {
            return Err(PricingError::Parameter(format!(
                "economics row has {} columns, expected {}",
                record.len(),
                expected.len()
            )));
        }
        let field = |i: usize| -> Result<f64, PricingError> {
            record[i]
                .parse()
                .map_err(|_| PricingError::Parameter(format!("bad number `{}`", &record[i])))
        };
        let index: u8 = record[0]
            .parse()
            .map_err(|_| PricingError::Parameter(format!("bad layer `{}`", &record[0])))?;
        let layer = Layer::from_index(index)
            .ok_or_else(|| PricingError::Parameter(format!("layer {index} outside 1..=3")))?;
        let econ = LayerEconomics {
            layer,
            v: field(1)?,
            alpha: field(2)?,
            beta: field(3)?,
            gamma: field(4)?,
            lambda_c: field(5)?,
            lambda_s: field(6)?,
            kappa: field(7)?,
            c_bar: field(8)?,
            s_bar: field(9)?,
        };
        econ.validate()?;
        out.push(econ);
    }
    Ok(out)
}

/// Load an explicit scenario set from CSV with header `delta_c,delta_s,weight`.
/// Weights are normalized to sum to one. Negative deltas (discount
/// modelling) are rejected when `strict` is set.
pub fn load_scenarios(csv_text: &str, strict: bool) -> Result<Vec<Scenario>, PricingError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let expected = ["delta_c", "delta_s", "weight"];
    let headers = reader
        .headers()
        .map_err(|e| PricingError::Parameter(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(PricingError::Parameter(format!(
            "scenario header must be `{}`",
            expected.join(",")
        )));
    }
    let mut scenarios = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| PricingError::Parameter(e.to_string()))?;
        let field = |i: usize| -> Result<f64, PricingError> {
            record[i]
                .parse()
                .map_err(|_| PricingError::Parameter(format!("bad number `{}`", &record[i])))
        };
        let scenario = Scenario::new(field(0)?, field(1)?, field(2)?)?;
        if strict && (scenario.delta_c < 0.0 || scenario.delta_s < 0.0) {
            return Err(PricingError::Parameter(
                "negative deltas are not allowed in strict mode".to_string(),
            ));
        }
        scenarios.push(scenario);
    }
    normalize_weights(&mut scenarios)?;
    Ok(scenarios)
}
