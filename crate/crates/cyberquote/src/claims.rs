//! Post-incident loss adjustment: recompute losses from the adjuster's own
//! maturity record, cap the payout, and report the settlement ratio.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maturity::MuRecord;
use crate::money::Money;
use crate::org::Layer;
use crate::pricing::{layer_loss, LayerEconomics, Scenario};
use crate::report::Warning;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub layer: Layer,
    pub claimed_amount: Money,
    pub observed_delta_c: f64,
    pub observed_delta_s: f64,
}

impl Claim {
    pub fn validate(&self) -> Result<(), ClaimsError> {
        if self.claimed_amount.is_negative() {
            return Err(ClaimsError::Invalid("claimed amount is negative".to_string()));
        }
        for (name, delta) in [
            ("observed_delta_c", self.observed_delta_c),
            ("observed_delta_s", self.observed_delta_s),
        ] {
            if !(0.0..=1.0).contains(&delta) {
                return Err(ClaimsError::Invalid(format!("{name} {delta} outside [0,1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub layer: Layer,
    pub adjusted_loss: Money,
    pub payout: Money,
    /// Adjusted over priced losses, unclamped. Above 1 the adjuster found
    /// worse compliance than priced; below 1, better.
    pub ratio: f64,
    pub limit: Money,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClaimsError {
    #[error("invalid claim: {0}")]
    Invalid(String),
    #[error("settlement ratio undefined: priced loss is zero")]
    ZeroPricedLoss,
    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Recompute the layer loss with the adjuster's maturity record and the
/// observed degradations. Same loss form as pricing, so matching inputs
/// reproduce the priced loss exactly.
pub fn adjust_losses(mu_prime: &MuRecord, econ: &LayerEconomics, claim: &Claim) -> Money {
    let scenario = Scenario {
        delta_c: claim.observed_delta_c,
        delta_s: claim.observed_delta_s,
        weight: 1.0,
    };
    layer_loss(econ, mu_prime, &scenario)
}

/// Adjusted over priced losses, unclamped.
pub fn settlement_ratio(adjusted: Money, priced: Money) -> Result<f64, ClaimsError> {
    if priced == Money::ZERO {
        return Err(ClaimsError::ZeroPricedLoss);
    }
    Ok(adjusted.minor() as f64 / priced.minor() as f64)
}

/// Settle a claim: pay the least of the claimed amount, the adjusted loss,
/// and the effective policy limit.
pub fn settle(
    claim: &Claim,
    adjusted: Money,
    mu: &MuRecord,
    econ: &LayerEconomics,
    priced_loss: Money,
) -> Result<Settlement, ClaimsError> {
    claim.validate()?;
    let limit = econ.effective_limit(mu);
    let payout = claim
        .claimed_amount
        .min(adjusted)
        .min(limit)
        .max(Money::ZERO);
    let mut warnings = Vec::new();
    let ratio = match settlement_ratio(adjusted, priced_loss) {
        Ok(ratio) => ratio,
        Err(ClaimsError::ZeroPricedLoss) => {
            warnings.push(Warning::new(
                "zero-priced-loss",
                format!(
                    "layer {}: priced loss is zero, settlement ratio reported as 1 by convention",
                    claim.layer
                ),
            ));
            1.0
        }
        Err(other) => return Err(other),
    };
    Ok(Settlement {
        layer: claim.layer,
        adjusted_loss: adjusted,
        payout,
        ratio,
        limit,
        warnings,
    })
}

/// Load claims from CSV with header `layer,claimed_amount,delta_c,delta_s`.
/// Amounts are in major units.
pub fn load_claims(csv_text: &str) -> Result<Vec<Claim>, ClaimsError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let expected = ["layer", "claimed_amount", "delta_c", "delta_s"];
    let headers = reader
        .headers()
        .map_err(|e| ClaimsError::Format {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(ClaimsError::Format {
            line: 1,
            message: format!("claims header must be `{}`", expected.join(",")),
        });
    }
    let mut claims = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| ClaimsError::Format {
            line,
            message: e.to_string(),
        })?;
        let number = |i: usize| -> Result<f64, ClaimsError> {
            record[i].parse().map_err(|_| ClaimsError::Format {
                line,
                message: format!("bad number `{}`", &record[i]),
            })
        };
        let index: u8 = record[0].parse().map_err(|_| ClaimsError::Format {
            line,
            message: format!("bad layer `{}`", &record[0]),
        })?;
        let layer = Layer::from_index(index).ok_or(ClaimsError::Format {
            line,
            message: format!("layer {index} outside 1..=3"),
        })?;
        let claim = Claim {
            layer,
            claimed_amount: Money::from_major_f64(number(1)?),
            observed_delta_c: number(2)?,
            observed_delta_s: number(3)?,
        };
        claim.validate()?;
        claims.push(claim);
    }
    Ok(claims)
}
