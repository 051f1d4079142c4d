//! Cyber-insurance pricing from organizational models and maturity assessments.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`org`] — a three-layer entity-relationship description of the
//!    organization, with criticality/sensitivity zones.
//! 2. [`maturity`] — a security-maturity model (domains, practices, levels)
//!    plus one assessment per layer, reduced to a [`maturity::MuRecord`].
//! 3. [`pricing`] — Gordon-Loeb breach probabilities, scenario losses, and
//!    utility-indifference premiums rolled up into a [`pricing::Quote`].
//! 4. [`claims`] — post-incident loss adjustment and settlement.
//!
//! [`erd`] provides the textual DSL, canonical serialization, and DOT export
//! for organization models; [`sim`] adds Monte Carlo scenario generation and
//! portfolio accumulation analysis.

pub mod claims;
pub mod erd;
pub mod maturity;
pub mod money;
pub mod org;
pub mod pricing;
pub mod report;
pub mod sim;

pub use money::Money;
