mod common;

use common::{point_scenarios, retail_econ, retail_mu};
use cyberquote::pricing::{
    self, breach_probability, expected_loss, indifference_premium, indifference_premium_bisection,
    insurer_utility, layer_loss, risk_aversion_check, utility_value, PricingError,
    Scenario, UtilitySpec,
};
use cyberquote::Money;

#[test]
fn retail_breach_probabilities() {
    let econ = retail_econ();
    let mu = retail_mu();
    let expected = [1.0 / 30.0, 0.0125, 0.01 / 1.7];
    for i in 0..3 {
        let pi = breach_probability(&econ[i], &mu[i]);
        assert!((pi - expected[i]).abs() < 1e-9, "layer {}: {pi}", i + 1);
    }
}

#[test]
fn retail_layer_losses() {
    let econ = retail_econ();
    let mu = retail_mu();
    let scenario = point_scenarios()[0];
    let expected = [6_666_667, 12_500_000, 17_647_059]; // cents
    for i in 0..3 {
        let loss = layer_loss(&econ[i], &mu[i], &scenario);
        assert_eq!(loss.minor(), expected[i], "layer {}", i + 1);
    }
}

#[test]
fn half_weight_scenario_expected_loss_rounds_half_even() {
    let econ = &retail_econ()[0];
    let mu = &retail_mu()[0];
    let scenarios = vec![
        Scenario::new(1.0, 0.0, 0.5).unwrap(),
        Scenario::new(0.0, 0.0, 0.5).unwrap(),
    ];
    // 0.5 * 6666667 cents = 3333333.5 -> 3333334 under half-even.
    assert_eq!(
        expected_loss(econ, mu, &scenarios).unwrap(),
        Money::from_minor(3_333_334)
    );
}

#[test]
fn retail_linear_quote_matches_oracle() {
    let econ = retail_econ();
    let mu = retail_mu();
    let scenarios = point_scenarios();
    let inputs: Vec<_> = (0..3)
        .map(|i| (mu[i].clone(), econ[i].clone(), scenarios.clone()))
        .collect();
    let quote = pricing::quote(&inputs, &UtilitySpec::Linear).unwrap();
    let premiums = [222_222, 156_250, 103_806]; // cents
    let limits = [5_000_000, 12_000_000, 21_000_000]; // m * kappa, cents
    let rates = [0.044444, 0.013021, 0.004943];
    for (i, layer) in quote.layers.iter().enumerate() {
        assert_eq!(layer.premium.minor(), premiums[i], "layer {}", i + 1);
        assert_eq!(layer.limit.minor(), limits[i], "layer {}", i + 1);
        let rate = layer.rate.unwrap();
        assert!((rate - rates[i]).abs() < 1e-4, "layer {}: {rate}", i + 1);
    }
    assert_eq!(quote.total_premium.minor(), 482_278);
}

#[test]
fn cara_utility_value_oracle() {
    let spec = UtilitySpec::Cara { a: 1e-5 };
    let u = utility_value(&spec, 66_666.67);
    assert!((u - 48_658.29).abs() < 0.01, "got {u}");
    // Taylor branch agrees with the closed form near zero.
    let tiny = utility_value(&spec, 1e-4);
    assert!((tiny - 1e-4).abs() < 1e-12);
}

#[test]
fn cara_premium_oracle_and_bisection_agreement() {
    let econ = &retail_econ()[0];
    let mu = &retail_mu()[0];
    let scenarios = point_scenarios();
    let spec = UtilitySpec::Cara { a: 1e-5 };
    let pi = breach_probability(econ, mu);
    let closed = indifference_premium(&spec, pi, &scenarios, econ, mu).unwrap();
    assert!((closed - 3110.24).abs() < 0.01, "got {closed}");
    let bisected = indifference_premium_bisection(&spec, pi, &scenarios, econ, mu).unwrap();
    assert!((closed - bisected).abs() / closed < 1e-6);
    // The solved premium leaves the insurer indifferent.
    let residual = insurer_utility(&spec, pi, closed, &scenarios, econ, mu);
    assert!(residual.abs() < 1e-6, "residual {residual}");
}

#[test]
fn risk_aversion_coefficient_recovered() {
    let deviation = risk_aversion_check(&UtilitySpec::Cara { a: 1e-5 }).unwrap();
    assert!(deviation < 1e-6, "deviation {deviation}");
    assert!(matches!(
        risk_aversion_check(&UtilitySpec::Linear),
        Err(PricingError::NotApplicable)
    ));
}

#[test]
fn coverage_constraint_warns_when_exposure_exceeds_cover() {
    let econ = &retail_econ()[0];
    let mu = &retail_mu()[0];
    // lambda_c 100k against effective cover 50k.
    let warnings = pricing::check_coverage_constraint(econ, mu);
    assert_eq!(warnings.len(), 1);
    assert_eq!(warnings[0].code, "coverage-constraint");
}

#[test]
fn cara_overflow_guard() {
    let econ = &retail_econ()[0];
    let mu = &retail_mu()[0];
    let scenarios = point_scenarios();
    let spec = UtilitySpec::Cara { a: 1.0 };
    let err = indifference_premium(&spec, 0.5, &scenarios, econ, mu).unwrap_err();
    assert!(matches!(err, PricingError::Overflow(_)));
}

#[test]
fn strict_scenario_loading_rejects_negative_deltas() {
    let text = "delta_c,delta_s,weight\n-0.1,0,1\n";
    assert!(pricing::load_scenarios(text, true).is_err());
    let scenarios = pricing::load_scenarios(text, false).unwrap();
    assert_eq!(scenarios.len(), 1);
    assert!((scenarios[0].delta_c + 0.1).abs() < 1e-12);
}

#[test]
fn utility_spec_parsing() {
    assert_eq!(UtilitySpec::parse("linear").unwrap(), UtilitySpec::Linear);
    assert_eq!(
        UtilitySpec::parse("cara,a=1e-5").unwrap(),
        UtilitySpec::Cara { a: 1e-5 }
    );
    assert!(UtilitySpec::parse("quadratic").is_err());
}
