//! Acceptance gate: one test per criterion, each printing a pass line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{cmmc, fixture, point_scenarios, retail_econ, retail_mu};
use cyberquote::claims;
use cyberquote::erd;
use cyberquote::maturity::{
    self, LayerAssessment, MuRecord, PracticeStatus,
};
use cyberquote::org::{EntityNode, Layer, OrgModel, RelationshipEdge, ZoneAssignment};
use cyberquote::pricing::{
    self, breach_probability, indifference_premium, insurer_utility, layer_loss, LayerEconomics,
    Scenario, UtilitySpec,
};
use cyberquote::sim::{
    mc_price_layer, portfolio_accumulation, DistributionSpec, MemberLayer, PortfolioMember,
    PortfolioSpec, SimConfig,
};
use cyberquote::Money;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(criterion: &str) {
    println!("acceptance {criterion}: pass");
}

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xACCE_97 ^ salt)
}

fn random_mu(rng: &mut ChaCha8Rng) -> MuRecord {
    MuRecord {
        layer: Layer::Operations,
        p_bar: rng.gen(),
        o: rng.gen(),
        m: rng.gen(),
        domain_coverage: BTreeMap::new(),
    }
}

fn random_econ(rng: &mut ChaCha8Rng) -> LayerEconomics {
    let lambda_c = rng.gen_range(1_000.0..100_000.0);
    let lambda_s = rng.gen_range(0.0..100_000.0);
    LayerEconomics {
        layer: Layer::Operations,
        v: rng.gen_range(0.001..0.2),
        alpha: rng.gen_range(0.5..2.0),
        beta: rng.gen_range(0.5..2.0),
        gamma: rng.gen_range(0.5..2.0),
        lambda_c,
        lambda_s,
        kappa: lambda_c + lambda_s,
        c_bar: 1.0,
        s_bar: 1.0,
    }
}

fn random_scenarios(rng: &mut ChaCha8Rng) -> Vec<Scenario> {
    let n = rng.gen_range(1..5);
    let mut rows: Vec<Scenario> = (0..n)
        .map(|_| Scenario {
            delta_c: rng.gen(),
            delta_s: rng.gen(),
            weight: rng.gen_range(0.1..1.0),
        })
        .collect();
    let total: f64 = rows.iter().map(|s| s.weight).sum();
    for row in &mut rows {
        row.weight /= total;
    }
    rows
}

#[test]
fn criterion_1_online_retail_quote_reproduction() {
    let econ = retail_econ();
    let mu = retail_mu();
    let scenarios = point_scenarios();
    let inputs: Vec<_> = (0..3)
        .map(|i| (mu[i].clone(), econ[i].clone(), scenarios.clone()))
        .collect();
    let quote = pricing::quote(&inputs, &UtilitySpec::Linear).unwrap();
    let pis = [0.033333, 0.012500, 0.005882];
    let premiums = [2222.22, 1562.50, 1038.06];
    for (i, layer) in quote.layers.iter().enumerate() {
        assert!((layer.pi - pis[i]).abs() < 1e-6, "layer {} pi", i + 1);
        assert!(
            (layer.premium.to_f64() - premiums[i]).abs() < 0.01,
            "layer {} premium {}",
            i + 1,
            layer.premium
        );
    }
    assert!((quote.total_premium.to_f64() - 4822.78).abs() < 0.01);
    pass("criterion 1 (online-retail quote reproduction)");
}

#[test]
fn criterion_2_cmmc_fixture_counts() {
    let spec = cmmc();
    assert_eq!(spec.practices_at_level(1).count(), 17);
    assert_eq!(
        spec.practices_at_level(1)
            .filter(|p| p.domain_code == "AC")
            .count(),
        4
    );
    pass("criterion 2 (CMMC fixture counts)");
}

#[test]
fn criterion_3_indifference_property() {
    let mut rng = rng(3);
    for case in 0..1_000 {
        let econ = random_econ(&mut rng);
        let mu = random_mu(&mut rng);
        let scenarios = random_scenarios(&mut rng);
        let pi = breach_probability(&econ, &mu);
        let a = rng.gen_range(1e-6..1e-4);
        for spec in [UtilitySpec::Linear, UtilitySpec::Cara { a }] {
            let premium = indifference_premium(&spec, pi, &scenarios, &econ, &mu).unwrap();
            let residual = insurer_utility(&spec, pi, premium, &scenarios, &econ, &mu);
            assert!(
                residual.abs() < 1e-6,
                "case {case} {spec:?}: residual {residual}"
            );
        }
    }
    pass("criterion 3 (indifference property, 1000 cases)");
}

#[test]
fn criterion_4_closed_form_vs_monte_carlo() {
    let econ = &retail_econ()[0];
    let mu = &retail_mu()[0];
    let config = SimConfig {
        n: 1_000_000,
        seed: 20_240_817,
    };
    let mc = mc_price_layer(
        econ,
        mu,
        &DistributionSpec::Uniform { lo: 0.0, hi: 1.0 },
        &DistributionSpec::Point { value: 0.0 },
        &config,
        &UtilitySpec::Linear,
    )
    .unwrap();
    let pi = breach_probability(econ, mu);
    let closed = pi * econ.lambda_c * 0.5 / (1.0 + mu.p_bar).powf(econ.gamma);
    let relative = (mc.to_f64() - closed).abs() / closed;
    assert!(relative < 0.01, "mc {mc} vs closed {closed}");
    pass("criterion 4 (closed form vs Monte Carlo, n=10^6)");
}

#[test]
fn criterion_5_risk_loading() {
    let mut rng = rng(5);
    for case in 0..1_000 {
        let econ = random_econ(&mut rng);
        let mu = random_mu(&mut rng);
        let scenarios = random_scenarios(&mut rng);
        let pi = breach_probability(&econ, &mu);
        let a = rng.gen_range(1e-6..1e-4);
        let linear =
            indifference_premium(&UtilitySpec::Linear, pi, &scenarios, &econ, &mu).unwrap();
        let cara =
            indifference_premium(&UtilitySpec::Cara { a }, pi, &scenarios, &econ, &mu).unwrap();
        assert!(cara >= linear - 1e-9, "case {case}: {cara} < {linear}");
        let nearly_linear =
            indifference_premium(&UtilitySpec::Cara { a: 1e-12 }, pi, &scenarios, &econ, &mu)
                .unwrap();
        if linear > 0.0 {
            assert!(
                ((nearly_linear - linear) / linear).abs() < 1e-6,
                "case {case}: a->0 limit {nearly_linear} vs {linear}"
            );
        }
    }
    pass("criterion 5 (risk loading, 1000 cases)");
}

#[test]
fn criterion_6_monotonicity_suite() {
    let spec = cmmc();
    let mut rng = rng(6);
    for case in 0..1_000 {
        let econ = random_econ(&mut rng);
        let mu = random_mu(&mut rng);

        // pi strictly decreasing in o.
        let mut better = mu.clone();
        better.o = (mu.o + rng.gen_range(0.01..0.5)).min(1.0);
        if better.o > mu.o {
            assert!(
                breach_probability(&econ, &better) < breach_probability(&econ, &mu),
                "case {case}: pi not decreasing in o"
            );
        }

        // L non-increasing in p_bar.
        let mut hardened = mu.clone();
        hardened.p_bar = (mu.p_bar + rng.gen_range(0.01..0.5)).min(1.0);
        let scenario = Scenario {
            delta_c: 1.0,
            delta_s: 1.0,
            weight: 1.0,
        };
        assert!(
            layer_loss(&econ, &hardened, &scenario) <= layer_loss(&econ, &mu, &scenario),
            "case {case}: loss not non-increasing in p_bar"
        );

        // level_achieved and p_bar non-decreasing under improvement.
        let mut assessment = LayerAssessment {
            layer: Layer::Operations,
            role: maturity::AssessorRole::Underwriting,
            practice_status: BTreeMap::new(),
            domain_weights: BTreeMap::new(),
            objectives: Vec::new(),
            maturity_override: None,
            objective_domain_matrix: None,
        };
        for practice in &spec.practices {
            let status = match rng.gen_range(0..3) {
                0 => PracticeStatus::NotMet,
                1 => PracticeStatus::NotRelevant,
                _ => PracticeStatus::Met,
            };
            assessment
                .practice_status
                .insert(practice.id.clone(), status);
        }
        let mut improved = assessment.clone();
        let target = &spec.practices[rng.gen_range(0..spec.practices.len())].id;
        let bumped = match improved.practice_status[target] {
            PracticeStatus::NotMet => PracticeStatus::NotRelevant,
            _ => PracticeStatus::Met,
        };
        improved.practice_status.insert(target.clone(), bumped);
        let (level_before, _) = maturity::level_achieved(&assessment, &spec);
        let (level_after, _) = maturity::level_achieved(&improved, &spec);
        assert!(level_after >= level_before, "case {case}: level regressed");
        let (p_before, _) = maturity::practice_score(&assessment, &spec, spec.num_levels);
        let (p_after, _) = maturity::practice_score(&improved, &spec, spec.num_levels);
        assert!(
            p_after >= p_before - 1e-12,
            "case {case}: p_bar regressed {p_before} -> {p_after}"
        );
    }
    pass("criterion 6 (monotonicity suite, 1000 cases each)");
}

fn random_model(rng: &mut ChaCha8Rng) -> OrgModel {
    let entity_count = rng.gen_range(1..8);
    let mut entities: Vec<EntityNode> = (0..entity_count)
        .map(|i| EntityNode {
            id: format!("E{i}"),
            display_name: format!("Entity {i}"),
            layer: Layer::from_index(rng.gen_range(1..=3)).unwrap(),
            attributes: (0..rng.gen_range(0..3))
                .map(|j| format!("attr {j} \"quoted\""))
                .collect(),
        })
        .collect();
    entities.sort_by_key(|e| (e.layer.index(), e.id.clone()));
    let ids: Vec<String> = entities.iter().map(|e| e.id.clone()).collect();
    let pick = |rng: &mut ChaCha8Rng| ids[rng.gen_range(0..ids.len())].clone();
    let relationships = (0..rng.gen_range(0..5))
        .map(|i| {
            let arity = rng.gen_range(2..4);
            RelationshipEdge {
                id: format!("r{i}"),
                label: format!("label {i}"),
                endpoints: (0..arity).map(|_| pick(rng)).collect(),
                attributes: Vec::new(),
            }
        })
        .collect();
    let subset = |rng: &mut ChaCha8Rng| -> BTreeSet<String> {
        ids.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect()
    };
    OrgModel {
        name: "Acceptance".to_string(),
        entities,
        relationships,
        zones: ZoneAssignment {
            criticality_members: subset(rng),
            sensitivity_members: subset(rng),
        },
    }
}

#[test]
fn criterion_7_parser_round_trip() {
    let mut rng = rng(7);
    for case in 0..500 {
        let model = random_model(&mut rng);
        let text = erd::serialize_org(&model);
        let reparsed = erd::parse_org(&text).unwrap_or_else(|e| panic!("case {case}: {e}"));
        assert_eq!(reparsed, model, "case {case}");
    }
    let payroll = erd::parse_org(&fixture("payroll.org")).unwrap();
    assert_eq!(payroll.validate().error_count(), 0);
    assert_eq!(payroll.entities.len(), 5);
    assert_eq!(payroll.relationships.len(), 5);
    pass("criterion 7 (parser round trip, 500 models + payroll fixture)");
}

#[test]
fn criterion_8_adjuster() {
    // Matching assessments settle at exactly ratio 1.
    let econ = &retail_econ()[0];
    let mu = &retail_mu()[0];
    let claim = claims::Claim {
        layer: Layer::Operations,
        claimed_amount: Money::from_major_f64(100_000.0),
        observed_delta_c: 1.0,
        observed_delta_s: 0.0,
    };
    let priced = layer_loss(econ, mu, &point_scenarios()[0]);
    let adjusted = claims::adjust_losses(mu, econ, &claim);
    let settlement = claims::settle(&claim, adjusted, mu, econ, priced).unwrap();
    assert_eq!(settlement.ratio, 1.0);

    // Payout never exceeds min(claim, m * kappa).
    let mut rng = rng(8);
    for case in 0..1_000 {
        let econ = random_econ(&mut rng);
        let mu = random_mu(&mut rng);
        let mu_prime = random_mu(&mut rng);
        let claim = claims::Claim {
            layer: Layer::Operations,
            claimed_amount: Money::from_major_f64(rng.gen_range(0.0..200_000.0)),
            observed_delta_c: rng.gen(),
            observed_delta_s: rng.gen(),
        };
        let scenario = Scenario {
            delta_c: claim.observed_delta_c,
            delta_s: claim.observed_delta_s,
            weight: 1.0,
        };
        let priced = layer_loss(&econ, &mu, &scenario);
        let adjusted = claims::adjust_losses(&mu_prime, &econ, &claim);
        let settlement = claims::settle(&claim, adjusted, &mu, &econ, priced).unwrap();
        let cap = claim.claimed_amount.min(econ.effective_limit(&mu));
        assert!(
            settlement.payout <= cap,
            "case {case}: payout {} over cap {}",
            settlement.payout,
            cap
        );
    }
    pass("criterion 8 (adjuster ratio and payout cap, 1000 cases)");
}

#[test]
fn criterion_9_accumulation() {
    let spec = cmmc();
    let econ = retail_econ();
    let assessment =
        maturity::parse_assessment(&fixture("retail-l1.assess")).unwrap();
    let member = |name: &str| PortfolioMember {
        name: name.to_string(),
        layers: vec![MemberLayer {
            assessment: assessment.clone(),
            econ: econ[0].clone(),
            dist_c: DistributionSpec::Uniform { lo: 0.2, hi: 0.8 },
            dist_s: DistributionSpec::Point { value: 0.0 },
        }],
    };
    let portfolio = PortfolioSpec {
        members: vec![member("alpha"), member("bravo")],
        shared_practices: BTreeMap::from([
            ("AC.L1-3.1.1".to_string(), BTreeSet::from([0, 1])),
            ("AC.L1-3.1.2".to_string(), BTreeSet::new()),
        ]),
    };
    let config = SimConfig { n: 5_000, seed: 99 };
    let shocked =
        portfolio_accumulation(&portfolio, &spec, "AC.L1-3.1.1", &config, spec.num_levels, 1)
            .unwrap();
    assert!(shocked.shocked.mean >= shocked.baseline.mean);
    for (s, b) in shocked
        .shocked
        .quantiles
        .iter()
        .zip(shocked.baseline.quantiles.iter())
    {
        assert!(s.value >= b.value, "quantile {}", s.p);
    }
    let unshared =
        portfolio_accumulation(&portfolio, &spec, "AC.L1-3.1.2", &config, spec.num_levels, 1)
            .unwrap();
    assert_eq!(unshared.baseline, unshared.shocked);
    pass("criterion 9 (accumulation shock dominance and no-sharing identity)");
}

// Criterion 10 (CLI determinism in structured output mode) lives in the
// cyberquote-cli crate's acceptance test, next to the binary it exercises.
