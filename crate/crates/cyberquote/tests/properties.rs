use std::collections::BTreeSet;

use cyberquote::erd;
use cyberquote::maturity::MuRecord;
use cyberquote::org::{EntityNode, Layer, OrgModel, RelationshipEdge, ZoneAssignment};
use cyberquote::pricing::{
    breach_probability, indifference_premium, insurer_utility, layer_loss, LayerEconomics,
    Scenario, UtilitySpec,
};
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9_]{0,8}"
}

fn arb_model() -> impl Strategy<Value = OrgModel> {
    let entities = proptest::collection::btree_map(ident(), 0u8..3, 1..8);
    (ident(), "[ -~]{0,20}", entities).prop_flat_map(|(_, name, entity_map)| {
        let entities: Vec<EntityNode> = {
            // Canonical order: by layer, then id.
            let mut v: Vec<EntityNode> = entity_map
                .iter()
                .map(|(id, layer)| EntityNode {
                    id: id.clone(),
                    display_name: id.clone(),
                    layer: Layer::from_index(layer + 1).unwrap(),
                    attributes: Vec::new(),
                })
                .collect();
            v.sort_by_key(|e| (e.layer.index(), e.id.clone()));
            v
        };
        let ids: Vec<String> = entities.iter().map(|e| e.id.clone()).collect();
        let endpoint = proptest::sample::select(ids.clone());
        let rels = proptest::collection::btree_map(
            ident(),
            proptest::collection::vec(endpoint, 2..4),
            0..5,
        );
        let zone_member = proptest::sample::subsequence(ids.clone(), 0..ids.len());
        (Just(name), Just(entities), rels, zone_member.clone(), zone_member).prop_map(
            |(name, entities, rels, crit, sens)| {
                let entity_ids: BTreeSet<String> =
                    entities.iter().map(|e| e.id.clone()).collect();
                let relationships = rels
                    .into_iter()
                    .filter(|(id, _)| !entity_ids.contains(id))
                    .map(|(id, endpoints)| RelationshipEdge {
                        id: id.clone(),
                        label: id,
                        endpoints,
                        attributes: Vec::new(),
                    })
                    .collect();
                OrgModel {
                    name,
                    entities,
                    relationships,
                    zones: ZoneAssignment {
                        criticality_members: crit.into_iter().collect(),
                        sensitivity_members: sens.into_iter().collect(),
                    },
                }
            },
        )
    })
}

fn arb_mu(layer: Layer) -> impl Strategy<Value = MuRecord> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(move |(p_bar, o, m)| MuRecord {
        layer,
        p_bar,
        o,
        m,
        domain_coverage: Default::default(),
    })
}

fn arb_econ(layer: Layer) -> impl Strategy<Value = LayerEconomics> {
    (
        0.001..=0.2f64,
        0.5..=2.0f64,
        0.5..=2.0f64,
        0.5..=2.0f64,
        1_000.0..=100_000.0f64,
        0.0..=100_000.0f64,
    )
        .prop_map(
            move |(v, alpha, beta, gamma, lambda_c, lambda_s)| LayerEconomics {
                layer,
                v,
                alpha,
                beta,
                gamma,
                lambda_c,
                lambda_s,
                kappa: lambda_c + lambda_s,
                c_bar: 1.0,
                s_bar: 1.0,
            },
        )
}

fn arb_scenarios() -> impl Strategy<Value = Vec<Scenario>> {
    proptest::collection::vec((0.0..=1.0f64, 0.0..=1.0f64, 0.1..=1.0f64), 1..5).prop_map(
        |rows| {
            let total: f64 = rows.iter().map(|(_, _, w)| w).sum();
            rows.into_iter()
                .map(|(delta_c, delta_s, weight)| Scenario {
                    delta_c,
                    delta_s,
                    weight: weight / total,
                })
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn serialized_models_reparse_identically(model in arb_model()) {
        let canonical = erd::canonicalized(&model);
        let text = erd::serialize_org(&canonical);
        let reparsed = erd::parse_org(&text).unwrap();
        prop_assert_eq!(reparsed, canonical);
    }

    #[test]
    fn canonicalization_is_order_insensitive(model in arb_model(), seed in any::<u64>()) {
        let mut shuffled = model.clone();
        // A cheap deterministic shuffle driven by the seed.
        let n = shuffled.entities.len();
        for i in 0..n {
            let j = (seed as usize).wrapping_mul(i + 1) % n;
            shuffled.entities.swap(i, j);
        }
        prop_assert_eq!(erd::canonicalized(&shuffled), erd::canonicalized(&model));
    }

    #[test]
    fn reachability_is_symmetric(model in arb_model()) {
        for entity in &model.entities {
            let reachable = model.reachable_from(&entity.id).unwrap();
            for other in &reachable {
                prop_assert!(
                    model.reachable_from(other).unwrap().contains(&entity.id),
                    "asymmetric reachability between {} and {}", entity.id, other
                );
            }
        }
    }

    #[test]
    fn breach_probability_strictly_decreasing_in_o(
        econ in arb_econ(Layer::Operations),
        mu in arb_mu(Layer::Operations),
        bump in 0.01..=0.5f64,
    ) {
        let mut better = mu.clone();
        better.o = (mu.o + bump).min(1.0);
        prop_assume!(better.o > mu.o);
        prop_assert!(breach_probability(&econ, &better) < breach_probability(&econ, &mu));
    }

    #[test]
    fn loss_non_increasing_in_p_bar(
        econ in arb_econ(Layer::Operations),
        mu in arb_mu(Layer::Operations),
        bump in 0.01..=0.5f64,
    ) {
        let mut better = mu.clone();
        better.p_bar = (mu.p_bar + bump).min(1.0);
        let scenario = Scenario { delta_c: 1.0, delta_s: 1.0, weight: 1.0 };
        prop_assert!(layer_loss(&econ, &better, &scenario) <= layer_loss(&econ, &mu, &scenario));
    }

    #[test]
    fn solved_premium_is_an_indifference_point(
        econ in arb_econ(Layer::Operations),
        mu in arb_mu(Layer::Operations),
        scenarios in arb_scenarios(),
        a in 1e-6..=1e-4f64,
    ) {
        let pi = breach_probability(&econ, &mu);
        for spec in [UtilitySpec::Linear, UtilitySpec::Cara { a }] {
            let premium = indifference_premium(&spec, pi, &scenarios, &econ, &mu).unwrap();
            let residual = insurer_utility(&spec, pi, premium, &scenarios, &econ, &mu);
            prop_assert!(residual.abs() < 1e-6, "{spec:?}: residual {residual}");
        }
    }

    #[test]
    fn cara_premium_dominates_linear(
        econ in arb_econ(Layer::Operations),
        mu in arb_mu(Layer::Operations),
        scenarios in arb_scenarios(),
        a in 1e-6..=1e-4f64,
    ) {
        let pi = breach_probability(&econ, &mu);
        let linear = indifference_premium(&UtilitySpec::Linear, pi, &scenarios, &econ, &mu).unwrap();
        let cara =
            indifference_premium(&UtilitySpec::Cara { a }, pi, &scenarios, &econ, &mu).unwrap();
        prop_assert!(cara >= linear - 1e-9, "cara {cara} < linear {linear}");
    }
}
