use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use percross_core::corpus;
use percross_core::evaluate::evaluate;
use percross_core::model::{Embedded, Relabeling};
use percross_core::oracle::{oracle, DEFAULT_BUDGET};
use percross_core::reduce::{build_paths_instance, cnf::Cnf, structural_check};
use percross_core::solve::{solve, solve_embedded, SolveOptions};
use percross_core::text::{parse_instance, parse_orders, serialize_instance, serialize_orders};
use percross_core::{ClusterId, EdgeId, PipeId, PipeOrderSet, VertexId};

fn reversed_ids(emb: &Embedded) -> Relabeling {
    let mut perm = Relabeling::default();
    let n = emb.host.clusters.len() as u32;
    for (i, &c) in emb.host.clusters.iter().enumerate() {
        perm.clusters.insert(c, ClusterId(n - 1 - i as u32));
    }
    let n = emb.host.pipes.len() as u32;
    for (i, &p) in emb.host.pipes.keys().enumerate() {
        perm.pipes.insert(p, PipeId(n - 1 - i as u32));
    }
    let n = emb.guest.vertices.len() as u32;
    for (i, &v) in emb.guest.vertices.iter().enumerate() {
        perm.vertices.insert(v, VertexId(n - 1 - i as u32));
    }
    let n = emb.guest.edges.len() as u32;
    for (i, &e) in emb.guest.edges.keys().enumerate() {
        perm.edges.insert(e, EdgeId(n - 1 - i as u32));
    }
    perm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_text_round_trips(seed in 0u64..5000) {
        if let Some(inst) = corpus::random_spur_free_cycle(seed, DEFAULT_BUDGET) {
            prop_assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
        }
    }

    #[test]
    fn orders_text_round_trips(seed in 0u64..5000) {
        if let Some(inst) = corpus::random_spur_free_cycle(seed, DEFAULT_BUDGET) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut orders = PipeOrderSet::identity(&inst.map);
            for o in orders.orders.values_mut() {
                o.shuffle(&mut rng);
            }
            prop_assert_eq!(parse_orders(&serialize_orders(&orders)).unwrap(), orders);
        }
    }

    #[test]
    fn solve_ignores_id_relabeling(seed in 0u64..5000) {
        if let Some(inst) = corpus::random_spur_free_cycle(seed, DEFAULT_BUDGET) {
            let emb = Embedded::from_instance(&inst).unwrap();
            let relabeled = emb.relabeled(&reversed_ids(&emb));
            let a = solve_embedded(&emb, SolveOptions::default()).unwrap().0;
            let b = solve_embedded(&relabeled, SolveOptions::default()).unwrap().0;
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn no_order_set_beats_solve(seed in 0u64..5000) {
        if let Some(inst) = corpus::random_spur_free_cycle(seed, DEFAULT_BUDGET) {
            let cr = solve(&inst).unwrap().0;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..8 {
                let mut orders = PipeOrderSet::identity(&inst.map);
                for o in orders.orders.values_mut() {
                    o.shuffle(&mut rng);
                }
                prop_assert!(evaluate(&inst, &orders).unwrap().total >= cr);
            }
        }
    }

    #[test]
    fn reductions_are_well_formed(seed in 0u64..1000, n in 3usize..7, m in 1usize..6) {
        let out = build_paths_instance(&Cnf::random(seed, n, m)).unwrap();
        prop_assert!(structural_check(&out).is_empty());
    }
}

#[test]
fn oracle_orders_attain_the_oracle_value() {
    let mut seen = 0;
    for seed in 0..200 {
        let Some(inst) = corpus::random_spur_free_cycle(seed, 50_000) else {
            continue;
        };
        let (v, orders) = oracle(&inst, 50_000).unwrap();
        assert_eq!(evaluate(&inst, &orders).unwrap().total, v, "seed {seed}");
        seen += 1;
    }
    assert!(seen >= 20);
}
