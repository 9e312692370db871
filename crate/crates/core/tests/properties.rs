//! Property suites over randomly generated graphs, tensors and label vectors.

use std::collections::HashSet;

use hosgns::cooccurrence::{stat_tensor, CooccurrenceTensor, ModeRole};
use hosgns::eval::{combine, feature_dim, macro_f1, make_split, sir_simulate, OperatorTag, SirConfig, Target};
use hosgns::hosgns::{EmbeddingSet, ExportMeta};
use hosgns::seed;
use hosgns::supra::build_supra;
use hosgns::temporal_graph::{parse_contact_lines, TimeVaryingGraph};
use proptest::prelude::*;

fn events() -> impl Strategy<Value = Vec<(usize, usize, usize, f64)>> {
    prop::collection::vec((0usize..7, 0usize..7, 0usize..6, 1u8..5), 1..40).prop_filter_map("needs an edge", |raw| {
        let ev: Vec<_> = raw.into_iter().filter(|(i, j, _, _)| i != j).map(|(i, j, k, w)| (i, j, k, f64::from(w))).collect();
        (!ev.is_empty()).then_some(ev)
    })
}

fn graph() -> impl Strategy<Value = TimeVaryingGraph> {
    events().prop_map(|ev| TimeVaryingGraph::from_events(ev).expect("valid events"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parsing_conserves_contacts(
        lines in prop::collection::vec((0i64..20_000, 0u64..9, 0u64..9), 1..80),
        window in 1u64..2_000,
    ) {
        let lines: Vec<_> = lines.into_iter().filter(|(_, a, b)| a != b).collect();
        prop_assume!(!lines.is_empty());
        let text: String = lines.iter().map(|(t, a, b)| format!("{t} {a} {b}\n")).collect();
        let g = parse_contact_lines(text.as_bytes(), window).unwrap();
        prop_assert_eq!(g.total_weight(), lines.len() as f64);
        let windows: HashSet<i64> = lines.iter().map(|(t, _, _)| t.div_euclid(window as i64)).collect();
        prop_assert_eq!(g.num_times(), windows.len());
        for e in g.events() {
            prop_assert!(e.i < e.j && e.k < g.num_times() && e.weight >= 1.0);
        }
        let s = g.stats();
        prop_assert!(s.node_density > 0.0 && s.node_density <= 1.0);
        let n = s.num_nodes as f64;
        prop_assert!((s.link_density - 2.0 * s.num_events as f64 / (n * (n - 1.0) * s.num_times as f64)).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip(g in graph()) {
        let back = TimeVaryingGraph::from_json(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn supra_graph_is_symmetric_and_crosses_time(g in graph()) {
        let s = build_supra(&g);
        prop_assert_eq!(s.len(), g.num_active());
        let adj = s.adjacency();
        let mut total = 0.0;
        for a in 0..s.len() {
            let (cols, ws) = adj.neighbors(a);
            let row: f64 = ws.iter().sum();
            prop_assert!((row - s.degrees()[a]).abs() < 1e-12);
            total += row;
            for (&b, &w) in cols.iter().zip(ws) {
                prop_assert!((adj.weight(b, a) - w).abs() < 1e-15);
                prop_assert_ne!(s.unflat(a).time, s.unflat(b).time);
            }
            let v = s.unflat(a);
            prop_assert_eq!(s.flat(v.node, v.time), Some(a));
        }
        prop_assert!((total - s.volume()).abs() < 1e-9);
    }

    #[test]
    fn stat_tensor_is_a_distribution(g in graph()) {
        let t = stat_tensor(&g).unwrap();
        prop_assert!((t.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for m in t.marginals() {
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for (idx, _) in t.entries() {
            prop_assert!(t.spmi(&idx, 1.0).unwrap().is_finite());
        }
    }

    #[test]
    fn coo_round_trip(g in graph()) {
        let t = stat_tensor(&g).unwrap();
        let mut bytes = Vec::new();
        t.write_coo(&mut bytes).unwrap();
        let back = CooccurrenceTensor::read_coo(&t.meta(), bytes.as_slice()).unwrap();
        prop_assert_eq!(back.keys(), t.keys());
        for (a, b) in back.values().iter().zip(t.values()) {
            prop_assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn factor_tsv_round_trip(sizes in prop::collection::vec(1usize..6, 2..5), dim in 1usize..5, s in any::<u64>()) {
        let roles = ModeRole::defaults(sizes.len());
        let e = EmbeddingSet::uniform(&sizes, &roles, dim, 3.0, &mut seed::rng(s)).unwrap();
        for n in 0..e.order() {
            let mut bytes = Vec::new();
            e.write_factor_tsv(n, ExportMeta { kappa: 5.0, seed: s }, &mut bytes).unwrap();
            let (f, meta) = EmbeddingSet::read_factor_tsv(bytes.as_slice()).unwrap();
            prop_assert_eq!(f.data(), e.factor(n).data());
            prop_assert_eq!(f.role(), roles[n]);
            prop_assert_eq!(meta.seed, s);
        }
    }

    #[test]
    fn sir_states_only_move_forward(g in graph(), beta in 0.0f64..=1.0, mu in 0.0f64..=1.0, s in any::<u64>()) {
        let traj = sir_simulate(&g, &SirConfig::new(beta, mu, s)).unwrap();
        for k in 0..g.num_times() {
            prop_assert_eq!(traj.counts(k).iter().sum::<usize>(), g.num_nodes());
            if k > 0 {
                for i in 0..g.num_nodes() {
                    prop_assert!(traj.state(i, k - 1) <= traj.state(i, k));
                }
            }
        }
    }

    #[test]
    fn splits_have_rounded_sizes(fraction in 0.2f64..0.8, s in any::<u64>()) {
        let g = TimeVaryingGraph::from_events(
            (0..9).flat_map(|k| (0..8).map(move |i| (i, (i + 1 + k % 7) % 8, k, 1.0))),
        ).unwrap();
        let split = make_split(&g, fraction, s).unwrap();
        let count = |v: &[bool]| v.iter().filter(|&&x| x).count();
        prop_assert_eq!(count(&split.node_train), (fraction * 8.0).round() as usize);
        prop_assert_eq!(count(&split.time_train), (fraction * 9.0).round() as usize);
    }

    #[test]
    fn macro_f1_is_bounded(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60)) {
        let (truth, pred): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let f = macro_f1(&truth, &pred);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(macro_f1(&truth, &truth), 1.0);
    }

    #[test]
    fn feature_widths_match(order in 3usize..5, dim in 1usize..6, s in any::<u64>()) {
        let roles = ModeRole::defaults(order);
        let sizes = vec![4; order];
        let e = EmbeddingSet::uniform(&sizes, &roles, dim, 1.0, &mut seed::rng(s)).unwrap();
        for op in OperatorTag::ALL {
            let node = combine(op, &e, Target::Node { i: 1, k: 2 }).unwrap();
            prop_assert_eq!(node.len(), feature_dim(op, &e, true));
            let event = combine(op, &e, Target::Event { i: 0, j: 3, k: 1 }).unwrap();
            prop_assert_eq!(event.len(), feature_dim(op, &e, false));
        }
    }

    #[test]
    fn seed_derivation_is_stable_and_separates_stages(master in any::<u64>(), index in 0u64..1_000) {
        prop_assert_eq!(seed::derive(master, "train", index), seed::derive(master, "train", index));
        prop_assert_ne!(seed::derive(master, "train", index), seed::derive(master, "sir", index));
        prop_assert_ne!(seed::derive(master, "train", index), seed::derive(master, "train", index + 1));
    }
}
