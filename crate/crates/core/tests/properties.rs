use std::collections::BTreeSet;

use phogad_core::features::{apply_normalization, normalize_features, FlowRecord};
use phogad_core::graph::{build_edge_adjacency, build_graph, BehaviorGraph};
use phogad_core::homology::optimize_attributes;
use phogad_core::train::{focal_loss, Adam, AdamConfig, Confusion, EvalReport, FocalConfig};
use phogad_core::{EdgeId, Label};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = BehaviorGraph> {
    (2usize..8).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, -5.0f64..5.0), 1..20).prop_map(move |pairs| {
            let edges = pairs
                .into_iter()
                .filter(|(a, b, _)| a != b)
                .map(|(a, b, x)| (a.to_string(), b.to_string(), vec![x, -x], Label::Normal))
                .collect();
            build_graph((0..n).map(|i| (i.to_string(), vec![])).collect(), edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn adjacency_is_symmetric_and_complete(g in graph_strategy()) {
        let adj = build_edge_adjacency(&g);
        let expected: usize = g
            .nodes()
            .iter()
            .map(|n| {
                let d = g.incident(n.id).len();
                d * d.saturating_sub(1)
            })
            .sum();
        prop_assert_eq!(adj.total_entries(), expected);
        for e in g.edges() {
            for entry in adj.neighbors(e.id) {
                prop_assert!(entry.neighbor != e.id);
                prop_assert!(adj.mirror(e.id, entry).is_some());
            }
        }
    }

    #[test]
    fn normalization_stays_in_unit_interval(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..30)) {
        let mut records: Vec<FlowRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, f)| FlowRecord {
                src_key: i.to_string(),
                dst_key: (i + 1).to_string(),
                features: f.clone(),
                label: Label::Normal,
            })
            .collect();
        let raw = records.clone();
        let bounds = normalize_features(&mut records).unwrap();
        for r in &records {
            prop_assert!(r.features.iter().all(|x| (0.0..=1.0).contains(x)));
        }
        let mut again = raw;
        apply_normalization(&mut again, &bounds).unwrap();
        for (a, b) in again.iter().zip(&records) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.features), bits(&b.features));
        }
    }

    #[test]
    fn attribute_pull_preserves_mean_and_locality(
        g in graph_strategy(),
        alpha in 0.0f64..=1.0,
        picks in prop::collection::vec(any::<bool>(), 20),
    ) {
        let selected: BTreeSet<EdgeId> = g.edges().iter().filter(|e| picks[e.id.index()]).map(|e| e.id).collect();
        let out = optimize_attributes(&g, &selected, alpha).unwrap();
        for e in g.edges() {
            if !selected.contains(&e.id) {
                prop_assert_eq!(&out.edge(e.id).attr, &e.attr);
            }
        }
        if !selected.is_empty() {
            for k in 0..g.edge_dim() {
                let mean = |h: &BehaviorGraph| selected.iter().map(|&e| h.edge(e).attr[k]).sum::<f64>() / selected.len() as f64;
                prop_assert!((mean(&g) - mean(&out)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adam_ignores_zero_gradients(params in prop::collection::vec(-10.0f64..10.0, 1..10), steps in 1usize..20) {
        let mut p = params.clone();
        let zeros = vec![0.0; p.len()];
        let mut adam = Adam::new(&[p.len()], 1e-2, AdamConfig::default());
        for _ in 0..steps {
            adam.update(&mut [&mut p], &[&zeros]);
        }
        prop_assert_eq!(p, params);
    }

    #[test]
    fn metrics_ignore_edge_order(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 0..50), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = EvalReport::from_confusion(Confusion::from_pairs(pairs.clone()));
        let b = EvalReport::from_confusion(Confusion::from_pairs(shuffled));
        prop_assert_eq!(a, b);
        prop_assert_eq!(a.confusion.total(), pairs.len());
    }

    #[test]
    fn anomalous_term_is_non_negative_and_decreasing(delta in 1.0f64..5.0, gamma in 0.0f64..4.0, p in 0.001f64..0.998) {
        let cfg = FocalConfig::as_printed(delta, gamma);
        let here = focal_loss(p, 1, &cfg);
        prop_assert!(here >= 0.0);
        prop_assert!(focal_loss(p + 0.001, 1, &cfg) <= here);
    }
}

#[test]
fn alpha_limits() {
    let g = build_graph(
        vec![("a".into(), vec![]), ("b".into(), vec![])],
        vec![
            ("a".into(), "b".into(), vec![0.1, 0.7], Label::Normal),
            ("a".into(), "b".into(), vec![0.3, 0.2], Label::Normal),
            ("a".into(), "b".into(), vec![0.9, 0.4], Label::Normal),
        ],
    )
    .unwrap();
    let selected: BTreeSet<EdgeId> = [EdgeId(0), EdgeId(2)].into();
    let same = optimize_attributes(&g, &selected, 1.0).unwrap();
    for (a, b) in same.edges().iter().zip(g.edges()) {
        assert_eq!(a.attr.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.attr.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
    let collapsed = optimize_attributes(&g, &selected, 0.0).unwrap();
    assert_eq!(collapsed.edge(EdgeId(0)).attr, collapsed.edge(EdgeId(2)).attr);
    assert!((collapsed.edge(EdgeId(0)).attr[0] - 0.5).abs() < 1e-15);
    assert_eq!(collapsed.edge(EdgeId(1)).attr, vec![0.3, 0.2]);
}
