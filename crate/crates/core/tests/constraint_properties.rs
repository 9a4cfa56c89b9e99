use ndarray::Array1;
use outerproj::{ConstraintKind, ConstraintSpec, Edge, EdgeSign, FeatureGraph};
use proptest::prelude::*;

const D: usize = 6;

fn graph_strategy() -> impl Strategy<Value = FeatureGraph> {
    prop::collection::btree_set((0..D, 0..D), 1..12).prop_flat_map(|pairs| {
        let pairs: Vec<(usize, usize)> = pairs.into_iter().filter(|(i, j)| i != j).collect();
        let n = pairs.len();
        prop::collection::vec(any::<bool>(), n).prop_map(move |signs| {
            let edges = pairs
                .iter()
                .zip(signs)
                .map(|(&(i, j), neg)| Edge {
                    i,
                    j,
                    sign: if neg { EdgeSign::Negative } else { EdgeSign::Positive },
                })
                .collect();
            FeatureGraph::new(D, edges).unwrap()
        })
    })
}

// coordinates drawn from a small lattice so ties and zeros are common
fn point() -> impl Strategy<Value = Array1<f64>> {
    prop::collection::vec(
        prop_oneof![(-4i32..=4).prop_map(|k| k as f64 * 0.5), -3.0f64..3.0],
        D,
    )
    .prop_map(Array1::from)
}

fn specs(graph: &FeatureGraph) -> Vec<ConstraintSpec> {
    ConstraintKind::ALL
        .iter()
        .map(|&kind| {
            let g = kind.needs_graph().then(|| graph.clone());
            ConstraintSpec::new(kind, g, 1.0).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn subgradient_inequality(graph in graph_strategy(), w in point(), y in point()) {
        for spec in specs(&graph) {
            let s = spec.subgradient(&w).unwrap();
            let lhs = spec.value(&y).unwrap();
            let rhs = spec.value(&w).unwrap() + (&y - &w).dot(&s);
            prop_assert!(lhs >= rhs - 1e-12, "{}: {lhs} < {rhs}", spec.kind());
        }
    }
}

proptest! {
    #[test]
    fn positively_homogeneous(graph in graph_strategy(), w in point(), lambda in 0.0f64..10.0) {
        for spec in specs(&graph) {
            let scaled = spec.value(&w.mapv(|v| lambda * v)).unwrap();
            let v = spec.value(&w).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!((scaled - lambda * v).abs() <= 1e-12 * (1.0 + lambda * v));
        }
    }

    #[test]
    fn zero_at_origin(graph in graph_strategy()) {
        for spec in specs(&graph) {
            prop_assert_eq!(spec.value(&Array1::zeros(D)).unwrap(), 0.0);
        }
    }

    #[test]
    fn unsigned_graph_makes_signed_and_plain_differences_equal(
        pairs in prop::collection::btree_set((0..D, 0..D), 1..12),
        w in point(),
    ) {
        let graph = FeatureGraph::unsigned(D, pairs.into_iter().filter(|(i, j)| i != j)).unwrap();
        let plain = ConstraintSpec::new(ConstraintKind::PairwiseDiff, Some(graph.clone()), 1.0).unwrap();
        let signed = ConstraintSpec::new(ConstraintKind::SignedPairwiseDiff, Some(graph), 1.0).unwrap();
        prop_assert_eq!(plain.value(&w).unwrap(), signed.value(&w).unwrap());
        prop_assert_eq!(plain.subgradient(&w).unwrap(), signed.subgradient(&w).unwrap());
    }
}

#[test]
fn graph_kinds_require_a_graph_of_matching_size() {
    for kind in [ConstraintKind::PairwiseMax, ConstraintKind::PairwiseDiff, ConstraintKind::SignedPairwiseDiff] {
        assert!(ConstraintSpec::new(kind, None, 1.0).is_err());
        let g = FeatureGraph::unsigned(3, [(0, 1)]).unwrap();
        let spec = ConstraintSpec::new(kind, Some(g), 1.0).unwrap();
        assert!(spec.value(&Array1::zeros(4)).is_err());
    }
    assert!(ConstraintSpec::l1(-1.0).is_err());
}
