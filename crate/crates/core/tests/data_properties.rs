use ndarray::{Array1, Array2};
use outerproj::data::{
    auc, generate_network, generate_response, load_csv, load_graph, load_matrix_csv, random_splits,
    signed_graph_for_example, star_graph, true_regressor, write_graph, write_matrix_csv, CsvOptions,
    Example, NetworkParams, TargetKind,
};
use outerproj::{ConstraintKind, ConstraintSpec, EdgeSign, LossKind};
use proptest::prelude::*;

fn correlation(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>();
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>();
    let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>();
    cov / (va * vb).sqrt()
}

fn variance(a: &Array1<f64>) -> f64 {
    let n = a.len() as f64;
    let mean = a.sum() / n;
    a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn genes_follow_their_regulator() {
    let params = NetworkParams { m: 100_000, n_reg: 2, n_g: 3, seed: 5, ..Default::default() };
    let (x, graph) = generate_network(&params).unwrap();
    assert_eq!(x.ncols(), 8);
    assert_eq!(graph.len(), 6);
    for r in 0..params.n_reg {
        let reg = x.column(params.regulator_index(r)).to_owned();
        assert!((variance(&reg) - 1.0).abs() <= 0.05);
        for k in 1..=params.n_g {
            let gene = x.column(params.regulator_index(r) + k).to_owned();
            let rho = correlation(&reg, &gene);
            assert!((rho - 0.7).abs() <= 0.01, "block {r} gene {k}: {rho}");
        }
    }
}

#[test]
fn regulators_have_unit_variance_at_moderate_size() {
    let params = NetworkParams { m: 10_000, seed: 8, ..Default::default() };
    let (x, _) = generate_network(&params).unwrap();
    for r in 0..params.n_reg {
        let v = variance(&x.column(params.regulator_index(r)).to_owned());
        assert!((v - 1.0).abs() <= 0.05, "regulator {r}: {v}");
    }
}

#[test]
fn response_noise_has_the_requested_variance() {
    let m = 100_000;
    let x = Array2::<f64>::zeros((m, 3));
    let w = Array1::from(vec![1.0, -2.0, 0.5]);
    let y = generate_response(&x, &w, 2.0, 99).unwrap();
    let v = variance(&y);
    assert!((v / 4.0 - 1.0).abs() <= 0.02, "{v}");
}

#[test]
fn example_regressors_and_signed_graphs() {
    for (example, inhibited) in [(Example::Ex1, 1), (Example::Ex2, 2), (Example::Ex3, 3)] {
        let w = true_regressor(example, 110).unwrap();
        assert_eq!(w.iter().filter(|v| **v != 0.0).count(), 44);
        let graph = signed_graph_for_example(example, 110).unwrap();
        let block: Vec<_> = graph.edges().iter().filter(|e| e.i == 0).collect();
        assert_eq!(block.len(), 10);
        assert_eq!(block.iter().filter(|e| e.sign == EdgeSign::Negative).count(), inhibited);

        let plain = ConstraintSpec::new(ConstraintKind::PairwiseDiff, Some(star_graph(10, 10).unwrap()), 1.0)
            .unwrap();
        let signed = ConstraintSpec::new(ConstraintKind::SignedPairwiseDiff, Some(graph), 1.0).unwrap();
        assert!(signed.value(&w).unwrap() < plain.value(&w).unwrap());
    }
}

#[test]
fn half_splits_partition_the_samples() {
    let splits = random_splits(200, 0.5, 50, 3).unwrap();
    assert_eq!(splits.len(), 50);
    for s in &splits {
        assert_eq!((s.train.len(), s.test.len()), (100, 100));
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
    }
    assert_ne!(splits[0].train, splits[1].train);
    assert_eq!(splits, random_splits(200, 0.5, 50, 3).unwrap());
}

#[test]
fn malformed_rows_name_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1,2,1\n3,4,-1\n5,oops,1\n").unwrap();
    let err = load_csv(&path, CsvOptions::default(), TargetKind::Labels).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&path, "1,2,1\n3,4\n").unwrap();
    let err = load_csv(&path, CsvOptions::default(), TargetKind::Labels).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn graph_file_rejects_out_of_range_edges() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.tsv");
    std::fs::write(&path, "d=3\n0\t1\n1\t5\t-1\n").unwrap();
    assert!(load_graph(&path, 3).is_err());
    std::fs::write(&path, "d=3\n0\t1\n1\t2\t-1\n").unwrap();
    let g = load_graph(&path, 3).unwrap();
    assert_eq!(g.edges()[1].sign, EdgeSign::Negative);
    assert!(load_graph(&path, 4).is_err());

    let again = dir.path().join("h.tsv");
    write_graph(&again, &g).unwrap();
    assert_eq!(load_graph(&again, 3).unwrap(), g);
}

proptest! {
    #[test]
    fn matrices_survive_a_csv_round_trip(
        rows in 1usize..8,
        values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 1..64),
    ) {
        let cols = values.len().div_ceil(rows);
        let mut v = values.clone();
        v.resize(rows * cols, 0.0);
        let x = Array2::from_shape_vec((rows, cols), v).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_matrix_csv(&path, &x).unwrap();
        let back = load_matrix_csv(&path, CsvOptions::default()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn auc_ignores_monotone_rescoring(
        scores in prop::collection::vec(-6.0f64..6.0, 4..40),
        flips in prop::collection::vec(any::<bool>(), 40),
    ) {
        let n = scores.len();
        let mut labels: Vec<f64> = flips[..n].iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        labels[0] = 1.0;
        labels[1] = -1.0;
        let labels = Array1::from(labels);
        let raw = Array1::from(scores);
        let base = auc(&labels, &raw).unwrap();
        for loss in [LossKind::Logistic, LossKind::Matsusita] {
            let post = raw.mapv(|s| loss.posterior(s));
            prop_assert!((auc(&labels, &post).unwrap() - base).abs() <= 1e-12);
        }
        let cubed = raw.mapv(|s| s * s * s + 2.0 * s);
        prop_assert!((auc(&labels, &cubed).unwrap() - base).abs() <= 1e-12);
    }
}

#[test]
fn auc_against_pair_enumeration() {
    let labels = Array1::from(vec![-1.0, -1.0, 1.0, 1.0, 1.0, -1.0]);
    let scores = Array1::from(vec![0.1, 0.4, 0.35, 0.8, 0.4, 0.4]);
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li > 0.0 && lj < 0.0 {
                pairs += 1.0;
                wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    assert!((auc(&labels, &scores).unwrap() - wins / pairs).abs() <= 1e-15);
}
