mod common;

use std::path::PathBuf;

use quadmpc::graph::gcn::{kaiming, Mat, PlainGcn, HIDDEN};
use quadmpc::graph::{
    aggregate, load_graph, normalize_features, pad_neighbors, parse_edge_list, unpadded, Edge, GraphFormat, PlainGraph,
    Split,
};
use quadmpc::oracle::{softmax_ode, FixedArith, FloatArith};
use quadmpc::{Error, ProtocolParams};
use rand::Rng;

fn fixture(name: &str) -> PlainGraph {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    load_graph(&p, GraphFormat::detect(&p).unwrap()).unwrap()
}

fn all_fixtures() -> Vec<PlainGraph> {
    ["triangle.json", "path4", "karate", "powerlaw200.json"].iter().map(|f| fixture(f)).collect()
}

fn features(g: &PlainGraph) -> Mat<f64> {
    Mat::new(g.num_nodes, g.feature_dim, g.features.clone()).unwrap()
}

#[test]
fn triangle_and_path_fixtures() {
    let t = fixture("triangle.json");
    assert_eq!((t.num_nodes, t.edges.len()), (3, 3));
    let p = fixture("path4");
    assert_eq!((p.num_nodes, p.edges.len()), (4, 3));
    assert_eq!(p.degrees(), vec![1, 2, 2, 1]);
}

#[test]
fn karate_degree_histogram() {
    let g = fixture("karate");
    assert_eq!((g.num_nodes, g.edges.len(), g.num_classes), (34, 78, 2));
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/karate/edges.txt");
    let text = std::fs::read_to_string(dir).unwrap();
    let mut deg = [0usize; 34];
    for tok in text.lines().filter(|l| !l.starts_with('#')).flat_map(str::split_whitespace) {
        deg[tok.parse::<usize>().unwrap()] += 1;
    }
    let mut hist = std::collections::BTreeMap::new();
    for d in deg {
        *hist.entry(d).or_insert(0) += 1;
    }
    assert_eq!(g.degree_histogram(), hist);
    let known = [(1, 1), (2, 11), (3, 6), (4, 6), (5, 3), (6, 2), (9, 1), (10, 1), (12, 1), (16, 1), (17, 1)];
    assert_eq!(g.degree_histogram().into_iter().collect::<Vec<_>>(), known);
}

#[test]
fn out_of_range_id_is_a_parse_error() {
    let e = parse_edge_list("0 1\n1 3\n", "1\n1\n1\n", None).unwrap_err();
    assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
}

fn star(leaves: usize, extra: &[(usize, usize)]) -> PlainGraph {
    let n = leaves + 1 + extra.iter().map(|e| e.0.max(e.1)).max().unwrap_or(0);
    let mut edges: Vec<Edge> = (1..=leaves).map(|i| Edge { src: 0, dst: i, weight: 1.0 }).collect();
    edges.extend(extra.iter().map(|&(s, d)| Edge { src: s, dst: d, weight: 1.0 }));
    PlainGraph {
        num_nodes: n,
        edges,
        feature_dim: 1,
        features: vec![1.0; n],
        labels: vec![0; n],
        split: vec![Split::Train; n],
        num_classes: 1,
    }
}

#[test]
fn padding_ranges() {
    // node 0 has degree 10 = d_max; node 11 has degree 3
    let g = star(10, &[(11, 1), (11, 2), (11, 3)]);
    assert_eq!(g.degrees()[0], 10);
    assert_eq!(g.degrees()[11], 3);
    let mut rng = common::rng(1);
    let mut sum = 0usize;
    let trials = 10_000;
    for _ in 0..trials {
        let pg = pad_neighbors(&g, &mut rng);
        assert_eq!(pg.added[0], 0);
        assert_eq!(pg.ne[0].len(), 10);
        assert!((3..=10).contains(&pg.ne[11].len()));
        assert!(pg.ne.iter().flatten().all(|&u| u < g.num_nodes));
        assert!(pg.ew[11][3..].iter().all(|&w| w == 0.0));
        sum += pg.added[11];
    }
    let mean = sum as f64 / trials as f64;
    assert!((mean - 3.5).abs() <= 0.1, "mean added length {mean}");
}

#[test]
fn padding_invisibility_on_fixtures() {
    let mut rng = common::rng(2);
    for g in all_fixtures() {
        let (g, _) = g.normalized();
        let plain = unpadded(&g);
        for _ in 0..5 {
            let pg = pad_neighbors(&g, &mut rng);
            assert_eq!(pg.sw, plain.sw);
            let a = aggregate(&pg, &g.features, g.feature_dim);
            let b = aggregate(&plain, &g.features, g.feature_dim);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn padding_reduction_is_half_of_pad_to_max() {
    let mut rng = common::rng(3);
    for g in all_fixtures() {
        let deg = g.degrees();
        let d_max = g.max_degree();
        let expected: f64 = deg.iter().map(|&d| (d_max - d) as f64 / 2.0).sum();
        let closed = (g.num_nodes * d_max - 2 * g.edges.len()) as f64 / 2.0;
        assert_eq!(expected, closed);
        if expected == 0.0 {
            continue;
        }
        let trials = 1000;
        let total: usize = (0..trials).map(|_| pad_neighbors(&g, &mut rng).total_added()).sum();
        let mean = total as f64 / trials as f64;
        assert!((mean / expected - 1.0).abs() <= 0.03, "mean {mean} vs {expected}");
    }
}

#[test]
fn normalized_rows_sum_to_one() {
    let mut rng = common::rng(4);
    let dim = 7;
    let x: Vec<f64> = (0..dim * 500).map(|_| rng.gen_range(0.0..10.0)).collect();
    let (y, report) = normalize_features(&x, dim);
    assert!(report.is_clean());
    for row in y.chunks(dim) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

fn single_node() -> PlainGraph {
    PlainGraph {
        num_nodes: 1,
        edges: vec![],
        feature_dim: 2,
        features: vec![0.25, 0.75],
        labels: vec![1],
        split: vec![Split::Train],
        num_classes: 2,
    }
}

#[test]
fn single_node_forward_by_hand() {
    let g = single_node();
    let w0 = Mat::new(2, HIDDEN, (0..2 * HIDDEN).map(|i| ((i % 5) as f64 - 2.0) * 0.1).collect()).unwrap();
    let w1 = Mat::new(HIDDEN, 2, (0..2 * HIDDEN).map(|i| ((i % 3) as f64 - 1.0) * 0.2).collect()).unwrap();
    // sw = 1, so Â = [1]: logits = relu(x·W0)·W1
    let x = [0.25, 0.75];
    let h: Vec<f64> = (0..HIDDEN).map(|j| (x[0] * w0.data[j] + x[1] * w0.data[HIDDEN + j]).max(0.0)).collect();
    let logits: Vec<f64> = (0..2).map(|c| (0..HIDDEN).map(|j| h[j] * w1.data[j * 2 + c]).sum()).collect();
    let want = softmax_ode(&logits, 8);
    let pg = unpadded(&g);
    let ode = PlainGcn::new(FloatArith { softmax_t: Some(8) }, &pg, &features(&g), &w0, &w1, 0.1).unwrap();
    let got = ode.predict().unwrap();
    for c in 0..2 {
        assert!((got.data[c] - want[c]).abs() < 1e-12);
    }
    let fixed = PlainGcn::new(FixedArith::new(ProtocolParams::default()), &pg, &features(&g), &w0, &w1, 0.1).unwrap();
    let got = fixed.predict().unwrap();
    for c in 0..2 {
        assert!((got.data[c] - want[c]).abs() < 1e-4, "{} vs {}", got.data[c], want[c]);
    }
}

#[test]
fn padded_and_plain_forward_agree() {
    let g = fixture("karate");
    let mut rng = common::rng(5);
    let w0 = kaiming(g.feature_dim, HIDDEN, &mut rng);
    let w1 = kaiming(HIDDEN, 2, &mut rng);
    let pg = pad_neighbors(&g, &mut rng);
    let x = features(&g);
    let a = PlainGcn::new(FloatArith::EXACT, &pg, &x, &w0, &w1, 0.1).unwrap().predict().unwrap();
    let b = PlainGcn::new(FloatArith::EXACT, &unpadded(&g), &x, &w0, &w1, 0.1).unwrap().predict().unwrap();
    assert_eq!(a, b);
    let fx = FixedArith::new(ProtocolParams::default());
    let a = PlainGcn::new(fx, &pg, &x, &w0, &w1, 0.1).unwrap().predict().unwrap();
    let b = PlainGcn::new(fx, &unpadded(&g), &x, &w0, &w1, 0.1).unwrap().predict().unwrap();
    assert_eq!(a, b);
}

#[test]
fn gradient_matches_finite_differences() {
    let g = fixture("triangle.json");
    let (g, _) = g.normalized();
    let mut rng = common::rng(6);
    let w0 = kaiming(g.feature_dim, HIDDEN, &mut rng);
    let w1 = kaiming(HIDDEN, 2, &mut rng);
    let pg = unpadded(&g);
    let x = features(&g);
    let mask = vec![true; 3];
    let loss = |w0: &Mat<f64>, w1: &Mat<f64>| {
        let m = PlainGcn::new(FloatArith::EXACT, &pg, &x, w0, w1, 0.0).unwrap();
        let t = m.forward().unwrap();
        m.report(&t, &g.labels, &mask).loss * 3.0
    };
    let m = PlainGcn::new(FloatArith::EXACT, &pg, &x, &w0, &w1, 0.0).unwrap();
    let (dw0, dw1) = m.gradients(&m.forward().unwrap(), &g.labels, &mask).unwrap();
    let eps = 1e-6;
    for i in [0, 5, 17, 31] {
        let (mut a, mut b) = (w0.clone(), w0.clone());
        a.data[i] += eps;
        b.data[i] -= eps;
        let fd = (loss(&a, &w1) - loss(&b, &w1)) / (2.0 * eps);
        assert!((fd - dw0.data[i]).abs() < 1e-5, "dW0[{i}]: {fd} vs {}", dw0.data[i]);
        let (mut a, mut b) = (w1.clone(), w1.clone());
        a.data[i] += eps;
        b.data[i] -= eps;
        let fd = (loss(&w0, &a) - loss(&w0, &b)) / (2.0 * eps);
        assert!((fd - dw1.data[i]).abs() < 1e-5, "dW1[{i}]: {fd} vs {}", dw1.data[i]);
    }
}

#[test]
fn karate_float_training_separates_communities() {
    let g = fixture("karate");
    let (g, _) = g.normalized();
    let mut rng = common::rng(7);
    let w0 = kaiming(g.feature_dim, HIDDEN, &mut rng);
    let w1 = kaiming(HIDDEN, 2, &mut rng);
    let mask = g.mask(Split::Train);
    let mut m = PlainGcn::new(FloatArith::EXACT, &unpadded(&g), &features(&g), &w0, &w1, 0.15).unwrap();
    let first = m.step(&g.labels, &mask).unwrap();
    for _ in 1..200 {
        m.step(&g.labels, &mask).unwrap();
    }
    let t = m.forward().unwrap();
    let last = m.report(&t, &g.labels, &mask);
    println!("karate float: loss {:.4} → {:.4}, accuracy {:.3}", first.loss, last.loss, last.accuracy);
    assert!(last.accuracy > 0.9);
}
