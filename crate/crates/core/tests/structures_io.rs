use gbart::data::{read_table, save_dataset, Schema};
use gbart::forest_io::{check_model, read_forests, write_forests, ForestDraw};
use gbart::sampler::partition;
use gbart::tree::{sample_split_rule, sample_tree_prior, TreeMove};
use gbart::zoo::{Gaussian, HetVarSpec, MeanLink, PhiPrior, VarianceFn};
use gbart::{Dataset, Forest, ModelSpec, NodePath, Observation, ScalingMethod, TreePriorParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_data(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    // A coarse grid makes ties with cutpoints likely.
    let x: Vec<f64> = (0..n * p).map(|_| (rng.random_range(0..=8) as f64) / 8.0).collect();
    Dataset::new(x, p, vec![Observation::new(0.0); n]).unwrap()
}

fn random_split_probs(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..p).map(|_| rng.random_range(0.05..1.0)).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

proptest! {
    #[test]
    fn partition_assigns_each_row_to_its_leaf(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.random_range(1..5);
        let data = random_data(&mut rng, 60, p);
        let s = random_split_probs(&mut rng, p);
        let prior = TreePriorParams::new(0.95, 0.5).unwrap();
        let tree = sample_tree_prior(&mut rng, &prior, &s, 1.0);
        let leaves = partition(&tree, &data);
        prop_assert_eq!(leaves.len(), tree.num_leaves());
        let mut seen = vec![0; data.n()];
        for (path, members) in &leaves {
            prop_assert!(members.windows(2).all(|w| w[0] < w[1]));
            let region = tree.node_region(*path, p).unwrap();
            for &i in members {
                seen[i] += 1;
                prop_assert_eq!(tree.route(data.row(i)).unwrap(), *path);
                prop_assert!(region.contains(data.row(i)));
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn birth_then_death_restores_the_tree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = 3;
        let s = vec![1.0 / 3.0; 3];
        let tree = sample_tree_prior(&mut rng, &TreePriorParams::new(0.9, 1.0).unwrap(), &s, 1.0);
        let sets = tree.node_sets();
        let leaf = sets.leaves[rng.random_range(0..sets.leaves.len())];
        let rule = sample_split_rule(&mut rng, &tree.node_region(leaf, p).unwrap(), &s);
        let grown = tree
            .apply_move(&TreeMove::Birth { leaf, rule: rule.rule, left_value: 0.3, right_value: -0.2 })
            .unwrap();
        prop_assert_eq!(grown.num_leaves(), tree.num_leaves() + 1);
        prop_assert!(grown.node_sets().nog.contains(&leaf));
        let value = tree.leaf_value(leaf).unwrap();
        let back = grown.apply_move(&TreeMove::Death { branch: leaf, value }).unwrap();
        prop_assert_eq!(back, tree.clone());
        // Moves aimed at the wrong kind of node are refused.
        let wrong = TreeMove::Death { branch: leaf, value };
        prop_assert!(tree.apply_move(&wrong).is_err());
    }
}

fn random_forest(rng: &mut ChaCha8Rng, p: usize) -> Forest {
    let s = random_split_probs(rng, p);
    let prior = TreePriorParams::default();
    let sigma_mu = rng.random_range(0.01..3.0);
    let num_trees = rng.random_range(1..12);
    Forest {
        trees: (0..num_trees).map(|_| sample_tree_prior(rng, &prior, &s, sigma_mu)).collect(),
        sigma_mu,
        split_probs: s,
    }
}

#[test]
fn forest_files_round_trip_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = 4;
    let model = ModelSpec::HetVar(HetVarSpec {
        link: MeanLink::Identity,
        variance: VarianceFn::Quadratic,
        phi_prior: PhiPrior::HalfCauchy(0.75),
    });
    let family = model.build(1e-6);
    let draws: Vec<ForestDraw> = (0..100)
        .map(|k| ForestDraw::new(model, k % 3, k, random_forest(&mut rng, p), family.as_ref()))
        .collect();
    let mut buf = Vec::new();
    write_forests(&mut buf, &draws).unwrap();
    let back = read_forests(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back, draws);
    let points: Vec<Vec<f64>> = (0..1000).map(|_| (0..p).map(|_| rng.random()).collect()).collect();
    let mut worst = 0.0f64;
    for (a, b) in draws.iter().zip(&back) {
        for x in &points {
            worst = worst.max((a.forest.evaluate(x) - b.forest.evaluate(x)).abs());
        }
    }
    assert_eq!(worst, 0.0);
    assert!(check_model(&back, &model).is_ok());
    assert!(matches!(check_model(&back, &ModelSpec::Gaussian), Err(gbart::Error::Validation(_))));
}

#[test]
fn malformed_forest_files_report_lines() {
    let f = Forest::new(1, 2, 0.5);
    let d = ForestDraw::new(ModelSpec::Gaussian, 0, 1, f, &Gaussian::new(1.0));
    let mut buf = Vec::new();
    write_forests(&mut buf, &[d]).unwrap();
    let good = String::from_utf8(buf).unwrap();
    assert!(read_forests(&good).is_ok());
    let truncated: String = good.lines().filter(|l| *l != "end").map(|l| format!("{l}\n")).collect();
    assert!(read_forests(&truncated).is_err());
    let garbled = good.replacen("value=", "value=abc", 1);
    match read_forests(&garbled) {
        Err(gbart::Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(read_forests("forest chain=0\n").is_err());
}

#[test]
fn path_text_round_trips() {
    let mut path = NodePath::ROOT;
    assert_eq!(path.to_string().parse::<NodePath>().unwrap(), path);
    for k in 0..20 {
        path = if k % 3 == 0 { path.left() } else { path.right() };
        assert_eq!(path.to_string().parse::<NodePath>().unwrap(), path);
        assert_eq!(path.parent().unwrap().depth(), path.depth() - 1);
    }
}

#[test]
fn scaling_inverts_to_the_original_covariates() {
    let text = "x1,x2,x3,y,delta\n2,7,-1e3,1.5,1\n4,7,250.25,2,0\n6,7,3.5e4,0.1,1\n5.5,7,12,9,1\n";
    for method in [ScalingMethod::MinMax, ScalingMethod::Quantile] {
        let data = read_table(text.as_bytes(), Schema::SURVIVAL).unwrap().into_dataset(method).unwrap();
        assert!(data.x().iter().all(|v| (0.0..=1.0).contains(v)));
        let raw = read_table(text.as_bytes(), Schema::SURVIVAL).unwrap();
        for i in 0..data.n() {
            let back = data.unscaled_row(i).unwrap();
            for j in [0, 2] {
                let want = raw.x[i * 3 + j];
                assert!((back[j] - want).abs() <= 1e-12 * want.abs().max(1.0), "{method:?} row {i} col {j}");
            }
            assert_eq!(data.row(i)[1], 0.5);
        }
    }
    let mm = read_table(text.as_bytes(), Schema::TRAINING).unwrap().into_dataset(ScalingMethod::MinMax).unwrap();
    assert_eq!([mm.row(0)[0], mm.row(1)[0], mm.row(2)[0]], [0.0, 0.5, 1.0]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    save_dataset(&path, &mm).unwrap();
    let again = gbart::data::load_dataset(&path, Schema::SURVIVAL).unwrap();
    assert_eq!(again.x(), mm.x());
    assert_eq!(again.obs(), mm.obs());
}

#[test]
fn table_errors_name_the_cell() {
    let cases = [
        ("x1,y\n0.1,1\n0.2,abc\n", Schema::TRAINING, "row 2"),
        ("x1,x3,y\n0.1,0.2,1\n", Schema::TRAINING, "x2"),
        ("x1,y\n0.1,1\n", Schema::SURVIVAL, "delta"),
        ("x1,y,delta\n0.1,1,2\n", Schema::SURVIVAL, "delta"),
        ("x1\n0.1\n", Schema::TRAINING, "y"),
    ];
    for (text, schema, needle) in cases {
        let err = read_table(text.as_bytes(), schema).unwrap_err().to_string();
        assert!(err.contains(needle), "'{err}' should mention {needle}");
    }
    let q = read_table("x2,x1\n0.3,0.1\n".as_bytes(), Schema::QUERY).unwrap();
    assert_eq!(q.x, vec![0.1, 0.3]);
}
