use rand::Rng;
use rand_distr::StandardNormal;
use vimkit::boost::{
    boost_fit, boost_importance, boost_vim, grad_hess, leaf_weight, loss_value, split_gain, BoostConfig, BoostNode,
    Loss,
};
use vimkit::rng::seeded;
use vimkit::{Dataset, Predictor, Task};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn reg(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
    let p = rows[0].len();
    Dataset::new(rows, y, names(p), Task::Regression).unwrap()
}

fn normal_rows(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = seeded(seed);
    (0..n).map(|_| (0..p).map(|_| r.sample(StandardNormal)).collect()).collect()
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = seeded(77);
    for _ in 0..1000 {
        let yhat: f64 = r.random_range(-4.0..4.0);
        for (loss, y) in [(Loss::Squared, r.random_range(-5.0..5.0)), (Loss::Logistic, f64::from(r.random_bool(0.5)))] {
            let (g, h) = grad_hess(loss, y, yhat);
            let s = 1e-5;
            let fd_g = (loss_value(loss, y, yhat + s) - loss_value(loss, y, yhat - s)) / (2.0 * s);
            let fd_h = (grad_hess(loss, y, yhat + s).0 - grad_hess(loss, y, yhat - s).0) / (2.0 * s);
            assert!((fd_g - g).abs() < 1e-5, "{loss:?} g {fd_g} vs {g}");
            assert!((fd_h - h).abs() < 1e-5, "{loss:?} h {fd_h} vs {h}");
        }
        let y = f64::from(r.random_bool(0.5));
        let s = 1e-6;
        let fd = (loss_value(Loss::Logistic, y, yhat + s) - loss_value(Loss::Logistic, y, yhat - s)) / (2.0 * s);
        assert!((fd - grad_hess(Loss::Logistic, y, yhat).0).abs() < 1e-6);
    }
}

#[test]
fn gain_examples() {
    assert_eq!(split_gain(-4.0, 2.0, -4.0, 2.0, 0.0, 0.0), 0.0);
    assert_eq!(split_gain(-4.0, 2.0, 4.0, 2.0, 0.0, 0.0), 8.0);
    assert!(split_gain(-4.0, 2.0, 4.0, 2.0, 0.0, 8.5) < 0.0);
    let mut prev = f64::INFINITY;
    for lambda in [0.0, 1.0, 10.0, 100.0, 1e4] {
        let w = leaf_weight(-8.0, 4.0, lambda).unwrap().abs();
        assert!(w < prev || lambda == 0.0);
        prev = w;
    }
}

#[test]
fn single_leaf_is_mean() {
    let d = reg(vec![vec![0.0], vec![1.0]], vec![1.0, 3.0]);
    let cfg = BoostConfig {
        n_rounds: 1,
        eta: 1.0,
        lambda: 0.0,
        max_depth: 0,
        base_score: Some(0.0),
        ..BoostConfig::default()
    };
    let m = boost_fit(&d, &cfg, 0).unwrap();
    assert_eq!(m.trees[0].nodes.len(), 1);
    let BoostNode::Leaf { weight, grad_sum, hess_sum, .. } = m.trees[0].nodes[0] else { panic!() };
    assert_eq!((grad_sum, hess_sum), (-8.0, 4.0));
    assert!((weight - 2.0).abs() < 1e-10);
    assert!((m.predict_row(&[5.0]) - 2.0).abs() < 1e-10);
}

#[test]
fn step_function_splits_at_step() {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![((i * 5) % 12) as f64, i as f64]).collect();
    let y: Vec<f64> = rows.iter().map(|r| if r[1] < 7.0 { 0.0 } else { 4.0 }).collect();
    let d = reg(rows.clone(), y.clone());
    let cfg = BoostConfig { n_rounds: 1, max_depth: 1, base_score: Some(0.0), lambda: 1.0, ..BoostConfig::default() };
    let m = boost_fit(&d, &cfg, 0).unwrap();
    let BoostNode::Internal { split_feature, split_value, gain, .. } = m.trees[0].nodes[0] else { panic!() };
    // exhaustive oracle over both features and every midpoint
    let (g, h): (Vec<f64>, Vec<f64>) = y.iter().map(|&v| grad_hess(Loss::Squared, v, 0.0)).unzip();
    let mut best = (f64::NEG_INFINITY, 0, 0.0);
    for j in 0..2 {
        let mut v: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        for w in v.windows(2) {
            let z = 0.5 * (w[0] + w[1]);
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..12 {
                if rows[i][j] < z {
                    gl += g[i];
                    hl += h[i];
                } else {
                    gr += g[i];
                    hr += h[i];
                }
            }
            let s = split_gain(gl, hl, gr, hr, 1.0, 0.0);
            if s > best.0 {
                best = (s, j, z);
            }
        }
    }
    assert_eq!((split_feature, split_value), (best.1, best.2));
    assert_eq!((split_feature, split_value), (1, 6.5));
    assert!((gain - best.0).abs() < 1e-10);
}

#[test]
fn training_loss_decreases() {
    let rows = normal_rows(150, 4, 3);
    let y: Vec<f64> = rows.iter().map(|r| r[0].sin() * 3.0 + r[1] * r[2]).collect();
    let d = reg(rows, y);
    let cfg = BoostConfig { n_rounds: 50, gamma: 0.0, ..BoostConfig::default() };
    let m = boost_fit(&d, &cfg, 0).unwrap();
    assert_eq!(m.training_loss.len(), 51);
    for w in m.training_loss.windows(2) {
        assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn leaf_weights_rederivable_from_json() {
    let rows = normal_rows(120, 3, 8);
    let y: Vec<f64> = rows.iter().map(|r| f64::from(r[0] - r[1] > 0.2)).collect();
    let d = Dataset::new(rows, y, names(3), Task::Classification).unwrap();
    let m = boost_fit(&d, &BoostConfig { n_rounds: 20, ..BoostConfig::default() }, 1).unwrap();
    let dump: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
    let lambda = dump["lambda_reg"].as_f64().unwrap();
    let mut leaves = 0;
    for tree in dump["trees"].as_array().unwrap() {
        for node in tree["nodes"].as_array().unwrap() {
            if node["kind"] == "leaf" {
                let g = node["grad_sum"].as_f64().unwrap();
                let h = node["hess_sum"].as_f64().unwrap();
                let w = node["weight"].as_f64().unwrap();
                let expected = -g / (h + lambda);
                assert!((w - expected).abs() <= 1e-10 * expected.abs().max(1.0));
                leaves += 1;
            }
        }
    }
    assert!(leaves > 20);
}

#[test]
fn deep_single_round_interpolates() {
    let rows = normal_rows(60, 3, 12);
    let mut r = seeded(13);
    let y: Vec<f64> = (0..60).map(|_| r.sample(StandardNormal)).collect();
    let d = reg(rows, y);
    let cfg = BoostConfig { n_rounds: 1, eta: 1.0, lambda: 0.0, gamma: 0.0, max_depth: 64, ..BoostConfig::default() };
    let m = boost_fit(&d, &cfg, 0).unwrap();
    let mse = m.predict(&d).iter().zip(d.y()).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / 60.0;
    assert!(mse < 1e-20, "{mse}");
}

#[test]
fn single_split_importance_by_hand() {
    let d = reg(vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0], vec![3.0, 1.0]], vec![0.0, 0.0, 2.0, 2.0]);
    let cfg = BoostConfig { n_rounds: 1, max_depth: 1, lambda: 0.0, base_score: Some(0.0), ..BoostConfig::default() };
    let m = boost_fit(&d, &cfg, 0).unwrap();
    // g = (0, 0, −4, −4), h = 2 each; cut at 1.5: GL=0, GR=−8, HL=HR=4
    // gain = ½[0 + 64/4 − 64/8] = 4, p = 4/4
    let gain = split_gain(0.0, 4.0, -8.0, 4.0, 0.0, 0.0);
    assert_eq!(gain, 4.0);
    let squared = boost_importance(&m, true);
    let plain = boost_importance(&m, false);
    assert_eq!(squared, vec![16.0, 0.0]);
    assert_eq!(plain, vec![4.0, 0.0]);
    let (a, details) = boost_vim(&m, true).unwrap();
    let (b, _) = boost_vim(&m, false).unwrap();
    assert_eq!(a.ranking, b.ranking);
    assert_eq!(a.ranking[0], 0);
    assert_eq!(details.normalized, vec![1.0, 0.0]);
}

#[test]
fn large_gamma_blocks_splits() {
    let d = reg(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0.0, 0.0, 2.0, 2.0]);
    let cfg = BoostConfig { n_rounds: 3, gamma: 1e6, ..BoostConfig::default() };
    let m = boost_fit(&d, &cfg, 0).unwrap();
    assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    assert_eq!(boost_importance(&m, true), vec![0.0]);
}
