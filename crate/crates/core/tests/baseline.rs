use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use vimkit::baseline::{correlation_scores, correlation_vim, psi_adjusted, psi_naive, psi_vim, PsiConfig};
use vimkit::forest::{rf_fit, RfConfig};
use vimkit::rng::seeded;
use vimkit::{Dataset, Task, VimError};

fn reg(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
    let p = rows[0].len();
    Dataset::new(rows, y, (0..p).map(|j| format!("x{j}")).collect(), Task::Regression).unwrap()
}

fn normal_rows(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = seeded(seed);
    (0..n).map(|_| (0..p).map(|_| r.sample(StandardNormal)).collect()).collect()
}

#[test]
fn monte_carlo_half_variance_share() {
    let rows = normal_rows(10_000, 2, 11);
    let y = rows.iter().map(|r| r[0] + r[1]).collect();
    let s = correlation_scores(&reg(rows, y)).unwrap();
    assert!((s[0] - 0.5).abs() < 0.03, "{}", s[0]);
    assert!((s[1] - 0.5).abs() < 0.03, "{}", s[1]);
}

#[test]
fn independent_noise_scores_near_zero() {
    let rows = normal_rows(2000, 2, 5);
    let y = rows.iter().map(|r| 2.0 * r[0]).collect();
    let r = correlation_vim(&reg(rows, y), 0.1).unwrap();
    assert!((r.scores[0] - 1.0).abs() < 1e-12);
    assert!(r.scores[1] < 0.01);
    assert_eq!(r.selected, vec![0]);
}

proptest! {
    #[test]
    fn correlation_affine_invariance(a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0], b in -100.0f64..100.0,
                                     c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], e in -10.0f64..10.0,
                                     seed in 0u64..1000) {
        let rows = normal_rows(60, 3, seed);
        let y: Vec<f64> = rows.iter().map(|r| r[0] - 0.5 * r[1] + 0.3 * r[2] * r[2]).collect();
        let d = reg(rows.clone(), y.clone());
        let base = correlation_scores(&d).unwrap();
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| vec![a * r[0] + b, r[1], r[2]]).collect();
        let y2: Vec<f64> = y.iter().map(|v| c * v + e).collect();
        let after = correlation_scores(&reg(moved, y2)).unwrap();
        for (u, v) in base.iter().zip(&after) {
            prop_assert!((u - v).abs() < 1e-10, "{} vs {}", u, v);
        }
    }
}

#[test]
fn oracle_regressors_give_unit_psi() {
    let rows = normal_rows(400, 2, 21);
    let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let xbar = y.iter().sum::<f64>() / y.len() as f64;
    let d = reg(rows, y);
    let full = |r: &[f64]| r[0];
    // after dropping x0 the oracle regression of y = x0 is its (sample) mean
    let reduced = move |_: &[f64]| xbar;
    let e = psi_adjusted(&d, &[0], &full, &reduced).unwrap();
    assert!((e.psi_adjusted - 1.0).abs() < 1e-10, "{}", e.psi_adjusted);
    assert_eq!(e.psi_adjusted, e.psi_naive);
    // population reduced mean 0
    let zero = |_: &[f64]| 0.0;
    let e = psi_naive(&d, &[0], &full, &zero).unwrap();
    let explicit_theta: f64 = d.y().iter().map(|v| v * v).sum::<f64>() / 400.0;
    assert!((e.theta_hat - explicit_theta).abs() < 1e-12);
    assert!((e.psi_naive - 1.0).abs() < 0.05);
}

#[test]
fn six_point_hand_sum() {
    // column 1 is a row id so the reduced predictor can look its value up
    let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![(i % 3) as f64, 10.0 + i as f64]).collect();
    let y = vec![1.0, 2.0, 4.0, 3.0, 6.0, 5.0];
    let d = reg(rows, y);
    let mu = [1.5, 2.0, 3.5, 3.5, 5.0, 5.5];
    let mu_s = [3.0, 3.0, 3.0, 4.0, 4.0, 4.0];
    let full = move |r: &[f64]| mu[(r[1] - 10.0) as usize];
    let reduced = move |r: &[f64]| mu_s[(r[0] - 10.0) as usize];
    let e = psi_adjusted(&d, &[0], &full, &reduced).unwrap();

    // ȳ = 21/6 = 3.5; Σ(y−ȳ)² = 6.25+2.25+0.25+0.25+6.25+2.25 = 17.5
    // gaps μ−μ_s: −1.5, −1, 0.5, −0.5, 1, 1.5 → Σgap² = 2.25+1+0.25+0.25+1+2.25 = 7
    // residuals y−μ: −0.5, 0, 0.5, −0.5, 1, −0.5
    // Σ resid·gap = 0.75 + 0 + 0.25 + 0.25 + 1 − 0.75 = 1.5
    let var_y = 17.5 / 6.0;
    let theta = 7.0 / 6.0;
    let naive = theta / var_y;
    let adjusted = naive + 2.0 * 1.5 / 17.5;
    assert!((e.var_y - var_y).abs() < 1e-14);
    assert!((e.theta_hat - theta).abs() < 1e-14);
    assert!((e.psi_naive - naive).abs() < 1e-14);
    assert!((e.psi_adjusted - adjusted).abs() < 1e-14);
    assert!((e.psi_adjusted_clamped - adjusted.clamp(0.0, 1.0)).abs() < 1e-14);
}

#[test]
fn noise_response_has_positive_naive_bias() {
    let mut values = Vec::new();
    for seed in 0..20u64 {
        let rows = normal_rows(500, 3, 100 + seed);
        let mut r = seeded(900 + seed);
        let y: Vec<f64> = (0..500).map(|_| r.sample(StandardNormal)).collect();
        let d = reg(rows, y);
        let cfg = RfConfig { n_trees: 30, ..RfConfig::default() };
        let full = rf_fit(&d, &cfg, seed).unwrap();
        let red_data = d.drop_features(&[0]);
        let reduced = rf_fit(&red_data, &cfg, seed + 1).unwrap();
        let e = psi_naive(&d, &[0], &full, &reduced).unwrap();
        assert!(e.psi_naive >= 0.0);
        values.push(e.psi_naive);
    }
    values.sort_by(f64::total_cmp);
    let median = 0.5 * (values[9] + values[10]);
    assert!(median > 0.0, "median {median}");
}

#[test]
fn interpolating_full_model_leaves_naive_unchanged() {
    let rows = normal_rows(30, 2, 3);
    let y: Vec<f64> = rows.iter().map(|r| r[0] * r[1]).collect();
    let d = reg(rows, y);
    let full = |r: &[f64]| r[0] * r[1];
    let reduced = |r: &[f64]| 0.3 * r[0];
    let e = psi_adjusted(&d, &[0], &full, &reduced).unwrap();
    assert_eq!(e.psi_adjusted, e.psi_naive);
}

#[test]
fn psi_vim_ranks_signal_first() {
    let rows = normal_rows(200, 4, 8);
    let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] + 0.1 * r[3]).collect();
    let d = reg(rows, y);
    let (report, estimates) = psi_vim(&d, &PsiConfig { n_trees: 30, ..PsiConfig::default() }, 1).unwrap();
    assert_eq!(report.ranking[0], 0);
    assert_eq!(estimates.len(), 4);
    assert!(report.selected.contains(&0));
}

#[test]
fn classification_is_unsupported() {
    let d = Dataset::new(
        vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 1.0]],
        vec![0.0, 1.0, 0.0],
        vec!["a".into(), "b".into()],
        Task::Classification,
    )
    .unwrap();
    assert!(matches!(correlation_vim(&d, 0.1), Err(VimError::UnsupportedTask { .. })));
    assert!(matches!(psi_vim(&d, &PsiConfig::default(), 0), Err(VimError::UnsupportedTask { .. })));
}
