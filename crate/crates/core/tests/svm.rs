use rand::Rng;
use rand_distr::StandardNormal;
use vimkit::rng::seeded;
use vimkit::svm::{margin_drops, margin_w2, svm_fit, svm_wrapper_vim, Kernel, KernelChoice, SvmFit, SvmWrapperConfig};
use vimkit::{Dataset, Task};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn class(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
    let p = rows[0].len();
    Dataset::new(rows, y, names(p), Task::Classification).unwrap()
}

fn noisy_classes(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = seeded(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let label = r.random_bool(0.5);
        let row: Vec<f64> =
            (0..p).map(|j| r.sample::<f64, _>(StandardNormal) + if j == 0 && label { 1.5 } else { 0.0 }).collect();
        rows.push(row);
        y.push(f64::from(label));
    }
    class(rows, y)
}

fn check_feasible(f: &SvmFit) {
    let s: f64 = f.alphas.iter().zip(&f.labels).map(|(a, y)| a * y).sum();
    assert!(s.abs() < 1e-8, "Σαy = {s}");
    assert!(f.alphas.iter().all(|&a| (0.0..=f.c).contains(&a)));
}

#[test]
fn two_point_solution() {
    let d = class(vec![vec![0.0], vec![2.0]], vec![0.0, 1.0]);
    let f = svm_fit(&d, Kernel::Linear, 1e6, 1e-8, 0).unwrap();
    assert!((f.alphas[0] - 0.5).abs() < 1e-6 && (f.alphas[1] - 0.5).abs() < 1e-6);
    assert!((f.primal_weights()[0] - 1.0).abs() < 1e-6);
    assert!((f.b - 1.0).abs() < 1e-6);
    assert!((margin_w2(&f, &d, None).unwrap() - 1.0).abs() < 1e-6);
    check_feasible(&f);
}

#[test]
fn xor_with_rbf() {
    let d = class(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0, 0.0, 1.0, 1.0]);
    let f = svm_fit(&d, Kernel::Rbf { sigma: 1.0 }, 1e6, 1e-8, 0).unwrap();
    for i in 0..4 {
        let expected = if d.y()[i] == 1.0 { 1.0 } else { -1.0 };
        assert_eq!(f.predict_sign(d.row(i)), expected);
    }
    check_feasible(&f);
}

#[test]
fn feasibility_margins_and_monotone_dual() {
    for (seed, kernel) in [(1, Kernel::Linear), (2, Kernel::Rbf { sigma: 1.5 }), (3, Kernel::Linear)] {
        let d = noisy_classes(120, 3, seed);
        let f = svm_fit(&d, kernel, 1.0, 1e-4, 0).unwrap();
        assert!(f.converged);
        check_feasible(&f);
        for w in f.dual_objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
        let last = *f.dual_objective_trace.last().unwrap();
        assert!((last - f.dual_objective(&d)).abs() < 1e-8 * last.abs().max(1.0));
        let eps = 1e-9 * f.c;
        for &i in &f.support_indices {
            if f.alphas[i] > eps && f.alphas[i] < f.c - eps {
                let m = f.labels[i] * f.decision_value(d.row(i));
                assert!((m - 1.0).abs() < 1e-4, "margin {m}");
            }
        }
    }
}

/// Plain double sum with the excluded coordinate dropped from copies of the rows.
fn brute_w2(f: &SvmFit, d: &Dataset, exclude: Option<usize>) -> f64 {
    let strip = |i: usize| -> Vec<f64> {
        d.row(i).iter().enumerate().filter(|(k, _)| Some(*k) != exclude).map(|(_, v)| *v).collect()
    };
    let mut total = 0.0;
    for i in 0..d.n_rows() {
        for j in 0..d.n_rows() {
            let (a, b) = (strip(i), strip(j));
            let k = match f.kernel {
                Kernel::Linear => a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>(),
                Kernel::Rbf { sigma } => {
                    (-a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / (2.0 * sigma * sigma)).exp()
                }
            };
            total += f.alphas[i] * f.alphas[j] * f.labels[i] * f.labels[j] * k;
        }
    }
    total
}

#[test]
fn w2_matches_brute_force_on_six_points() {
    let d = class(
        vec![
            vec![0.0, 1.0, 0.5],
            vec![1.0, 0.2, -0.5],
            vec![0.3, 2.0, 1.0],
            vec![2.0, 2.5, 0.0],
            vec![2.5, 0.5, 1.5],
            vec![3.0, 1.8, -1.0],
        ],
        vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
    );
    for kernel in [Kernel::Linear, Kernel::Rbf { sigma: 0.8 }] {
        let f = svm_fit(&d, kernel, 10.0, 1e-6, 0).unwrap();
        let full = margin_w2(&f, &d, None).unwrap();
        assert!((full - brute_w2(&f, &d, None)).abs() < 1e-10);
        let drops = margin_drops(&f, &d);
        for p in 0..3 {
            let reduced = margin_w2(&f, &d, Some(p)).unwrap();
            assert!((reduced - brute_w2(&f, &d, Some(p))).abs() < 1e-10);
            assert!((drops[p] - (full - reduced).abs()).abs() < 1e-10);
        }
        if kernel == Kernel::Linear {
            let w = f.primal_weights();
            let norm2: f64 = w.iter().map(|v| v * v).sum();
            assert!((full - norm2).abs() < 1e-8);
        }
        assert!(full >= 0.0);
    }
}

#[test]
fn zero_feature_does_not_change_w2() {
    let d0 = noisy_classes(40, 2, 9);
    let rows: Vec<Vec<f64>> = d0.rows().map(|r| vec![r[0], 0.0, r[1]]).collect();
    let d = class(rows, d0.y().to_vec());
    for kernel in [Kernel::Linear, Kernel::Rbf { sigma: 1.0 }] {
        let f = svm_fit(&d, kernel, 1.0, 1e-4, 0).unwrap();
        assert_eq!(margin_w2(&f, &d, Some(1)).unwrap(), margin_w2(&f, &d, None).unwrap());
    }
}

#[test]
fn wrapper_keeps_signal() {
    let mut r = seeded(4);
    let rows: Vec<Vec<f64>> = (0..100).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
    let y: Vec<f64> = rows.iter().map(|x| f64::from(x[0] > 0.0)).collect();
    let d = class(rows, y);
    let cfg = SvmWrapperConfig { keep_m: Some(1), ..SvmWrapperConfig::default() };
    let (report, details) = svm_wrapper_vim(&d, &cfg, 0).unwrap();
    assert_eq!(report.selected, vec![0]);
    assert_eq!(details.elimination_order, vec![1]);
    assert_eq!(report.scores, vec![2.0, 1.0]);
    assert!(!details.partial);
}

#[test]
fn wrapper_keeps_one_of_a_duplicated_pair() {
    let base = noisy_classes(150, 3, 21);
    let rows: Vec<Vec<f64>> = base.rows().map(|r| vec![r[0], r[1], r[0], r[2]]).collect();
    let d = class(rows, base.y().to_vec());
    let cfg = SvmWrapperConfig { keep_m: Some(1), ..SvmWrapperConfig::default() };
    let (report, _) = svm_wrapper_vim(&d, &cfg, 0).unwrap();
    assert_eq!(report.selected.len(), 1);
    assert!(report.selected[0] == 0 || report.selected[0] == 2, "{:?}", report.selected);
}

#[test]
fn wrapper_is_deterministic_and_validates_keep() {
    let d = noisy_classes(80, 5, 30);
    let cfg =
        SvmWrapperConfig { kernel: KernelChoice::Rbf { sigma: None }, keep_m: Some(2), ..SvmWrapperConfig::default() };
    let a = svm_wrapper_vim(&d, &cfg, 0).unwrap();
    let b = svm_wrapper_vim(&d, &cfg, 0).unwrap();
    assert_eq!(serde_json::to_string(&a.0).unwrap(), serde_json::to_string(&b.0).unwrap());
    assert_eq!(a.1, b.1);
    for keep in [0, 5] {
        let bad = SvmWrapperConfig { keep_m: Some(keep), ..SvmWrapperConfig::default() };
        assert!(svm_wrapper_vim(&d, &bad, 0).is_err());
    }
}
