use std::io::Write;

use proptest::prelude::*;
use vimkit::data::csv_string;
use vimkit::metrics::{classification_metrics, regression_metrics};
use vimkit::report::{rank_features, VimReport};
use vimkit::{load_csv, read_csv, standardize, Dataset, EvalMetrics, Task, VimError};

#[test]
fn load_small_classification_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, "a,b,y\n1,2,0\n3,4,1\n5,6,0").unwrap();
    let d = load_csv(f.path(), Task::Classification).unwrap();
    assert_eq!((d.n_rows(), d.n_features()), (3, 2));
    assert_eq!(d.y(), &[0.0, 1.0, 0.0]);
    assert_eq!(d.n_classes(), 2);
    assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
}

#[test]
fn ragged_file_is_rejected() {
    let err = read_csv("a,b,y\n1,2,0\n1,2\n".as_bytes(), Task::Regression).unwrap_err();
    assert!(matches!(err, VimError::RaggedRow { .. }), "{err}");
}

#[test]
fn labels_are_remapped_in_numeric_order() {
    let d = read_csv("a,y\n1,7\n2,3\n3,7\n4,5\n".as_bytes(), Task::Classification).unwrap();
    assert_eq!(d.y(), &[2.0, 0.0, 2.0, 1.0]);
}

fn dataset_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..12, 1usize..5).prop_flat_map(|(n, p)| {
        (
            proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, p), n),
            proptest::collection::vec(-1e3f64..1e3, n),
        )
    })
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

proptest! {
    #[test]
    fn csv_round_trip((rows, y) in dataset_strategy()) {
        let p = rows[0].len();
        let d = Dataset::new(rows, y, names(p), Task::Regression).unwrap();
        let text = csv_string(&d);
        let back = read_csv(text.as_bytes(), Task::Regression).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn standardize_moments_and_idempotence((rows, y) in dataset_strategy()) {
        let p = rows[0].len();
        let d = Dataset::new(rows, y, names(p), Task::Regression).unwrap();
        let (z, params) = standardize(&d);
        let (zz, _) = standardize(&z);
        let n = d.n_rows() as f64;
        for j in 0..p {
            let col = z.column(j);
            let again = zz.column(j);
            for (a, b) in col.iter().zip(&again) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            }
            if params.zero_variance[j] {
                prop_assert_eq!(col, d.column(j));
                continue;
            }
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!(mean.abs() < 1e-10);
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ranking_is_sorted_permutation(scores in proptest::collection::vec(-10.0f64..10.0, 1..30)) {
        let r = rank_features(&scores).unwrap();
        let mut seen = r.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..scores.len()).collect::<Vec<_>>());
        for w in r.windows(2) {
            prop_assert!(scores[w[0]] > scores[w[1]] || (scores[w[0]] == scores[w[1]] && w[0] < w[1]));
        }
    }

    #[test]
    fn rmse_is_sqrt_mse(
        pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..40)
    ) {
        let (y, pred): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let EvalMetrics::Regression { mse, rmse, mae } = regression_metrics(&y, &pred) else {
            unreachable!()
        };
        prop_assert!((rmse - mse.sqrt()).abs() <= 1e-12 * rmse.max(1e-300));
        prop_assert!(mse >= 0.0 && mae >= 0.0);
    }
}

#[test]
fn standardize_examples() {
    let d = Dataset::new(
        vec![vec![1.0, 5.0, 0.0], vec![2.0, 5.0, 10.0], vec![3.0, 5.0, 10.0]],
        vec![0.0, 1.0, 2.0],
        names(3),
        Task::Regression,
    )
    .unwrap();
    let (z, params) = standardize(&d);
    assert_eq!(z.column(0), vec![-1.0, 0.0, 1.0]);
    assert_eq!((params.means[0], params.sds[0]), (2.0, 1.0));
    assert_eq!(z.column(1), vec![5.0; 3]);
    assert!(params.zero_variance[1]);
    let two = Dataset::new(vec![vec![0.0], vec![10.0]], vec![0.0, 1.0], names(1), Task::Regression).unwrap();
    let (z, _) = standardize(&two);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((z.x(0, 0) + h).abs() < 1e-15 && (z.x(1, 0) - h).abs() < 1e-15);
}

#[test]
fn ranking_examples() {
    assert_eq!(rank_features(&[0.1, 0.9, 0.5]).unwrap(), vec![1, 2, 0]);
    assert_eq!(rank_features(&[0.5, 0.5]).unwrap(), vec![0, 1]);
    assert_eq!(rank_features(&[-1.0, 0.0, 3.0, 3.0]).unwrap(), vec![2, 3, 1, 0]);
    let sorted = [5.0, 4.0, 4.0, 1.0];
    assert_eq!(rank_features(&sorted).unwrap(), vec![0, 1, 2, 3]);
    assert!(matches!(rank_features(&[1.0, f64::NAN]), Err(VimError::NanScore { feature: 1 })));
}

#[test]
fn report_json_fields() {
    let r = VimReport::new("corr", vec![0.2, 0.8], vec![1], 3).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["method", "ranking", "scores", "seed", "selected", "wall_time_seconds"]);
}

#[test]
fn perfect_classifier_metrics() {
    let y = [0.0, 1.0, 1.0, 0.0];
    let m = classification_metrics(&y, &y);
    assert_eq!(m, EvalMetrics::Classification { accuracy: 1.0, recall: 1.0, precision: 1.0 });
}
