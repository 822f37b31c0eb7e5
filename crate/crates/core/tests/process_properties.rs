use logcount::estimation::theta_hat;
use logcount::innovations::InnovationSpec;
use logcount::process::{Model, ModelParams};

fn reference(spec: InnovationSpec<f64>) -> Model<f64> {
    Model::new(ModelParams::trend(0.1, 0.1, 2.0, spec)).unwrap()
}

#[test]
fn late_autocovariance_approaches_limit() {
    let m = reference(InnovationSpec::exponential(1.0));
    let reps = 4000;
    let (t0, span, lags) = (300, 10, 3);
    let paths: Vec<Vec<f64>> = (0..reps)
        .map(|r| m.simulate(t0 + span + lags, 77 + r as u64).unwrap().log_counts())
        .collect();
    for u in 0..lags {
        let mut acc = 0.0;
        for t in t0..t0 + span {
            let ma = paths.iter().map(|p| p[t]).sum::<f64>() / reps as f64;
            let mb = paths.iter().map(|p| p[t + u]).sum::<f64>() / reps as f64;
            acc += paths.iter().map(|p| (p[t] - ma) * (p[t + u] - mb)).sum::<f64>() / (reps - 1) as f64;
        }
        let est = acc / span as f64;
        let want = m.autocovariance(u);
        assert!((est - want).abs() < 0.06 + 0.05 * want, "lag {u}: {est} vs {want}");
    }
}

#[test]
fn mean_log_count_does_not_decrease() {
    let m = reference(InnovationSpec::half_normal_unit_mean());
    let curve = m.mean_log_curve(30, 5000, 3).unwrap();
    assert!(curve.max_standardized_drop(1) <= 2.0);
    assert!(curve.mean[30] > curve.mean[1]);
}

#[test]
fn single_precision_tracks_double() {
    let spec = InnovationSpec::exponential(1.0);
    let m64 = reference(spec);
    let m32 = Model::new(ModelParams::trend(0.1f32, 0.1, 2.0, InnovationSpec::exponential(1.0))).unwrap();
    let mut gap = 0.0f64;
    for seed in 0..20 {
        let a = theta_hat::<f64>(&m64.simulate(300, seed).unwrap().x[1..]).unwrap().theta_hat;
        let b = theta_hat::<f32>(&m32.simulate(300, seed).unwrap().x[1..]).unwrap().theta_hat;
        gap = gap.max((a - b as f64).abs());
    }
    assert!(gap < 0.05, "f32 and f64 fits differ by {gap}");
}

#[test]
fn contraction_violation_is_reported() {
    let err = Model::new(ModelParams::trend(0.6, 0.5, 1.0, InnovationSpec::exponential(1.0))).unwrap_err();
    assert!(err.to_string().contains("contraction"));
}
