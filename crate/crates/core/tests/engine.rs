use gbart::engine::{heldout_metrics, lpml, lpml_of_draws, predict, survival_draws, write_trace_csv};
use gbart::simulate::friedman_standardized;
use gbart::zoo::{HetVarSpec, MeanLink, PhiPrior, VarianceFn};
use gbart::{run_chain, run_chains, simulate, Error, ModelSpec, SamplerConfig, Scenario, ScenarioKind};

fn small(model: ModelSpec, iterations: usize, burn_in: usize, thin: usize) -> SamplerConfig {
    SamplerConfig {
        model,
        num_trees: 10,
        iterations,
        burn_in,
        thin,
        seed: 77,
        ..Default::default()
    }
}

#[test]
fn aft_censoring_rate_is_one_half() {
    for kind in [ScenarioKind::AftLogLogistic, ScenarioKind::AftGenGamma] {
        let (data, _) = simulate(&Scenario::new(kind, 31).with_size(10_000, 5)).unwrap();
        let censored = data.obs().iter().filter(|o| o.event == Some(false)).count() as f64 / 1e4;
        assert!((0.47..=0.53).contains(&censored), "{kind}: {censored}");
    }
}

#[test]
fn logistic_truth_matches_the_friedman_moments() {
    let (data, truth) = simulate(&Scenario::new(ScenarioKind::Logistic, 32).with_size(100_000, 5)).unwrap();
    // E r_F = 10 E[sin(pi u v)] + 20/12 + 5 + 2.5, the first term by midpoint quadrature.
    let k = 400;
    let h = 1.0 / k as f64;
    let mut e_sin = 0.0;
    for a in 0..k {
        for b in 0..k {
            e_sin += (std::f64::consts::PI * (a as f64 + 0.5) * h * (b as f64 + 0.5) * h).sin();
        }
    }
    e_sin *= h * h;
    let want = (10.0 * e_sin + 20.0 / 12.0 + 7.5 - 14.0) / 5.0;
    let n = truth.lambda.len() as f64;
    let mean = truth.lambda.iter().sum::<f64>() / n;
    let var = truth.lambda.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - want).abs() < 4.0 * (var / n).sqrt(), "mean {mean} vs {want}");
    let events = data.obs().iter().map(|o| o.y).sum::<f64>() / n;
    let p_bar = truth.mean.iter().sum::<f64>() / n;
    assert!((events - p_bar).abs() < 4.0 * (p_bar * (1.0 - p_bar) / n).sqrt());
    for i in 0..100 {
        assert_eq!(truth.lambda[i], friedman_standardized(data.row(i)).unwrap());
        assert!((truth.mean[i] - 1.0 / (1.0 + (-truth.lambda[i]).exp())).abs() < 1e-15);
    }
}

#[test]
fn kept_draw_counts_follow_burn_in_and_thinning() {
    let (data, _) = simulate(&Scenario::new(ScenarioKind::Gaussian, 33).with_size(50, 5)).unwrap();
    for (iters, burn, thin, want) in [(7, 5, 2, 1), (25, 10, 5, 3), (12, 0, 4, 3), (9, 8, 1, 1)] {
        let trace = run_chain(&small(ModelSpec::Gaussian, iters, burn, thin), &data, 0).unwrap();
        assert_eq!(trace.draws.len(), want);
        assert_eq!(trace.records.len(), iters);
        assert_eq!(trace.records.iter().filter(|r| r.kept).count(), want);
        assert!(trace.draws.iter().all(|d| d.pointwise_loglik.len() == 50));
    }
}

#[test]
fn seeds_replay_and_chains_differ() {
    let (data, _) = simulate(&Scenario::new(ScenarioKind::HetPoisson, 34).with_size(80, 5)).unwrap();
    let model = ModelSpec::HetVar(HetVarSpec {
        link: MeanLink::Exp,
        variance: VarianceFn::Linear,
        phi_prior: PhiPrior::HalfCauchy(1.0),
    });
    let config = SamplerConfig {
        chains: 3,
        ..small(model, 40, 20, 1)
    };
    let a = run_chains(&config, &data).unwrap();
    let b = run_chains(&config, &data).unwrap();
    let text = |t: &[gbart::ChainTrace]| {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, t).unwrap();
        buf
    };
    assert_eq!(text(&a), text(&b));
    assert_ne!(a[0].records, a[1].records);
    // A chain run alone matches the same chain inside a multi-chain run.
    let alone = run_chain(&config, &data, 2).unwrap();
    assert_eq!(alone.records, a[2].records);
}

#[test]
fn fresh_forest_predicts_zero_and_bands_are_ordered() {
    let (data, _) = simulate(&Scenario::new(ScenarioKind::Gaussian, 35).with_size(40, 5)).unwrap();
    let mut trace = run_chain(&small(ModelSpec::Gaussian, 30, 10, 1), &data, 0).unwrap();
    let s = predict(&trace.draws, &data).unwrap();
    for p in &s.points {
        assert!(p.lambda.lower <= p.lambda.upper);
        assert!(p.lambda.lower <= p.lambda.mean + 1e-12 && p.lambda.mean <= p.lambda.upper + 1e-12);
    }
    for d in &mut trace.draws {
        d.forest = gbart::Forest::new(10, 5, 1.0);
    }
    let zero = predict(&trace.draws, &data).unwrap();
    assert!(zero.points.iter().all(|p| p.lambda.mean == 0.0 && p.lambda.upper == 0.0));
}

#[test]
fn survival_draws_are_monotone() {
    let (data, _) = simulate(&Scenario::new(ScenarioKind::AftLogLogistic, 36).with_size(80, 5)).unwrap();
    for model in [ModelSpec::AftLogLogistic, ModelSpec::Weibull, ModelSpec::AftGenGamma] {
        let trace = run_chain(&small(model, 30, 15, 1), &data, 0).unwrap();
        let grid: Vec<f64> = (0..30).map(|k| 0.2 * k as f64).collect();
        for i in 0..5 {
            let curves = survival_draws(&trace.draws, data.row(i), &grid).unwrap();
            for c in curves {
                assert_eq!(c[0], 1.0);
                assert!(c.windows(2).all(|w| w[1] <= w[0]), "{model}: {c:?}");
            }
        }
        let l = lpml_of_draws(&trace.draws).unwrap();
        assert!(l.lpml.is_finite());
        let bound: f64 = (0..data.n())
            .map(|i| trace.draws.iter().map(|d| d.pointwise_loglik[i]).fold(f64::NEG_INFINITY, f64::max))
            .sum();
        assert!(l.lpml <= bound + 1e-9);
    }
}

#[test]
fn mismatches_are_validation_errors() {
    let (gauss, _) = simulate(&Scenario::new(ScenarioKind::Gaussian, 37).with_size(30, 6)).unwrap();
    let (surv, _) = simulate(&Scenario::new(ScenarioKind::AftLogLogistic, 38).with_size(30, 6)).unwrap();
    assert!(matches!(
        run_chain(&small(ModelSpec::AftLogLogistic, 5, 2, 1), &gauss, 0),
        Err(Error::Validation(_))
    ));
    let conj = SamplerConfig {
        tree_update: gbart::sampler::TreeUpdate::ConjugateGaussian,
        ..small(ModelSpec::Logistic, 5, 2, 1)
    };
    assert!(matches!(conj.validate(), Err(Error::Unsupported(_))));

    let trace = run_chain(&small(ModelSpec::AftLogLogistic, 6, 3, 1), &surv, 0).unwrap();
    assert!(matches!(heldout_metrics(&trace.draws, &gauss, None), Err(Error::Validation(_))));
    let (_, truth) = simulate(&Scenario::new(ScenarioKind::AftLogLogistic, 39).with_size(10, 6)).unwrap();
    assert!(matches!(heldout_metrics(&trace.draws, &surv, Some(&truth)), Err(Error::Validation(_))));
    assert!(matches!(
        gbart::gengamma_variance(&trace.draws),
        Err(Error::Unsupported(_))
    ));
    assert!(lpml(&[vec![0.0, f64::INFINITY]]).is_err());
}

#[test]
fn rmse_of_a_zero_predictor_is_the_truth_spread() {
    let (data, truth) = simulate(&Scenario::new(ScenarioKind::Gaussian, 40).with_size(300, 5)).unwrap();
    let mut trace = run_chain(&small(ModelSpec::Gaussian, 3, 2, 1), &data, 0).unwrap();
    trace.draws[0].forest = gbart::Forest::new(10, 5, 1.0);
    let m = heldout_metrics(&trace.draws, &data, Some(&truth)).unwrap();
    let rms = (truth.lambda.iter().map(|v| v * v).sum::<f64>() / 300.0).sqrt();
    assert!((m[0].rmse_lambda.unwrap() - rms).abs() < 1e-12);
    let mse = data.obs().iter().map(|o| o.y * o.y).sum::<f64>() / 300.0;
    assert!((m[0].mse.unwrap() - mse).abs() < 1e-9);
}
