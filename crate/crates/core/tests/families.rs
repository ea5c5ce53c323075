use gbart::family::{fd_gradient, fd_hessian, LikelihoodFamily, Observation, DEFAULT_FD_DELTA};
use gbart::sampler::{conjugate_leaf_posterior, laplace_leaf_proposal, ChainState, LaplaceStats, NodeContext, SamplerSettings};
use gbart::zoo::{
    AftGenGamma, AftLogLogistic, GammaShape, Gaussian, HetVar, Logistic, MeanLink, Poisson, VarianceFn, Weibull,
};
use gbart::{Dataset, Forest, ModelSpec, Scenario, ScenarioKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zoo() -> Vec<Box<dyn LikelihoodFamily>> {
    vec![
        Box::new(Gaussian::new(0.6)),
        Box::new(Logistic),
        Box::new(Poisson),
        Box::new(HetVar::new(MeanLink::Exp, VarianceFn::Linear, 1.3)),
        Box::new(HetVar::new(MeanLink::Identity, VarianceFn::Constant, 0.5)),
        Box::new(HetVar::new(MeanLink::Exp, VarianceFn::Quadratic, 2.0)),
        Box::new(AftLogLogistic::new(1.2)),
        Box::new(AftGenGamma::new(0.7, 2.5)),
        Box::new(Weibull::new(0.8)),
        Box::new(GammaShape::new(2.0)),
    ]
}

#[test]
fn score_and_information_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for f in zoo() {
        for g in 0..20 {
            let lambda = -1.0 + 2.0 * g as f64 / 19.0;
            let mut o = f.simulate(lambda + 0.2, &mut rng);
            let mut cases = vec![o];
            if f.is_survival() {
                o.event = Some(false);
                cases.push(o);
            }
            for o in cases {
                let ld = |l: f64| f.log_density(&o, l);
                let u = fd_gradient(ld, lambda, DEFAULT_FD_DELTA).unwrap();
                assert!((f.score(&o, lambda) - u).abs() < 1e-4, "{} score at {lambda}", f.name());
                let j = fd_hessian(ld, lambda, 1e-4).unwrap();
                let got = f.observed_info(&o, lambda);
                assert!((got + j).abs() < 1e-3 * (1.0 + j.abs()), "{} info at {lambda}: {got} vs {}", f.name(), -j);
            }
        }
    }
}

#[test]
fn score_has_mean_zero_and_variance_equal_to_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = 200_000;
    for f in zoo() {
        for lambda in [-0.4, 0.5] {
            let (mut su, mut su2, mut sj) = (0.0, 0.0, 0.0);
            for _ in 0..m {
                let o = f.simulate(lambda, &mut rng);
                let u = f.score(&o, lambda);
                su += u;
                su2 += u * u;
                sj += f.observed_info(&o, lambda);
            }
            let (mu, vu, ej) = (su / m as f64, su2 / m as f64, sj / m as f64);
            let se = (vu / m as f64).sqrt();
            assert!(mu.abs() < 5.0 * se, "{}: mean score {mu} (se {se})", f.name());
            assert!((vu - ej).abs() < 0.03 * ej, "{}: E[U^2] {vu} vs E[J] {ej}", f.name());
            if let Some(i) = f.fisher_info(lambda) {
                assert!((i - ej).abs() < 0.02 * i, "{}: I {i} vs E[J] {ej}", f.name());
            }
        }
    }
}

#[test]
fn gengamma_with_unit_shape_is_weibull() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for sigma in [0.5, 1.0, 1.7] {
        let gg = AftGenGamma::new(sigma, 1.0);
        let wb = Weibull::new(1.0 / sigma);
        for _ in 0..200 {
            let lambda = rng.random_range(-1.5..1.5);
            let o = Observation::censored(rng.random_range(0.01..6.0), rng.random_bool(0.5));
            let (a, b) = (gg.log_density(&o, lambda), wb.log_density(&o, lambda));
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "sigma {sigma}: {a} vs {b}");
            assert!((gg.score(&o, lambda) - wb.score(&o, lambda)).abs() < 1e-5);
            let (sa, sb) = (gg.survival(o.y, lambda).unwrap(), wb.survival(o.y, lambda).unwrap());
            assert!((sa - sb).abs() < 1e-10);
        }
    }
}

fn gaussian_node(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Observation>, Vec<f64>) {
    let obs = (0..n).map(|_| Observation::new(rng.random_range(-2.0..3.0))).collect();
    let lambda = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (obs, lambda)
}

proptest! {
    #[test]
    fn laplace_matches_the_gaussian_posterior(seed in any::<u64>(), n in 1usize..40, init in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (obs, lambda) = gaussian_node(&mut rng, n);
        let sigma = rng.random_range(0.3..2.0);
        let sigma_mu = rng.random_range(0.1..2.0);
        let family = Gaussian::new(sigma);
        let ctx = NodeContext { obs: &obs, lambda: &lambda, family: &family, sigma_mu };
        let members: Vec<usize> = (0..n).collect();
        let mut stats = LaplaceStats::default();
        let p = laplace_leaf_proposal(&ctx, &members, init, &mut stats);
        let r: Vec<f64> = obs.iter().zip(&lambda).map(|(o, l)| o.y - l).collect();
        let (mean, sd) = conjugate_leaf_posterior(&r, sigma, sigma_mu);
        // Scoring stops before stepping once |U| <= sqrt(I)/10, which for a
        // Gaussian leaf means within sd/10 of the mode; any step lands on it.
        if stats.iterations == 0 {
            prop_assert_eq!(p.mean, init);
            prop_assert!((init - mean).abs() <= sd / 10.0 * (1.0 + 1e-12));
        } else {
            prop_assert_eq!(stats.iterations, 1);
            prop_assert!((p.mean - mean).abs() < 1e-10 * (1.0 + mean.abs()));
        }
        prop_assert!((p.sd - sd).abs() < 1e-12);
    }
}

#[test]
fn scoring_rarely_hits_the_iteration_cap() {
    for (kind, model) in [
        (ScenarioKind::Logistic, ModelSpec::Logistic),
        (ScenarioKind::HetPoisson, ModelSpec::Poisson),
        (ScenarioKind::AftLogLogistic, ModelSpec::AftLogLogistic),
        (ScenarioKind::GammaShape, ModelSpec::GammaShape),
    ] {
        let (data, _) = gbart::simulate(&Scenario::new(kind, 9).with_size(200, 6)).unwrap();
        let settings = SamplerSettings::new(20, 1.0);
        let mut family = model.build(DEFAULT_FD_DELTA);
        family.initialize(data.obs());
        let mut state = ChainState::new(Forest::new(20, data.p(), settings.sigma_mu_scale), family, &data);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..150 {
            gbart::sampler::gibbs_iteration(&mut state, &data, &settings, &mut rng).unwrap();
        }
        let s = state.stats.laplace;
        assert!(s.calls > 1000);
        let rate = (s.capped + s.failed) as f64 / s.calls as f64;
        assert!(rate < 0.01, "{model}: capped {} and failed {} of {}", s.capped, s.failed, s.calls);
    }
}

#[test]
fn invalid_outcomes_are_rejected() {
    let bad: [(Box<dyn LikelihoodFamily>, Observation); 6] = [
        (Box::new(Logistic), Observation::new(0.5)),
        (Box::new(Poisson), Observation::new(-1.0)),
        (Box::new(Poisson), Observation::new(1.5)),
        (Box::new(GammaShape::new(1.0)), Observation::new(0.0)),
        (Box::new(AftLogLogistic::new(1.0)), Observation::new(2.0)),
        (Box::new(Weibull::new(1.0)), Observation::censored(-1.0, true)),
    ];
    for (f, o) in bad {
        assert!(f.validate(&o).is_err(), "{} accepted {o:?}", f.name());
    }
    let data = Dataset::from_rows(&[vec![0.5]], vec![Observation::new(2.0)]).unwrap();
    let config = gbart::SamplerConfig {
        model: ModelSpec::Weibull,
        iterations: 2,
        burn_in: 1,
        ..Default::default()
    };
    assert!(matches!(gbart::run_chain(&config, &data, 0), Err(gbart::Error::Validation(_))));
}

