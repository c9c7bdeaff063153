use intnet::distances::PathMetric;
use intnet::models::DEFAULT_ENUMERATION_CAP;
use intnet::moves::MoveConfig;
use intnet::posterior::{fit, point_estimates, AuxSampling, DispersionPrior, PosteriorConfig};
use intnet::samplers::Schedule;
use intnet::{in_support, InteractionMultiset, InteractionSeq, SpaceBounds};

fn config(
    dispersion: DispersionPrior,
    aux: AuxSampling,
    iterations: usize,
    seed: u64,
) -> PosteriorConfig {
    PosteriorConfig {
        inner: PathMetric::Lsp,
        gamma0: 0.1,
        dispersion,
        gamma_step: 0.5,
        init_gamma: None,
        moves: MoveConfig::default(),
        aux,
        schedule: Schedule::new(iterations, 200, 1).unwrap(),
        seed,
    }
}

#[test]
fn identical_data_pins_the_mode() {
    let bounds = SpaceBounds::new(2, 2, 2).unwrap();
    let target = InteractionSeq::from_vecs(vec![vec![0, 1], vec![1]]);
    let data = vec![target.clone(); 30];
    let cfg = config(
        DispersionPrior::gamma_rate(50.0, 10.0),
        AuxSampling::Exact {
            cap: DEFAULT_ENUMERATION_CAP,
        },
        2000,
        1,
    );
    let chain = fit(&data, bounds, None, &cfg).unwrap();
    let hits = chain.samples.iter().filter(|s| s.mode == target).count();
    assert!(hits as f64 >= 0.95 * chain.len() as f64, "{hits}");
    let (mode, gamma) = point_estimates(&chain, PathMetric::Lsp).unwrap();
    assert_eq!(mode, target);
    assert!(gamma > 2.0);
}

#[test]
fn single_observation_stays_well_formed() {
    let bounds = SpaceBounds::new(3, 3, 3).unwrap();
    let data = vec![InteractionMultiset::from_vecs(vec![vec![0, 2, 1], vec![1]])];
    let cfg = config(
        DispersionPrior::Uniform { lo: 0.1, hi: 10.0 },
        AuxSampling::Mcmc {
            burn_in: 10,
            lag: 2,
        },
        300,
        2,
    );
    let chain = fit(&data, bounds, None, &cfg).unwrap();
    assert_eq!(chain.len(), 300);
    for s in &chain.samples {
        assert!(in_support(&s.mode, &bounds));
        assert!(s.gamma > 0.0);
    }
    assert_eq!(chain.diagnostics.distance_trace.len(), 300);
}

#[test]
fn seeded_runs_repeat() {
    let bounds = SpaceBounds::new(3, 3, 3).unwrap();
    let data = vec![
        InteractionSeq::from_vecs(vec![vec![0, 1], vec![2]]),
        InteractionSeq::from_vecs(vec![vec![0, 1, 1]]),
        InteractionSeq::from_vecs(vec![vec![2, 1], vec![0]]),
    ];
    let cfg = config(
        DispersionPrior::gamma_rate(5.0, 1.67),
        AuxSampling::Mcmc {
            burn_in: 10,
            lag: 2,
        },
        200,
        3,
    );
    let a = fit(&data, bounds, None, &cfg).unwrap();
    let b = fit(&data, bounds, None, &cfg).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed = 4;
    assert_ne!(a, fit(&data, bounds, None, &other).unwrap());
}

#[test]
fn chain_json_round_trips() {
    let bounds = SpaceBounds::new(2, 2, 2).unwrap();
    let data = vec![InteractionSeq::from_vecs(vec![vec![0, 1]]); 3];
    let cfg = config(
        DispersionPrior::Uniform { lo: 0.5, hi: 3.0 },
        AuxSampling::Exact { cap: 1000 },
        20,
        5,
    );
    let chain = fit(&data, bounds, None, &cfg).unwrap();
    let text = serde_json::to_string(&chain).unwrap();
    assert!(text.starts_with("{\"format_version\":1,\"samples\":[{\"mode\":[["));
    let back: intnet::posterior::PosteriorChain<InteractionSeq> =
        serde_json::from_str(&text).unwrap();
    assert_eq!(back, chain);
}
