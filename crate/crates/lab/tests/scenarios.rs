use povmwalk::qubit::Distribution;
use povmwalk::OutcomeLabel;
use povmwalk_lab::sampling::sample_counts;
use povmwalk_lab::{run_scenario, Backend, NamedState, ScenarioConfig, ScenarioKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_states(n: usize, seed: u64) -> Vec<NamedState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let r = povmwalk::sampling::random_bloch_state(&mut rng).bloch();
            NamedState { name: format!("s{i}"), bloch: r }
        })
        .collect()
}

#[test]
fn walk_backend_matches_analytic() {
    for kind in ScenarioKind::ALL {
        for eta in [kind.default_eta(), 0.8 * kind.default_eta()] {
            let mut config = ScenarioConfig::new(kind);
            config.eta = eta;
            config.states = random_states(10, 3);
            let analytic = run_scenario(&config).unwrap();
            config.backend = Backend::Walk;
            let walk = run_scenario(&config).unwrap();
            assert!(walk.backend_residual.compile_residual <= 1e-9);
            assert!(walk.backend_residual.max_probability_deviation <= 1e-9, "{kind} {eta}");
            for (a, w) in analytic.per_state.iter().zip(&walk.per_state) {
                for (pa, pw) in a.distribution_ideal.iter().zip(&w.distribution_ideal) {
                    assert_eq!(pa.label, pw.label);
                    assert!((pa.p - pw.p).abs() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn exact_probabilities_are_normalised() {
    for kind in ScenarioKind::ALL {
        let mut config = ScenarioConfig::new(kind);
        config.states = random_states(20, 4);
        for s in run_scenario(&config).unwrap().per_state {
            let total: f64 = s.distribution_ideal.iter().map(|p| p.p).sum();
            assert!((total - 1.0).abs() <= 1e-12);
            assert!(s.distribution_ideal.iter().all(|p| (0.0..=1.0).contains(&p.p)));
            for rel in &s.relations {
                assert!(rel.holds, "{kind} {}: {rel:?}", s.state);
            }
        }
    }
}

/// 10⁶-shot estimates land within 5σ of the ideal probabilities in at
/// least 99 of 100 seeded repetitions.
#[test]
fn sampled_estimates_converge() {
    let mut config = ScenarioConfig::new(ScenarioKind::Triple);
    config.states = random_states(1, 5);
    let ideal: Vec<f64> = run_scenario(&config).unwrap().per_state[0].distribution_ideal.iter().map(|p| p.p).collect();
    let dist = Distribution { labels: (0..8).map(OutcomeLabel::Index).collect(), probs: ideal.clone() };
    let shots = 1_000_000u64;
    let mut good = 0;
    let mut seeds = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let counts = sample_counts(&dist, shots, seeds.random()).unwrap();
        let ok = counts.frequencies().iter().zip(&ideal).all(|(f, p)| {
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            (f - p).abs() <= 5.0 * sigma
        });
        good += ok as usize;
    }
    assert!(good >= 99, "{good}");
}

#[test]
fn sampled_marginals_follow_scaled_expectations() {
    for kind in [ScenarioKind::PairXz, ScenarioKind::Triple] {
        let mut config = ScenarioConfig::new(kind);
        config.states = random_states(3, 7);
        config.shots = 200_000;
        config.mc_runs = 200;
        config.seed = 8;
        let report = run_scenario(&config).unwrap();
        for (s, named) in report.per_state.iter().zip(&config.states) {
            for (m, axis) in s.marginals.iter().zip(kind.axes()) {
                let want = config.eta * named.bloch[axis.index()];
                assert!((m.mean_approx - want).abs() <= 5.0 * m.mean_approx_err, "{kind} {} {}", s.state, m.observable);
                assert!(m.mean_approx_err > 0.0);
            }
        }
    }
}

#[test]
fn sampled_reports_are_seeded() {
    let mut config = ScenarioConfig::new(ScenarioKind::PairXy);
    config.shots = 5000;
    config.mc_runs = 50;
    config.seed = 42;
    let a = run_scenario(&config).unwrap().to_json();
    assert_eq!(a, run_scenario(&config).unwrap().to_json());
    config.seed = 43;
    assert_ne!(a, run_scenario(&config).unwrap().to_json());
}

#[test]
fn efficiencies_shift_calibration_distances() {
    let mut config = ScenarioConfig::new(ScenarioKind::PairXy);
    let ideal = run_scenario(&config).unwrap();
    config.efficiencies = Some(vec![1.0, 0.95, 0.97, 0.99]);
    let skewed = run_scenario(&config).unwrap();
    for (a, b) in ideal.calibration.iter().zip(&skewed.calibration) {
        assert_eq!(a.theory, b.theory);
        assert!((a.state_indep - b.state_indep).abs() > 1e-4);
    }
}
