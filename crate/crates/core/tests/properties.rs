use creative_mdp::analyzer::{analyze, detect_exploratory_events, AnalysisConfig};
use creative_mdp::csf::{
    conceptual_space, enumerate_domain, strong_alpha_cut, transformation_kind, transformation_valued, ReachBound,
    TransformationKind,
};
use creative_mdp::fixtures::{random_instance, random_mdp, random_policy, THRESHOLD_GRID};
use creative_mdp::io::{parse_run, run_to_json};
use creative_mdp::learner::{bellman_residual, td_learn, value_iteration};
use creative_mdp::mapping::state::{build_ms, initial_concepts, MsConfig};
use creative_mdp::mapping::trajectory::{
    build_mtau, conditional_trajectory_probability, trajectory_acceptability, MtauConfig,
};
use creative_mdp::mapping::transition::{self, build_msas, transition_acceptability, MsasConfig};
use creative_mdp::oracle::enumerate_trajectories;
use creative_mdp::{diagnose, AberrationClass, LearnerConfig, MappingKind, Normalization, StochasticPolicy};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn threshold() -> impl Strategy<Value = f64> {
    prop_oneof![prop::sample::select(THRESHOLD_GRID.to_vec()), 0.0..=1.0]
}

fn sas(alpha: f64, beta: f64) -> MsasConfig {
    MsasConfig {
        alpha,
        beta,
        normalization: Normalization::MinMax,
    }
}

/// The same policy with one row replaced.
fn perturbed(policy: &StochasticPolicy, seed: u64) -> StochasticPolicy {
    let mut r = rng(seed);
    let s = (seed as usize) % policy.num_states();
    let rows = (0..policy.num_states())
        .map(|i| {
            if i == s {
                creative_mdp::fixtures::random_distribution(&mut r, policy.num_actions(), true)
            } else {
                policy.row(creative_mdp::StateId(i)).to_vec()
            }
        })
        .collect();
    StochasticPolicy::new(rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_cuts_shrink_as_alpha_grows(seed in any::<u64>(), a in threshold(), b in threshold()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let inst = random_instance(&mut rng(seed));
        let ecs = build_msas(&inst.mdp, &inst.policy, &sas(0.0, 0.5)).unwrap();
        let domain = enumerate_domain(&ecs).unwrap();
        let wide = strong_alpha_cut(&*ecs.acceptability, &domain, lo).unwrap();
        let narrow = strong_alpha_cut(&*ecs.acceptability, &domain, hi).unwrap();
        prop_assert!(narrow.is_subset(&wide));
    }

    #[test]
    fn occurrence_probabilities_are_distributions(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed));
        let (mdp, pi) = (&inst.mdp, &inst.policy);
        for s in mdp.states() {
            let mut total = 0.0;
            for a in mdp.actions() {
                for n in mdp.states() {
                    total += transition_acceptability(mdp, pi, s, a, n).unwrap();
                }
            }
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
        for &start in &inst.starts {
            for k in 0..=inst.horizon {
                let mut total = 0.0;
                for (tau, p) in enumerate_trajectories(mdp, pi, start, k).unwrap() {
                    let product: f64 = tau
                        .transitions()
                        .map(|(s, a, n)| transition_acceptability(mdp, pi, s, a, n).unwrap())
                        .product();
                    let production = trajectory_acceptability(mdp, pi, &tau).unwrap();
                    prop_assert!((production - product).abs() < 1e-9);
                    prop_assert!((production - p).abs() < 1e-9);
                    if k > 0 {
                        let prefix = tau.prefix(k - 1);
                        let prior = trajectory_acceptability(mdp, pi, &prefix).unwrap();
                        if let Some(cond) = conditional_trajectory_probability(mdp, pi, &tau, k - 1).unwrap() {
                            prop_assert!((prior * cond - production).abs() < 1e-9);
                        } else {
                            prop_assert_eq!(prior, 0.0);
                        }
                    }
                    total += production;
                }
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn state_concepts_never_aberrate(seed in any::<u64>(), alpha in 0.0..1.0f64, beta in threshold()) {
        let inst = random_instance(&mut rng(seed));
        let cfg = MsConfig { alpha, beta, normalization: Normalization::MinMax };
        let ecs = build_ms(&inst.mdp, &inst.policy, &inst.values, &cfg).unwrap();
        let d = diagnose(&ecs, &initial_concepts(&inst.starts), ReachBound::Fixpoint).unwrap();
        prop_assert!(d.aberration.concepts.is_empty());
        prop_assert_eq!(d.aberration_class, AberrationClass::None);
        prop_assert_eq!(d.conceptual_space.len(), inst.mdp.num_states());
    }

    #[test]
    fn transformation_kinds_follow_the_cuts(seed in any::<u64>(), alpha in threshold(), beta in threshold()) {
        let inst = random_instance(&mut rng(seed));
        let (mdp, before) = (&inst.mdp, &inst.policy);
        let after = perturbed(before, seed);
        let cfg = sas(alpha, beta);
        let old = build_msas(mdp, before, &cfg).unwrap();
        let new = build_msas(mdp, &after, &cfg).unwrap();
        let (c_old, c_new) = (conceptual_space(&old).unwrap(), conceptual_space(&new).unwrap());

        prop_assert_eq!(transformation_kind(false, &c_old, &c_old), TransformationKind::None);
        let kind = transformation_kind(before != &after, &c_old, &c_new);
        if before != &after {
            prop_assert!(kind.is_q());
        }
        prop_assert_eq!(kind == TransformationKind::NAndQ, c_old != c_new);
        prop_assert!(!kind.is_n() || kind.is_q());

        let initial = transition::initial_concepts(mdp, before, &inst.starts);
        let valued_at = |beta: f64| {
            let o = build_msas(mdp, before, &sas(alpha, beta)).unwrap();
            let n = build_msas(mdp, &after, &sas(alpha, beta)).unwrap();
            transformation_valued(&o, &n, &initial, &initial, ReachBound::Fixpoint).unwrap()
        };
        let lower = beta * 0.5;
        prop_assert!(!valued_at(beta) || valued_at(lower));
    }

    #[test]
    fn trajectory_cut_is_pruned_correctly(seed in any::<u64>(), alpha in threshold()) {
        let inst = random_instance(&mut rng(seed));
        let cfg = MtauConfig {
            alpha,
            beta: 0.5,
            horizon: Some(inst.horizon),
            normalization: Normalization::MinMax,
            starts: inst.starts.clone(),
        };
        let ecs = build_mtau(&inst.mdp, &inst.policy, &inst.values, &cfg).unwrap();
        let full = strong_alpha_cut(&*ecs.acceptability, &enumerate_domain(&ecs).unwrap(), alpha).unwrap();
        prop_assert_eq!(conceptual_space(&ecs).unwrap(), full);
    }

    #[test]
    fn value_iteration_satisfies_bellman(seed in any::<u64>(), ns in 1usize..6, na in 1usize..4) {
        let mdp = random_mdp(&mut rng(seed), ns, na);
        let cfg = LearnerConfig::default();
        let vi = value_iteration(&mdp, &cfg).unwrap();
        prop_assert!(bellman_residual(&mdp, &vi.values, cfg.gamma) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn runs_round_trip_and_reports_are_deterministic(seed in any::<u64>(), mapping in 0usize..3) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r);
        let cfg = LearnerConfig { episodes: 20, snapshot_every: 5, max_steps: 10, seed, ..LearnerConfig::default() };
        let run = td_learn(&inst.mdp, &cfg).unwrap();
        let json = run_to_json(&run);
        let back = parse_run(&json).unwrap();
        prop_assert_eq!(&back, &run);
        prop_assert_eq!(run_to_json(&back), json);

        let mapping = [MappingKind::State, MappingKind::Transition, MappingKind::Trajectory][mapping];
        let acfg = AnalysisConfig { horizon: Some(inst.horizon), ..AnalysisConfig::new(mapping, 0.25, 0.5) };
        let a = analyze(&run, &acfg).unwrap().to_json();
        prop_assert_eq!(&analyze(&back, &acfg).unwrap().to_json(), &a);
    }

    #[test]
    fn exploratory_events_are_prefix_stable(seed in any::<u64>(), cut in 0usize..200, mapping in 0usize..3) {
        let inst = random_instance(&mut rng(seed));
        let cfg = LearnerConfig { episodes: 20, snapshot_every: 5, max_steps: 10, seed, ..LearnerConfig::default() };
        let run = td_learn(&inst.mdp, &cfg).unwrap();
        let mapping = [MappingKind::State, MappingKind::Transition, MappingKind::Trajectory][mapping];
        let acfg = AnalysisConfig { horizon: Some(inst.horizon), ..AnalysisConfig::new(mapping, 0.25, 0.5) };
        let full = detect_exploratory_events(&run, &acfg).unwrap();
        let mut short = run.clone();
        short.experience.truncate(cut.min(run.experience.len()));
        let truncated = detect_exploratory_events(&short, &acfg).unwrap();
        prop_assert!(truncated.iter().all(|e| e.step < short.experience.len()));
        prop_assert_eq!(&full[..truncated.len()], &truncated[..]);
    }
}

#[test]
fn random_policies_cover_the_grid() {
    // Guards against a generator that never produces aberrations.
    let mut classes = std::collections::BTreeSet::new();
    for seed in 0..200 {
        let inst = random_instance(&mut rng(seed));
        let pi = random_policy(&mut rng(seed + 1000), &inst.mdp, true);
        let ecs = build_msas(&inst.mdp, &pi, &sas(0.25, 0.25)).unwrap();
        let initial = transition::initial_concepts(&inst.mdp, &pi, &inst.starts);
        classes.insert(diagnose(&ecs, &initial, ReachBound::Fixpoint).unwrap().aberration_class);
    }
    assert_eq!(classes.len(), 4, "{classes:?}");
}
