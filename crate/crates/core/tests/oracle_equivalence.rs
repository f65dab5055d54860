//! Production diagnoses against the brute-force oracle on seeded random instances.

use std::collections::BTreeSet;

use creative_mdp::csf::{diagnose, Concept, Diagnosis, ReachBound};
use creative_mdp::fixtures::{random_instance, RandomInstance, THRESHOLD_GRID};
use creative_mdp::mapping::state::{build_ms, initial_concepts, MsConfig};
use creative_mdp::mapping::trajectory::{build_mtau, MtauConfig};
use creative_mdp::mapping::transition::{self, build_msas, MsasConfig};
use creative_mdp::oracle::{classify_states, classify_trajectories, classify_transitions, Verdict};
use creative_mdp::Normalization;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FIXTURES: u64 = 200;

fn assert_agrees(label: &str, d: &Diagnosis, v: &Verdict) {
    let set = |s: &creative_mdp::ConceptSet| s.iter().cloned().collect::<BTreeSet<Concept>>();
    assert_eq!(
        set(&d.conceptual_space),
        v.conceptual_space,
        "{label}: conceptual space"
    );
    assert_eq!(set(&d.reachable.concepts), v.reachable, "{label}: reachable");
    assert_eq!(set(&d.aberration.concepts), v.aberration, "{label}: aberration");
    assert_eq!(d.aberration_class, v.aberration_class, "{label}: aberration class");
    assert_eq!(d.uninspiration, v.uninspiration, "{label}: uninspiration");
}

fn check(seed: u64, inst: &RandomInstance) {
    let RandomInstance {
        mdp,
        policy,
        values,
        starts,
        horizon,
    } = inst;
    let normalization = Normalization::MinMax;
    for alpha in THRESHOLD_GRID {
        for beta in THRESHOLD_GRID {
            let label = format!("seed {seed} alpha {alpha} beta {beta}");

            let ms = build_ms(
                mdp,
                policy,
                values,
                &MsConfig {
                    alpha,
                    beta,
                    normalization,
                },
            )
            .unwrap();
            let d = diagnose(&ms, &initial_concepts(starts), ReachBound::Fixpoint).unwrap();
            assert_agrees(
                &format!("{label} states"),
                &d,
                &classify_states(mdp, policy, values, alpha, beta, starts),
            );

            let msas = build_msas(
                mdp,
                policy,
                &MsasConfig {
                    alpha,
                    beta,
                    normalization,
                },
            )
            .unwrap();
            let initial = transition::initial_concepts(mdp, policy, starts);
            let d = diagnose(&msas, &initial, ReachBound::Fixpoint).unwrap();
            assert_agrees(
                &format!("{label} transitions"),
                &d,
                &classify_transitions(mdp, policy, alpha, beta, starts),
            );

            let cfg = MtauConfig {
                alpha,
                beta,
                horizon: Some(*horizon),
                normalization,
                starts: starts.clone(),
            };
            let mtau = build_mtau(mdp, policy, values, &cfg).unwrap();
            let d = diagnose(&mtau, &[Concept::Empty], ReachBound::Steps(*horizon)).unwrap();
            let v = classify_trajectories(mdp, policy, values, alpha, beta, starts, *horizon).unwrap();
            assert_agrees(&format!("{label} trajectories h={horizon}"), &d, &v);
        }
    }
}

#[test]
fn production_matches_oracle_on_random_instances() {
    for seed in 0..FIXTURES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check(seed, &random_instance(&mut rng));
    }
}
