use creative_mdp::fixtures::{chain2, random_mdp_continuous};
use creative_mdp::learner::{td_learn, value_iteration};
use creative_mdp::{ActionId, LearnerConfig, StateId, TabularMdp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn final_greedy(mdp: &TabularMdp, cfg: &LearnerConfig) -> Vec<ActionId> {
    let run = td_learn(mdp, cfg).unwrap();
    run.snapshots.last().unwrap().policy.greedy_actions()
}

/// Gap between the best and second-best action values, minimised over states.
fn action_gap(mdp: &TabularMdp, cfg: &LearnerConfig) -> f64 {
    let v = value_iteration(mdp, cfg).unwrap().values;
    mdp.states()
        .map(|s| {
            let mut q: Vec<f64> = mdp
                .actions()
                .map(|a| {
                    mdp.states()
                        .map(|n| mdp.transition(s, a, n) * (mdp.reward(s, a, n) + cfg.gamma * v.get(n)))
                        .sum()
                })
                .collect();
            q.sort_by(|a, b| b.total_cmp(a));
            q[0] - q[1]
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn chain2_value_iteration_closed_form() {
    let vi = value_iteration(&chain2(), &LearnerConfig::default()).unwrap();
    assert!((vi.values.get(StateId(1)) - 10.0).abs() < 1e-6);
    assert_eq!(vi.policy.greedy_actions()[0], ActionId(1));
}

#[test]
fn td_matches_value_iteration_on_chain2() {
    let cfg = LearnerConfig::default();
    assert_eq!(final_greedy(&chain2(), &cfg)[0], ActionId(1));
}

#[test]
fn td_matches_value_iteration_on_gapped_three_state_models() {
    let cfg = LearnerConfig::default();
    let mut checked = 0;
    for seed in 0..200u64 {
        let mdp = random_mdp_continuous(&mut ChaCha8Rng::seed_from_u64(seed), 3, 2);
        if action_gap(&mdp, &cfg) <= 0.1 {
            continue;
        }
        let expected = value_iteration(&mdp, &cfg).unwrap().policy.greedy_actions();
        let got = final_greedy(&mdp, &LearnerConfig { seed, ..cfg.clone() });
        assert_eq!(got, expected, "seed {seed}");
        checked += 1;
        if checked == 10 {
            break;
        }
    }
    assert_eq!(checked, 10);
}
