mod common;

use common::{breakout_trail_violations, golden_failures, invaders_seed_violations};
use proptest::prelude::*;
use sparse_rl::env::trajectory;
use sparse_rl::env::{Breakout, CopyChain, SpaceInvaders};
use sparse_rl::{EnvKind, Environment};

#[test]
fn golden_trajectories_match_reference_simulator() {
    let (checked, failures) = golden_failures();
    assert_eq!(checked, 12);
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn fixtures_cover_hits_misses_and_full_length() {
    let read = |name: &str| {
        let text = std::fs::read_to_string(common::fixture(name)).unwrap();
        trajectory::parse(&text, name).unwrap()
    };
    let miss = read("breakout_col4.tsv");
    assert!(miss.last().unwrap().terminal);
    let full = read("breakout_col0.tsv");
    assert_eq!(full.len(), 41);
    assert!(full.iter().map(|r| r.reward).sum::<i64>() > 0);
    assert_eq!(read("space_invaders_survive.tsv").len(), 41);
    assert!(read("space_invaders_hit.tsv").last().unwrap().terminal);
}

#[test]
fn breakout_trail_follows_ball() {
    let v = breakout_trail_violations(0..20, 2_000);
    assert!(v.is_empty(), "{v:?}");
}

#[test]
fn space_invaders_ignores_seed() {
    let v = invaders_seed_violations(20, 300);
    assert!(v.is_empty(), "{v:?}");
}

fn play(env: &mut dyn Environment, actions: &[usize]) -> Vec<(String, f64, bool)> {
    let mut out = vec![(env.reset().to_bitstring(), 0.0, false)];
    for &a in actions {
        let s = env.step(a % env.spec().num_actions).unwrap();
        out.push((s.obs.to_bitstring(), s.reward, s.terminal));
        if s.terminal {
            out.push((env.reset().to_bitstring(), 0.0, false));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observations_binary_and_rewards_whole(
        kind in prop_oneof![Just(EnvKind::Breakout), Just(EnvKind::SpaceInvaders)],
        seed in any::<u64>(),
        actions in prop::collection::vec(0usize..4, 1..400),
    ) {
        let mut env = kind.make(seed);
        let len = kind.spec().flat_len();
        for (bits, reward, _) in play(env.as_mut(), &actions) {
            prop_assert_eq!(bits.len(), len);
            prop_assert!(bits.bytes().all(|b| b == b'0' || b == b'1'));
            prop_assert!(reward >= 0.0 && reward.fract() == 0.0);
        }
    }

    #[test]
    fn breakout_is_a_function_of_seed_and_actions(
        seed in any::<u64>(),
        actions in prop::collection::vec(0usize..3, 1..300),
    ) {
        let a = play(&mut Breakout::new(seed), &actions);
        let b = play(&mut Breakout::new(seed), &actions);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn invaders_trajectory_independent_of_seed(
        s1 in any::<u64>(),
        s2 in any::<u64>(),
        actions in prop::collection::vec(0usize..4, 1..300),
    ) {
        let mut a = SpaceInvaders::new();
        a.seed(s1);
        let mut b = SpaceInvaders::new();
        b.seed(s2);
        prop_assert_eq!(play(&mut a, &actions), play(&mut b, &actions));
    }

    #[test]
    fn copy_chain_shifts(seed in any::<u64>(), steps in 1usize..50) {
        let mut env = CopyChain::new(3, 4, seed);
        let mut prev = env.reset().as_slice().to_vec();
        for _ in 0..steps {
            let next = env.step(0).unwrap().obs.as_slice().to_vec();
            prop_assert_eq!(&next[1..], &prev[..prev.len() - 1]);
            prev = next;
        }
    }
}
