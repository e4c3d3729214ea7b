//! Simulator against an exhaustive commitment oracle, plus hand-worked
//! examples and randomized invariants.

use std::time::Instant;

mod common;

use common::{all_envs, exhaustive_check, oracle};
use nidlab::envs::{step_with, Action, EnvSpec, GridState, ObjectSpec, Orientation};
use proptest::prelude::*;

#[test]
fn step_matches_commitment_oracle_exhaustively() {
    let t0 = Instant::now();
    let envs = all_envs(3, 6);
    assert!(envs.iter().any(|e| e.orientation == Orientation::Valley && e.has_agent()));
    assert!(envs.iter().any(|e| e.stochastic_mover.is_some() && e.has_agent()));
    let (checked, mismatch) = exhaustive_check(3, 6);
    assert_eq!(mismatch, None);
    assert!(checked > 100_000, "only {checked} transitions");
    assert!(t0.elapsed().as_secs() < 60);
}

#[test]
fn oracle_reproduces_hand_worked_steps() {
    let spec = ball_env(12, 6, 2);
    assert_eq!(oracle(&spec, &GridState::new(vec![2, 3]), Action::None, None).pos, vec![1, 2]);
    let blocked = EnvSpec {
        objects: vec![ObjectSpec::new(0, "cube", false, false), ObjectSpec::new(1, "ball", true, false)],
        ..ball_env(12, 6, 0)
    };
    assert_eq!(oracle(&blocked, &GridState::new(vec![2, 3]), Action::None, None).pos, vec![2, 3]);
}

fn ball_env(d: usize, apex: usize, n: usize) -> EnvSpec {
    EnvSpec {
        positions: d,
        apex,
        orientation: Orientation::Peak,
        objects: (0..n).map(|i| ObjectSpec::new(i, "ball", true, false)).collect(),
        stochastic_mover: None,
        horizon: 8,
    }
}

#[test]
fn chains_roll_together() {
    let spec = ball_env(12, 6, 2);
    let s = step_with(&spec, &GridState::new(vec![2, 3]), Action::None, None).unwrap();
    assert_eq!(s.pos, vec![1, 2]);
    let s = step_with(&spec, &GridState::new(vec![8, 9]), Action::None, None).unwrap();
    assert_eq!(s.pos, vec![9, 10]);
    // a chain against the wall stays packed
    let s = step_with(&spec, &GridState::new(vec![1, 0]), Action::None, None).unwrap();
    assert_eq!(s.pos, vec![1, 0]);
}

#[test]
fn grab_releases_blocked_ball() {
    let spec = EnvSpec {
        objects: vec![ObjectSpec::new(0, "cube", false, false), ObjectSpec::new(1, "ball", true, false), ObjectSpec::agent(2)],
        ..EnvSpec::inclined_plane()
    };
    // the ball at 5 rolls left but the cube holds 4
    let s = GridState::new(vec![4, 5, 4]);
    assert_eq!(step_with(&spec, &s, Action::MoveLeftNoGrab, None).unwrap().pos, vec![4, 5, 3]);
    let n = step_with(&spec, &s, Action::MoveLeftGrab, None).unwrap();
    assert_eq!(n.pos, vec![3, 4, 3]);
}

fn mirror(s: &GridState, d: usize) -> GridState {
    GridState::new(s.pos.iter().map(|&p| d - 1 - p).collect())
}

fn arb_case() -> impl Strategy<Value = (EnvSpec, GridState)> {
    (3usize..=9, 1usize..=3, prop::bool::ANY)
        .prop_flat_map(|(d, n, valley)| {
            let n = n.min(d);
            (
                Just(d),
                1..d,
                Just(valley),
                prop::collection::vec(prop::bool::ANY, n),
                Just((0..d).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(d, apex, valley, rollable, cells)| {
            let pos = cells[..rollable.len()].to_vec();
            let spec = EnvSpec {
                positions: d,
                apex,
                orientation: if valley { Orientation::Valley } else { Orientation::Peak },
                objects: rollable.iter().enumerate().map(|(i, &r)| ObjectSpec::new(i, "x", r, false)).collect(),
                stochastic_mover: None,
                horizon: 8,
            };
            (spec, GridState::new(pos))
        })
}

proptest! {
    #[test]
    fn reflection_equivariance((spec, s) in arb_case()) {
        let d = spec.positions;
        let mut mirrored = spec.clone();
        mirrored.apex = d - spec.apex;
        let next = step_with(&spec, &s, Action::None, None).unwrap();
        let via_mirror = step_with(&mirrored, &mirror(&s, d), Action::None, None).unwrap();
        // two valley balls converging on one cell are resolved left-mover first,
        // which reflection does not preserve
        let converging = spec.orientation == Orientation::Valley && {
            let target = |p: usize| if p < spec.apex { p + 1 } else { p.wrapping_sub(1) };
            let balls: Vec<usize> = (0..s.pos.len()).filter(|&o| spec.objects[o].rollable).collect();
            balls.iter().any(|&a| balls.iter().any(|&b| a != b && target(s.pos[a]) == target(s.pos[b])))
        };
        if !converging {
            prop_assert_eq!(mirror(&next, d), via_mirror);
        }
    }

    #[test]
    fn steps_preserve_validity_and_statics((spec, s) in arb_case()) {
        let next = step_with(&spec, &s, Action::None, None).unwrap();
        prop_assert!(next.validate(&spec).is_ok());
        for (o, obj) in spec.objects.iter().enumerate() {
            if !obj.rollable {
                prop_assert_eq!(next.pos[o], s.pos[o]);
            }
            prop_assert!(next.pos[o].abs_diff(s.pos[o]) <= 1);
        }
    }
}
