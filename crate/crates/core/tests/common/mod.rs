//! Brute-force simulator oracle shared by the integration targets.
#![allow(dead_code)]

use nidlab::envs::{step_with, Action, EnvSpec, GridState, ObjectSpec, Orientation, AGENT_ACTIONS};

/// Every object set of up to three objects: plain, rollable, agent, with the
/// stochastic mover on flat planes.
pub fn all_envs(max_objects: usize, max_d: usize) -> Vec<EnvSpec> {
    let mut out = Vec::new();
    for d in 2..=max_d {
        for apex in 1..d {
            for orientation in [Orientation::Peak, Orientation::Valley, Orientation::Flat] {
                for n in 1..=max_objects {
                    // 0 = plain, 1 = rollable, 2 = agent
                    for code in 0..3usize.pow(n as u32) {
                        let kinds: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
                        let objects: Vec<ObjectSpec> = kinds
                            .iter()
                            .enumerate()
                            .map(|(i, &k)| match k {
                                2 => ObjectSpec::agent(i),
                                k => ObjectSpec::new(i, &format!("o{i}"), k == 1, false),
                            })
                            .collect();
                        let movers: Vec<Option<usize>> = if orientation == Orientation::Flat {
                            (0..n).map(Some).collect()
                        } else {
                            vec![None]
                        };
                        for m in movers {
                            let spec = EnvSpec {
                                positions: d,
                                apex,
                                orientation,
                                objects: objects.clone(),
                                stochastic_mover: m,
                                horizon: 8,
                            };
                            if spec.validate().is_ok() {
                                out.push(spec);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn all_states(spec: &EnvSpec) -> Vec<GridState> {
    let n = spec.n_objects();
    let d = spec.positions;
    (0..d.pow(n as u32))
        .map(|code| GridState::new((0..n).map(|i| code / d.pow(i as u32) % d).collect()))
        .filter(|s| s.validate(spec).is_ok())
        .collect()
}

fn slope(spec: &EnvSpec, p: usize) -> i64 {
    let left = p < spec.apex;
    match (spec.orientation, left) {
        (Orientation::Peak, true) | (Orientation::Valley, false) => -1,
        _ => 1,
    }
}

/// Reference step. Rolling is resolved by enumerating every subset of
/// movers as the set that commits, and keeping the subsets in which each
/// mover's outcome agrees with the cells held when its turn comes.
pub fn oracle(spec: &EnvSpec, s: &GridState, a: Action, mover_dir: Option<i64>) -> GridState {
    let d = spec.positions as i64;
    let n = spec.n_objects();
    let solid = |o: usize| !spec.objects[o].is_agent;
    let mut pos: Vec<i64> = s.pos.iter().map(|&p| p as i64).collect();

    let mut grabbed = None;
    if let Some(ag) = (0..n).find(|&o| spec.objects[o].is_agent) {
        let (dir, grab) = match a {
            Action::MoveLeftNoGrab => (-1, false),
            Action::MoveRightNoGrab => (1, false),
            Action::MoveLeftGrab => (-1, true),
            Action::MoveRightGrab => (1, true),
            Action::None => unreachable!(),
        };
        let from = pos[ag];
        let to = (from + dir).clamp(0, d - 1);
        pos[ag] = to;
        if grab {
            if let Some(o) = (0..n).filter(|&o| o != ag && pos[o] == from).min() {
                let taken = (0..n).any(|q| q != o && solid(q) && pos[q] == to);
                if to == from || !taken {
                    pos[o] = to;
                    grabbed = Some(o);
                }
            }
        }
    }

    if spec.orientation != Orientation::Flat {
        let mut movers: Vec<(usize, i64)> = (0..n)
            .filter(|&o| spec.objects[o].rollable && grabbed != Some(o))
            .map(|o| (o, slope(spec, pos[o] as usize)))
            .collect();
        // left-movers nearest the left wall first, then right-movers nearest the right wall
        movers.sort_by_key(|&(o, dir)| if dir < 0 { (0, pos[o]) } else { (1, -pos[o]) });
        let k = movers.len();
        let mut consistent = Vec::new();
        for subset in 0..(1u32 << k) {
            let commits = |i: usize| subset & (1 << i) != 0;
            let ok = (0..k).all(|i| {
                let (o, dir) = movers[i];
                let dest = pos[o] + dir;
                let held = |q: usize| {
                    match movers.iter().position(|&(m, _)| m == q) {
                        Some(j) if j < i && commits(j) => pos[q] + movers[j].1,
                        _ => pos[q],
                    }
                };
                let free = dest >= 0 && dest < d && !(0..n).any(|q| q != o && solid(q) && held(q) == dest);
                free == commits(i)
            });
            if ok {
                consistent.push(subset);
            }
        }
        assert_eq!(consistent.len(), 1, "commitment set is not unique");
        for (i, &(o, dir)) in movers.iter().enumerate() {
            if consistent[0] & (1 << i) != 0 {
                pos[o] += dir;
            }
        }
    }

    if let Some(m) = spec.stochastic_mover {
        let dest = pos[m] + mover_dir.unwrap();
        if dest >= 0 && dest < d && !(0..n).any(|q| q != m && solid(q) && pos[q] == dest) {
            pos[m] = dest;
        }
    }
    GridState::new(pos.into_iter().map(|p| p as usize).collect())
}

/// Compares `step_with` with the oracle on every valid state, action and
/// mover direction of every environment within the bounds. Returns the
/// number of transitions checked and the first mismatch, if any.
pub fn exhaustive_check(max_objects: usize, max_d: usize) -> (usize, Option<String>) {
    let mut checked = 0usize;
    for spec in &all_envs(max_objects, max_d) {
        let actions: Vec<Action> = if spec.has_agent() { AGENT_ACTIONS.to_vec() } else { vec![Action::None] };
        let dirs: Vec<Option<i64>> = if spec.stochastic_mover.is_some() { vec![Some(-1), Some(1)] } else { vec![None] };
        for s in all_states(spec) {
            for &a in &actions {
                for &md in &dirs {
                    let got = step_with(spec, &s, a, md).expect("valid transition");
                    let want = oracle(spec, &s, a, md);
                    if got != want || got.validate(spec).is_err() {
                        return (checked, Some(format!("{spec:?} {s:?} {a:?} {md:?}: got {got:?}, want {want:?}")));
                    }
                    checked += 1;
                }
            }
        }
    }
    (checked, None)
}
