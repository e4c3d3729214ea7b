"""Smoke test for the nidlab_py extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/nidlab_py-*.whl
"""

import math
import os
import tempfile

import nidlab_py as nl


def main():
    env = nl.EnvSpec.preset("inclined_plane")
    assert (env.positions, env.apex, env.n_objects) == (12, 6, 4)
    assert env.step([0, 3, 8, 10]) == [0, 2, 8, 11]
    states, actions = env.episode("train", seed=1)
    assert len(states) == env.horizon + 1 and len(actions) == env.horizon
    print(env.render(states[0]))

    # closed forms
    per_step = -(math.log(1 / 12) + 11 * math.log(11 / 12)) / 12
    assert abs(nl.bce([[1.0] + [0.0] * 11], [[1 / 12] * 12]) - per_step) < 1e-12
    r1, r2 = nl.entropy_terms([[0.0, 0.0, 0.0]])
    assert abs(r1 - math.log(3)) < 1e-12 and abs(r2 - math.log(3)) < 1e-12
    assert nl.silhouette([[0.0], [0.1], [5.0], [5.1]], [0, 0, 1, 1]) > 0.9
    assert nl.check_gradients(n_configs=10) < 1e-6

    model = nl.Model(env, "nid", hyper='{"steps": 2000}', seed=0)
    curve = model.train()
    assert curve[-1] < curve[0], curve
    rows = model.predict(states[0])
    assert len(rows) == 4 and all(abs(sum(r) - 1) < 1e-9 for r in rows)
    mean, std = model.rollout("test", n_rollouts=20)
    assert len(mean) == env.horizon and all(s >= 0 for s in std)
    emb = model.embedding()
    assert len(emb["points"]) == len(emb["labels"])

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "nid.ckpt.json")
        model.save(path)
        back = nl.Model.load(path, env)
        assert back.predict(states[0]) == rows

    try:
        nl.EnvSpec.preset("hill")
    except ValueError as e:
        assert "hill" in str(e)
    else:
        raise AssertionError("bad preset accepted")

    print(f"{model!r}: final train loss {curve[-1]:.4f}, test compound error {mean[-1]:.4f}, "
          f"silhouette {emb['silhouette']:.3f}")
    print("smoke ok")


if __name__ == "__main__":
    main()
