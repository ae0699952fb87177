"""Smoke test for the crossgreed_py extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install --force-reinstall target/wheels/crossgreed_py-*.whl
"""

import csv
import os
import tempfile
from fractions import Fraction

import crossgreed_py as cg


def main():
    # One column that separates the labels and one that carries no signal.
    obj = cg.Objective.from_counts([([1, 0], [0, 1]), ([1, 1], [1, 1])], names=["sep", "noise"])
    assert obj.mode == "exact" and len(obj) == 2
    assert obj.f([0]) == Fraction(1)
    assert obj.auc_star([1]) == Fraction(1, 2)
    report = obj.select(2, method="greedy")
    assert report["selected_names"] == ["sep"], report
    assert report["early_stopped"] and report["guarantee"]

    fobj = cg.Objective.from_probabilities([([0.7, 0.3], [0.4, 0.6])] * 3, prune_eps=1e-12)
    value, bound = fobj.f_with_bound([0, 1, 2])
    assert 0.0 < value < 1.0 and bound < 1e-9
    lazy = fobj.select(2, method="lazy")["value"]
    assert abs(lazy - fobj.select(2, method="exhaustive")["value"]) < 1e-12

    p, q = [0.5, 0.5], [0.25, 0.75]
    assert abs(cg.tv_distance(p, q) - 0.25) < 1e-15
    assert cg.commutator_tv(p, p) == 0.0

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "lc.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["language", "country", "label"])
            w.writerows(
                [["English", "Scotland", 1], ["Spanish", "Mexico", 1], ["English", "Mexico", 0], ["Spanish", "Scotland", 0]]
            )
        r = cg.evaluate_csv(path, ["language", "country"])
        assert r["joint_auc_star"] == 1 and r["naive_bayes_auc_star"] == Fraction(1, 2)
        assert r["independence_gap"] == Fraction(1, 4)
        assert cg.Objective.from_csv(path).names == ["language", "country"]

    rec = cg.hardness_record(3, [(0, 1), (1, 2), (2, 0)], [0, 1])
    phi = Fraction(1, 3)
    assert rec["phi"] == phi and rec["mutual_information"] == phi
    assert rec["normalized_auc"] == phi * (2 - phi) and rec["consistent"]

    try:
        cg.Objective.from_counts([([1] * 9, [1] * 9)] * 4).select(4, pad_to_k=True, method="exhaustive", exhaustive_cap=0)
    except cg.CapacityError:
        pass
    else:
        raise AssertionError("expected CapacityError")

    theory = cg.verify_theory(seed=3, trials=20)
    assert theory["passed"], theory
    print("crossgreed_py smoke test passed")


if __name__ == "__main__":
    main()
