"""Regenerate the shipped discrete fixtures and their frozen oracle constants.

    python scripts/make_fixtures.py

Random fixtures come from a fixed seed; rows are rounded to four decimals with
the last entry absorbing the rounding so each row sums to one.
"""
import json
from pathlib import Path

import numpy as np
import yaml

from pmc_adapt.oracle import (
    DiscreteInstance,
    exact_alpha_max,
    exact_entropy,
    exact_f,
    exact_sigma2,
    validate_instance,
)

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "fixtures" / "discrete"
SEED = 20070101


def rounded_rows(m):
    m = np.round(np.asarray(m, dtype=float), 4)
    m[..., -1] = np.round(1.0 - m[..., :-1].sum(axis=-1), 4)
    return m


def random_instance(rng, S, D, name, min_weight=0.08):
    while True:
        pi = rounded_rows(rng.dirichlet(np.full(S, 4.0)))
        kernels = []
        for d in range(D):
            conc = [0.5, 2.0, 8.0, 1.0][d % 4]
            q = rng.dirichlet(np.full(S, conc), size=S)
            q = rounded_rows(0.98 * q + 0.02 / S)
            kernels.append(q)
        if (pi <= 0).any() or any((q <= 0).any() for q in kernels):
            continue
        inst = DiscreteInstance.from_lists(pi, kernels, h=np.arange(S, dtype=float), name=name)
        if validate_instance(inst):
            continue
        if exact_alpha_max(inst, tol=1e-13).min() >= min_weight:
            return inst


def build():
    rng = np.random.default_rng(SEED)
    fixtures = [
        DiscreteInstance.from_lists(
            [0.5, 0.5], [[[0.9, 0.1], [0.1, 0.9]], [[0.1, 0.9], [0.9, 0.1]]], h=[0.0, 1.0], name="two_state_symmetric"
        ),
        DiscreteInstance.from_lists(
            [0.3, 0.7], [[[0.95, 0.05], [0.05, 0.95]], [[0.1, 0.9], [0.1, 0.9]]], h=[0.0, 1.0], name="two_state_asymmetric"
        ),
        random_instance(rng, 3, 3, "three_state_d3"),
        random_instance(rng, 5, 3, "five_state_d3"),
        random_instance(rng, 8, 4, "eight_state_d4"),
    ]
    invalid = DiscreteInstance.from_lists(
        [0.5, 0.5], [[[1.0, 0.0], [0.1, 0.9]], [[0.5, 0.5], [0.5, 0.5]]], h=[0.0, 1.0], name="violates_a2"
    )
    OUT.mkdir(parents=True, exist_ok=True)
    regression = {}
    for inst in fixtures + [invalid]:
        with open(OUT / f"{inst.name}.yaml", "w") as f:
            yaml.safe_dump(inst.to_dict(), f, sort_keys=False, default_flow_style=None)
    for inst in fixtures:
        assert not validate_instance(inst), inst.name
        D = inst.D
        alpha = np.arange(1, D + 1, dtype=float)
        alpha /= alpha.sum()
        uniform = np.full(D, 1.0 / D)
        regression[inst.name] = {
            "alpha": alpha.tolist(),
            "entropy": exact_entropy(inst, alpha),
            "f": exact_f(inst, alpha).tolist(),
            "sigma2_uniform": exact_sigma2(inst, uniform),
            "alpha_max": exact_alpha_max(inst, tol=1e-13).tolist(),
        }
    with open(OUT / "regression.json", "w") as f:
        json.dump(regression, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    build()
