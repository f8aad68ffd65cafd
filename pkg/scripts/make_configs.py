"""Regenerate the shipped experiment configs.

    python scripts/make_configs.py

The Wishart covariances are drawn once from the recorded seeds below and
written into the configs as literal matrices.
"""
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import wishart

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "configs"

EX2_SIGMA = [[6.986, 0.154, 3.523], [0.154, 15.433, 3.528], [3.523, 3.528, 18.463]]
EX3_TABLE = [60, 364, 36, 240]


def draw(df, scale, seed):
    m = wishart(df=df, scale=np.asarray(scale, dtype=float)).rvs(random_state=seed)
    m = np.round(m, 6)
    m = (m + m.T) / 2
    np.linalg.cholesky(m)
    return m.tolist()


def dump(name, doc):
    with open(OUT / f"{name}.yaml", "w") as f:
        yaml.safe_dump(doc, f, sort_keys=False, default_flow_style=None, width=120)


def example1():
    # five-dimensional mixture of three centered normals, Wishart(df, I) covariances
    covs = [draw(df, np.eye(5), seed) for df, seed in [(10, 1001), (15, 1002), (7, 1003)]]
    return {
        "name": "example1_normal_mixture",
        "seed": 1,
        "variant": "rao_blackwell",
        "N": 10000,
        "T": 20,
        "alpha_init": [0.1, 0.2, 0.7],
        "target": {"type": "normal_mixture", "weights": [1 / 3, 1 / 3, 1 / 3], "means": [[0.0] * 5] * 3, "covariances": covs},
        "kernels": [{"type": "independent", "component": d} for d in range(3)],
        "nu0": {"type": "normal", "mean": [0.0] * 5, "scale": 25.0},
        "test_functions": ["coordinate_means", "coordinate_second_moments"],
        "output_dir": "runs/example1",
    }


def example2():
    sigma = np.asarray(EX2_SIGMA)
    return {
        "name": "example2_mvn_three_kernels",
        "seed": 2,
        "variant": "rao_blackwell",
        "N": 50000,
        "T": 20,
        "target": {"type": "mvn", "mean": [0.0, 0.0, 0.0], "covariance": EX2_SIGMA},
        "kernels": [
            {"type": "rw_student", "dof": 2.0, "tau": 0.1},
            {"type": "rw_normal", "covariance": draw(3, sigma / 3, 104)},
            {"type": "rw_normal", "covariance": draw(3, sigma, 204)},
        ],
        "nu0": {"type": "normal", "mean": [0.0, 0.0, 0.0], "scale": 100.0},
        "test_functions": ["coordinate_means", "log_target"],
        "output_dir": "runs/example2",
        "surface": {"grid_resolution": 20, "pairs": 25000, "max_iter": 1000, "tol": 1e-6},
    }


def example3():
    return {
        "name": "example3_poisson_table",
        "seed": 3,
        "variant": "rao_blackwell",
        "N": 50000,
        "T": 5,
        "target": {"type": "poisson_table", "table": EX3_TABLE},
        "kernels": [{"type": "rw_normal_ladder", "low": 1.35e-19, "high": 1.54e7, "count": 10, "covariance": "inverse_fisher"}],
        "nu0": {"type": "normal", "mean": "mle", "covariance": "inverse_fisher", "scale": 4.0},
        "test_functions": ["coordinate_means", "log_target"],
        "output_dir": "runs/example3",
    }


def perfect_surface():
    # every kernel draws straight from the target, so the divergence is 0 everywhere
    cov = [[2.0, 0.5], [0.5, 1.0]]
    kern = {"type": "independent", "mean": [0.0, 0.0], "covariance": cov}
    return {
        "name": "perfect_proposal_surface",
        "seed": 11,
        "N": 1000,
        "T": 1,
        "target": {"type": "mvn", "mean": [0.0, 0.0], "covariance": cov},
        "kernels": [kern, kern, kern],
        "nu0": {"type": "target"},
        "output_dir": "runs/perfect_surface",
        "surface": {"grid_resolution": 2, "pairs": 5000},
    }


def discrete(name, fixture, variant, N, T, seed):
    return {
        "name": name,
        "seed": seed,
        "variant": variant,
        "N": N,
        "T": T,
        "target": {"type": "discrete_file", "path": f"../fixtures/discrete/{fixture}.yaml"},
        "kernels": [{"type": "from_instance"}],
        "nu0": {"type": "discrete_uniform"},
        "test_functions": ["instance_h"],
        "output_dir": f"runs/{name}",
    }


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    dump("example1", example1())
    dump("example2", example2())
    dump("example3", example3())
    dump("perfect_surface", perfect_surface())
    dump("discrete_rb", discrete("discrete_rb", "two_state_asymmetric", "rao_blackwell", 100000, 5, 4))
    dump("discrete_basic", discrete("discrete_basic", "two_state_asymmetric", "basic", 50000, 5, 5))
