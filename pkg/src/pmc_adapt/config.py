"""Experiment configuration: schema, loading and construction of the model.

Configs are YAML documents; unknown keys are rejected. Relative file paths
inside a config are resolved against the config file's directory.
"""
from __future__ import annotations

from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .kernels import IndependentKernel, KernelFamily, RandomWalkNormal, RandomWalkStudent
from .oracle import load_instance, validate_instance
from .pmc import PmcConfig
from .poisson import make_poisson_table_target, poisson_table_mle
from .targets import make_discrete_target, make_mvn_target, make_normal_mixture_target

Matrix = List[List[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MvnTargetSpec(_Strict):
    type: Literal["mvn"]
    mean: List[float]
    covariance: Matrix


class MixtureTargetSpec(_Strict):
    type: Literal["normal_mixture"]
    weights: List[float]
    means: List[List[float]]
    covariances: List[Matrix]


class PoissonTargetSpec(_Strict):
    type: Literal["poisson_table"]
    table: List[int] = Field(min_length=4, max_length=4)


class DiscreteTargetSpec(_Strict):
    type: Literal["discrete_file"]
    path: str


TargetSpec = Annotated[
    Union[MvnTargetSpec, MixtureTargetSpec, PoissonTargetSpec, DiscreteTargetSpec], Field(discriminator="type")
]

# a covariance is a literal matrix or, for the Poisson table target, a named
# matrix evaluated at the MLE
CovarianceSpec = Union[Matrix, Literal["fisher", "inverse_fisher"]]


class IndependentKernelSpec(_Strict):
    type: Literal["independent"]
    component: Optional[int] = Field(default=None, ge=0)
    mean: Optional[List[float]] = None
    covariance: Optional[Matrix] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.component is None) == (self.mean is None or self.covariance is None):
            raise ValueError("give either 'component' or both 'mean' and 'covariance'")
        return self


class RwNormalKernelSpec(_Strict):
    type: Literal["rw_normal"]
    covariance: CovarianceSpec
    scale: float = Field(default=1.0, gt=0)


class RwStudentKernelSpec(_Strict):
    type: Literal["rw_student"]
    dof: float = Field(gt=0)
    scales: Optional[List[float]] = None
    tau: float = Field(default=1.0, gt=0)


class RwNormalLadderSpec(_Strict):
    """``count`` normal random walks with scales geometric between ``low`` and ``high``."""

    type: Literal["rw_normal_ladder"]
    low: float = Field(gt=0)
    high: float = Field(gt=0)
    count: int = Field(ge=1)
    covariance: CovarianceSpec


class InstanceKernelsSpec(_Strict):
    type: Literal["from_instance"]


KernelSpec = Annotated[
    Union[IndependentKernelSpec, RwNormalKernelSpec, RwStudentKernelSpec, RwNormalLadderSpec, InstanceKernelsSpec],
    Field(discriminator="type"),
]


class NormalProposalSpec(_Strict):
    type: Literal["normal"]
    mean: Union[List[float], Literal["mle"]]
    covariance: Optional[CovarianceSpec] = None
    scale: float = Field(default=1.0, gt=0)


class TargetProposalSpec(_Strict):
    type: Literal["target"]


class UniformDiscreteProposalSpec(_Strict):
    type: Literal["discrete_uniform"]


ProposalSpec = Annotated[
    Union[NormalProposalSpec, TargetProposalSpec, UniformDiscreteProposalSpec], Field(discriminator="type")
]

TestFunction = Literal["coordinate_means", "coordinate_second_moments", "log_target", "instance_h"]


class SurfaceSpec(_Strict):
    grid_resolution: int = Field(default=20, ge=1)
    pairs: int = Field(default=25000, ge=1)
    max_iter: int = Field(default=1000, ge=1)
    tol: float = Field(default=1e-4, gt=0)
    start: Optional[List[float]] = None


class ExperimentConfig(_Strict):
    name: str
    target: TargetSpec
    kernels: List[KernelSpec] = Field(min_length=1)
    nu0: ProposalSpec
    variant: Literal["basic", "rao_blackwell"] = "rao_blackwell"
    N: int = Field(ge=2)
    T: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    alpha_floor: float = Field(default=0.0, ge=0)
    alpha_init: Optional[List[float]] = None
    test_functions: List[TestFunction] = Field(default_factory=list)
    output_dir: str = "runs/experiment"
    surface: Optional[SurfaceSpec] = None

    @field_validator("alpha_init")
    @classmethod
    def _simplex(cls, v):
        if v is not None and (min(v) < 0 or abs(sum(v) - 1.0) > 1e-9):
            raise ValueError("must be nonnegative and sum to 1")
        return v


def _format_validation_error(exc: ValidationError):
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append(f"{loc}: {err['msg']}")
    return out


def parse_config(doc, base_dir=None):
    """Validate a config mapping; raises :class:`ConfigError` with field messages."""
    if not isinstance(doc, dict):
        raise ConfigError(["<root>: config must be a mapping"])
    try:
        cfg = ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from None
    return Experiment(cfg, Path(base_dir) if base_dir is not None else Path.cwd())


def load_config(path):
    path = Path(path)
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError([f"<file>: cannot read {path}: {exc}"]) from None
    return parse_config(doc, path.parent)


def geometric_scales(low, high, count):
    """``count`` scales equally spaced on a log scale from ``low`` to ``high``."""
    if count == 1:
        return np.array([float(low)])
    return np.exp(np.linspace(np.log(low), np.log(high), count))


class Experiment:
    """A validated config plus the objects it describes, built on demand."""

    def __init__(self, cfg: ExperimentConfig, base_dir: Path):
        self.cfg = cfg
        self.base_dir = base_dir
        self._mle = None
        self.instance = None
        try:
            self.target = self._build_target()
            self.family = self._build_family()
            self.nu0 = self._build_nu0()
            self.test_functions, self.estimate_names = self._build_tests()
            self.pmc_config(threads=1).initial_alpha(len(self.family))
        except ConfigError:
            raise
        except (ValueError, OSError) as exc:
            raise ConfigError([str(exc)]) from None

    def pmc_config(self, threads=1):
        c = self.cfg
        return PmcConfig(c.N, c.T, c.variant, c.alpha_floor, c.seed, c.alpha_init, threads)

    # -- construction -------------------------------------------------------

    def _build_target(self):
        t = self.cfg.target
        if t.type == "mvn":
            return make_mvn_target(t.mean, t.covariance)
        if t.type == "normal_mixture":
            return make_normal_mixture_target(t.weights, t.means, t.covariances)
        if t.type == "poisson_table":
            return make_poisson_table_target(t.table)
        path = Path(t.path)
        if not path.is_absolute():
            path = self.base_dir / path
        self.instance = load_instance(path)
        problems = validate_instance(self.instance)
        if problems:
            raise ConfigError([f"target.path: {p}" for p in problems])
        return make_discrete_target(self.instance.pi)

    def mle(self):
        if self._mle is None:
            if self.cfg.target.type != "poisson_table":
                raise ConfigError(["named covariances and 'mle' need a poisson_table target"])
            self._mle = poisson_table_mle(self.cfg.target.table)
        return self._mle

    def _covariance(self, spec, where):
        if isinstance(spec, str):
            _, fisher = self.mle()
            return fisher if spec == "fisher" else np.linalg.inv(fisher)
        cov = np.asarray(spec, dtype=float)
        dim = self.target.dim
        if dim is None or cov.shape != (dim, dim):
            raise ConfigError([f"{where}: expected a {dim}x{dim} matrix"])
        return cov

    def _build_family(self):
        kernels = []
        discrete = self.target.is_discrete
        for i, k in enumerate(self.cfg.kernels):
            where = f"kernels.{i}"
            if (k.type == "from_instance") != discrete:
                raise ConfigError([f"{where}: 'from_instance' kernels go with, and only with, a discrete_file target"])
            if k.type == "from_instance":
                kernels.extend(self.instance.family())
            elif k.type == "independent":
                if k.component is not None:
                    comps = self.target.params.get("components")
                    if comps is None or k.component >= len(comps):
                        raise ConfigError([f"{where}.component: no such mixture component"])
                    c = comps[k.component]
                    kernels.append(IndependentKernel(make_mvn_target(c.mean, c.cov), name=f"independent{k.component + 1}"))
                else:
                    kernels.append(IndependentKernel(make_mvn_target(k.mean, self._covariance(k.covariance, where))))
            elif k.type == "rw_normal":
                kernels.append(RandomWalkNormal(k.scale * self._covariance(k.covariance, where)))
            elif k.type == "rw_student":
                scales = k.scales
                if scales is None:
                    cov = self.target.params.get("covariance")
                    if cov is None:
                        raise ConfigError([f"{where}.scales: required unless the target is mvn"])
                    scales = np.sqrt(np.diag(cov))
                kernels.append(RandomWalkStudent(k.dof, np.sqrt(k.tau) * np.asarray(scales, dtype=float)))
            else:
                cov = self._covariance(k.covariance, where)
                for j, s in enumerate(geometric_scales(k.low, k.high, k.count)):
                    kernels.append(RandomWalkNormal(s * cov, name=f"rw_normal_{j + 1}"))
        return KernelFamily(kernels)

    def _build_nu0(self):
        p = self.cfg.nu0
        if p.type == "target":
            if self.target.sampler is None:
                raise ConfigError(["nu0: the target has no exact sampler"])
            return self.target
        if p.type == "discrete_uniform":
            if not self.target.is_discrete:
                raise ConfigError(["nu0: discrete_uniform needs a discrete target"])
            return make_discrete_target(np.full(self.target.n_states, 1.0 / self.target.n_states))
        if self.target.is_discrete:
            raise ConfigError(["nu0: a normal proposal needs a continuous target"])
        mean = self.mle()[0] if p.mean == "mle" else np.asarray(p.mean, dtype=float)
        if mean.shape != (self.target.dim,):
            raise ConfigError([f"nu0.mean: expected {self.target.dim} coordinates"])
        cov = np.eye(self.target.dim) if p.covariance is None else self._covariance(p.covariance, "nu0.covariance")
        return make_mvn_target(mean, p.scale * cov)

    def _build_tests(self):
        funcs, names = [], []
        target = self.target
        for kind in self.cfg.test_functions:
            if kind == "log_target":
                funcs.append(target.log_unnormalized)
                names.append("log_target")
            elif kind == "instance_h":
                if self.instance is None or self.instance.h is None:
                    raise ConfigError(["test_functions: instance_h needs a discrete instance with h"])
                h = self.instance.h
                funcs.append(lambda x, h=h: h[np.asarray(x, dtype=np.int64)])
                names.append("h")
            elif target.is_discrete:
                power = 1 if kind == "coordinate_means" else 2
                funcs.append(lambda x, p=power: np.asarray(x, dtype=float) ** p)
                names.append("mean_state" if power == 1 else "second_moment_state")
            else:
                power = 1 if kind == "coordinate_means" else 2
                label = "mean" if power == 1 else "second_moment"
                for j in range(target.dim):
                    funcs.append(lambda x, j=j, p=power: np.asarray(x)[:, j] ** p)
                    names.append(f"{label}_{j + 1}")
        return funcs, names

    def echo(self):
        return self.cfg.model_dump(mode="json")
