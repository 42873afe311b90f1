"""Catalog of model families with full conditional fiducial samplers.

Each family provides, per parameter: a fiducial statistic, a structural
equation (primary random variable plus the map tying the statistic to the
parameter), and the resulting conditional sampler.  Closed-form families
also expose the conditional distributions as Dist objects, an analytic
joint log kernel, and conditional quantiles (used by the compatibility
checker); every family ships a forward data simulator.

Families: normal, pareto, quadreg, gamma, beta, behrens_fisher,
bivariate_normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Tuple

import numpy as np
from scipy import special as _sp

from .core import ConditionalFiducialSampler, FiducialStatistic, StructuralEquation
from .errors import BracketError, DegenerateDataError, DomainError, EvaluationError, StructuralError
from .randvar import (
    ChiSquare,
    Dist,
    Exponential,
    Gamma,
    Normal,
    RngStream,
    ScaledInvChiSquare,
    StudentT,
    TruncatedNormal,
    log_density,
    quantile,
    sample,
)
from .specfun import Bracket, digamma, solve_cubic_in_interval, solve_monotone, solve_quadratic_positive, trigamma

__all__ = [
    "Dataset",
    "ParamSpec",
    "ModelSpec",
    "MODEL_NAMES",
    "get_model",
    "simulate_dataset",
    "normal_conditional_mu",
    "normal_conditional_sigma2",
    "normal_marginal_mu",
    "pareto_conditional_alpha",
    "pareto_conditional_beta_draw",
    "pareto_conditional_beta_log_density",
    "pareto_joint_log_kernel",
    "quadreg_conditionals",
    "quadreg_joint_log_kernel",
    "gamma_conditional_beta",
    "gamma_conditional_alpha_draw",
    "beta_conditional_alpha_draw",
    "beta_conditional_beta_draw",
    "behrens_fisher_angle",
    "behrens_fisher_draw",
    "behrens_fisher_direct_draws",
    "bvn_conditional_mu_x",
    "bvn_conditional_mu_y",
    "bvn_sigma_x2_mle",
    "bvn_rho_mle",
    "bvn_log_likelihood",
    "bvn_conditional_sigma_x2_draw",
    "bvn_conditional_rho_draw",
]

_STANDARD_TRUNC = 5.0
_STD_NORMAL = Normal(0.0, 1.0)
_STD_TRUNCNORM = TruncatedNormal(0.0, 1.0, -_STANDARD_TRUNC, _STANDARD_TRUNC)


# ---------------------------------------------------------------------------
# Data container
# ---------------------------------------------------------------------------

class Dataset:
    """Named read-only real columns (x, and y for two-column models)."""

    def __init__(self, columns: Mapping[str, np.ndarray]):
        cols = {}
        for name, values in columns.items():
            arr = np.asarray(values, dtype=float).copy()
            if arr.ndim != 1 or arr.size == 0:
                raise DomainError(f"column '{name}' must be a non-empty 1-d array")
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"column '{name}' contains non-finite values")
            arr.flags.writeable = False
            cols[name] = arr
        if not cols:
            raise DomainError("dataset needs at least one column")
        self.columns = cols

    def col(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise DomainError(f"dataset has no column '{name}' (has {sorted(self.columns)})")
        return self.columns[name]

    @property
    def n(self) -> int:
        return int(next(iter(self.columns.values())).size)

    def __repr__(self):
        shape = {k: v.size for k, v in self.columns.items()}
        return f"Dataset({shape})"


@dataclass(frozen=True)
class ParamSpec:
    """Parameter label with its domain and a kind used for chain dispersal."""

    label: str
    lo: float
    hi: float
    kind: str  # location | scale | correlation

    def contains(self, v: float) -> bool:
        return math.isfinite(v) and self.lo < v < self.hi


@dataclass(frozen=True)
class ModelSpec:
    """A model family: parameters, conditionals, optional joint, simulator."""

    name: str
    params: Tuple[ParamSpec, ...]
    build_conditionals: Callable[[Dataset], dict]
    simulate: Callable[[Mapping[str, float], int, RngStream], Dataset]
    default_init: Callable[[Dataset], dict]
    chain_inits: Callable[[Dataset, int], list]
    validate_data: Callable[[Dataset], None]
    joint_log_kernel: Optional[Callable[[Mapping[str, float], Dataset], float]] = None
    conditional_log_density: Optional[Callable[[str, float, Mapping[str, float], Dataset], float]] = None
    conditional_quantile: Optional[Callable[[str, float, Mapping[str, float], Dataset], float]] = None
    clamp_state: Optional[Callable[[dict, Dataset], dict]] = None

    @property
    def param_labels(self) -> Tuple[str, ...]:
        return tuple(p.label for p in self.params)

    def param(self, label: str) -> ParamSpec:
        for p in self.params:
            if p.label == label:
                return p
        raise DomainError(f"model '{self.name}' has no parameter '{label}'")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _pos(v: float, name: str) -> float:
    v = float(v)
    if not math.isfinite(v) or v <= 0.0:
        raise DomainError(f"{name} must be positive and finite, got {v}")
    return v


def _standard_normal_eq_domain() -> Tuple[float, float]:
    return (-_STANDARD_TRUNC, _STANDARD_TRUNC)


def _quantile_domain(dist: Dist, eps: float = 1e-6) -> Tuple[float, float]:
    return (quantile(dist, eps), quantile(dist, 1.0 - eps))


_SCALE_FACTORS = (1.0, 2.25, 0.45, 3.5, 0.3, 1.6, 0.7, 2.8)
_SHIFT_STEPS = (0.0, 1.5, -1.5, 3.0, -3.0, 2.0, -2.0, 4.0)
_SHRINKS = (1.0, 0.4, 0.75, 0.1, 0.9, 0.25, 0.6, 0.05)


def _disperse(base: dict, params: Tuple[ParamSpec, ...], spreads: dict, chains: int) -> list:
    """Mildly overdispersed deterministic starting points, chain 0 at base."""
    inits = []
    for c in range(chains):
        st = {}
        for p in params:
            v = base[p.label]
            if p.kind == "scale":
                st[p.label] = v * _SCALE_FACTORS[c % len(_SCALE_FACTORS)]
            elif p.kind == "correlation":
                st[p.label] = v * _SHRINKS[c % len(_SHRINKS)]
            else:
                st[p.label] = v + _SHIFT_STEPS[c % len(_SHIFT_STEPS)] * spreads.get(p.label, 0.0)
        inits.append(st)
    return inits


def _expanding_root(f: Callable[[float], float], start: float, tol: float = 1e-12) -> float:
    """Root of an increasing f by geometric bracket expansion plus Brent.

    Raises StructuralError when no sign change is found before the bracket
    hits the floating-point floor/ceiling (the no-solution case).
    """
    def safe(a):
        try:
            return f(a)
        except EvaluationError:
            return math.nan

    lo = hi = max(start, 1e-8)
    flo = safe(lo)
    if not flo <= 0.0:
        for _ in range(600):
            lo *= 0.25
            if lo < 1e-280:
                raise StructuralError("no lower bracket: target function stays positive", start=start)
            flo = safe(lo)
            if flo <= 0.0:
                break
        else:
            raise StructuralError("lower bracket expansion exhausted", start=start)
        hi = lo * 4.0
    fhi = safe(hi)
    if not fhi >= 0.0:
        for _ in range(600):
            hi *= 4.0
            if hi > 1e280:
                raise StructuralError("no upper bracket: target function stays negative", start=start)
            fhi = safe(hi)
            if fhi >= 0.0:
                break
        else:
            raise StructuralError("upper bracket expansion exhausted", start=start)
        lo = max(lo, hi * 0.25)
    try:
        return solve_monotone(f, 0.0, Bracket(lo, hi), tol=tol)
    except (BracketError, EvaluationError) as exc:
        raise StructuralError(f"root isolation failed: {exc}", start=start) from exc


# ---------------------------------------------------------------------------
# Normal model: mean and variance
# ---------------------------------------------------------------------------

def normal_conditional_mu(xbar: float, sigma2: float, n: int) -> Normal:
    """mu given sigma2: Normal(xbar, sigma2 / n)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return Normal(float(xbar), _pos(sigma2, "sigma2") / n)


def _mean_sq_about(x: np.ndarray, mu: float) -> float:
    return float(np.mean((x - mu) ** 2))


def normal_conditional_sigma2(mu: float, x: np.ndarray) -> ScaledInvChiSquare:
    """sigma2 given mu: scaled inverse chi-square(n, mean((x - mu)^2))."""
    x = np.asarray(x, dtype=float)
    s2 = _mean_sq_about(x, float(mu))
    if s2 <= 0.0:
        raise DegenerateDataError("all observations equal mu: variance statistic is zero")
    return ScaledInvChiSquare(x.size, s2)


def normal_marginal_mu(x: np.ndarray) -> StudentT:
    """Marginal for mu: non-standardised Student t(n-1, xbar, s/sqrt(n))."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise DomainError("need at least two observations")
    s = float(np.std(x, ddof=1))
    if s <= 0.0:
        raise DegenerateDataError("constant data: sample standard deviation is zero")
    return StudentT(x.size - 1, float(np.mean(x)), s / math.sqrt(x.size))


def _normal_mu_equation(n: int, sigma2: float) -> StructuralEquation:
    c = math.sqrt(_pos(sigma2, "sigma2") / n)
    return StructuralEquation(
        gamma_dist=_STD_NORMAL,
        phi=lambda g, mu: mu + c * g,
        invert=lambda q, g: q - c * g,
        theta_domain=(-math.inf, math.inf),
        gamma_domain=_standard_normal_eq_domain(),
    )


def _normal_sigma2_equation(n: int) -> StructuralEquation:
    gamma_dist = ChiSquare(n)
    return StructuralEquation(
        gamma_dist=gamma_dist,
        phi=lambda g, s2: s2 * g / n,
        invert=lambda q, g: n * q / g,
        theta_domain=(0.0, math.inf),
        gamma_domain=_quantile_domain(gamma_dist),
    )


def _normal_build_conditionals(data: Dataset) -> dict:
    x = data.col("x")
    n = x.size
    xbar = float(np.mean(x))
    return {
        "mu": ConditionalFiducialSampler(
            target_param="mu",
            statistic=FiducialStatistic("xbar", lambda d, p: xbar),
            equation_for=lambda d, p: _normal_mu_equation(n, p["sigma2"]),
        ),
        "sigma2": ConditionalFiducialSampler(
            target_param="sigma2",
            statistic=FiducialStatistic("mean_sq_about_mu", lambda d, p: _mean_sq_about(x, p["mu"])),
            equation_for=lambda d, p: _normal_sigma2_equation(n),
        ),
    }


def _normal_joint_log_kernel(theta: Mapping[str, float], data: Dataset) -> float:
    x = data.col("x")
    s2 = theta["sigma2"]
    if s2 <= 0.0:
        return -math.inf
    rss = float(np.sum((x - theta["mu"]) ** 2))
    return -0.5 * (x.size + 2) * math.log(s2) - 0.5 * rss / s2


def _normal_conditional_dist(param: str, others: Mapping[str, float], data: Dataset) -> Dist:
    x = data.col("x")
    if param == "mu":
        return normal_conditional_mu(float(np.mean(x)), others["sigma2"], x.size)
    if param == "sigma2":
        return normal_conditional_sigma2(others["mu"], x)
    raise DomainError(f"normal model has no parameter '{param}'")


def _normal_validate(data: Dataset):
    x = data.col("x")
    if x.size < 2:
        raise DomainError("normal model needs n >= 2")
    if float(np.std(x, ddof=1)) <= 0.0:
        raise DegenerateDataError("normal model needs non-constant data")


def _normal_default_init(data: Dataset) -> dict:
    x = data.col("x")
    return {"mu": float(np.mean(x)), "sigma2": float(np.var(x, ddof=1))}


def _normal_chain_inits(data: Dataset, chains: int) -> list:
    base = _normal_default_init(data)
    spread = math.sqrt(base["sigma2"] / data.col("x").size)
    return _disperse(base, _NORMAL_PARAMS, {"mu": spread}, chains)


def _normal_simulate(theta: Mapping[str, float], n: int, rng: RngStream) -> Dataset:
    sd = math.sqrt(_pos(theta["sigma2"], "sigma2"))
    return Dataset({"x": theta["mu"] + sd * rng.gen.standard_normal(n)})


_NORMAL_PARAMS = (
    ParamSpec("mu", -math.inf, math.inf, "location"),
    ParamSpec("sigma2", 0.0, math.inf, "scale"),
)


# ---------------------------------------------------------------------------
# Pareto model: shape alpha and scale beta
# ---------------------------------------------------------------------------

def pareto_conditional_alpha(beta: float, x: np.ndarray) -> Gamma:
    """alpha given beta: Gamma(n, sum(log x_i) - n log beta)."""
    x = np.asarray(x, dtype=float)
    beta = _pos(beta, "beta")
    if beta > float(np.min(x)):
        raise DomainError(f"beta={beta} exceeds min(x)={np.min(x)}")
    rate = float(np.sum(np.log(x))) - x.size * math.log(beta)
    if rate <= 0.0:
        raise DegenerateDataError("rate sum(log x_i - log beta) is not positive")
    return Gamma(x.size, rate)


def pareto_conditional_beta_draw(alpha: float, x: np.ndarray, rng: RngStream) -> float:
    """beta given alpha: min(x) * exp(-E / (n alpha)) with E ~ Exponential(1)."""
    x = np.asarray(x, dtype=float)
    alpha = _pos(alpha, "alpha")
    g = sample(Exponential(1.0), rng)
    return float(np.min(x)) * math.exp(-g / (x.size * alpha))


def pareto_conditional_beta_log_density(beta: float, alpha: float, x: np.ndarray) -> float:
    """Log density of beta given alpha on its support (0, min(x)]."""
    x = np.asarray(x, dtype=float)
    alpha = _pos(alpha, "alpha")
    m = float(np.min(x))
    if beta <= 0.0 or beta > m:
        return -math.inf
    n = x.size
    return math.log(n * alpha) - math.log(beta) - n * alpha * (math.log(m) - math.log(beta))


def pareto_joint_log_kernel(alpha: float, beta: float, x: np.ndarray) -> float:
    """Log of the joint kernel alpha^(n-1) beta^(n alpha - 1) prod x_i^-(alpha+1)."""
    x = np.asarray(x, dtype=float)
    if alpha <= 0.0 or beta <= 0.0 or beta > float(np.min(x)):
        return -math.inf
    n = x.size
    sum_log = float(np.sum(np.log(x)))
    return (n - 1) * math.log(alpha) + (n * alpha - 1) * math.log(beta) - (alpha + 1) * sum_log


def _pareto_alpha_equation(n: int, sum_log_x: float, beta: float) -> StructuralEquation:
    beta = _pos(beta, "beta")
    off = n * math.log(beta)
    if sum_log_x - off <= 0.0:
        raise DomainError(
            f"sum(log x) - n log(beta) = {sum_log_x - off:.6g} is not positive")
    gamma_dist = Gamma(n, 1.0)

    def invert(q, g):
        rate = q - off
        if rate <= 0.0:
            raise StructuralError("statistic minus n log(beta) not positive", rate=rate)
        return g / rate

    return StructuralEquation(
        gamma_dist=gamma_dist,
        phi=lambda g, a: g / a + off,
        invert=invert,
        theta_domain=(0.0, math.inf),
        gamma_domain=_quantile_domain(gamma_dist),
    )


def _pareto_beta_equation(n: int, alpha: float) -> StructuralEquation:
    alpha = _pos(alpha, "alpha")
    na = n * alpha
    gamma_dist = Exponential(1.0)
    return StructuralEquation(
        gamma_dist=gamma_dist,
        phi=lambda g, b: b * math.exp(g / na),
        invert=lambda q, g: q * math.exp(-g / na),
        theta_domain=(0.0, math.inf),
        gamma_domain=(1e-12, quantile(gamma_dist, 1.0 - 1e-6)),
    )


def _pareto_build_conditionals(data: Dataset) -> dict:
    x = data.col("x")
    n = x.size
    sum_log = float(np.sum(np.log(x)))
    min_x = float(np.min(x))
    return {
        "alpha": ConditionalFiducialSampler(
            target_param="alpha",
            statistic=FiducialStatistic("sum_log_x", lambda d, p: sum_log),
            equation_for=lambda d, p: _pareto_alpha_equation(n, sum_log, p["beta"]),
        ),
        "beta": ConditionalFiducialSampler(
            target_param="beta",
            statistic=FiducialStatistic("min_x", lambda d, p: min_x),
            equation_for=lambda d, p: _pareto_beta_equation(n, p["alpha"]),
        ),
    }


def _pareto_conditional_log_density(param: str, v: float, others: Mapping[str, float], data: Dataset) -> float:
    x = data.col("x")
    if param == "alpha":
        return log_density(pareto_conditional_alpha(others["beta"], x), v)
    if param == "beta":
        return pareto_conditional_beta_log_density(v, others["alpha"], x)
    raise DomainError(f"pareto model has no parameter '{param}'")


def _pareto_conditional_quantile(param: str, p: float, others: Mapping[str, float], data: Dataset) -> float:
    x = data.col("x")
    if param == "alpha":
        return quantile(pareto_conditional_alpha(others["beta"], x), p)
    if param == "beta":
        n_alpha = x.size * others["alpha"]
        return float(np.min(x)) * p ** (1.0 / n_alpha)
    raise DomainError(f"pareto model has no parameter '{param}'")


def _pareto_validate(data: Dataset):
    x = data.col("x")
    if x.size < 2:
        raise DomainError("pareto model needs n >= 2")
    if np.any(x <= 0.0):
        raise DomainError("pareto data must be positive")
    if float(np.min(x)) == float(np.max(x)):
        raise DegenerateDataError("pareto model needs non-constant data")


def _pareto_default_init(data: Dataset) -> dict:
    x = data.col("x")
    m = float(np.min(x))
    denom = float(np.sum(np.log(x / m)))
    alpha = x.size / denom if denom > 0.0 else 1.0
    return {"alpha": alpha, "beta": 0.95 * m}


def _pareto_chain_inits(data: Dataset, chains: int) -> list:
    base = _pareto_default_init(data)
    inits = []
    m = float(np.min(data.col("x")))
    for c in range(chains):
        f = _SCALE_FACTORS[c % len(_SCALE_FACTORS)]
        inits.append({"alpha": base["alpha"] * f,
                      "beta": m * (0.95 * _SHRINKS[c % len(_SHRINKS)])})
    return inits


def _pareto_simulate(theta: Mapping[str, float], n: int, rng: RngStream) -> Dataset:
    alpha = _pos(theta["alpha"], "alpha")
    beta = _pos(theta["beta"], "beta")
    e = rng.gen.exponential(1.0 / alpha, size=n)
    return Dataset({"x": beta * np.exp(e)})


_PARETO_PARAMS = (
    ParamSpec("alpha", 0.0, math.inf, "scale"),
    ParamSpec("beta", 0.0, math.inf, "scale"),
)


def _pareto_clamp(state: dict, data: Dataset) -> dict:
    # beta must not exceed the sample minimum.
    out = dict(state)
    out["beta"] = min(out["beta"], 0.97 * float(np.min(data.col("x"))))
    return out


def _pareto_joint(theta: Mapping[str, float], data: Dataset) -> float:
    return pareto_joint_log_kernel(theta["alpha"], theta["beta"], data.col("x"))


# ---------------------------------------------------------------------------
# Quadratic regression model
# ---------------------------------------------------------------------------

def _quadreg_sums(x: np.ndarray, y: np.ndarray) -> dict:
    return {
        "n": x.size,
        "sx": float(np.sum(x)),
        "sx2": float(np.sum(x ** 2)),
        "sx3": float(np.sum(x ** 3)),
        "sx4": float(np.sum(x ** 4)),
        "sy": float(np.sum(y)),
        "sxy": float(np.sum(x * y)),
        "sx2y": float(np.sum(x ** 2 * y)),
    }


def _quadreg_rss(x: np.ndarray, y: np.ndarray, b0: float, b1: float, b2: float) -> float:
    r = y - b0 - b1 * x - b2 * x ** 2
    return float(np.sum(r ** 2))


def quadreg_conditionals(b0: float, b1: float, b2: float, sigma2: float,
                         x: np.ndarray, y: np.ndarray) -> dict:
    """The four printed full conditionals of the quadratic regression model.

    Returns {'beta0': Normal, 'beta1': Normal, 'beta2': Normal,
    'sigma2': ScaledInvChiSquare}; each conditions on the supplied values
    of the other three parameters.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = _quadreg_sums(x, y)
    n = s["n"]
    sigma2 = _pos(sigma2, "sigma2")
    if s["sx2"] <= 0.0 or s["sx4"] <= 0.0:
        raise DegenerateDataError("design is degenerate: sum(x^2) or sum(x^4) is zero")
    rss = _quadreg_rss(x, y, b0, b1, b2)
    if rss <= 0.0:
        raise DegenerateDataError("residual sum of squares is zero")
    return {
        "beta0": Normal((s["sy"] - b1 * s["sx"] - b2 * s["sx2"]) / n, sigma2 / n),
        "beta1": Normal((s["sxy"] - b0 * s["sx"] - b2 * s["sx3"]) / s["sx2"], sigma2 / s["sx2"]),
        "beta2": Normal((s["sx2y"] - b0 * s["sx2"] - b1 * s["sx3"]) / s["sx4"], sigma2 / s["sx4"]),
        "sigma2": ScaledInvChiSquare(n, rss / n),
    }


def quadreg_joint_log_kernel(b0: float, b1: float, b2: float, sigma2: float,
                             x: np.ndarray, y: np.ndarray) -> float:
    """Log kernel sigma^-(n+2) exp(-RSS / (2 sigma^2))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if sigma2 <= 0.0:
        return -math.inf
    rss = _quadreg_rss(x, y, b0, b1, b2)
    return -0.5 * (x.size + 2) * math.log(sigma2) - 0.5 * rss / sigma2


def _quadreg_coef_equation(statistic_coef: float, mean_offset: float, sigma2: float) -> StructuralEquation:
    # Statistic = coef * theta + offset + sqrt(sigma2 * coef) * gamma.
    sd = math.sqrt(_pos(sigma2, "sigma2") * statistic_coef)
    return StructuralEquation(
        gamma_dist=_STD_NORMAL,
        phi=lambda g, t: statistic_coef * t + mean_offset + sd * g,
        invert=lambda q, g: (q - mean_offset - sd * g) / statistic_coef,
        theta_domain=(-math.inf, math.inf),
        gamma_domain=_standard_normal_eq_domain(),
    )


def _quadreg_sigma2_equation(n: int) -> StructuralEquation:
    gamma_dist = ChiSquare(n)
    return StructuralEquation(
        gamma_dist=gamma_dist,
        phi=lambda g, s2: s2 * g,
        invert=lambda q, g: q / g,
        theta_domain=(0.0, math.inf),
        gamma_domain=_quantile_domain(gamma_dist),
    )


def _quadreg_build_conditionals(data: Dataset) -> dict:
    x = data.col("x")
    y = data.col("y")
    s = _quadreg_sums(x, y)
    if s["sx2"] <= 0.0 or s["sx4"] <= 0.0:
        raise DegenerateDataError("design is degenerate: sum(x^2) or sum(x^4) is zero")

    def rss_stat(d, p):
        rss = _quadreg_rss(x, y, p["beta0"], p["beta1"], p["beta2"])
        if rss <= 0.0:
            raise DegenerateDataError("residual sum of squares is zero")
        return rss

    return {
        "beta0": ConditionalFiducialSampler(
            target_param="beta0",
            statistic=FiducialStatistic("sum_y", lambda d, p: s["sy"]),
            equation_for=lambda d, p: _quadreg_coef_equation(
                s["n"], p["beta1"] * s["sx"] + p["beta2"] * s["sx2"], p["sigma2"]),
        ),
        "beta1": ConditionalFiducialSampler(
            target_param="beta1",
            statistic=FiducialStatistic("sum_xy", lambda d, p: s["sxy"]),
            equation_for=lambda d, p: _quadreg_coef_equation(
                s["sx2"], p["beta0"] * s["sx"] + p["beta2"] * s["sx3"], p["sigma2"]),
        ),
        "beta2": ConditionalFiducialSampler(
            target_param="beta2",
            statistic=FiducialStatistic("sum_x2y", lambda d, p: s["sx2y"]),
            equation_for=lambda d, p: _quadreg_coef_equation(
                s["sx4"], p["beta0"] * s["sx2"] + p["beta1"] * s["sx3"], p["sigma2"]),
        ),
        "sigma2": ConditionalFiducialSampler(
            target_param="sigma2",
            statistic=FiducialStatistic("rss", rss_stat),
            equation_for=lambda d, p: _quadreg_sigma2_equation(s["n"]),
        ),
    }


def _quadreg_conditional_dist(param: str, others: Mapping[str, float], data: Dataset) -> Dist:
    full = dict(others)
    full.setdefault(param, 0.0 if param.startswith("beta") else 1.0)
    dists = quadreg_conditionals(full["beta0"], full["beta1"], full["beta2"], full["sigma2"],
                                 data.col("x"), data.col("y"))
    return dists[param]


def _quadreg_validate(data: Dataset):
    x = data.col("x")
    y = data.col("y")
    if x.size != y.size:
        raise DomainError("quadreg needs x and y of equal length")
    if x.size < 2:
        raise DomainError("quadreg needs n >= 2")
    if float(np.sum(x ** 2)) <= 0.0 or float(np.sum(x ** 4)) <= 0.0:
        raise DegenerateDataError("design is degenerate: all x are zero")


def _quadreg_default_init(data: Dataset) -> dict:
    x = data.col("x")
    y = data.col("y")
    design = np.column_stack([np.ones_like(x), x, x ** 2])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    rss = _quadreg_rss(x, y, *coef)
    s2 = rss / x.size
    if s2 <= 0.0:
        s2 = max(float(np.var(y)), 1e-8)
    return {"beta0": float(coef[0]), "beta1": float(coef[1]), "beta2": float(coef[2]),
            "sigma2": float(s2)}


def _quadreg_chain_inits(data: Dataset, chains: int) -> list:
    base = _quadreg_default_init(data)
    s = _quadreg_sums(data.col("x"), data.col("y"))
    s2 = base["sigma2"]
    spreads = {
        "beta0": math.sqrt(s2 / s["n"]),
        "beta1": math.sqrt(s2 / s["sx2"]),
        "beta2": math.sqrt(s2 / s["sx4"]),
    }
    return _disperse(base, _QUADREG_PARAMS, spreads, chains)


def _quadreg_simulate(theta: Mapping[str, float], n: int, rng: RngStream) -> Dataset:
    sd = math.sqrt(_pos(theta["sigma2"], "sigma2"))
    x = rng.gen.standard_normal(n)
    y = theta["beta0"] + theta["beta1"] * x + theta["beta2"] * x ** 2 + sd * rng.gen.standard_normal(n)
    return Dataset({"x": x, "y": y})


_QUADREG_PARAMS = (
    ParamSpec("beta0", -math.inf, math.inf, "location"),
    ParamSpec("beta1", -math.inf, math.inf, "location"),
    ParamSpec("beta2", -math.inf, math.inf, "location"),
    ParamSpec("sigma2", 0.0, math.inf, "scale"),
)


def _quadreg_joint(theta: Mapping[str, float], data: Dataset) -> float:
    return quadreg_joint_log_kernel(theta["beta0"], theta["beta1"], theta["beta2"],
                                    theta["sigma2"], data.col("x"), data.col("y"))


# ---------------------------------------------------------------------------
# Gamma model: shape alpha and rate beta
# ---------------------------------------------------------------------------

def gamma_conditional_beta(alpha: float, x: np.ndarray) -> Gamma:
    """beta given alpha: Gamma(n alpha, sum x_i)."""
    x = np.asarray(x, dtype=float)
    alpha = _pos(alpha, "alpha")
    sx = float(np.sum(x))
    if sx <= 0.0:
        raise DomainError("sum of observations must be positive")
    return Gamma(x.size * alpha, sx)


def _clt_shape_invert(q_over_n: float, parts_fn, g: float, n: int, start: float) -> float:
    """Solve offset(a) + g * sqrt(slope(a) / n) = q/n for a > 0 (increasing map).

    parts_fn(a) returns the (offset, slope) pair in one shot; the hot loop
    calls it a dozen times per draw.
    """

    def f(a):
        off, s = parts_fn(a)
        if s <= 0.0:
            raise EvaluationError(f"non-positive variance term at a={a}")
        return off + g * math.sqrt(s / n) - q_over_n

    return _expanding_root(f, start)


def gamma_conditional_alpha_draw(beta: float, x: np.ndarray, rng: RngStream,
                                 start: Optional[float] = None) -> float:
    """One draw of the gamma shape given the rate via the CLT equation.

    Draws gamma from a standard normal truncated to [-5, 5] and solves
    sum(log x) = n (psi(a) - log beta) + gamma * sqrt(n psi'(a)) for a.
    """
    x = np.asarray(x, dtype=float)
    eq = _gamma_alpha_equation(x.size, _pos(beta, "beta"), start or 1.0)
    q = float(np.sum(np.log(x)))
    g = sample(eq.gamma_dist, rng)
    return eq.invert(q, g)


def _gamma_alpha_equation(n: int, beta: float, start: float) -> StructuralEquation:
    log_beta = math.log(beta)

    def phi(g, a):
        return n * (digamma(a) - log_beta) + g * math.sqrt(n * trigamma(a))

    def parts(a):
        # a > 0 is guaranteed by the bracketing; skip rechecking in the hot loop.
        return float(_sp.psi(a)), float(_sp.zeta(2.0, a))

    def invert(q, g):
        return _clt_shape_invert(q / n + log_beta, parts, g, n, start)

    return StructuralEquation(
        gamma_dist=_STD_TRUNCNORM,
        phi=phi,
        invert=invert,
        theta_domain=(0.0, math.inf),
        gamma_domain=(-_STANDARD_TRUNC, _STANDARD_TRUNC),
    )


def _gamma_build_conditionals(data: Dataset) -> dict:
    x = data.col("x")
    n = x.size
    sum_x = float(np.sum(x))
    sum_log = float(np.sum(np.log(x)))
    return {
        "alpha": ConditionalFiducialSampler(
            target_param="alpha",
            statistic=FiducialStatistic("sum_log_x", lambda d, p: sum_log),
            equation_for=lambda d, p: _gamma_alpha_equation(n, p["beta"], p.get("alpha", 1.0)),
            check_at_start=True,
        ),
        "beta": ConditionalFiducialSampler(
            target_param="beta",
            statistic=FiducialStatistic("sum_x", lambda d, p: sum_x),
            equation_for=lambda d, p: _gamma_beta_equation(n, p["alpha"], sum_x),
        ),
    }


def _gamma_beta_equation(n: int, alpha: float, sum_x: float) -> StructuralEquation:
    alpha = _pos(alpha, "alpha")
    gamma_dist = Gamma(n * alpha, 1.0)
    return StructuralEquation(
        gamma_dist=gamma_dist,
        phi=lambda g, b: g / b,
        invert=lambda q, g: g / q,
        theta_domain=(0.0, math.inf),
        gamma_domain=_quantile_domain(gamma_dist),
    )


def _gamma_validate(data: Dataset):
    x = data.col("x")
    if x.size < 2:
        raise DomainError("gamma model needs n >= 2")
    if np.any(x <= 0.0):
        raise DomainError("gamma data must be positive")
    if float(np.min(x)) == float(np.max(x)):
        raise DegenerateDataError("gamma model needs non-constant data")


def _gamma_default_init(data: Dataset) -> dict:
    x = data.col("x")
    m = float(np.mean(x))
    v = float(np.var(x, ddof=1))
    v = max(v, 1e-12)
    return {"alpha": max(m * m / v, 1e-3), "beta": max(m / v, 1e-3)}


def _gamma_chain_inits(data: Dataset, chains: int) -> list:
    return _disperse(_gamma_default_init(data), _GAMMA_PARAMS, {}, chains)


def _gamma_simulate(theta: Mapping[str, float], n: int, rng: RngStream) -> Dataset:
    alpha = _pos(theta["alpha"], "alpha")
    beta = _pos(theta["beta"], "beta")
    return Dataset({"x": rng.gen.gamma(alpha, 1.0 / beta, size=n)})


_GAMMA_PARAMS = (
    ParamSpec("alpha", 0.0, math.inf, "scale"),
    ParamSpec("beta", 0.0, math.inf, "scale"),
)


# ---------------------------------------------------------------------------
# Beta model: shapes alpha and beta
# ---------------------------------------------------------------------------

def beta_conditional_alpha_draw(beta: float, x: np.ndarray, rng: RngStream,
                                start: Optional[float] = None) -> float:
    """One draw of the first beta shape given the second via the CLT equation."""
    x = np.asarray(x, dtype=float)
    eq = _beta_shape_equation(x.size, _pos(beta, "beta"), start or 1.0)
    q = float(np.sum(np.log(x)))
    g = sample(eq.gamma_dist, rng)
    return eq.invert(q, g)


def beta_conditional_beta_draw(alpha: float, x: np.ndarray, rng: RngStream,
                               start: Optional[float] = None) -> float:
    """Mirror draw for the second shape, with statistic sum(log(1 - x))."""
    x = np.asarray(x, dtype=float)
    eq = _beta_shape_equation(x.size, _pos(alpha, "alpha"), start or 1.0)
    q = float(np.sum(np.log1p(-x)))
    g = sample(eq.gamma_dist, rng)
    return eq.invert(q, g)


def _beta_shape_equation(n: int, other_shape: float, start: float) -> StructuralEquation:
    b = other_shape
    # Scratch buffers shared across the sequential solver iterations of one
    # draw (an equation instance is never used from two threads at once).
    buf = np.empty(2)
    psi_out = np.empty(2)
    tri_out = np.empty(2)

    def phi(g, a):
        return (n * (digamma(a) - digamma(a + b))
                + math.sqrt(n) * math.sqrt(trigamma(a) - trigamma(a + b)) * g)

    def parts(a):
        buf[0] = a
        buf[1] = a + b
        _sp.psi(buf, out=psi_out)
        _sp.zeta(2.0, buf, out=tri_out)
        return psi_out[0] - psi_out[1], tri_out[0] - tri_out[1]

    def invert(q, g):
        return _clt_shape_invert(q / n, parts, g, n, start)

    return StructuralEquation(
        gamma_dist=_STD_TRUNCNORM,
        phi=phi,
        invert=invert,
        theta_domain=(0.0, math.inf),
        gamma_domain=(-_STANDARD_TRUNC, _STANDARD_TRUNC),
    )


def _beta_build_conditionals(data: Dataset) -> dict:
    x = data.col("x")
    n = x.size
    sum_log = float(np.sum(np.log(x)))
    sum_log1m = float(np.sum(np.log1p(-x)))
    return {
        "alpha": ConditionalFiducialSampler(
            target_param="alpha",
            statistic=FiducialStatistic("sum_log_x", lambda d, p: sum_log),
            equation_for=lambda d, p: _beta_shape_equation(n, p["beta"], p.get("alpha", 1.0)),
            check_at_start=True,
        ),
        "beta": ConditionalFiducialSampler(
            target_param="beta",
            statistic=FiducialStatistic("sum_log_1mx", lambda d, p: sum_log1m),
            equation_for=lambda d, p: _beta_shape_equation(n, p["alpha"], p.get("beta", 1.0)),
            check_at_start=True,
        ),
    }


def _beta_validate(data: Dataset):
    x = data.col("x")
    if x.size < 2:
        raise DomainError("beta model needs n >= 2")
    if np.any((x <= 0.0) | (x >= 1.0)):
        raise DomainError("beta data must lie strictly inside (0, 1)")


def _beta_default_init(data: Dataset) -> dict:
    x = data.col("x")
    m = float(np.mean(x))
    v = max(float(np.var(x, ddof=1)), 1e-12)
    common = max(m * (1.0 - m) / v - 1.0, 1e-2)
    return {"alpha": max(m * common, 1e-2), "beta": max((1.0 - m) * common, 1e-2)}


def _beta_chain_inits(data: Dataset, chains: int) -> list:
    return _disperse(_beta_default_init(data), _BETA_PARAMS, {}, chains)


def _beta_simulate(theta: Mapping[str, float], n: int, rng: RngStream) -> Dataset:
    alpha = _pos(theta["alpha"], "alpha")
    beta = _pos(theta["beta"], "beta")
    return Dataset({"x": rng.gen.beta(alpha, beta, size=n)})


_BETA_PARAMS = (
    ParamSpec("alpha", 0.0, math.inf, "scale"),
    ParamSpec("beta", 0.0, math.inf, "scale"),
)


# ---------------------------------------------------------------------------
# Behrens-Fisher: two independent normal samples
# ---------------------------------------------------------------------------

def _group_stats(v: np.ndarray, label: str):
    if v.size < 2:
        raise DomainError(f"group '{label}' needs at least two observations")
    s2 = float(np.var(v, ddof=1))
    if s2 <= 0.0:
        raise DegenerateDataError(f"group '{label}' has zero sample variance")
    return float(np.mean(v)), s2, v.size


def behrens_fisher_angle(x: np.ndarray, y: np.ndarray) -> float:
    """Angle parameter arctan((s_x sqrt(n_y)) / (s_y sqrt(n_x)))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _, sx2, nx = _group_stats(x, "x")
    _, sy2, ny = _group_stats(y, "y")
    return math.atan2(math.sqrt(sx2 / nx), math.sqrt(sy2 / ny))


def behrens_fisher_draw(x: np.ndarray, y: np.ndarray, rng: RngStream) -> float:
    """One draw of mu_x - mu_y as a weighted difference of two Student t draws.

    Equivalent to xbar - ybar + B * sqrt(s_x^2/n_x + s_y^2/n_y) with B
    following the two-degrees-of-freedom angle-parameterized distribution:
    the angle decomposition turns B's definition into independent t draws
    scaled by s/sqrt(n) per group.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mx, sx2, nx = _group_stats(x, "x")
    my, sy2, ny = _group_stats(y, "y")
    tx = sample(StudentT(nx - 1), rng)
    ty = sample(StudentT(ny - 1), rng)
    return mx - my + math.sqrt(sx2 / nx) * tx - math.sqrt(sy2 / ny) * ty


def behrens_fisher_direct_draws(x: np.ndarray, y: np.ndarray, size: int, rng: RngStream) -> np.ndarray:
    """Vectorized independent draws of mu_x - mu_y (same construction)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mx, sx2, nx = _group_stats(x, "x")
    my, sy2, ny = _group_stats(y, "y")
    tx = rng.gen.standard_t(nx - 1, size=size)
    ty = rng.gen.standard_t(ny - 1, size=size)
    return mx - my + math.sqrt(sx2 / nx) * tx - math.sqrt(sy2 / ny) * ty


def _bf_build_conditionals(data: Dataset) -> dict:
    x = data.col("x")
    y = data.col("y")
    nx, ny = x.size, y.size
    xbar, ybar = float(np.mean(x)), float(np.mean(y))
    return {
        "mu_x": ConditionalFiducialSampler(
            target_param="mu_x",
            statistic=FiducialStatistic("xbar", lambda d, p: xbar),
            equation_for=lambda d, p: _normal_mu_equation(nx, p["sigma_x2"]),
        ),
        "mu_y": ConditionalFiducialSampler(
            target_param="mu_y",
            statistic=FiducialStatistic("ybar", lambda d, p: ybar),
            equation_for=lambda d, p: _normal_mu_equation(ny, p["sigma_y2"]),
        ),
        "sigma_x2": ConditionalFiducialSampler(
            target_param="sigma_x2",
            statistic=FiducialStatistic("mean_sq_about_mu_x", lambda d, p: _mean_sq_about(x, p["mu_x"])),
            equation_for=lambda d, p: _normal_sigma2_equation(nx),
        ),
        "sigma_y2": ConditionalFiducialSampler(
            target_param="sigma_y2",
            statistic=FiducialStatistic("mean_sq_about_mu_y", lambda d, p: _mean_sq_about(y, p["mu_y"])),
            equation_for=lambda d, p: _normal_sigma2_equation(ny),
        ),
    }


def _bf_joint(theta: Mapping[str, float], data: Dataset) -> float:
    x = data.col("x")
    y = data.col("y")
    sx2, sy2 = theta["sigma_x2"], theta["sigma_y2"]
    if sx2 <= 0.0 or sy2 <= 0.0:
        return -math.inf
    rx = float(np.sum((x - theta["mu_x"]) ** 2))
    ry = float(np.sum((y - theta["mu_y"]) ** 2))
    return (-0.5 * (x.size + 2) * math.log(sx2) - 0.5 * rx / sx2
            - 0.5 * (y.size + 2) * math.log(sy2) - 0.5 * ry / sy2)


def _bf_conditional_dist(param: str, others: Mapping[str, float], data: Dataset) -> Dist:
    x = data.col("x")
    y = data.col("y")
    if param == "mu_x":
        return normal_conditional_mu(float(np.mean(x)), others["sigma_x2"], x.size)
    if param == "mu_y":
        return normal_conditional_mu(float(np.mean(y)), others["sigma_y2"], y.size)
    if param == "sigma_x2":
        return normal_conditional_sigma2(others["mu_x"], x)
    if param == "sigma_y2":
        return normal_conditional_sigma2(others["mu_y"], y)
    raise DomainError(f"behrens_fisher model has no parameter '{param}'")


def _bf_validate(data: Dataset):
    _group_stats(data.col("x"), "x")
    _group_stats(data.col("y"), "y")


def _bf_default_init(data: Dataset) -> dict:
    mx, sx2, _ = _group_stats(data.col("x"), "x")
    my, sy2, _ = _group_stats(data.col("y"), "y")
    return {"mu_x": mx, "mu_y": my, "sigma_x2": sx2, "sigma_y2": sy2}


def _bf_chain_inits(data: Dataset, chains: int) -> list:
    base = _bf_default_init(data)
    spreads = {
        "mu_x": math.sqrt(base["sigma_x2"] / data.col("x").size),
        "mu_y": math.sqrt(base["sigma_y2"] / data.col("y").size),
    }
    return _disperse(base, _BF_PARAMS, spreads, chains)


def _bf_simulate(theta: Mapping[str, float], n: int, rng: RngStream) -> Dataset:
    sdx = math.sqrt(_pos(theta["sigma_x2"], "sigma_x2"))
    sdy = math.sqrt(_pos(theta["sigma_y2"], "sigma_y2"))
    return Dataset({
        "x": theta["mu_x"] + sdx * rng.gen.standard_normal(n),
        "y": theta["mu_y"] + sdy * rng.gen.standard_normal(n),
    })


_BF_PARAMS = (
    ParamSpec("mu_x", -math.inf, math.inf, "location"),
    ParamSpec("mu_y", -math.inf, math.inf, "location"),
    ParamSpec("sigma_x2", 0.0, math.inf, "scale"),
    ParamSpec("sigma_y2", 0.0, math.inf, "scale"),
)


# ---------------------------------------------------------------------------
# Bivariate normal model
# ---------------------------------------------------------------------------

def bvn_conditional_mu_x(mu_y: float, sigma_x2: float, sigma_y2: float, rho: float,
                         x: np.ndarray, y: np.ndarray) -> Normal:
    """mu_x given the rest: N(xbar + rho (sx/sy)(mu_y - ybar), sx^2 (1-rho^2)/n)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma_x2 = _pos(sigma_x2, "sigma_x2")
    sigma_y2 = _pos(sigma_y2, "sigma_y2")
    if not abs(rho) < 1.0:
        raise DomainError(f"|rho| must be < 1, got {rho}")
    ratio = math.sqrt(sigma_x2 / sigma_y2)
    mean = float(np.mean(x)) + rho * ratio * (mu_y - float(np.mean(y)))
    return Normal(mean, sigma_x2 * (1.0 - rho * rho) / x.size)


def bvn_conditional_mu_y(mu_x: float, sigma_x2: float, sigma_y2: float, rho: float,
                         x: np.ndarray, y: np.ndarray) -> Normal:
    """Mirror of the mu_x conditional."""
    return bvn_conditional_mu_x(mu_x, sigma_y2, sigma_x2, rho, y, x)


@dataclass(frozen=True)
class _BvnSuffStats:
    """Raw data sums: centered second moments in O(1) for any mean pair."""

    n: int
    sx: float
    sy: float
    sxx: float
    syy: float
    sxy: float

    @classmethod
    def from_arrays(cls, x: np.ndarray, y: np.ndarray) -> "_BvnSuffStats":
        return cls(x.size, float(np.sum(x)), float(np.sum(y)),
                   float(np.dot(x, x)), float(np.dot(y, y)), float(np.dot(x, y)))

    def swapped(self) -> "_BvnSuffStats":
        return _BvnSuffStats(self.n, self.sy, self.sx, self.syy, self.sxx, self.sxy)

    def centered(self, mu_x: float, mu_y: float):
        cxx = self.sxx - 2.0 * mu_x * self.sx + self.n * mu_x * mu_x
        cyy = self.syy - 2.0 * mu_y * self.sy + self.n * mu_y * mu_y
        cxy = self.sxy - mu_x * self.sy - mu_y * self.sx + self.n * mu_x * mu_y
        return cxx, cyy, cxy


def _bvn_loglik_core(s: _BvnSuffStats, mu_x, mu_y, sigma_x2, sigma_y2, rho) -> float:
    if sigma_x2 <= 0.0 or sigma_y2 <= 0.0 or not abs(rho) < 1.0:
        return -math.inf
    cxx, cyy, cxy = s.centered(mu_x, mu_y)
    one_m = 1.0 - rho * rho
    quad = cxx / sigma_x2 - 2.0 * rho * cxy / math.sqrt(sigma_x2 * sigma_y2) + cyy / sigma_y2
    return (-0.5 * s.n * (math.log(sigma_x2) + math.log(sigma_y2) + math.log(one_m))
            - 0.5 * quad / one_m)


def _bvn_sigma_mle_core(s: _BvnSuffStats, mu_x, mu_y, sigma_y2, rho) -> float:
    # Stationarity of the likelihood in sigma_x:
    # n(1 - rho^2) t^2 + (rho Cxy / sigma_y) t - Cxx = 0 for t = sigma_x.
    cxx, _, cxy = s.centered(mu_x, mu_y)
    if cxx <= 0.0:
        raise DegenerateDataError("x observations all equal mu_x")
    t = solve_quadratic_positive(s.n * (1.0 - rho * rho),
                                 rho * cxy / math.sqrt(sigma_y2), -cxx)
    return t


def _bvn_rho_mle_core(s: _BvnSuffStats, mu_x, mu_y, sigma_x2, sigma_y2) -> float:
    cxx, cyy, cxy = s.centered(mu_x, mu_y)
    n = s.n
    c = cxy / math.sqrt(sigma_x2 * sigma_y2)
    coeffs = (-float(n), c, n - cxx / sigma_x2 - cyy / sigma_y2, c)
    return solve_cubic_in_interval(
        coeffs,
        Bracket(-1.0 + 1e-9, 1.0 - 1e-9),
        objective=lambda r: _bvn_loglik_core(s, mu_x, mu_y, sigma_x2, sigma_y2, r),
    )


def bvn_log_likelihood(mu_x: float, mu_y: float, sigma_x2: float, sigma_y2: float, rho: float,
                       x: np.ndarray, y: np.ndarray) -> float:
    """Bivariate normal log likelihood (additive constant dropped)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _bvn_loglik_core(_BvnSuffStats.from_arrays(x, y), mu_x, mu_y,
                            sigma_x2, sigma_y2, rho)


def bvn_sigma_x2_mle(mu_x: float, mu_y: float, sigma_y2: float, rho: float,
                     x: np.ndarray, y: np.ndarray) -> float:
    """Likelihood-stationary sigma_x estimate with the other parameters fixed.

    Solves n(1-rho^2) t^2 + (rho Sxy / sigma_y) t - Sxx = 0 for t = sigma_x,
    the stationarity condition of the profile log likelihood; returns the
    variance t^2.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma_y2 = _pos(sigma_y2, "sigma_y2")
    if not abs(rho) < 1.0:
        raise DomainError(f"|rho| must be < 1, got {rho}")
    t = _bvn_sigma_mle_core(_BvnSuffStats.from_arrays(x, y), mu_x, mu_y, sigma_y2, rho)
    return t * t


def bvn_rho_mle(mu_x: float, mu_y: float, sigma_x2: float, sigma_y2: float,
                x: np.ndarray, y: np.ndarray) -> float:
    """Likelihood-maximizing correlation with the other parameters fixed.

    Root in (-1, 1) of the cubic stationarity condition; when several roots
    fall inside, the one with the highest log likelihood wins.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma_x2 = _pos(sigma_x2, "sigma_x2")
    sigma_y2 = _pos(sigma_y2, "sigma_y2")
    return _bvn_rho_mle_core(_BvnSuffStats.from_arrays(x, y), mu_x, mu_y,
                             sigma_x2, sigma_y2)


def _bvn_sigma_factor(n: int, rho: float) -> float:
    return math.sqrt((1.0 - rho * rho) / (n * (2.0 - rho * rho)))


def _bvn_sigma_equation(n: int, rho: float) -> StructuralEquation:
    # Statistic is the sigma_x estimate (standard deviation scale):
    # q = sigma_x (1 + c0 gamma); gamma values with 1 + c0 gamma <= 0 are
    # excluded from the primary variable's domain (extra truncation).
    c0 = _bvn_sigma_factor(n, rho)
    floor = 1e-6
    g_lo = max(-_STANDARD_TRUNC, (floor - 1.0) / c0) if c0 > 0.0 else -_STANDARD_TRUNC

    def invert(q, g):
        bracketed = 1.0 + g * c0
        if bracketed <= floor:
            raise StructuralError("bracketed term non-positive", gamma=g, factor=c0)
        s = q / bracketed
        return s * s

    return StructuralEquation(
        gamma_dist=_STD_TRUNCNORM,
        phi=lambda g, s2: math.sqrt(s2) * (1.0 + g * c0),
        invert=invert,
        theta_domain=(0.0, math.inf),
        gamma_domain=(g_lo, _STANDARD_TRUNC),
    )


def bvn_conditional_sigma_x2_draw(mu_x: float, mu_y: float, sigma_y2: float, rho: float,
                                  x: np.ndarray, y: np.ndarray, rng: RngStream) -> float:
    """One draw of sigma_x^2 given the rest (estimate shrunk/inflated by gamma)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eq = _bvn_sigma_equation(x.size, rho)
    q = math.sqrt(bvn_sigma_x2_mle(mu_x, mu_y, sigma_y2, rho, x, y))
    for _ in range(1000):
        g = sample(eq.gamma_dist, rng)
        try:
            return eq.invert(q, g)
        except StructuralError:
            continue
    raise StructuralError("sigma draw failed after 1000 gamma redraws", statistic_value=q)


def _bvn_rho_equation(n: int) -> StructuralEquation:
    sqrt_n = math.sqrt(n)

    def phi(g, r):
        return r + (1.0 - r * r) * g / (sqrt_n * math.sqrt(1.0 + r * r))

    def invert(q, g):
        try:
            return solve_monotone(lambda r: phi(g, r), q,
                                  Bracket(-1.0 + 1e-12, 1.0 - 1e-12), tol=1e-13)
        except (BracketError, EvaluationError) as exc:
            raise StructuralError(f"no correlation solves the equation: {exc}",
                                  statistic_value=q, gamma=g) from exc

    return StructuralEquation(
        gamma_dist=_STD_TRUNCNORM,
        phi=phi,
        invert=invert,
        theta_domain=(-1.0, 1.0),
        gamma_domain=(-_STANDARD_TRUNC, _STANDARD_TRUNC),
    )


def bvn_conditional_rho_draw(mu_x: float, mu_y: float, sigma_x2: float, sigma_y2: float,
                             x: np.ndarray, y: np.ndarray, rng: RngStream) -> float:
    """One draw of the correlation given the rest."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eq = _bvn_rho_equation(x.size)
    q = bvn_rho_mle(mu_x, mu_y, sigma_x2, sigma_y2, x, y)
    g = sample(eq.gamma_dist, rng)
    return eq.invert(q, g)


def _bvn_build_conditionals(data: Dataset) -> dict:
    x = data.col("x")
    y = data.col("y")
    n = x.size
    stats = _BvnSuffStats.from_arrays(x, y)
    stats_yx = stats.swapped()
    sx_sum, sy_sum = stats.sx, stats.sy

    def mu_x_equation(d, p):
        ratio = math.sqrt(p["sigma_x2"] / p["sigma_y2"])
        rho = p["rho"]
        sd = math.sqrt(n * p["sigma_x2"] * (1.0 - rho * rho))
        off = -n * rho * ratio * p["mu_y"]
        return StructuralEquation(
            gamma_dist=_STD_NORMAL,
            phi=lambda g, m: n * m + off + sd * g,
            invert=lambda q, g: (q - off - sd * g) / n,
            theta_domain=(-math.inf, math.inf),
            gamma_domain=_standard_normal_eq_domain(),
        )

    def mu_y_equation(d, p):
        ratio = math.sqrt(p["sigma_y2"] / p["sigma_x2"])
        rho = p["rho"]
        sd = math.sqrt(n * p["sigma_y2"] * (1.0 - rho * rho))
        off = -n * rho * ratio * p["mu_x"]
        return StructuralEquation(
            gamma_dist=_STD_NORMAL,
            phi=lambda g, m: n * m + off + sd * g,
            invert=lambda q, g: (q - off - sd * g) / n,
            theta_domain=(-math.inf, math.inf),
            gamma_domain=_standard_normal_eq_domain(),
        )

    return {
        "mu_x": ConditionalFiducialSampler(
            target_param="mu_x",
            statistic=FiducialStatistic(
                "sum_x_adj",
                lambda d, p: sx_sum - p["rho"] * math.sqrt(p["sigma_x2"] / p["sigma_y2"]) * sy_sum),
            equation_for=mu_x_equation,
        ),
        "mu_y": ConditionalFiducialSampler(
            target_param="mu_y",
            statistic=FiducialStatistic(
                "sum_y_adj",
                lambda d, p: sy_sum - p["rho"] * math.sqrt(p["sigma_y2"] / p["sigma_x2"]) * sx_sum),
            equation_for=mu_y_equation,
        ),
        "sigma_x2": ConditionalFiducialSampler(
            target_param="sigma_x2",
            statistic=FiducialStatistic(
                "sigma_x_mle",
                lambda d, p: _bvn_sigma_mle_core(stats, p["mu_x"], p["mu_y"], p["sigma_y2"], p["rho"])),
            equation_for=lambda d, p: _bvn_sigma_equation(n, p["rho"]),
            check_at_start=True,
        ),
        "sigma_y2": ConditionalFiducialSampler(
            target_param="sigma_y2",
            statistic=FiducialStatistic(
                "sigma_y_mle",
                lambda d, p: _bvn_sigma_mle_core(stats_yx, p["mu_y"], p["mu_x"], p["sigma_x2"], p["rho"])),
            equation_for=lambda d, p: _bvn_sigma_equation(n, p["rho"]),
            check_at_start=True,
        ),
        "rho": ConditionalFiducialSampler(
            target_param="rho",
            statistic=FiducialStatistic(
                "rho_mle",
                lambda d, p: _bvn_rho_mle_core(stats, p["mu_x"], p["mu_y"], p["sigma_x2"], p["sigma_y2"])),
            equation_for=lambda d, p: _bvn_rho_equation(n),
            check_at_start=True,
        ),
    }


def _bvn_validate(data: Dataset):
    x = data.col("x")
    y = data.col("y")
    if x.size != y.size:
        raise DomainError("bivariate_normal needs x and y of equal length")
    if x.size < 3:
        raise DomainError("bivariate_normal needs n >= 3")
    if float(np.std(x)) <= 0.0 or float(np.std(y)) <= 0.0:
        raise DegenerateDataError("bivariate_normal needs non-constant columns")


def _bvn_default_init(data: Dataset) -> dict:
    x = data.col("x")
    y = data.col("y")
    rho = float(np.corrcoef(x, y)[0, 1])
    rho = float(np.clip(rho, -0.95, 0.95))
    return {
        "mu_x": float(np.mean(x)),
        "mu_y": float(np.mean(y)),
        "sigma_x2": float(np.var(x)),
        "sigma_y2": float(np.var(y)),
        "rho": rho,
    }


def _bvn_chain_inits(data: Dataset, chains: int) -> list:
    base = _bvn_default_init(data)
    n = data.col("x").size
    spreads = {
        "mu_x": math.sqrt(base["sigma_x2"] / n),
        "mu_y": math.sqrt(base["sigma_y2"] / n),
    }
    return _disperse(base, _BVN_PARAMS, spreads, chains)


def _bvn_simulate(theta: Mapping[str, float], n: int, rng: RngStream) -> Dataset:
    sdx = math.sqrt(_pos(theta["sigma_x2"], "sigma_x2"))
    sdy = math.sqrt(_pos(theta["sigma_y2"], "sigma_y2"))
    rho = float(theta["rho"])
    if not abs(rho) < 1.0:
        raise DomainError(f"|rho| must be < 1, got {rho}")
    z1 = rng.gen.standard_normal(n)
    z2 = rng.gen.standard_normal(n)
    return Dataset({
        "x": theta["mu_x"] + sdx * z1,
        "y": theta["mu_y"] + sdy * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2),
    })


_BVN_PARAMS = (
    ParamSpec("mu_x", -math.inf, math.inf, "location"),
    ParamSpec("mu_y", -math.inf, math.inf, "location"),
    ParamSpec("sigma_x2", 0.0, math.inf, "scale"),
    ParamSpec("sigma_y2", 0.0, math.inf, "scale"),
    ParamSpec("rho", -1.0, 1.0, "correlation"),
)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def _closed_form_cond_logpdf(dist_fn):
    def cond(param, v, others, data):
        return log_density(dist_fn(param, others, data), v)
    return cond


def _closed_form_cond_quantile(dist_fn):
    def cond(param, p, others, data):
        return quantile(dist_fn(param, others, data), p)
    return cond


_MODELS = {
    "normal": ModelSpec(
        name="normal",
        params=_NORMAL_PARAMS,
        build_conditionals=_normal_build_conditionals,
        simulate=_normal_simulate,
        default_init=_normal_default_init,
        chain_inits=_normal_chain_inits,
        validate_data=_normal_validate,
        joint_log_kernel=_normal_joint_log_kernel,
        conditional_log_density=_closed_form_cond_logpdf(_normal_conditional_dist),
        conditional_quantile=_closed_form_cond_quantile(_normal_conditional_dist),
    ),
    "pareto": ModelSpec(
        name="pareto",
        params=_PARETO_PARAMS,
        build_conditionals=_pareto_build_conditionals,
        simulate=_pareto_simulate,
        default_init=_pareto_default_init,
        chain_inits=_pareto_chain_inits,
        validate_data=_pareto_validate,
        joint_log_kernel=_pareto_joint,
        conditional_log_density=_pareto_conditional_log_density,
        conditional_quantile=_pareto_conditional_quantile,
        clamp_state=_pareto_clamp,
    ),
    "quadreg": ModelSpec(
        name="quadreg",
        params=_QUADREG_PARAMS,
        build_conditionals=_quadreg_build_conditionals,
        simulate=_quadreg_simulate,
        default_init=_quadreg_default_init,
        chain_inits=_quadreg_chain_inits,
        validate_data=_quadreg_validate,
        joint_log_kernel=_quadreg_joint,
        conditional_log_density=_closed_form_cond_logpdf(_quadreg_conditional_dist),
        conditional_quantile=_closed_form_cond_quantile(_quadreg_conditional_dist),
    ),
    "gamma": ModelSpec(
        name="gamma",
        params=_GAMMA_PARAMS,
        build_conditionals=_gamma_build_conditionals,
        simulate=_gamma_simulate,
        default_init=_gamma_default_init,
        chain_inits=_gamma_chain_inits,
        validate_data=_gamma_validate,
    ),
    "beta": ModelSpec(
        name="beta",
        params=_BETA_PARAMS,
        build_conditionals=_beta_build_conditionals,
        simulate=_beta_simulate,
        default_init=_beta_default_init,
        chain_inits=_beta_chain_inits,
        validate_data=_beta_validate,
    ),
    "behrens_fisher": ModelSpec(
        name="behrens_fisher",
        params=_BF_PARAMS,
        build_conditionals=_bf_build_conditionals,
        simulate=_bf_simulate,
        default_init=_bf_default_init,
        chain_inits=_bf_chain_inits,
        validate_data=_bf_validate,
        joint_log_kernel=_bf_joint,
        conditional_log_density=_closed_form_cond_logpdf(_bf_conditional_dist),
        conditional_quantile=_closed_form_cond_quantile(_bf_conditional_dist),
    ),
    "bivariate_normal": ModelSpec(
        name="bivariate_normal",
        params=_BVN_PARAMS,
        build_conditionals=_bvn_build_conditionals,
        simulate=_bvn_simulate,
        default_init=_bvn_default_init,
        chain_inits=_bvn_chain_inits,
        validate_data=_bvn_validate,
    ),
}

MODEL_NAMES = tuple(sorted(_MODELS))


def get_model(name: str) -> ModelSpec:
    try:
        return _MODELS[name]
    except KeyError:
        raise DomainError(f"unknown model '{name}'; choose from {MODEL_NAMES}") from None


def simulate_dataset(model: "ModelSpec | str", theta: Mapping[str, float], n: int,
                     rng: RngStream) -> Dataset:
    """n independent draws from the model's sampling density at theta."""
    spec = get_model(model) if isinstance(model, str) else model
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    for p in spec.params:
        if p.label not in theta:
            raise DomainError(f"missing parameter '{p.label}' for model '{spec.name}'")
        if not p.contains(float(theta[p.label])):
            raise DomainError(
                f"parameter '{p.label}'={theta[p.label]} outside domain ({p.lo}, {p.hi})")
    return spec.simulate(theta, n, rng)
