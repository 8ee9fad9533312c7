"""Monte Carlo and multilevel Monte Carlo estimators of ``E[F(x_T)]``.

Planning follows the usual bias/variance balance for a scheme with weak
order ``alpha`` and strong order ``beta``: for a target RMSE ``epsilon`` the
classical estimator picks a step ``h`` and sample size ``N``, and the
multilevel estimator picks a number of levels ``L``, a total sample size
``N`` and an allocation ``q`` over the levels ``h_l = h* M^{-(l-1)}``.

Runs take a sampler exposing ``single(h, n, key, scheme)`` and
``pair(h_fine, h_coarse, n, key, scheme)`` (see :mod:`pdmp.samplers`).  Each
replication and level draws from its own stream key, so runs are exactly
reproducible from the seed.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, PlanDegenerate
from .rng import StreamKey

CSV_HEADER = ("epsilon", "estimator", "L", "M", "h", "N", "estimate", "bias", "variance", "rmse",
              "cost", "wall_time_s")
M_RANGE = tuple(range(2, 11))


@dataclass(frozen=True)
class StructuralParams:
    """Constants of the error model ``bias ~ c1 h^alpha``, ``E|X_h - X|^2 ~ V1 h^beta``."""

    alpha: float
    beta: float
    c1: float
    V1: float
    var_x: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise InvalidArgument("alpha and beta must be positive")
        if not (self.V1 > 0 and self.var_x > 0):
            raise InvalidArgument("V1 and var_x must be positive")

    @property
    def rho(self) -> float:
        return math.sqrt(self.V1 / self.var_x)


@dataclass(frozen=True)
class MlmcPlan:
    levels: int
    M: int
    h_star: float
    q: tuple
    N: float
    N_l: tuple

    def __post_init__(self):
        if self.levels < 2 or self.M < 2:
            raise InvalidArgument("a multilevel plan needs L >= 2 and M >= 2")
        if len(self.q) != self.levels or len(self.N_l) != self.levels:
            raise InvalidArgument("allocation length must equal the number of levels")

    @property
    def steps(self) -> tuple:
        return tuple(self.h_star * float(self.M) ** -(l - 1) for l in range(1, self.levels + 1))

    @property
    def total_samples(self) -> int:
        return int(sum(self.N_l))


@dataclass(frozen=True)
class McPlan:
    h: float
    N: int


@dataclass
class RunReport:
    """One replication of an estimator.

    ``variance`` is the estimator's own empirical variance ``v`` (sample
    variance over ``N`` for MC, summed over levels for MLMC).  ``cost``
    counts Euler updates.  ``level_means`` and ``level_variances`` are only
    filled in for multilevel runs.
    """

    estimator: str
    estimate: float
    variance: float
    cost: int
    wall_time: float
    plan: object = None
    level_means: tuple = ()
    level_variances: tuple = ()
    reduction: str = "pairwise sum over samples in stream order"


@dataclass(frozen=True)
class RmseSummary:
    bias: float
    variance: float
    rmse: float
    replications: int
    mean_estimate: float
    mean_cost: float
    mean_wall_time: float


def _check_eps(epsilon):
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise InvalidArgument(f"epsilon must be positive, got {epsilon!r}")


def mc_params(epsilon: float, sp: StructuralParams) -> McPlan:
    """Optimal step and sample size of the classical estimator."""
    _check_eps(epsilon)
    if sp.c1 == 0:
        raise InvalidArgument("c1 = 0: the bias model gives no step size")
    a = sp.alpha
    h = (1 + 2 * a) ** (-1 / (2 * a)) * (epsilon / abs(sp.c1)) ** (1 / a)
    n = (1 + 1 / (2 * a)) * sp.var_x * (1 + sp.rho * h ** (sp.beta / 2)) ** 2 / epsilon**2
    return McPlan(h, int(math.ceil(n)))


def _n_levels(epsilon, sp, h_star, M):
    a = sp.alpha
    return math.ceil(
        1
        + math.log(abs(sp.c1) ** (1 / a) * h_star) / math.log(M)
        + math.log(math.sqrt(1 + 2 * a) / epsilon) / (a * math.log(M))
    )


def _allocation(L, M, sp, h_star):
    b = sp.beta
    n = [0.0] + [float(M) ** (l - 1) for l in range(1, L + 1)]
    inv = lambda x: 0.0 if x == 0 else x ** (-b / 2)
    rh = sp.rho * h_star ** (b / 2)
    raw = [1 + rh]
    # the j = 1 term of the sum is (0 + 1) * sqrt(0 + 1) under n_0 = n_0^{-1} = 0
    spread = 1.0
    for j in range(2, L + 1):
        s = inv(n[j - 1]) + inv(n[j])
        raw.append(rh * s / math.sqrt(n[j - 1] + n[j]))
        spread += s * math.sqrt(n[j - 1] + n[j])
    q = np.array(raw) / sum(raw)
    # per-sample work of level j: n_{j-1} + n_j Euler grids (n_0 = 0 for level 1)
    work = sum(q[j - 1] * (n[j - 1] + n[j]) for j in range(1, L + 1))
    return q, rh, spread, work


def mlmc_params(epsilon: float, sp: StructuralParams, h_star: float, M: int) -> MlmcPlan:
    """Optimal multilevel plan for a given refinement factor ``M``.

    Raises
    ------
    PlanDegenerate
        If the optimal number of levels is below 2; use :func:`mc_params`.
    """
    _check_eps(epsilon)
    if not h_star > 0:
        raise InvalidArgument(f"h_star must be positive, got {h_star!r}")
    if int(M) != M or M < 2:
        raise InvalidArgument(f"M must be an integer >= 2, got {M!r}")
    if sp.c1 == 0:
        raise InvalidArgument("c1 = 0: the bias model gives no number of levels")
    M = int(M)
    L = _n_levels(epsilon, sp, h_star, M)
    if L < 2:
        raise PlanDegenerate(f"optimal number of levels is {L} at epsilon={epsilon}")
    q, rh, spread, work = _allocation(L, M, sp, h_star)
    a = sp.alpha
    N = (1 + 1 / (2 * a)) * sp.var_x * (1 + rh * spread) ** 2 / (epsilon**2 * work)
    N_l = tuple(int(math.ceil(N * ql)) for ql in q)
    return MlmcPlan(L, M, float(h_star), tuple(float(x) for x in q), float(N), N_l)


def plan_complexity(plan: MlmcPlan) -> float:
    """``N * sum_j q_j (n_{j-1} + n_j)``: Euler grids per unit ``1/h*``."""
    n = [0.0] + [float(plan.M) ** (l - 1) for l in range(1, plan.levels + 1)]
    return plan.N * sum(plan.q[j - 1] * (n[j - 1] + n[j]) for j in range(1, plan.levels + 1))


def select_M(epsilon: float, sp: StructuralParams, h_star: float, M_range=M_RANGE) -> int:
    """Refinement factor minimising the plan complexity; ties go to the smaller ``M``."""
    best, best_cost = None, math.inf
    for M in sorted(M_range):
        try:
            cost = plan_complexity(mlmc_params(epsilon, sp, h_star, M))
        except PlanDegenerate:
            continue
        if cost < best_cost:
            best, best_cost = M, cost
    if best is None:
        raise PlanDegenerate(f"no M in {tuple(M_range)} gives at least two levels")
    return best


# structural parameters -----------------------------------------------------

def _key(seed) -> StreamKey:
    return seed if isinstance(seed, StreamKey) else StreamKey(int(seed))


def estimate_V1(sampler, h: float = 0.1, M: int = 4, N: int = 10_000, beta: float = 1.0,
                scheme: str = "plain", seed=0) -> float:
    """``(1 + M^{-beta/2})^{-2} h^{-beta} mean[(X_h - X_{h/M})^2]`` over coupled pairs."""
    batch = sampler.pair(h / M, h, N, _key(seed), scheme)
    msd = float(np.mean(batch.difference**2))
    return (1 + M ** (-beta / 2)) ** -2 * h ** (-beta) * msd


def estimate_c1(sampler, h: float = 1.0, M: int = 4, N: int = 10_000, alpha: float = 1.0,
                seed=0, return_se: bool = False):
    """Bias constant from coupled pairs: ``(1 - M^{-alpha})^{-1} h^{-alpha} mean[X_h - X_{h/M}]``.

    With ``E[X_h] = E[X] + c1 h^alpha + ...`` this is consistent for ``c1``.
    """
    batch = sampler.pair(h / M, h, N, _key(seed), "plain")
    d = batch.coarse.value - batch.fine.value
    scale = 1.0 / ((1 - M ** (-alpha)) * h**alpha)
    c1 = scale * float(np.mean(d))
    if return_se:
        return c1, scale * float(np.std(d, ddof=1) / math.sqrt(len(d)))
    return c1


def estimate_var(sampler, h: float, N: int, seed=0) -> float:
    return float(np.var(sampler.single(h, N, _key(seed)).value, ddof=1))


# runs ---------------------------------------------------------------------

def _sample_var(x):
    return float(np.var(x, ddof=1)) if len(x) > 1 else 0.0


def run_mc(plan: McPlan, sampler, seed=0, replication: int = 0) -> RunReport:
    """``mean of N`` independent ``F(X_h)`` on the stream ``(seed, replication, 0)``."""
    if plan.N < 1:
        raise InvalidArgument("MC plan needs N >= 1")
    start = time.perf_counter()
    batch = sampler.single(plan.h, plan.N, _key(seed).child(replication, 0))
    x = batch.value
    return RunReport(
        "mc",
        float(np.sum(x) / len(x)),
        _sample_var(x) / len(x),
        int(np.sum(batch.cost)),
        time.perf_counter() - start,
        plan,
    )


def run_mlmc(plan: MlmcPlan, sampler, coupling: str = "plain", seed=0,
             replication: int = 0) -> RunReport:
    """Multilevel estimate with the given coupling.

    Level 1 draws ``N_1`` samples at ``h*`` (weighted for ``case1`` and
    ``case2``, plain otherwise); level ``l >= 2`` draws ``N_l`` coupled
    pairs ``(h_l, h_{l-1})`` on stream ``(seed, replication, l - 1)``.
    """
    if coupling not in ("plain", "case1", "case2", "case3"):
        raise InvalidArgument(f"unknown coupling {coupling!r}")
    if not isinstance(plan, MlmcPlan):
        raise InvalidArgument("run_mlmc needs an MlmcPlan")
    start = time.perf_counter()
    key = _key(seed).child(replication)
    steps = plan.steps
    means, variances, cost = [], [], 0
    for l in range(1, plan.levels + 1):
        n = plan.N_l[l - 1]
        if l == 1:
            batch = sampler.single(steps[0], n, key.child(0), coupling)
            y = batch.value
        else:
            batch = sampler.pair(steps[l - 1], steps[l - 2], n, key.child(l - 1), coupling)
            y = batch.difference
        cost += int(np.sum(batch.cost))
        means.append(float(np.sum(y) / len(y)))
        variances.append(_sample_var(y) / len(y))
    return RunReport(
        f"mlmc-{coupling}",
        float(sum(means)),
        float(sum(variances)),
        cost,
        time.perf_counter() - start,
        plan,
        tuple(means),
        tuple(variances),
    )


def empirical_rmse(reports, true_value: float) -> RmseSummary:
    """Bias, mean variance and RMSE over independent replications."""
    reports = list(reports)
    if len(reports) < 1:
        raise InvalidArgument("need at least one report")
    y = np.array([r.estimate for r in reports])
    v = np.array([r.variance for r in reports])
    b = float(np.mean(y) - true_value)
    vbar = float(np.mean(v))
    return RmseSummary(
        b,
        vbar,
        math.sqrt(b * b + vbar),
        len(reports),
        float(np.mean(y)),
        float(np.mean([r.cost for r in reports])),
        float(np.mean([r.wall_time for r in reports])),
    )


def variance_decay_curve(sampler, coupling: str = "plain", h: float = 1.0, M: int = 4,
                         levels: int = 6, N: int = 10_000, seed=0):
    """Mean squared level differences ``E[(X_{h_l} - X~_{h_{l-1}})^2]``.

    Uses the multilevel correction levels ``l = 2, ..., levels + 1`` with
    ``h_l = h M^{-(l-1)}``, so the coarsest step in any pair is ``h``.
    Returns ``(l, msd, log_M msd)`` rows.
    """
    rows = []
    key = _key(seed)
    for l in range(2, levels + 2):
        h_c = h * float(M) ** -(l - 2)
        batch = sampler.pair(h_c / M, h_c, N, key.child(l), coupling)
        msd = float(np.mean(batch.difference**2))
        rows.append((l, msd, math.log(msd) / math.log(M) if msd > 0 else -math.inf))
    return rows


def decay_slope(rows) -> float:
    """Least-squares slope of ``log_M msd`` against ``l``; ``nan`` for fewer than two levels."""
    pts = [(l, y) for l, _, y in rows if math.isfinite(y)]
    if len(pts) < 2:
        return math.nan
    l, y = np.array(pts).T
    return float(np.polyfit(l, y, 1)[0])


# reporting ----------------------------------------------------------------

def table_row(epsilon, estimator, plan, summary: RmseSummary):
    """One CSV row in :data:`CSV_HEADER` order."""
    if isinstance(plan, MlmcPlan):
        L, M, h, N = plan.levels, plan.M, plan.h_star, plan.total_samples
    else:
        L, M, h, N = 1, "", plan.h, plan.N
    bias = summary.bias if summary.replications > 1 else "nan"
    return [
        f"{epsilon:.6g}", estimator, L, M, f"{h:.6g}", N,
        f"{summary.mean_estimate:.10g}", bias if isinstance(bias, str) else f"{bias:.6g}",
        f"{summary.variance:.6g}", f"{summary.rmse:.6g}", f"{summary.mean_cost:.6g}",
        f"{summary.mean_wall_time:.3f}",
    ]


def write_table(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(rows)
