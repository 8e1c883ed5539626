"""Geometric convergence diagnostics for deflation traces.

The deflation residual chain contracts by ``sin(gamma)`` per component
when the rank-1 operator is the best one; this module checks those
contraction inequalities on recorded traces, derives the cone-angle bound
and its predicted decay, and estimates by Monte Carlo the probability
that a whole run stays inside a cone of half-angle beta.

Theorem checks refuse traces produced with a heuristic operator unless
explicitly asked to run in empirical mode, because the inequalities are
only theorems for the best rank-1 operator.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .rank1 import Rank1Term, get_phi, residual
from .solvers import DeflationTrace, StopRule, dcpd
from .tensors import angle_between, norm, random_cp

__all__ = [
    "AngleTable",
    "ConeReport",
    "FEstimate",
    "Lemma1Check",
    "CorollaryReport",
    "angle_table",
    "check_lemma1",
    "check_corollaries",
    "beta_bound",
    "predict_decay",
    "estimate_F",
]

ORACLE_NAMES = ("oracle",)


@dataclass(frozen=True)
class AngleTable:
    """Angles ``gamma[l][r]`` (sweeps l >= 2) and per-sweep ``c_l = prod sin``."""

    gamma: tuple
    c: tuple

    def to_json(self) -> str:
        return json.dumps({"gamma": [list(g) for g in self.gamma], "c": list(self.c)})


@dataclass(frozen=True)
class Lemma1Check:
    lhs: float
    rhs: float
    gamma: float
    holds: bool


@dataclass(frozen=True)
class CorollaryReport:
    """Per-(r,l) contraction checks plus stagnation (c_l ~ 1) records."""

    corollary1_violations: tuple
    corollary2_violations: tuple
    stagnation: tuple  # (sweep, ratio, c_l) triples where the residual plateaued
    checked_sweeps: int
    holds: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class ConeReport:
    beta: float
    ratios: tuple
    stagnation_flags: tuple

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class FEstimate:
    L: int
    beta_grid: tuple
    probabilities: tuple
    half_widths: tuple
    trials: int
    phi_name: str

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def angle_table(trace: DeflationTrace, recompute: bool = False) -> AngleTable:
    """Assemble the gamma table and the sweep products ``c_l``.

    With ``recompute=True`` the angles are rebuilt from retained tensors
    instead of trusting the values recorded during the run (requires a
    trace produced with ``retain_tensors=True``).
    """
    if recompute:
        if not trace.retained_x or not trace.retained_e:
            raise ValueError("trace was recorded norms-only; retained tensors are required")
        gamma = []
        for sweep in range(1, len(trace.retained_x)):
            row = []
            for r in range(trace.rank):
                incoming = (
                    trace.retained_e[sweep - 1][-1]
                    if r == 0
                    else trace.retained_e[sweep][r - 1]
                )
                prev_x = trace.retained_x[sweep - 1][r]
                if norm(incoming) == 0.0 or norm(prev_x) == 0.0:
                    row.append(math.pi / 2.0)
                else:
                    row.append(angle_between(incoming, prev_x))
            gamma.append(tuple(row))
    else:
        if not trace.gamma and len(trace.sweep_residuals) > 1:
            raise ValueError("trace was recorded without angles")
        gamma = [tuple(row) for row in trace.gamma]
    c = tuple(float(np.prod([math.sin(g) for g in row])) for row in gamma)
    return AngleTable(gamma=tuple(gamma), c=c)


def check_lemma1(x: Rank1Term, e: np.ndarray, phi="oracle", slack: float = 1e-8) -> Lemma1Check:
    """Check ``||X+E - phi(X+E)|| <= sin(angle(E, X)) ||E||``.

    A theorem when ``phi`` is the best rank-1 operator; informative (and
    possibly violated) for heuristic operators.
    """
    if isinstance(phi, str):
        phi = get_phi(phi)
    e = np.asarray(e)
    xt = x.to_tensor()
    y = xt + e
    lhs = residual(y, phi(y)) if norm(y) > 0 else 0.0
    if norm(e) == 0.0:
        gamma = 0.0
        rhs = 0.0
    else:
        gamma = math.pi / 2.0 if norm(xt) == 0.0 else angle_between(e, xt)
        rhs = math.sin(gamma) * norm(e)
    return Lemma1Check(lhs=float(lhs), rhs=float(rhs), gamma=float(gamma), holds=lhs <= rhs + slack)


def check_corollaries(
    trace: DeflationTrace,
    empirical: bool = False,
    slack: float = 1e-8,
    stagnation_rel: float = 1e-6,
    stagnation_c_tol: float = 1e-3,
) -> CorollaryReport:
    """Check the per-component and per-sweep contraction inequalities.

    Component-wise: ``||E[r,l]|| <= sin(gamma[r,l]) ||E[r-1,l]||`` (the
    first component is measured against the previous sweep's final
    residual).  Sweep-wise: ``||E[R,l]|| <= c_l ||E[R,l-1]||``.  Plateaus
    (``||E[R,l]|| >= (1 - stagnation_rel) ||E[R,l-1]||``) must come with
    ``c_l`` within ``stagnation_c_tol`` of 1.  Residuals at the rounding
    floor (below ``1e-12`` of the input norm) are exact convergence, not
    stagnation: their angles are floating-point noise, so they are
    excluded from the plateau analysis.
    """
    if trace.phi_name not in ORACLE_NAMES and not empirical:
        raise ValueError(
            f"trace was produced with phi={trace.phi_name!r}; the contraction "
            "inequalities are theorems only for the best rank-1 operator "
            "(pass empirical=True to inspect anyway)"
        )
    table = angle_table(trace)
    v1 = []
    v2 = []
    stagnation = []
    sweeps = len(trace.sweep_residuals)
    input_scale = trace.y_norms[0][0] if trace.y_norms else max(trace.sweep_residuals)
    floor = 1e-12 * max(input_scale, 1e-300)
    for sweep in range(1, sweeps):
        gam = table.gamma[sweep - 1]
        for r in range(trace.rank):
            prev_norm = (
                trace.e_norms[sweep - 1][-1] if r == 0 else trace.e_norms[sweep][r - 1]
            )
            bound = math.sin(gam[r]) * prev_norm
            got = trace.e_norms[sweep][r]
            if got > bound + slack:
                v1.append((sweep, r, float(got), float(bound)))
        c_l = table.c[sweep - 1]
        prev = trace.sweep_residuals[sweep - 1]
        got = trace.sweep_residuals[sweep]
        if got > c_l * prev + slack:
            v2.append((sweep, float(got), float(c_l * prev)))
        if got >= (1.0 - stagnation_rel) * prev and prev > floor:
            stagnation.append((sweep, float(got / prev), float(c_l)))
    holds = not v1 and not v2 and all(c >= 1.0 - stagnation_c_tol for _, _, c in stagnation)
    return CorollaryReport(
        corollary1_violations=tuple(v1),
        corollary2_violations=tuple(v2),
        stagnation=tuple(stagnation),
        checked_sweeps=sweeps - 1,
        holds=holds,
    )


def beta_bound(trace: DeflationTrace) -> ConeReport:
    """Cone half-angle ``beta = max over sweeps of min over r of gamma[r,l]``.

    Also reports the per-sweep contraction ratios and flags plateaus.
    """
    table = angle_table(trace)
    if table.gamma:
        beta = max(min(row) for row in table.gamma)
    else:
        beta = 0.0
    ratios = []
    flags = []
    res = trace.sweep_residuals
    for sweep in range(1, len(res)):
        ratio = res[sweep] / res[sweep - 1] if res[sweep - 1] > 0 else 0.0
        ratios.append(float(ratio))
        flags.append(ratio >= 1.0 - 1e-6)
    return ConeReport(beta=float(beta), ratios=tuple(ratios), stagnation_flags=tuple(flags))


def predict_decay(beta: float, sweeps: int) -> float:
    """Guaranteed residual reduction factor ``sin(beta)^(L-1)`` after L sweeps."""
    if sweeps < 1:
        raise ValueError("need at least one sweep")
    return math.sin(beta) ** (sweeps - 1)


def _chain_holds(z: np.ndarray, sin_beta: float, slack: float) -> bool:
    """Event: ``Z_L <= s Z_{L-1} <= ... <= s^{L-1} Z_1`` term by term."""
    big = len(z)
    terms = [sin_beta**j * z[big - 1 - j] for j in range(big)]
    return all(terms[j] <= terms[j + 1] + slack for j in range(big - 1))


def estimate_F(
    L: int,
    beta_grid,
    shape,
    rank: int,
    trials: int,
    phi: str = "oracle",
    seed: int = 0,
    field: str = "real",
    confidence_z: float = 1.96,
    phi_options: dict | None = None,
) -> FEstimate:
    """Monte-Carlo estimate of the cone-chain probability ``F_L[beta]``.

    Tensors are drawn as random rank-``rank`` models with uniform[-1, 1]
    factor entries (an absolutely continuous measure on the rank-bounded
    set); each trial runs the deflation solver for exactly ``L`` sweeps
    and records the end-of-sweep residual norms ``Z_l``.  For every beta
    the chained event ``Z_L <= sin(beta) Z_{L-1} <= ...`` is counted, with
    a roundoff slack of ``1e-10 * max(Z)`` so that the Corollary-level
    guarantee at ``beta = pi/2`` is not lost to floating point.  Wilson
    half-widths at ``confidence_z`` accompany the estimates.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if L < 2:
        raise ValueError("the chain needs L >= 2 sweeps")
    beta_grid = tuple(float(b) for b in beta_grid)
    phi_fn = get_phi(phi, **(phi_options or {})) if isinstance(phi, str) else phi
    stop = StopRule(max_iterations=L, rel_tol=None, abs_target=None)
    counts = np.zeros(len(beta_grid), dtype=int)
    root = np.random.SeedSequence(seed)
    for trial_seq in root.spawn(trials):
        _, t = random_cp(shape, rank, field=field, seed=np.random.default_rng(trial_seq))
        _, trace = dcpd(t, rank, phi=phi_fn, stop=stop, record_angles=False,
                        phi_name=phi if isinstance(phi, str) else None)
        z = np.asarray(trace.sweep_residuals)
        slack = 1e-10 * float(np.max(z)) if z.size else 0.0
        for i, beta in enumerate(beta_grid):
            if _chain_holds(z, math.sin(beta), slack):
                counts[i] += 1

    probs = counts / trials
    half = []
    zc = confidence_z
    for p in probs:
        denom = 1.0 + zc * zc / trials
        half.append(float(zc * math.sqrt(p * (1 - p) / trials + zc * zc / (4 * trials * trials)) / denom))
    return FEstimate(
        L=L,
        beta_grid=beta_grid,
        probabilities=tuple(float(p) for p in probs),
        half_widths=tuple(half),
        trials=trials,
        phi_name=phi if isinstance(phi, str) else getattr(phi, "__name__", "user"),
    )
