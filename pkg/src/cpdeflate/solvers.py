"""Full CP decomposition drivers.

Three solvers share the :class:`StopRule` / :class:`SolveReport`
machinery: alternating least squares, nonlinear conjugate gradient with
an exact polynomial line search and Polak-Ribiere updates, and the
deflation solver that cyclically re-approximates each rank-1 component
with a pluggable rank-1 operator.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .kernels import pinv
from .rank1 import Rank1Term, get_phi
from .tensors import angle_between, as_rng, cp_reconstruct, kr_chain, norm, unfold

__all__ = [
    "CPModel",
    "StopRule",
    "SolveReport",
    "DeflationTrace",
    "als",
    "gradient",
    "els_step",
    "cg_els",
    "dcpd",
    "random_model",
]


@dataclass(frozen=True)
class CPModel:
    """Rank-R model held as its factor matrices ``A(n)`` of size ``I_n x R``."""

    factors: tuple

    def __post_init__(self):
        ranks = {np.asarray(f).shape[1] for f in self.factors}
        if len(ranks) != 1:
            raise ValueError(f"factor matrices disagree on rank: {sorted(ranks)}")

    @property
    def shape(self) -> tuple:
        return tuple(np.asarray(f).shape[0] for f in self.factors)

    @property
    def rank(self) -> int:
        return np.asarray(self.factors[0]).shape[1]

    def to_tensor(self) -> np.ndarray:
        return cp_reconstruct(self.factors)


@dataclass(frozen=True)
class StopRule:
    """Stopping bounds; at least one must be finite.

    ``rel_tol`` stops when ``|r_k - r_{k-1}| <= rel_tol * max(1, r_{k-1})``;
    ``abs_target`` stops when the residual reaches the target.
    """

    max_iterations: int = 1000
    rel_tol: float | None = 1e-10
    abs_target: float | None = None

    def __post_init__(self):
        if (
            (self.max_iterations is None or math.isinf(self.max_iterations))
            and self.rel_tol is None
            and self.abs_target is None
        ):
            raise ValueError("StopRule needs at least one finite bound")

    def check(self, history, iterations: int | None = None) -> str | None:
        if iterations is None:
            iterations = len(history) - 1
        r = history[-1]
        if self.abs_target is not None and r <= self.abs_target:
            return "abs_target"
        if (
            self.rel_tol is not None
            and len(history) >= 2
            and abs(r - history[-2]) <= self.rel_tol * max(1.0, history[-2])
        ):
            return "rel_change"
        if self.max_iterations is not None and iterations >= self.max_iterations:
            return "max_iterations"
        return None


@dataclass
class SolveReport:
    residual_history: list
    iterations: int
    converged: bool
    stop_reason: str
    wall_time: float


DEFAULT_ALS_STOP = StopRule(max_iterations=1000, rel_tol=1e-10, abs_target=None)
DEFAULT_DCPD_STOP = StopRule(max_iterations=5000, rel_tol=1e-12, abs_target=1e-6)


def random_model(shape, rank: int, seed=0, field_name: str = "real") -> CPModel:
    """Random initialization with i.i.d. uniform[-1, 1] factor entries."""
    rng = as_rng(seed)
    factors = []
    for s in shape:
        f = rng.uniform(-1.0, 1.0, size=(int(s), rank))
        if field_name == "complex":
            f = f + 1j * rng.uniform(-1.0, 1.0, size=(int(s), rank))
        factors.append(f)
    return CPModel(factors=tuple(factors))


# ---------------------------------------------------------------------------
# alternating least squares


def als(t: np.ndarray, rank: int, init: CPModel | None = None, stop: StopRule = DEFAULT_ALS_STOP, seed=0):
    """Alternating least squares for the rank-R CP model.

    Every mode update solves its conditional least-squares problem exactly
    (Khatri-Rao normal equations with a pseudo-inverted Hadamard-Gramian),
    so the residual history is non-increasing up to roundoff.

    Returns ``(model, report)``.
    """
    t = np.asarray(t)
    started = time.perf_counter()
    if init is None:
        init = random_model(t.shape, rank, seed=seed, field_name="complex" if np.iscomplexobj(t) else "real")
    if init.shape != t.shape or init.rank != rank:
        raise ValueError("initial model does not match the tensor shape / rank")
    factors = [np.asarray(f, dtype=t.dtype) for f in init.factors]
    unfolds = [unfold(t, n) for n in range(t.ndim)]
    complex_field = np.iscomplexobj(t)

    history = [norm(t - cp_reconstruct(factors))]
    reason = None
    while reason is None:
        for n in range(t.ndim):
            grams = [f.conj().T @ f for f in factors]
            v = np.ones((rank, rank), dtype=t.dtype)
            for j, g in enumerate(grams):
                if j != n:
                    v = v * g
            k = kr_chain(factors, skip=n)
            update = k @ pinv(v, rank_tol=1e-12)
            factors[n] = unfolds[n] @ (update.conj() if complex_field else update)
        history.append(norm(t - cp_reconstruct(factors)))
        reason = stop.check(history)

    report = SolveReport(
        residual_history=history,
        iterations=len(history) - 1,
        converged=reason != "max_iterations",
        stop_reason=reason,
        wall_time=time.perf_counter() - started,
    )
    return CPModel(factors=tuple(factors)), report


# ---------------------------------------------------------------------------
# conjugate gradient with exact (polynomial) line search


def _require_real(t: np.ndarray, who: str) -> np.ndarray:
    t = np.asarray(t)
    if np.iscomplexobj(t):
        raise TypeError(f"{who} supports the real field only")
    return t


def pack(factors) -> np.ndarray:
    """Stack ``vec(A(0)) .. vec(A(N-1))`` into one parameter vector."""
    return np.concatenate([np.asarray(f).reshape(-1, order="F") for f in factors])


def unpack(p: np.ndarray, shape, rank: int):
    out = []
    at = 0
    for s in shape:
        out.append(p[at : at + s * rank].reshape(s, rank, order="F"))
        at += s * rank
    return out


def gradient(t: np.ndarray, model: CPModel) -> np.ndarray:
    """Gradient of ``||T - model||^2`` with respect to the stacked factors.

    Blockwise ``g(n) = 2 vec(A(n) V(n) - T_(n) K(n))`` with ``K(n)`` the
    Khatri-Rao chain excluding mode n and ``V(n)`` the Hadamard product of
    the other Gramians.
    """
    t = _require_real(t, "gradient")
    factors = [np.asarray(f) for f in model.factors]
    if model.shape != t.shape:
        raise ValueError("model shape does not match the tensor")
    grams = [f.T @ f for f in factors]
    blocks = []
    for n in range(t.ndim):
        v = np.ones((model.rank, model.rank))
        for j, g in enumerate(grams):
            if j != n:
                v = v * g
        k = kr_chain(factors, skip=n)
        blocks.append(2.0 * (factors[n] @ v - unfold(t, n) @ k))
    return pack(blocks)


def els_step(t: np.ndarray, model: CPModel, direction: np.ndarray, radius: float = 10.0) -> float:
    """Exact line search: minimize ``f(mu) = ||T - model + mu*direction||^2``.

    ``f`` is a polynomial of degree 2N in ``mu``; it is interpolated
    exactly from 2N+1 Chebyshev-point evaluations on ``[-radius, radius]``,
    the derivative's real roots are found via its companion matrix, and
    the best of {roots, endpoints, 0} is returned, so the step never
    increases ``f``.
    """
    t = _require_real(t, "els_step")
    direction = np.asarray(direction, dtype=float)
    if np.linalg.norm(direction) == 0.0:
        return 0.0
    n_modes = t.ndim
    base = pack(model.factors)
    deg = 2 * n_modes

    def f(mu: float) -> float:
        return norm(t - cp_reconstruct(unpack(base + mu * direction, t.shape, model.rank))) ** 2

    nodes = np.cos(np.pi * np.arange(deg + 1) / deg)  # Chebyshev points on [-1, 1]
    vals = np.array([f(radius * s) for s in nodes])
    coeffs = np.polynomial.polynomial.polyfit(nodes, vals, deg)
    dcoeffs = np.polynomial.polynomial.polyder(coeffs)
    roots = np.polynomial.polynomial.polyroots(dcoeffs)
    candidates = [0.0, -1.0, 1.0]
    for r in roots:
        if abs(r.imag) <= 1e-8 * (1.0 + abs(r.real)) and -1.0 <= r.real <= 1.0:
            candidates.append(float(r.real))
    best = min(candidates, key=lambda s: f(radius * s))
    return radius * float(best)


def cg_els(t: np.ndarray, rank: int, init: CPModel | None = None, stop: StopRule = DEFAULT_ALS_STOP, seed=0, radius: float = 10.0):
    """Nonlinear conjugate gradient with ELS steps and Polak-Ribiere beta.

    ``beta = max(0, <g_new, g_new - g_old> / <g_old, g_old>)`` (restart
    variant); the first direction is the steepest descent one.  Real field
    only.  Returns ``(model, report)``.
    """
    t = _require_real(t, "cg_els")
    started = time.perf_counter()
    if init is None:
        init = random_model(t.shape, rank, seed=seed)
    if init.shape != t.shape or init.rank != rank:
        raise ValueError("initial model does not match the tensor shape / rank")
    p = pack([np.asarray(f, dtype=float) for f in init.factors])

    def model_of(vecp):
        return CPModel(factors=tuple(unpack(vecp, t.shape, rank)))

    model = model_of(p)
    g = gradient(t, model)
    d = -g
    trust = radius
    boundary_hits = 0
    history = [norm(t - model.to_tensor())]
    reason = None
    while reason is None:
        mu = els_step(t, model, d, radius=trust)
        if abs(abs(mu) - trust) <= 1e-12 * trust:
            boundary_hits += 1
            if boundary_hits >= 2:
                trust *= 2.0
                boundary_hits = 0
        else:
            boundary_hits = 0
        p = p + mu * d
        model = model_of(p)
        g_new = gradient(t, model)
        gg = float(g @ g)
        beta = max(0.0, float(g_new @ (g_new - g)) / gg) if gg > 0 else 0.0
        d = -g_new + beta * d
        g = g_new
        history.append(norm(t - model.to_tensor()))
        reason = stop.check(history)

    report = SolveReport(
        residual_history=history,
        iterations=len(history) - 1,
        converged=reason != "max_iterations",
        stop_reason=reason,
        wall_time=time.perf_counter() - started,
    )
    return model, report


# ---------------------------------------------------------------------------
# deflation


@dataclass
class DeflationTrace:
    """Complete history of one deflation run.

    Norm records are indexed ``[l][r]`` following the algorithm's schedule
    (inner loop over components r, outer loop over sweeps l, 0-based
    here).  Angles ``gamma[l][r]`` exist for sweeps ``l >= 1`` and measure
    each fresh residual against the rank-1 term it is about to be combined
    with.  Tensors are retained only on request.
    """

    shape: tuple
    rank: int
    phi_name: str
    y_norms: list = field(default_factory=list)
    x_norms: list = field(default_factory=list)
    e_norms: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    sweep_residuals: list = field(default_factory=list)
    terms: tuple = ()
    stop_reason: str = ""
    converged: bool = False
    wall_time: float = 0.0
    retained_x: list | None = None
    retained_e: list | None = None
    retained_terms: list | None = None

    @property
    def sweeps(self) -> int:
        return len(self.sweep_residuals)


def dcpd(
    t: np.ndarray,
    rank: int,
    phi="seroap",
    stop: StopRule = DEFAULT_DCPD_STOP,
    record_angles: bool = True,
    retain_tensors: bool = False,
    phi_name: str | None = None,
):
    """Deflation-based CP decomposition.

    Initialization sweep: successive rank-1 approximation and subtraction.
    Every later sweep rebuilds each component from its previous estimate
    plus the running residual: ``Y[r,l] = X[r,l-1] + E[r-1,l]`` (the first
    component uses the previous sweep's final residual), ``X[r,l] =
    phi(Y[r,l])``, ``E[r,l] = Y[r,l] - X[r,l]``.  Stops on the end-of-sweep
    residual ``||E[R,l]||`` per the stop rule.

    Returns ``(terms, trace)`` with the last sweep's rank-1 terms.
    """
    t = np.asarray(t)
    started = time.perf_counter()
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if isinstance(phi, str):
        phi_name = phi_name or phi
        phi = get_phi(phi)
    trace = DeflationTrace(shape=t.shape, rank=rank, phi_name=phi_name or getattr(phi, "__name__", "user"))
    if retain_tensors:
        trace.retained_x = []
        trace.retained_e = []
        trace.retained_terms = []

    def apply_phi(y, r, sweep):
        if norm(y) == 0.0:
            return Rank1Term(weight=0.0, factors=tuple(_basis_vec(s, y.dtype) for s in y.shape))
        try:
            return phi(y)
        except Exception as exc:
            raise RuntimeError(
                f"rank-1 operator failed at component r={r}, sweep l={sweep}: {exc}"
            ) from exc

    # initialization sweep (l = 0 internally, the paper's l = 1)
    terms: list[Rank1Term] = []
    x_cur: list[np.ndarray] = []
    e_cur: list[np.ndarray] = []
    y = t
    y_norms, x_norms, e_norms = [], [], []
    for r in range(rank):
        term = apply_phi(y, r, 0)
        x = term.to_tensor()
        e = y - x
        terms.append(term)
        x_cur.append(x)
        e_cur.append(e)
        y_norms.append(norm(y))
        x_norms.append(norm(x))
        e_norms.append(norm(e))
        y = e
    trace.y_norms.append(y_norms)
    trace.x_norms.append(x_norms)
    trace.e_norms.append(e_norms)
    trace.sweep_residuals.append(e_norms[-1])
    if retain_tensors:
        trace.retained_x.append(list(x_cur))
        trace.retained_e.append(list(e_cur))
        trace.retained_terms.append(list(terms))

    reason = stop.check(trace.sweep_residuals, iterations=len(trace.sweep_residuals))
    while reason is None:
        sweep = len(trace.sweep_residuals)
        x_prev = x_cur
        e_last = e_cur[-1]
        terms, x_cur, e_cur = [], [], []
        y_norms, x_norms, e_norms, gammas = [], [], [], []
        for r in range(rank):
            incoming = e_last if r == 0 else e_cur[r - 1]
            if record_angles:
                gammas.append(_safe_angle(incoming, x_prev[r]))
            y = x_prev[r] + incoming
            term = apply_phi(y, r, sweep)
            x = term.to_tensor()
            e = y - x
            terms.append(term)
            x_cur.append(x)
            e_cur.append(e)
            y_norms.append(norm(y))
            x_norms.append(norm(x))
            e_norms.append(norm(e))
        trace.y_norms.append(y_norms)
        trace.x_norms.append(x_norms)
        trace.e_norms.append(e_norms)
        if record_angles:
            trace.gamma.append(gammas)
        trace.sweep_residuals.append(e_norms[-1])
        if retain_tensors:
            trace.retained_x.append(list(x_cur))
            trace.retained_e.append(list(e_cur))
            trace.retained_terms.append(list(terms))
        reason = stop.check(trace.sweep_residuals, iterations=len(trace.sweep_residuals))

    trace.terms = tuple(terms)
    trace.stop_reason = reason
    trace.converged = reason != "max_iterations"
    trace.wall_time = time.perf_counter() - started
    return list(terms), trace


def _basis_vec(n: int, dtype) -> np.ndarray:
    e = np.zeros(n, dtype=dtype)
    e[0] = 1.0
    return e


def _safe_angle(e: np.ndarray, x: np.ndarray) -> float:
    """Angle with the pi/2 convention for degenerate (zero) inputs."""
    if norm(e) == 0.0 or norm(x) == 0.0:
        return math.pi / 2.0
    return angle_between(e, x)
