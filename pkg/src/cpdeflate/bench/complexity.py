"""Leading-order multiplication counts of the solvers, per iteration.

Direct evaluations of the published leading-order terms (multiplications
only): ``N R prod(I)`` for ALS, ``((2^N + 1) R + N^2) prod(I)`` for CG
with the exact line search, ``(2 N k + 2) prod(I)`` for the HOSVD
truncation, ``(2 k + 2) prod(I)`` for the sequential projection method,
and R times the latter two for the deflation solver built on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

ALGORITHMS = ("als", "cg_els", "thosvd", "seroap", "dcpd-thosvd", "dcpd-seroap")


@dataclass(frozen=True)
class FlopEstimate:
    algorithm: str
    dims: tuple
    rank: int | None
    order: int
    k: int | None
    count: int


def complexity_estimate(algorithm: str, dims, rank: int | None = None, k: int | None = None) -> FlopEstimate:
    """Per-iteration multiplication count for one algorithm on one size.

    ``rank`` is required for the CP solvers, ``k`` (inner SVD iteration
    count) for the rank-1 methods and the deflation variants.
    """
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"invalid dims {dims}")
    n = len(dims)
    size = prod(dims)

    def need_rank() -> int:
        if rank is None or rank < 1:
            raise ValueError(f"{algorithm} needs a rank")
        return rank

    def need_k() -> int:
        if k is None or k < 1:
            raise ValueError(f"{algorithm} needs an iteration count k")
        return k

    if algorithm == "als":
        count = n * need_rank() * size
    elif algorithm == "cg_els":
        count = ((2**n + 1) * need_rank() + n * n) * size
    elif algorithm == "thosvd":
        count = (2 * n * need_k() + 2) * size
    elif algorithm == "seroap":
        count = (2 * need_k() + 2) * size
    elif algorithm == "dcpd-thosvd":
        count = (2 * n * need_k() + 2) * need_rank() * size
    elif algorithm == "dcpd-seroap":
        count = (2 * need_k() + 2) * need_rank() * size
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; known: {ALGORITHMS}")
    return FlopEstimate(algorithm=algorithm, dims=dims, rank=rank, order=n, k=k, count=int(count))
