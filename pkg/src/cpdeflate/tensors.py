"""Dense N-way tensor values and the multilinear operations built on them.

Tensors are plain :class:`numpy.ndarray` objects.  The scalar field is
carried by the dtype: ``float64`` for real tensors, ``complex128`` for
complex ones.  All functions here are pure; none of them mutates its
arguments, and randomness enters only through an explicit seed or
:class:`numpy.random.Generator` owned by the caller.

Layout convention
-----------------
The flat element order is *first index fastest* (Fortran order), so the
mode-0 unfolding is a pure reinterpretation of the buffer.  Unfoldings
follow the Kolda convention: column ``j`` of ``unfold(t, n)`` enumerates
the remaining modes with smaller mode indices varying fastest.  ``vec``
stacks matrix columns.  Modes are 0-based throughout the Python API.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.linalg import khatri_rao as _scipy_khatri_rao

__all__ = [
    "unfold",
    "fold",
    "vec",
    "unvec",
    "inner",
    "norm",
    "angle_between",
    "kronecker",
    "khatri_rao",
    "hadamard",
    "outer",
    "cp_reconstruct",
    "kr_chain",
    "random_tensor",
    "random_cp",
    "add_noise",
    "save_tensor",
    "load_tensor",
    "as_rng",
]

_REAL = np.float64
_COMPLEX = np.complex128


def _as_field_array(a, name: str = "tensor") -> np.ndarray:
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        return arr.astype(_COMPLEX, copy=False)
    return arr.astype(_REAL, copy=False)


def as_rng(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# reshaping


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding (Kolda convention), shape ``(I_mode, prod rest)``."""
    t = np.asarray(t)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-way tensor")
    return np.reshape(
        np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F"
    )


def fold(m: np.ndarray, mode: int, shape: Sequence[int]) -> np.ndarray:
    """Exact inverse of :func:`unfold`."""
    shape = tuple(int(s) for s in shape)
    if not 0 <= mode < len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    m = np.asarray(m)
    rest = shape[:mode] + shape[mode + 1 :]
    if m.shape != (shape[mode], int(np.prod(rest, dtype=np.int64))):
        raise ValueError(f"matrix shape {m.shape} inconsistent with {shape}, mode {mode}")
    t = np.reshape(m, (shape[mode],) + rest, order="F")
    return np.moveaxis(t, 0, mode)


def vec(m: np.ndarray) -> np.ndarray:
    """Stack the columns of a matrix into one long vector."""
    return np.reshape(np.asarray(m), -1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"vector of length {v.size} cannot fill a {rows}x{cols} matrix")
    return np.reshape(v, (rows, cols), order="F")


# ---------------------------------------------------------------------------
# metric


def inner(t: np.ndarray, u: np.ndarray):
    """Euclidean scalar product ``<T,U> = sum T_i conj(U_i)``."""
    t = np.asarray(t)
    u = np.asarray(u)
    if t.shape != u.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {u.shape}")
    # vdot conjugates its first argument
    return np.vdot(u.reshape(-1), t.reshape(-1))


def norm(t: np.ndarray) -> float:
    """Frobenius norm induced by :func:`inner`."""
    return float(np.linalg.norm(np.asarray(t).reshape(-1)))


def angle_between(t: np.ndarray, u: np.ndarray) -> float:
    """Angle ``arccos(|<T,U>| / (||T|| ||U||))`` in ``[0, pi/2]``."""
    nt = norm(t)
    nu = norm(u)
    if nt == 0.0 or nu == 0.0:
        raise ValueError("angle is undefined for a zero tensor")
    c = abs(inner(t, u)) / (nt * nu)
    return math.acos(min(1.0, max(0.0, c)))


# ---------------------------------------------------------------------------
# products


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; column r is ``kron(a[:, r], b[:, r])``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("khatri_rao needs two matrices with equal column counts")
    return _scipy_khatri_rao(a, b)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def outer(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Rank-1 outer product of N vectors."""
    vectors = [np.asarray(v).reshape(-1) for v in vectors]
    if not vectors:
        raise ValueError("need at least one vector")
    out = vectors[0]
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return out


def kr_chain(factors: Sequence[np.ndarray], skip: int | None = None) -> np.ndarray:
    """Khatri-Rao chain ``A(N-1) (.) ... (.) A(0)`` excluding ``skip``.

    This is the ordering under which ``unfold(cp_reconstruct(f), n) ==
    f[n] @ kr_chain(f, skip=n).T`` holds exactly.
    """
    idx = [i for i in range(len(factors)) if i != skip]
    if not idx:
        raise ValueError("chain over an empty factor list")
    mats = [np.asarray(factors[i]) for i in reversed(idx)]
    out = mats[0]
    for m in mats[1:]:
        out = _scipy_khatri_rao(out, m)
    return out


def cp_reconstruct(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Dense tensor of the rank-R model given by its factor matrices."""
    factors = [np.asarray(f) for f in factors]
    shape = tuple(f.shape[0] for f in factors)
    ranks = {f.shape[1] for f in factors}
    if len(ranks) != 1:
        raise ValueError(f"factor matrices disagree on rank: {sorted(ranks)}")
    if len(factors) == 1:
        return factors[0].sum(axis=1)
    m = factors[0] @ kr_chain(factors, skip=0).T
    return fold(m, 0, shape)


# ---------------------------------------------------------------------------
# random generation and noise


def random_tensor(shape, field: str = "real", distribution: str = "uniform", seed=0) -> np.ndarray:
    """Seed-deterministic random tensor.

    ``uniform`` draws every real component i.i.d. in [-1, 1] (complex
    tensors get independent real and imaginary parts); ``normal`` draws
    standard normals.
    """
    rng = as_rng(seed)
    shape = tuple(int(s) for s in shape)
    if any(s <= 0 for s in shape):
        raise ValueError(f"invalid shape {shape}")

    def draw():
        if distribution == "uniform":
            return rng.uniform(-1.0, 1.0, size=shape)
        if distribution == "normal":
            return rng.standard_normal(size=shape)
        raise ValueError(f"unknown distribution {distribution!r}")

    if field == "real":
        return draw()
    if field == "complex":
        return draw() + 1j * draw()
    raise ValueError(f"unknown field {field!r}")


def random_cp(shape, rank: int, field: str = "real", distribution: str = "uniform", seed=0):
    """Random factor matrices with i.i.d. entries and their reconstruction.

    Returns ``(factors, tensor)`` where ``factors[n]`` is ``I_n x rank``.
    """
    rng = as_rng(seed)
    if rank < 1:
        raise ValueError("rank must be >= 1")
    factors = [
        random_tensor((int(s), rank), field=field, distribution=distribution, seed=rng)
        for s in shape
    ]
    return factors, cp_reconstruct(factors)


def add_noise(t: np.ndarray, snr_db: float, seed=0) -> np.ndarray:
    """Additive Gaussian noise scaled to hit the target SNR exactly.

    The drawn noise N is rescaled so that ``10 log10(||T||^2 / ||N||^2)``
    equals ``snr_db`` (total-Frobenius convention).  ``snr_db = inf``
    returns the tensor unchanged.
    """
    t = np.asarray(t)
    if snr_db is None or math.isinf(snr_db):
        return t.copy()
    nt = norm(t)
    if nt == 0.0:
        raise ValueError("cannot set an SNR against a zero tensor")
    rng = as_rng(seed)
    noise = rng.standard_normal(t.shape)
    if np.iscomplexobj(t):
        noise = noise + 1j * rng.standard_normal(t.shape)
    noise *= nt * 10.0 ** (-snr_db / 20.0) / np.linalg.norm(noise.reshape(-1))
    return t + noise


# ---------------------------------------------------------------------------
# text format
#
# header: `shape: I1 I2 ... IN field: real|complex`
# then one scalar per line in flat (first-index-fastest) order,
# complex written as `re im`.


def save_tensor(t: np.ndarray, path) -> None:
    t = np.asarray(t)
    field = "complex" if np.iscomplexobj(t) else "real"
    flat = t.reshape(-1, order="F")
    with open(path, "w") as fh:
        fh.write("shape: " + " ".join(str(s) for s in t.shape) + f" field: {field}\n")
        for z in flat:
            if field == "complex":
                fh.write(f"{float(z.real)!r} {float(z.imag)!r}\n")
            else:
                fh.write(f"{float(z)!r}\n")


def load_tensor(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) < 4 or header[0] != "shape:" or "field:" not in header:
            raise ValueError(f"malformed tensor header: {' '.join(header)!r}")
        fi = header.index("field:")
        shape = tuple(int(s) for s in header[1:fi])
        field = header[fi + 1]
        n = int(np.prod(shape, dtype=np.int64))
        if field == "complex":
            flat = np.empty(n, dtype=_COMPLEX)
        elif field == "real":
            flat = np.empty(n, dtype=_REAL)
        else:
            raise ValueError(f"unknown field {field!r}")
        for i in range(n):
            parts = fh.readline().split()
            if field == "complex":
                if len(parts) != 2:
                    raise ValueError(f"line {i + 2}: expected `re im`")
                flat[i] = float(parts[0]) + 1j * float(parts[1])
            else:
                if len(parts) != 1:
                    raise ValueError(f"line {i + 2}: expected one scalar")
                flat[i] = float(parts[0])
    return flat.reshape(shape, order="F")
