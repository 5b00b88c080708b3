"""Density evolution for (dv, dc, m) and coupled (dv, dc, m, L, w) ensembles.

All updates run in CCDF coordinates on float arrays; leading axes are
batch/position axes, the last axis has length m.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .combinatorics import c_tensor, v_tensor
from .message_algebra import boxdot, boxtimes, channel_vector, op_power, pmf, ccdf

RESIDUAL_TOL = 1e-10
SUCCESS_TOL = 1e-7
MAX_ITER = 50_000


@dataclass(frozen=True)
class EnsembleParams:
    dv: int
    dc: int
    m: int

    def __post_init__(self):
        if self.dv < 2 or self.dc < 2:
            raise ValueError(f"degrees must be >= 2, got dv={self.dv}, dc={self.dc}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")

    @property
    def rate(self) -> float:
        return 1 - self.dv / self.dc


@dataclass(frozen=True)
class CoupledParams:
    base: EnsembleParams
    L: int
    w: int

    def __post_init__(self):
        if self.L < 1 or self.w < 1:
            raise ValueError(f"need L >= 1 and w >= 1, got L={self.L}, w={self.w}")

    @property
    def positions(self) -> int:
        return self.L + self.w - 1


@dataclass
class CoupledState:
    X: np.ndarray
    eps_profile: np.ndarray


@dataclass
class DEReport:
    fixed_point: np.ndarray
    iterations: int
    converged: bool
    residual: float
    success: bool = field(default=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fixed_point"] = np.asarray(self.fixed_point).tolist()
        return d


def _clamp_pmf(x):
    return np.maximum(pmf(x), 0.0)


def f_update(y, eps, p: EnsembleParams):
    """Variable-node update p(eps) ⊡ (⊡^{dv-1} y) in CCDF form."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != p.m:
        raise ValueError(f"expected CCDF length {p.m}, got {y.shape[-1]}")
    yo = _clamp_pmf(y)
    inner = op_power(boxdot, yo, p.dv - 1)
    eps = np.asarray(eps, dtype=float)
    if eps.ndim == 0:
        ch = channel_vector(p.m, float(eps))
    else:
        ch = np.stack([channel_vector(p.m, float(e)) for e in eps.ravel()]).reshape(eps.shape + (p.m + 1,))
    return ccdf(boxdot(ch, inner))


def g_update(x, p: EnsembleParams):
    """Check-node update ⊠^{dc-1} x in CCDF form."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.m:
        raise ValueError(f"expected CCDF length {p.m}, got {x.shape[-1]}")
    return ccdf(op_power(boxtimes, _clamp_pmf(x), p.dc - 1))


def de_fixed_point(p: EnsembleParams, eps: float, tol: float = RESIDUAL_TOL,
                   max_iter: int = MAX_ITER, success_tol: float = SUCCESS_TOL,
                   x0=None, backend: str = "compiled") -> DEReport:
    """Iterate x <- f(g(x); eps) from the all-ones vector (or x0)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.ones(p.m) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (p.m,):
        raise ValueError(f"x0 must have shape {(p.m,)}, got {x.shape}")
    ch = channel_vector(p.m, float(eps))
    if backend == "compiled":
        # the uncoupled recursion is the L = w = 1 coupled one
        from ._kernels import coupled_run, sparse_form
        X = x[None, :].copy()
        it, residual = coupled_run(X, sparse_form(v_tensor(p.m)), sparse_form(c_tensor(p.m)), ch,
                                   p.dv, p.dc, 1, 1, float(tol), float(success_tol), int(max_iter))
        x = X[0]
    elif backend == "numpy":
        residual = np.inf
        it = 0
        while it < max_iter:
            y = ccdf(op_power(boxtimes, _clamp_pmf(x), p.dc - 1))
            nxt = ccdf(boxdot(ch, op_power(boxdot, _clamp_pmf(y), p.dv - 1)))
            it += 1
            residual = float(np.max(np.abs(nxt - x)))
            x = nxt
            if residual < tol or np.max(x) < success_tol:
                break
    else:
        raise ValueError(f"unknown backend {backend!r}")
    converged = residual < tol or float(np.max(x)) < success_tol
    return DEReport(x, int(it), converged, float(residual), bool(np.max(x) < success_tol))


def _bisect(succeeds, lo: float, hi: float, tol: float) -> float:
    # invariant: succeeds(lo) is True (or lo is the trivial 0), succeeds(hi) is False
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if succeeds(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bp_threshold_bracket(p: EnsembleParams, bisect_tol: float = 1e-5, **de_kwargs) -> tuple[float, float]:
    """Final (lo, hi) bracket: DE succeeds at lo and fails at hi."""
    if bisect_tol <= 0:
        raise ValueError("bisect_tol must be positive")
    lo, hi = 0.0, 1.0
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if de_fixed_point(p, mid, **de_kwargs).success:
            lo = mid
        else:
            hi = mid
    return lo, hi


def bp_threshold(p: EnsembleParams, bisect_tol: float = 1e-5, **de_kwargs) -> float:
    lo, hi = bp_threshold_bracket(p, bisect_tol, **de_kwargs)
    return 0.5 * (lo + hi)


def coupling_matrix(L: int, w: int) -> np.ndarray:
    """L x (L+w-1) band matrix with 1/w on columns i..i+w-1 of row i."""
    if L < 1 or w < 1:
        raise ValueError("need L >= 1 and w >= 1")
    A = np.zeros((L, L + w - 1))
    for i in range(L):
        A[i, i:i + w] = 1.0 / w
    return A


def eps_profile(cp: CoupledParams, eps: float) -> np.ndarray:
    prof = np.zeros(cp.positions)
    prof[:cp.L] = eps
    return prof


def coupled_step(X: np.ndarray, cp: CoupledParams, ch: np.ndarray) -> np.ndarray:
    """One synchronous sweep X <- A^T F(A G(X); eps)."""
    p = cp.base
    G = ccdf(op_power(boxtimes, _clamp_pmf(X), p.dc - 1))
    # fixed summation order keeps results independent of any batching
    Y = np.add.reduce([G[k:k + cp.L] for k in range(cp.w)]) / cp.w
    F = ccdf(boxdot(ch, op_power(boxdot, _clamp_pmf(Y), p.dv - 1)))
    Fp = np.concatenate([np.zeros((cp.w - 1, p.m)), F, np.zeros((cp.w - 1, p.m))])
    return np.add.reduce([Fp[cp.w - 1 - k: cp.w - 1 - k + cp.positions] for k in range(cp.w)]) / cp.w


def coupled_de(cp: CoupledParams, eps: float, tol: float = RESIDUAL_TOL, max_iter: int = MAX_ITER,
               success_tol: float = SUCCESS_TOL, X0=None, backend: str = "compiled") -> DEReport:
    """Coupled DE from X = all-ones until the residual drops below tol.

    ``backend="compiled"`` runs the numba loop; ``"numpy"`` iterates
    :func:`coupled_step`.  Both follow the same update order.
    """
    p = cp.base
    X = np.ones((cp.positions, p.m)) if X0 is None else np.array(X0, dtype=float)
    if X.shape != (cp.positions, p.m):
        raise ValueError(f"X0 must have shape {(cp.positions, p.m)}, got {X.shape}")
    ch = channel_vector(p.m, float(eps))
    if backend == "compiled":
        from ._kernels import coupled_run, sparse_form
        it, residual = coupled_run(X, sparse_form(v_tensor(p.m)), sparse_form(c_tensor(p.m)), ch, p.dv, p.dc, cp.L, cp.w,
                                   float(tol), float(success_tol), int(max_iter))
    elif backend == "numpy":
        residual = np.inf
        it = 0
        while it < max_iter:
            nxt = coupled_step(X, cp, ch)
            it += 1
            residual = float(np.max(np.abs(nxt - X)))
            X = nxt
            if residual < tol or np.max(X) < success_tol:
                break
    else:
        raise ValueError(f"unknown backend {backend!r}")
    top = float(np.max(X))
    return DEReport(X, int(it), residual < tol or top < success_tol, float(residual), top < success_tol)


def coupled_bp_threshold(cp: CoupledParams, bisect_tol: float = 1e-4, lo: float = 0.0, hi: float = 1.0,
                         **de_kwargs) -> float:
    """Bisection on the coupled-DE success predicate.

    ``lo``/``hi`` may narrow the bracket when bounds are known (e.g. the
    uncoupled BP threshold is a valid lower bound).
    """
    if bisect_tol <= 0:
        raise ValueError("bisect_tol must be positive")
    return _bisect(lambda e: coupled_de(cp, e, **de_kwargs).success, lo, hi, bisect_tol)
