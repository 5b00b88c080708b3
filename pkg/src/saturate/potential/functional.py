"""Numerical evaluation of the potential U, its gradient, energy gap and thresholds.

All functions take a :class:`PotentialSolution`; the DE maps f, g it carries
are compiled to numpy once and cached on the solution object.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..de_engine import (
    MAX_ITER,
    SUCCESS_TOL,
    CoupledParams,
    EnsembleParams,
    bp_threshold_bracket,
    coupling_matrix,
    de_fixed_point,
)
from ..polynomial import CompiledPolys, differentiate
from .system import PotentialSolution

GAP_DE_TOL = 1e-12


class _Evaluator:
    def __init__(self, sol: PotentialSolution):
        self.m = sol.m
        self.D = sol.D_float()
        self.f = CompiledPolys(sol.f)
        self.g = CompiledPolys(sol.g)
        self.F = CompiledPolys([sol.F])
        self.G = CompiledPolys([sol.G])
        self._g_polys = sol.g
        self._gdd = None

    def g_hessian(self, x) -> np.ndarray:
        """(..., m, m, m) array H[i, k, l] = d^2 g_i / dx_k dx_l."""
        if self._gdd is None:
            self._gdd = [CompiledPolys([differentiate(q, k) for q in self._g_polys])
                         for k in range(1, self.m + 1)]
        return np.stack([c.jacobian(x) for c in self._gdd], axis=-2)


def evaluator(sol: PotentialSolution) -> _Evaluator:
    ev = sol.__dict__.get("_evaluator")
    if ev is None:
        ev = _Evaluator(sol)
        sol.__dict__["_evaluator"] = ev
    return ev


# -- single system -----------------------------------------------------------------

def potential_U(sol: PotentialSolution, x, eps) -> np.ndarray | float:
    """U(x; eps) = g(x) D x^T - G(x) - F(g(x); eps); batched over leading axes of x."""
    ev = evaluator(sol)
    x = np.asarray(x, dtype=float)
    gx = ev.g.values(x)
    out = np.einsum("...i,ij,...j->...", gx, ev.D, x) - ev.G.values(x)[..., 0] - ev.F.values(gx, eps)[..., 0]
    return float(out) if out.ndim == 0 else out


def potential_grad(sol: PotentialSolution, x, eps) -> np.ndarray:
    """U'(x) = (x D^T - f(g(x)) D) g'(x); equals (x - f(g(x))) D g'(x) for symmetric D."""
    ev = evaluator(sol)
    x = np.asarray(x, dtype=float)
    gx = ev.g.values(x)
    fx = ev.f.values(gx, eps)
    row = x @ ev.D.T - fx @ ev.D
    return np.einsum("...i,...ik->...k", row, ev.g.jacobian(x))


def de_map(sol: PotentialSolution, x, eps) -> np.ndarray:
    """f(g(x); eps) from the polynomial forms."""
    ev = evaluator(sol)
    return ev.f.values(ev.g.values(np.asarray(x, dtype=float)), eps)


# -- coupled system ----------------------------------------------------------------

def _check_state(cp: CoupledParams, X, m: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (cp.positions, m):
        raise ValueError(f"X must have shape {(cp.positions, m)}, got {X.shape}")
    return X


def coupled_potential_U(sol: PotentialSolution, cp: CoupledParams, X, eps) -> float:
    """Tr(G(X) D X^T) - sum_i G(x_i) - sum_j F(y_j; eps) with Y = A G(X)."""
    ev = evaluator(sol)
    X = _check_state(cp, X, sol.m)
    A = coupling_matrix(cp.L, cp.w)
    GX = ev.g.values(X)
    Y = A @ GX
    return float(np.einsum("ij,jk,ik->", GX, ev.D, X) - ev.G.values(X).sum() - ev.F.values(Y, eps).sum())


def coupled_potential_grad(sol: PotentialSolution, cp: CoupledParams, X, eps) -> np.ndarray:
    """Row i: (x_i D^T - [A^T f(A G(X))]_i D) G_d(x_i)."""
    ev = evaluator(sol)
    X = _check_state(cp, X, sol.m)
    A = coupling_matrix(cp.L, cp.w)
    Y = A @ ev.g.values(X)
    back = A.T @ ev.f.values(Y, eps)
    rows = X @ ev.D.T - back @ ev.D
    return np.einsum("pi,pik->pk", rows, ev.g.jacobian(X))


# -- energy gap ----------------------------------------------------------------------

@dataclass(frozen=True)
class GapSearchConfig:
    grid_points: int = 9          # per axis, on [0, 1]
    max_seeds: int = 400          # cap on monotone grid seeds (subsampled evenly)
    tol: float = GAP_DE_TOL
    max_iter: int = MAX_ITER
    success_tol: float = SUCCESS_TOL


def monotone_grid(m: int, n: int) -> np.ndarray:
    """Points 1 >= x_1 >= ... >= x_m >= 0 on an n-point grid, excluding 0."""
    levels = np.linspace(0.0, 1.0, n)
    pts = [levels[list(c)][::-1] for c in itertools.combinations_with_replacement(range(n), m)]
    pts = [p for p in pts if p[0] > 0]
    return np.array(pts)


def _seeds(m: int, cfg: GapSearchConfig) -> np.ndarray:
    grid = monotone_grid(m, cfg.grid_points)
    if len(grid) > cfg.max_seeds:
        idx = np.linspace(0, len(grid) - 1, cfg.max_seeds).round().astype(int)
        grid = grid[np.unique(idx)]
    ones = np.ones((1, m))
    return np.concatenate([ones, grid])


def _poly_fixed_point(sol, eps, x0, cfg: GapSearchConfig):
    x = np.array(x0, dtype=float)
    for _ in range(cfg.max_iter):
        nxt = de_map(sol, x, eps)
        done = np.max(np.abs(nxt - x)) < cfg.tol
        x = nxt
        if done or np.max(x) < cfg.success_tol:
            break
    return x


def nontrivial_fixed_points(sol, eps, p: EnsembleParams | None = None,
                            cfg: GapSearchConfig = GapSearchConfig()) -> np.ndarray:
    """DE limits from the seed grid that do not decode (i.e. lie outside the basin of 0)."""
    out = []
    for x0 in _seeds(sol.m, cfg):
        if p is not None:
            rep = de_fixed_point(p, eps, tol=cfg.tol, max_iter=cfg.max_iter,
                                 success_tol=cfg.success_tol, x0=x0)
            x = rep.fixed_point
        else:
            x = _poly_fixed_point(sol, eps, x0, cfg)
        if np.max(x) >= cfg.success_tol:
            out.append(x)
    return np.array(out).reshape(-1, sol.m)


def energy_gap(sol: PotentialSolution, eps: float, p: EnsembleParams | None = None,
               cfg: GapSearchConfig = GapSearchConfig()) -> float:
    """min of U over nontrivial DE fixed points reached from the seed grid; +inf if none.

    ``p`` selects the compiled nonbinary DE for the iteration; without it the
    polynomial maps carried by ``sol`` are iterated.
    """
    pts = nontrivial_fixed_points(sol, eps, p, cfg)
    if len(pts) == 0:
        return math.inf
    return float(np.min(potential_U(sol, pts, eps)))


def potential_threshold(sol: PotentialSolution, p: EnsembleParams | None = None, tol: float = 1e-4,
                        eps_bp: float | None = None, cfg: GapSearchConfig = GapSearchConfig()) -> float:
    """sup{eps : energy gap > 0} by bisection over (eps_BP, 1]."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if eps_bp is None:
        if p is None:
            raise ValueError("need eps_bp for a generic system")
        eps_bp = bp_threshold_bracket(p, bisect_tol=min(tol, 1e-5))[1]
    lo, hi = eps_bp, 1.0
    if energy_gap(sol, hi, p, cfg) > 0:
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if energy_gap(sol, mid, p, cfg) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- w bound ---------------------------------------------------------------------------

@dataclass
class WBound:
    alpha: float
    beta: float
    gamma: float
    K: float
    delta_E: float
    w_min: float

    def to_dict(self) -> dict:
        return asdict(self)


def _inf_norm(M: np.ndarray) -> np.ndarray:
    return np.abs(M).sum(axis=-1).max(axis=-1)


def box_grid(m: int, n: int) -> np.ndarray:
    levels = np.linspace(0.0, 1.0, n)
    return np.array(list(itertools.product(levels, repeat=m)))


def w_bound(sol: PotentialSolution, eps: float, p: EnsembleParams | None = None, grid_points: int = 11,
            delta_E: float | None = None, cfg: GapSearchConfig = GapSearchConfig()) -> WBound:
    """K = ||D||_inf (alpha + beta + alpha^2 gamma) and w_min = m K / (2 dE).

    alpha, beta, gamma are suprema over an [0, 1]^m grid of ||G_d||_inf,
    ||G_dd||_inf (as an m x m^2 matrix) and ||F_d||_inf.
    """
    ev = evaluator(sol)
    m = sol.m
    pts = box_grid(m, grid_points)
    alpha = float(_inf_norm(ev.g.jacobian(pts)).max())
    beta = float(_inf_norm(ev.g_hessian(pts).reshape(len(pts), m, m * m)).max())
    gamma = float(_inf_norm(ev.f.jacobian(pts, eps)).max())
    K = float(np.abs(ev.D).sum(axis=1).max()) * (alpha + beta + alpha**2 * gamma)
    if delta_E is None:
        delta_E = energy_gap(sol, eps, p, cfg)
    w_min = m * K / (2 * delta_E) if delta_E > 0 else math.inf
    return WBound(alpha, beta, gamma, K, float(delta_E), float(w_min))


@dataclass
class ThresholdReport:
    eps_bp: float
    eps_star: float
    energy_gap_curve: list = field(default_factory=list)   # [(eps, dE), ...]
    coupled: list = field(default_factory=list)             # [{"L":..,"w":..,"eps_bp":..}, ...]
    w_bound: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)
