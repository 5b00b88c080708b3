"""Compiled inner loops for coupled density evolution."""
import numpy as np
from numba import njit


def sparse_form(T: np.ndarray):
    """Flatten a dense (n, n, n) tensor into (I, J, K, coeff) arrays over its nonzeros."""
    i, j, k = np.nonzero(T)
    return (i.astype(np.int64), j.astype(np.int64), k.astype(np.int64),
            np.ascontiguousarray(T[i, j, k], dtype=np.float64))


@njit(cache=True, inline="always")
def _bilinear(a, b, T, out):
    I, J, K, W = T
    for k in range(out.shape[0]):
        out[k] = 0.0
    for t in range(W.shape[0]):
        out[K[t]] += W[t] * a[I[t]] * b[J[t]]


@njit(cache=True, inline="always")
def _power(a, T, count, out, tmp):
    # left fold: ((a op a) op a) ...
    n = a.shape[0]
    for k in range(n):
        out[k] = a[k]
    for _ in range(count - 1):
        _bilinear(out, a, T, tmp)
        for k in range(n):
            out[k] = tmp[k]


@njit(cache=True, inline="always")
def _to_pmf(x, out):
    m = x.shape[0]
    out[0] = max(1.0 - x[0], 0.0)
    for i in range(1, m):
        out[i] = max(x[i - 1] - x[i], 0.0)
    out[m] = max(x[m - 1], 0.0)


@njit(cache=True, inline="always")
def _to_ccdf(p, out):
    m = out.shape[0]
    acc = 0.0
    for i in range(m, 0, -1):
        acc += p[i]
        out[i - 1] = acc


@njit(cache=True)
def coupled_sweep(X, V, C, ch, dv, dc, L, w, out):
    P, m = X.shape
    n = m + 1
    G = np.empty((P, m))
    po = np.empty(n)
    acc = np.empty(n)
    tmp = np.empty(n)
    for i in range(P):
        _to_pmf(X[i], po)
        _power(po, C, dc - 1, acc, tmp)
        _to_ccdf(acc, G[i])
    F = np.empty((L, m))
    y = np.empty(m)
    for j in range(L):
        for c in range(m):
            s = 0.0
            for k in range(w):
                s += G[j + k, c]
            y[c] = s / w
        _to_pmf(y, po)
        _power(po, V, dv - 1, acc, tmp)
        _bilinear(ch, acc, V, tmp)
        _to_ccdf(tmp, F[j])
    for i in range(P):
        for c in range(m):
            s = 0.0
            for k in range(w):
                j = i - k
                if 0 <= j < L:
                    s += F[j, c]
            out[i, c] = s / w


@njit(cache=True)
def coupled_run(X, V, C, ch, dv, dc, L, w, tol, success_tol, max_iter):
    nxt = np.empty_like(X)
    residual = np.inf
    it = 0
    while it < max_iter:
        coupled_sweep(X, V, C, ch, dv, dc, L, w, nxt)
        it += 1
        residual = 0.0
        top = 0.0
        for i in range(X.shape[0]):
            for c in range(X.shape[1]):
                d = abs(nxt[i, c] - X[i, c])
                if d > residual:
                    residual = d
                if nxt[i, c] > top:
                    top = nxt[i, c]
                X[i, c] = nxt[i, c]
        if residual < tol or top < success_tol:
            break
    return it, residual
