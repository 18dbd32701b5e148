"""Ground states of real symmetric Hamiltonians and deterministic sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class NotSymmetricError(ValueError):
    pass


class ParityError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (best residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolverOptions:
    dense_max_dim: int = 512
    method: str = "auto"  # auto | dense | lanczos
    tol: float = 1e-10  # residual relative to the matrix norm
    krylov_dim: int = 60
    max_restarts: int = 500
    degeneracy_rtol: float = 1e-8
    seed: int = 0


@dataclass
class GroundStateResult:
    energy: float
    amplitudes: np.ndarray
    gap: float
    degenerate: bool
    iterations: int
    residual: float = 0.0
    method: str = "dense"
    metadata: dict = field(default_factory=dict)


def _as_matrix(H):
    if sp.issparse(H):
        return H.tocsr()
    return np.asarray(H, dtype=float)


def _norm_estimate(H) -> float:
    """Max absolute row sum, an upper bound on the 2-norm of a symmetric matrix."""
    if sp.issparse(H):
        return float(abs(H).sum(axis=1).max()) if H.nnz else 0.0
    return float(np.abs(H).sum(axis=1).max()) if H.size else 0.0


def check_symmetric(H, rtol: float = 1e-12) -> float:
    diff = H - H.T
    dev = (float(abs(diff).max()) if diff.nnz else 0.0) if sp.issparse(diff) \
        else float(np.abs(diff).max(initial=0.0))
    scale = max(1.0, float(abs(H).max()) if (not sp.issparse(H) or H.nnz) else 0.0)
    if dev > rtol * scale:
        raise NotSymmetricError(f"matrix is not symmetric (max |H - H^T| = {dev:.3e})")
    return dev


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Flip so the largest-magnitude amplitude (first on ties) is positive."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _dense_lowest(H, nev):
    A = H.toarray() if sp.issparse(H) else H
    w, V = np.linalg.eigh(A)
    return w[:nev], V[:, :nev], 1, 0.0


def _orthonormalize(X, V=None):
    """Orthonormalize columns of X against V and among themselves (two passes)."""
    for _ in range(2):
        if V is not None and V.shape[1]:
            X = X - V @ (V.T @ X)
    Q, R = np.linalg.qr(X)
    keep = np.abs(np.diag(R)) > 1e-10 * max(1.0, np.abs(R).max(initial=0.0))
    Q = Q[:, keep]
    if V is not None and V.shape[1] and Q.shape[1]:
        Q = Q - V @ (V.T @ Q)
        Q, _ = np.linalg.qr(Q)
    return Q


def lanczos_lowest(H, nev: int = 2, opts: SolverOptions = SolverOptions()):
    """Lowest ``nev`` eigenpairs by block thick-restart Lanczos.

    Every new block is reorthogonalized against the whole retained basis.
    Returns (values, vectors, matvec_count, max_residual).
    """
    n = H.shape[0]
    nev = min(nev, n)
    block = nev
    rng = np.random.default_rng(opts.seed)
    m_max = max(min(opts.krylov_dim, n), nev + 2 * block)
    m_max = min(m_max, n)
    keep = min(max(2 * nev, nev + 4), m_max - block) if m_max - block > nev else nev
    scale = max(_norm_estimate(H), 1e-300)
    target = opts.tol * scale

    V = _orthonormalize(rng.standard_normal((n, block)))
    W = np.asarray(H @ V)
    matvecs = V.shape[1]
    best = np.inf
    for restart in range(opts.max_restarts + 1):
        # expand until the basis is full or invariant
        while V.shape[1] < m_max:
            last = W[:, -block:] if W.shape[1] >= block else W
            F = _orthonormalize(last.copy(), V)
            if F.shape[1] == 0:
                F = _orthonormalize(rng.standard_normal((n, block)), V)
                if F.shape[1] == 0:
                    break
            F = F[:, : m_max - V.shape[1]]
            V = np.hstack([V, F])
            W = np.hstack([W, np.asarray(H @ F)])
            matvecs += F.shape[1]
        T = V.T @ W
        T = 0.5 * (T + T.T)
        theta, Y = np.linalg.eigh(T)
        X = V @ Y[:, :nev]
        R = W @ Y[:, :nev] - X * theta[:nev]
        res = np.linalg.norm(R, axis=0)
        best = min(best, float(res.max()))
        if res.max() <= target or V.shape[1] >= n:
            return theta[:nev], X, matvecs, float(res.max())
        # thick restart: keep the lowest Ritz vectors, continue from the last block's residual
        tail = _orthonormalize(W[:, -block:] - V @ (V.T @ W[:, -block:]), V)
        V = V @ Y[:, :keep]
        W = W @ Y[:, :keep]
        if tail.shape[1]:
            tail = _orthonormalize(tail, V)
            V = np.hstack([V, tail])
            W = np.hstack([W, np.asarray(H @ tail)])
            matvecs += tail.shape[1]
    raise ConvergenceError(f"Lanczos did not converge in {opts.max_restarts} restarts", best)


def lowest_eigenpairs(H, nev: int = 2, opts: SolverOptions = SolverOptions()):
    H = _as_matrix(H)
    n = H.shape[0]
    method = opts.method
    if method == "auto":
        method = "dense" if n <= opts.dense_max_dim else "lanczos"
    if method == "dense":
        w, V, it, res = _dense_lowest(H, nev)
    elif method == "lanczos":
        w, V, it, res = lanczos_lowest(H, nev, opts)
    else:
        raise ValueError(f"unknown method {opts.method!r}")
    return w, V, it, res, method


def _degenerate(w, opts) -> tuple[float, bool]:
    if len(w) < 2:
        return float("inf"), False
    gap = float(w[1] - w[0])
    return gap, gap < opts.degeneracy_rtol * max(1.0, abs(float(w[0])))


def ground_state(H, opts: SolverOptions = SolverOptions(),
                 bias: Optional[np.ndarray] = None) -> GroundStateResult:
    """Lowest eigenpair of a real symmetric matrix.

    ``bias`` is an optional diagonal added before solving (tie-breaking); it is
    recorded in the result metadata.
    """
    H = _as_matrix(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    check_symmetric(H)
    meta = {}
    if bias is not None:
        bias = np.asarray(bias, dtype=float)
        H = (H + sp.diags(bias)) if sp.issparse(H) else H + np.diag(bias)
        meta["bias_max"] = float(np.abs(bias).max(initial=0.0))
    w, V, it, res, method = lowest_eigenpairs(H, 2, opts)
    gap, degenerate = _degenerate(w, opts)
    v = fix_sign(V[:, 0] / np.linalg.norm(V[:, 0]))
    return GroundStateResult(float(w[0]), v, gap, degenerate, it, res, method, meta)


def _apply_parity(v, parity):
    out = np.empty_like(v)
    out[parity] = v
    return out


def ground_state_symmetrized(H, parity: Sequence[int], opts: SolverOptions = SolverOptions(),
                             bias: Optional[np.ndarray] = None) -> GroundStateResult:
    """Ground state with quasi-degenerate pairs resolved into the even combination.

    ``parity`` is an index involution (e.g. k -> N - k) that must commute with H.
    """
    H = _as_matrix(H)
    parity = np.asarray(parity, dtype=np.int64)
    n = H.shape[0]
    if parity.shape != (n,) or not np.array_equal(np.sort(parity), np.arange(n)) \
            or not np.array_equal(parity[parity], np.arange(n)):
        raise ParityError("parity must be an involutive permutation of the basis indices")
    if sp.issparse(H):
        diff = H[parity][:, parity] - H
        mismatch = float(abs(diff).max()) if diff.nnz else 0.0
        scale = float(abs(H).max()) if H.nnz else 0.0
    else:
        mismatch = float(np.abs(H[np.ix_(parity, parity)] - H).max(initial=0.0))
        scale = float(np.abs(H).max(initial=0.0))
    if mismatch > 1e-10 * max(1.0, scale):
        raise ParityError(f"parity does not commute with H (mismatch {mismatch:.3e})")
    if bias is not None:
        return ground_state(H, opts, bias=bias)
    check_symmetric(H)
    w, V, it, res, method = lowest_eigenpairs(H, 2, opts)
    gap, degenerate = _degenerate(w, opts)
    meta = {"symmetrized": False}
    v = V[:, 0]
    if degenerate:
        P = np.stack([_apply_parity(V[:, i], parity) for i in range(2)], axis=1)
        Q = V[:, :2].T @ P
        q, c = np.linalg.eigh(0.5 * (Q + Q.T))
        v = V[:, :2] @ c[:, -1]
        meta.update(symmetrized=True, parity_eigenvalue=float(q[-1]))
    v = fix_sign(v / np.linalg.norm(v))
    return GroundStateResult(float(w[0]), v, gap, degenerate, it, res, method, meta)


def tie_break_bias(dim: int, eps: float) -> np.ndarray:
    """Diagonal eps * k pinning the k = 0 end of a degenerate ladder."""
    return eps * np.arange(dim, dtype=float)


# ---------------------------------------------------------------------------


def sweep(grid: Sequence[Any], builder: Callable[[Any], Any],
          observables: Mapping[str, Callable[[GroundStateResult, Any], Any]] | None = None,
          solver: Callable[..., GroundStateResult] = ground_state,
          opts: SolverOptions = SolverOptions(), jobs: int = 1) -> list[dict]:
    """Solve every grid point independently; rows come back in grid order.

    ``builder(point)`` returns the matrix handed to ``solver(H, opts)``. Each
    observable is called as ``fn(result, point)``; dict return values are
    merged into the row. A failing point yields a row with ``error`` set.
    """
    if len(grid) == 0:
        raise ValueError("sweep grid is empty")
    observables = dict(observables or {})

    def run(point):
        row = {"point": point, "error": ""}
        try:
            res = solver(builder(point), opts)
            row.update(energy=res.energy, gap=res.gap, degenerate=res.degenerate,
                       iterations=res.iterations, result=res)
            for name, fn in observables.items():
                val = fn(res, point)
                if isinstance(val, Mapping):
                    row.update(val)
                else:
                    row[name] = val
        except Exception as exc:  # recorded per row, sweep continues
            log.warning("sweep point %r failed: %s", point, exc)
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    if jobs <= 1:
        return [run(p) for p in grid]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, grid))
