"""Numerical search for copies on the grid backend.

Infinitesimal copies are the (near) null space of ``delta -> D_A delta``;
finite copies are zeros of ``R(K) = DK + K^K``, found by Levenberg-Marquardt
with the exact Jacobian ``J(K) delta = D_{A+K} delta``.

Vectors use the flattening ``index = (site * n_components + component) * N + a``
(site-major, then form index, then algebra index), sites in C order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, spsolve, svds

from .copies import classify_line, default_tolerance
from .forms import BackendError, FormField, l2_norm, multi_indices, wedge
from .gauge import check_connection, cov_d_adjoint_1form, curvature

__all__ = [
    "ConvergenceError",
    "LinearizedOperator",
    "SolverOptions",
    "StagnationError",
    "assemble_linearized",
    "certified_directions",
    "certify_direction",
    "copy_objective",
    "copy_objective_gradient",
    "find_copy",
    "flatten",
    "infinitesimal_copy_directions",
    "singular_cutoff",
    "unflatten",
]

log = logging.getLogger(__name__)

DENSE_SVD_MAX_COLUMNS = 2000
STAGNATION_WINDOW = 10
STAGNATION_RTOL = 1e-14


class ConvergenceError(RuntimeError):
    """Iteration limit reached; carries the partial result."""

    def __init__(self, message, result=None, residual=None, history=None):
        super().__init__(message)
        self.result = result
        self.residual = residual
        self.history = history or []


class StagnationError(ConvergenceError):
    """Residual stopped decreasing before reaching the target."""


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200
    residual_target: float = 1e-10
    step_damping: float = 1e-3
    singular_value_cutoff: Optional[float] = None
    cutoff_ratio: float = 1e-8

    def __post_init__(self):
        for name in ("max_iterations", "residual_target", "step_damping", "cutoff_ratio"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.singular_value_cutoff is not None and not self.singular_value_cutoff > 0:
            raise ValueError("singular_value_cutoff must be positive")


def _require_grid(X: FormField) -> None:
    if not X.domain.is_grid:
        raise BackendError("the solver needs the grid backend")


def flatten(X: FormField) -> np.ndarray:
    _require_grid(X)
    return X.coefficient_array().reshape(-1)


def unflatten(vec, like_domain, algebra, degree: int = 1) -> FormField:
    """Inverse of :func:`flatten` for an algebra-valued form."""
    idx = multi_indices(like_domain.dim, degree)
    coeffs = np.asarray(vec, dtype=float).reshape(like_domain.shape + (len(idx), algebra.dim))
    comps = {k: algebra.matrix(coeffs[..., i, :]) for i, k in enumerate(idx)}
    return FormField(degree, like_domain, algebra, comps)


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    """Sparse matrix of ``delta -> D_A delta`` on adjoint 1-forms."""

    base: FormField
    matrix: sp.csr_matrix

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    def __matmul__(self, vec):
        return self.matrix @ vec


def assemble_linearized(A: FormField) -> LinearizedOperator:
    """Assemble the centred-difference ``D_A`` as a CSR matrix.

    Row ``(site, pair, c)`` of ``(D delta)_{mu nu}`` couples the four
    derivative neighbours and the bracket with ``A`` at the same site.
    """
    check_connection(A)
    _require_grid(A)
    dom, alg = A.domain, A.algebra
    d, N = dom.dim, alg.dim
    S = int(np.prod(dom.shape))
    pairs = multi_indices(d, 2)
    P = len(pairs)
    inv2h = 1.0 / (2.0 * dom.spacing)
    site = np.arange(S).reshape(dom.shape)
    coeffA = A.coefficient_array()  # (*grid, d, N)
    f = alg.structure_constants

    # (*grid, d, c, b) = sum_a A_mu^a f[a, b, c]
    brk = np.einsum("...ma,abc->...mcb", coeffA, f)

    rows, cols, vals = [], [], []
    c_idx = np.arange(N)

    def add(r_site, p, c, col_site, mu, b, v):
        r, cl, v = np.broadcast_arrays((r_site * P + p) * N + c, (col_site * d + mu) * N + b, v)
        rows.append(r.ravel())
        cols.append(cl.ravel())
        vals.append(v.ravel())

    for p, (mu, nu) in enumerate(pairs):
        for shift, sign in ((-1, 1.0), (1, -1.0)):
            # (f(i + e) - f(i - e)) / 2h; np.roll(site, -1) gives the index of i + e
            plus_mu = np.roll(site, shift, axis=mu)[..., None]
            plus_nu = np.roll(site, shift, axis=nu)[..., None]
            s3 = site[..., None]
            add(s3, p, c_idx, plus_mu, nu, c_idx, sign * inv2h)
            add(s3, p, c_idx, plus_nu, mu, c_idx, -sign * inv2h)
        s4 = site[..., None, None]
        c4 = c_idx[:, None]
        b4 = c_idx[None, :]
        add(s4, p, c4, s4, nu, b4, brk[..., mu, :, :])
        add(s4, p, c4, s4, mu, b4, -brk[..., nu, :, :])

    M = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(S * P * N, S * d * N),
    ).tocsr()
    M.sum_duplicates()
    M.eliminate_zeros()
    return LinearizedOperator(A, M)


# ---------------------------------------------------------------------------
# infinitesimal copies


def _largest_singular_value(M) -> float:
    if M.shape[1] <= DENSE_SVD_MAX_COLUMNS:
        return float(np.linalg.norm(M.toarray(), 2))
    return float(svds(M, k=1, which="LM", return_singular_vectors=False)[0])


def _smallest_right_singular(M, k: int):
    rows, cols = M.shape
    if cols <= DENSE_SVD_MAX_COLUMNS:
        _, s, vt = np.linalg.svd(M.toarray(), full_matrices=True)
        # rows < cols leaves structural zeros; sigma = |M v| below either way
        sigma = np.concatenate([s, np.zeros(cols - len(s))])
        order = np.argsort(sigma, kind="stable")[:k]
        vecs = vt[order].T
        return np.linalg.norm(M @ vecs, axis=0), vecs
    normal = (M.T @ M).tocsc()
    try:
        _, vecs = eigsh(normal, k=k, sigma=-1e-10, which="LM")
    except ArpackNoConvergence as exc:
        raise ConvergenceError(
            "singular solver hit its iteration limit",
            result=exc.eigenvectors,
        ) from exc
    # recompute sigma from the vectors; eigenvalues of M^T M lose half the digits
    sigma = np.linalg.norm(M @ vecs, axis=0)
    order = np.argsort(sigma, kind="stable")
    return sigma[order], vecs[:, order]


def certify_direction(A: FormField, direction: FormField, sigma: float, floor: float = 0.0) -> tuple:
    """Field-level check ``|D_A delta| <= 10 * max(sigma, floor) * |delta|``.

    Returns ``(residual, passed)`` with the residual ``|D_A delta| / |delta|``.
    """
    norm = l2_norm(direction)
    res = l2_norm(cov_d_adjoint_1form(A, direction)) / norm
    return res, bool(res <= 10.0 * max(sigma, floor))


def infinitesimal_copy_directions(A: FormField, k: int, opts: SolverOptions = SolverOptions()) -> list:
    """The ``k`` smallest singular directions of ``D_A``.

    Returns ``[(delta, sigma), ...]`` in ascending ``sigma``, each ``delta``
    normalised to unit :func:`l2_norm`.
    """
    op = assemble_linearized(A)
    ncols = op.shape[1]
    if not 1 <= k <= ncols:
        raise ValueError(f"k must be in [1, {ncols}], got {k}")
    sigma, vecs = _smallest_right_singular(op.matrix, k)
    out = []
    for j in range(len(sigma)):
        field = unflatten(vecs[:, j], A.domain, A.algebra)
        field = (1.0 / l2_norm(field)) * field
        out.append((field, float(sigma[j])))
    return out


def singular_cutoff(A: FormField, opts: SolverOptions = SolverOptions()) -> tuple:
    """``(cutoff, sigma_max)`` for deciding which directions count as null."""
    smax = _largest_singular_value(assemble_linearized(A).matrix)
    cutoff = opts.singular_value_cutoff
    if cutoff is None:
        cutoff = opts.cutoff_ratio * smax
    return cutoff, smax


def certified_directions(A: FormField, k: int, opts: SolverOptions = SolverOptions()) -> dict:
    """Smallest directions with their field-level certification.

    A direction counts as an infinitesimal copy when ``sigma <= cutoff`` and
    the recomputed ``|D_A delta|`` is within ``10 * sigma`` (floored at the
    roundoff level ``sqrt(cols) * eps * sigma_max``).
    """
    pairs = infinitesimal_copy_directions(A, k, opts)
    cutoff, smax = singular_cutoff(A, opts)
    ncols = assemble_linearized(A).shape[1]
    floor = np.sqrt(ncols) * np.finfo(float).eps * smax
    residuals, certified = [], []
    for field, sigma in pairs:
        res, ok = certify_direction(A, field, sigma, floor)
        residuals.append(res)
        certified.append(ok and sigma <= cutoff)
    return {
        "directions": [f for f, _ in pairs],
        "singular_values": np.array([s for _, s in pairs]),
        "residuals": np.array(residuals),
        "certified": np.array(certified, dtype=bool),
        "cutoff": cutoff,
        "sigma_max": smax,
    }


# ---------------------------------------------------------------------------
# finite copies


def _copy_residual(A: FormField, K: FormField) -> FormField:
    return cov_d_adjoint_1form(A, K) + wedge(K, K)


def _residual_vector(A: FormField, K: FormField) -> np.ndarray:
    return _copy_residual(A, K).coefficient_array().reshape(-1)


def copy_objective(A: FormField, K: FormField) -> float:
    """``R(K) = |DK + K^K|^2`` in the flattened coefficient norm."""
    r = _residual_vector(A, K)
    return float(r @ r)


def copy_objective_gradient(A: FormField, K: FormField) -> np.ndarray:
    """Gradient ``2 J^T r`` of :func:`copy_objective`."""
    r = _residual_vector(A, K)
    J = assemble_linearized(A + K).matrix
    return 2.0 * (J.T @ r)


def find_copy(
    A: FormField,
    K0: FormField,
    opts: SolverOptions = SolverOptions(),
    callback: Optional[Callable[[dict], None]] = None,
) -> tuple:
    """Levenberg-Marquardt search for ``K`` with ``DK + K^K = 0`` near ``K0``.

    Succeeds when the relative copy residual reaches ``opts.residual_target``
    and the curvatures of ``A`` and ``A + K``, recomputed from scratch, agree
    to ``10 * residual_target``.  ``callback`` receives one record per
    iteration: ``{iter, residual, damping, step_norm, accepted}``.

    Returns ``(K, report)``; ``report.solver`` holds the iteration count,
    curvature check and history.
    """
    check_connection(A)
    _require_grid(A)
    _require_grid(K0)
    dom, alg = A.domain, A.algebra
    F = curvature(A)
    normA, normF = l2_norm(A), l2_norm(F)

    def rel_residual(K):
        # same scale as classify_line: 1 + |A| + |K| + |F|
        return l2_norm(_copy_residual(A, K)) / (1.0 + normA + l2_norm(K) + normF)

    x = flatten(K0)
    K = unflatten(x, dom, alg)
    r = _residual_vector(A, K)
    cost = float(r @ r)
    res = rel_residual(K)
    lam = opts.step_damping
    history = []
    recent = [cost]

    it = 0
    while res > opts.residual_target:
        if it >= opts.max_iterations:
            raise ConvergenceError(
                f"no convergence in {opts.max_iterations} iterations (residual {res:.3e})",
                result=K, residual=res, history=history,
            )
        it += 1
        J = assemble_linearized(A + K).matrix
        JtJ = (J.T @ J).tocsc()
        g = J.T @ r
        mu = lam * max(JtJ.diagonal().mean(), 1e-300)
        step = -spsolve(JtJ + mu * sp.identity(JtJ.shape[0], format="csc"), g)
        x_new = x + step
        K_new = unflatten(x_new, dom, alg)
        r_new = _residual_vector(A, K_new)
        cost_new = float(r_new @ r_new)
        accepted = cost_new < cost
        if accepted:
            x, K, r, cost = x_new, K_new, r_new, cost_new
            res = rel_residual(K)
            lam = max(lam / 5.0, 1e-14)
        else:
            lam = min(lam * 10.0, 1e12)
        rec = {
            "iter": it,
            "residual": res,
            "damping": lam,
            "step_norm": float(np.linalg.norm(step)),
            "accepted": accepted,
        }
        history.append(rec)
        if callback is not None:
            callback(rec)
        log.debug("iter %d residual %.3e damping %.1e", it, res, lam)

        recent.append(cost)
        if len(recent) > STAGNATION_WINDOW + 1:
            recent.pop(0)
            old = recent[0]
            if old > 0 and (old - cost) / old < STAGNATION_RTOL:
                raise StagnationError(
                    f"residual stagnated at {res:.3e} after {it} iterations",
                    result=K, residual=res, history=history,
                )

    F2 = curvature(A + K)
    oracle = l2_norm(F2 - F) / (1.0 + l2_norm(F2) + normF)
    if oracle > 10.0 * opts.residual_target:
        raise ConvergenceError(
            f"curvature check failed: {oracle:.3e}", result=K, residual=res, history=history
        )
    report = classify_line(A, K, tol=max(default_tolerance(dom), opts.residual_target))
    report.solver = {
        "iterations": it,
        "residual": res,
        "curvature_oracle": oracle,
        "history": history,
    }
    return K, report

