"""Copy conditions, straight lines in connection space, and copy witnesses.

Two connections ``A`` and ``A + K`` are copies when they share a curvature,
i.e. ``DK + K^K = 0`` with ``D`` the covariant derivative of ``A``.  Along
the line ``A_t = A + tK`` the curvature is the quadratic
``F_t = F + t DK + t^2 K^K``, which makes the classification of a line
through a copy pair a matter of two norms.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .forms import (
    FormField,
    exterior_derivative,
    from_coefficients,
    inner,
    l2_norm,
    wedge,
)
from .gauge import (
    GroupField,
    check_connection,
    cov_d_adjoint_1form,
    curvature,
    gauge_transform_connection,
    pure_gauge,
    relative_residual,
)

__all__ = [
    "ALL_COPIES",
    "ENDPOINTS_ONLY",
    "NOT_COPY_PAIR",
    "T_SAMPLES",
    "ConstructionError",
    "CopyReport",
    "LineFamily",
    "classify_line",
    "copy_residuals",
    "curvature_deviation",
    "default_tolerance",
    "identity_residuals",
    "line_curvature_closed_form",
    "line_curvature_derivative",
    "line_eval",
    "leibniz_residuals",
    "line_taxon",
    "make_pure_gauge",
    "make_stabilizer_copy",
]

ALL_COPIES = "AllCopies"
ENDPOINTS_ONLY = "EndpointsOnly"
NOT_COPY_PAIR = "NotCopyPair"

COPY_LINE = "copy_line"
SINGLE_COPY_LINE = "single_copy_line"
NON_COPY_LINE = "non_copy_line"

T_SAMPLES = (0.1, 0.25, 0.5, 0.75, 0.9)
IDENTITY_T = (-0.7, 0.3, 2.5)

_DEFAULT_TOL = {"polynomial": 1e-8, "grid": 1e-4}


class ConstructionError(ValueError):
    """A witness constructor's precondition does not hold."""


def default_tolerance(domain) -> float:
    return _DEFAULT_TOL[domain.backend]


@dataclass(frozen=True, eq=False)
class LineFamily:
    """The line ``A_t = A + t K`` with ``F``, ``DK`` and ``K^K`` cached."""

    base: FormField
    direction: FormField
    F: FormField = field(init=False, repr=False)
    DK: FormField = field(init=False, repr=False)
    KK: FormField = field(init=False, repr=False)

    def __post_init__(self):
        check_connection(self.base)
        check_connection(self.direction)
        object.__setattr__(self, "F", curvature(self.base))
        object.__setattr__(self, "DK", cov_d_adjoint_1form(self.base, self.direction))
        object.__setattr__(self, "KK", wedge(self.direction, self.direction))

    @property
    def scale(self) -> float:
        """Common denominator ``1 + |A| + |K| + |F|`` for relative norms."""
        return 1.0 + l2_norm(self.base) + l2_norm(self.direction) + l2_norm(self.F)

    def __call__(self, t: float) -> FormField:
        return line_eval(self, t)


def line_eval(L: LineFamily, t: float) -> FormField:
    return L.base + t * L.direction


def line_curvature_closed_form(L: LineFamily, t: float) -> FormField:
    return L.F + t * L.DK + (t * t) * L.KK


def line_curvature_derivative(L: LineFamily, t: float) -> FormField:
    return L.DK + (2.0 * t) * L.KK


def copy_residuals(A: FormField, K: FormField) -> tuple:
    """Relative norms of ``DK + K^K`` and of the graded bracket ``K^F - F^K``.

    Both are divided by ``1 + |A| + |K| + |F|``.  The bracket is a 3-form and
    is reported as 0.0 in two dimensions.
    """
    L = LineFamily(A, K)
    s = L.scale
    r_copy = l2_norm(L.DK + L.KK) / s
    if A.domain.dim < 3:
        return r_copy, 0.0
    r_comm = l2_norm(wedge(K, L.F) - wedge(L.F, K)) / s
    return r_copy, r_comm


@dataclass
class CopyReport:
    """Outcome of :func:`classify_line`; every norm is relative to ``scale``."""

    residual_copy: float
    residual_commute: float
    dk_norm: float
    kk_norm: float
    verdict: str
    tolerance: float
    midpoint_check: float
    taxon: str
    copy_parameter: Optional[float] = None
    commute_degenerate: bool = False
    scale: float = 1.0
    instance: dict = field(default_factory=dict)
    solver: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)


def line_taxon(L: LineFamily, tol: float) -> tuple:
    """Which kind of line ``A + tK`` is, seen from ``A``.

    ``F_t = F`` for ``t != 0`` iff ``DK + t K^K = 0``.  Returns
    ``(COPY_LINE, None)`` when ``DK`` and ``K^K`` both vanish,
    ``(SINGLE_COPY_LINE, s)`` when exactly one further copy sits at ``t = s``,
    and ``(NON_COPY_LINE, None)`` otherwise.
    """
    s = L.scale
    dk, kk = l2_norm(L.DK) / s, l2_norm(L.KK) / s
    if dk <= tol and kk <= tol:
        return COPY_LINE, None
    if kk <= tol:
        return NON_COPY_LINE, None
    t_star = -inner(L.KK, L.DK) / inner(L.KK, L.KK)
    if abs(t_star) > tol and l2_norm(L.DK + t_star * L.KK) / s <= tol:
        return SINGLE_COPY_LINE, float(t_star)
    return NON_COPY_LINE, None


def classify_line(
    A: FormField,
    K: FormField,
    tol: Optional[float] = None,
    instance: Optional[dict] = None,
) -> CopyReport:
    """Classify the line through ``A`` and ``A + K``.

    ``NotCopyPair`` if ``A + K`` is not a copy of ``A``; otherwise
    ``AllCopies`` when ``DK`` vanishes (then so does ``K^K``) and
    ``EndpointsOnly`` when it does not.  The midpoint check recomputes
    ``F_{1/2}`` from scratch.  Note that a parallel ``K`` alone does not make a
    line of copies; ``A + K`` must first be a copy, which is why the copy
    residual is tested before ``DK``.
    """
    if tol is None:
        tol = default_tolerance(A.domain)
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    L = LineFamily(A, K)
    s = L.scale
    r_copy = l2_norm(L.DK + L.KK) / s
    degenerate = A.domain.dim < 3
    r_comm = 0.0 if degenerate else l2_norm(wedge(K, L.F) - wedge(L.F, K)) / s
    dk = l2_norm(L.DK) / s
    kk = l2_norm(L.KK) / s

    F_half = curvature(line_eval(L, 0.5))
    if r_copy > tol:
        verdict = NOT_COPY_PAIR
    elif dk <= tol:
        verdict = ALL_COPIES
    else:
        verdict = ENDPOINTS_ONLY
    if verdict == ALL_COPIES:
        midpoint = l2_norm(F_half - L.F) / s
    else:
        midpoint = l2_norm(F_half - L.F + 0.25 * L.KK) / s

    taxon, t_star = line_taxon(L, tol)
    return CopyReport(
        residual_copy=r_copy,
        residual_commute=r_comm,
        dk_norm=dk,
        kk_norm=kk,
        verdict=verdict,
        tolerance=tol,
        midpoint_check=midpoint,
        taxon=taxon,
        copy_parameter=t_star,
        commute_degenerate=degenerate,
        scale=s,
        instance=dict(instance or {}),
    )


def curvature_deviation(A: FormField, K: FormField, ts: Sequence[float] = T_SAMPLES) -> list:
    """Relative ``|F_t - F|`` at each ``t``, from direct curvature evaluation."""
    L = LineFamily(A, K)
    return [l2_norm(curvature(line_eval(L, t)) - L.F) / L.scale for t in ts]


def identity_residuals(
    A: FormField,
    K: FormField,
    ts: Sequence[float] = IDENTITY_T,
    include_leibniz: bool = True,
) -> dict:
    """Relative residuals of the exact identities relating ``A`` and ``A + K``.

    Keys: ``shifted_covariant_derivative`` (``D'K = DK + 2K^K``),
    ``shifted_curvature`` (``F' = F + DK + K^K``), ``line_curvature@t`` and
    ``line_covariant_derivative@t`` for each ``t``, and in three or more
    dimensions ``double_covariant_derivative`` (``DDK + [K, F] = 0``) and
    ``bianchi`` (``DF = 0``) unless ``include_leibniz`` is false.
    """
    L = LineFamily(A, K)
    A2 = A + K
    out = {}
    D2K = cov_d_adjoint_1form(A2, K)
    out["shifted_covariant_derivative"] = relative_residual(
        D2K - L.DK - 2.0 * L.KK, D2K, L.DK, 2.0 * L.KK
    )
    F2 = curvature(A2)
    out["shifted_curvature"] = relative_residual(
        F2 - L.F - L.DK - L.KK, F2, L.F, L.DK, L.KK
    )
    for t in ts:
        Ft = curvature(line_eval(L, t))
        closed = line_curvature_closed_form(L, t)
        out[f"line_curvature@{t!r}"] = relative_residual(
            Ft - closed, Ft, L.F, t * L.DK, t * t * L.KK
        )
        DtK = cov_d_adjoint_1form(line_eval(L, t), K)
        deriv = line_curvature_derivative(L, t)
        out[f"line_covariant_derivative@{t!r}"] = relative_residual(
            DtK - deriv, DtK, L.DK, 2.0 * t * L.KK
        )
    if include_leibniz and A.domain.dim >= 3:
        out.update(leibniz_residuals(A, K))
    return out


def leibniz_residuals(A: FormField, K: FormField) -> dict:
    """Relative residuals of ``DF = 0`` and ``DDK + [K, F] = 0`` (dim >= 3).

    These depend on the product rule and hold only to O(h^2) on the grid.
    The absolute norms are returned under ``*_abs`` keys.
    """
    F = curvature(A)
    dF, AF, FA = _terms_2form(A, F)
    bianchi = dF + AF - FA
    DK = cov_d_adjoint_1form(A, K)
    dDK, ADK, DKA = _terms_2form(A, DK)
    KF, FK = wedge(K, F), wedge(F, K)
    ddk = dDK + ADK - DKA + KF - FK
    return {
        "bianchi": relative_residual(bianchi, dF, AF, FA),
        "bianchi_abs": l2_norm(bianchi),
        "double_covariant_derivative": relative_residual(ddk, dDK, ADK, DKA, KF, FK),
        "double_covariant_derivative_abs": l2_norm(ddk),
    }


def _terms_2form(A: FormField, W: FormField) -> tuple:
    return exterior_derivative(W), wedge(A, W), wedge(W, A)


# ---------------------------------------------------------------------------
# witnesses


def make_pure_gauge(g: GroupField) -> FormField:
    """Flat connection ``g d(g^-1)``."""
    return pure_gauge(g)


def make_stabilizer_copy(A: FormField, alpha, axis: int, tol: float = 1e-10) -> tuple:
    """Copy of ``A`` from a gauge rotation that fixes its curvature.

    With ``F`` valued along ``J_axis`` and ``g = exp(alpha J_axis)``,
    ``g F g^-1 = F`` so ``A' = g A g^-1 + g d(g^-1)`` is a copy.  ``alpha`` is a
    scalar spec as accepted by :func:`~connection_lab.forms.from_coefficients`.
    Returns ``(A', K)`` with ``K = A' - A``.
    """
    check_connection(A)
    alg = A.algebra
    if not 0 <= axis < alg.dim:
        raise ConstructionError(f"axis {axis} out of range for {alg.name}")
    F = curvature(A)
    off = 0.0
    npts = 1
    J = alg.generators[axis]
    for k in F.components:
        vals = F.values(k)
        c = np.real(np.einsum("ij,...ij->...", np.conj(J), vals)) / alg.basis_norms[axis]
        rest = vals - c[..., None, None] * J
        off += float(np.sum(np.abs(rest) ** 2))
        npts = vals.size // J.size
    off = np.sqrt(off / npts) / (1.0 + l2_norm(F))
    if off > tol:
        raise ConstructionError(
            f"curvature is not valued along generator {axis}: "
            f"relative off-axis norm {off:.3e} > {tol:.1e}"
        )
    row = [None] * alg.dim
    row[axis] = alpha
    X = from_coefficients(A.domain, alg, 0, {(): row})
    g = GroupField.exp(X)
    A2 = gauge_transform_connection(g, A)
    return A2, A2 - A

