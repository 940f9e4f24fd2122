"""Directional convexity certificates for symmetric forms and scalar fields.

A symmetric matrix is *p-positive* when every sum of ``p`` of its eigenvalues
is positive — equivalently (and this is what everything here computes) when
the sum of its ``p`` smallest eigenvalues is.  The module grades matrices,
sampled Hessian fields, and tangential boundary Hessians against that
criterion, and carries the curvature-term algebra used by the solver-side
bound hypotheses:

* :func:`index_swap_two_forms` builds, for every degree-``p`` multi-index of a
  form, the 2-form obtained by swapping one index at a time against a free
  index;
* :func:`curvature_term` pairs those 2-forms against a symmetric operator on
  2-forms and sums;
* :func:`curvature_bounds_check` verifies the two-sided eigenvalue bound with
  the ``p (n - p)`` signature count, and :func:`signature_count` re-derives
  that count by brute-force enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateGradient, PreconditionError
from .exterior import PointForm, dim_forms, index_list, index_rank

__all__ = [
    "min_p_trace",
    "ConvexityReport",
    "p_positivity_report",
    "FieldRegionReport",
    "field_p_psh_report",
    "boundary_p_convexity",
    "index_swap_two_forms",
    "curvature_term",
    "CurvatureBoundsReport",
    "curvature_bounds_check",
    "signature_count",
    "curvature_shift_report",
]


def min_p_trace(theta: np.ndarray, p: int) -> float:
    """Smallest sum of ``p`` eigenvalues of the symmetric matrix ``theta``."""
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    if theta.shape != (n, n):
        raise ValueError(f"theta must be square, got {theta.shape}")
    if not 1 <= p <= n:
        raise ValueError(f"p must be in [1, {n}], got {p}")
    w = np.linalg.eigvalsh(theta)
    return float(w[:p].sum())


@dataclass
class ConvexityReport:
    """Three-way p-positivity verdict with the witnessing directions.

    ``witness_values``/``witness_vectors`` are the p smallest eigenvalues and
    their eigenvectors — the directions realizing the minimal p-trace.
    """

    p: int
    min_p_trace: float
    verdict: str                      # 'strict' | 'semi' | 'fail'
    witness_values: np.ndarray
    witness_vectors: np.ndarray

    def ok(self, mode: str = "semi") -> bool:
        """Whether the verdict meets the requested mode."""
        if mode == "strict":
            return self.verdict == "strict"
        if mode == "semi":
            return self.verdict in ("strict", "semi")
        raise ValueError(f"mode must be 'strict' or 'semi', got {mode!r}")


def _classify(value: float, strict_tol: float, semi_tol: float) -> str:
    if value > strict_tol:
        return "strict"
    if value >= -semi_tol:
        return "semi"
    return "fail"


def p_positivity_report(theta: np.ndarray, p: int, *,
                        strict_tol: float = 1e-12,
                        semi_tol: float = 1e-12) -> ConvexityReport:
    """Grade a symmetric matrix: strict / semi / fail p-positivity.

    ``strict`` means the minimal p-trace exceeds ``strict_tol``; ``semi``
    means it is above ``-semi_tol``; anything lower fails.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"p must be in [1, {n}], got {p}")
    w, V = np.linalg.eigh(theta)
    value = float(w[:p].sum())
    return ConvexityReport(p=p, min_p_trace=value,
                           verdict=_classify(value, strict_tol, semi_tol),
                           witness_values=w[:p].copy(),
                           witness_vectors=V[:, :p].copy())


@dataclass
class FieldRegionReport:
    """Per-sample p-positivity of a sampled Hessian field."""

    p: int
    points: np.ndarray               # (m, n)
    traces: np.ndarray               # (m,) minimal p-traces
    verdict: str                     # worst verdict over the samples
    worst_index: int

    @property
    def worst_point(self) -> np.ndarray:
        return self.points[self.worst_index]

    @property
    def min_trace(self) -> float:
        return float(self.traces[self.worst_index])

    def ok(self, mode: str = "semi") -> bool:
        if mode == "strict":
            return self.verdict == "strict"
        if mode == "semi":
            return self.verdict in ("strict", "semi")
        raise ValueError(f"mode must be 'strict' or 'semi', got {mode!r}")


_RANKING = {"strict": 2, "semi": 1, "fail": 0}


def field_p_psh_report(hessian_at: Callable[[np.ndarray], np.ndarray],
                       samples: Sequence[np.ndarray], p: int, *,
                       strict_tol: float = 1e-12,
                       semi_tol: float = 1e-12) -> FieldRegionReport:
    """Sampled p-plurisubharmonicity report for a scalar field.

    ``hessian_at`` maps a point to the field's Hessian there (objects with an
    ``eval_jet2`` method are accepted directly).  The global verdict is the
    worst per-sample verdict; the worst sample is recorded.
    """
    hess = getattr(hessian_at, "eval_jet2", None)
    if hess is not None:
        def hessian_fn(x):
            return hessian_at.eval_jet2(x).hess
    else:
        hessian_fn = hessian_at
    pts = np.atleast_2d(np.asarray(list(samples), dtype=np.float64))
    if pts.shape[0] == 0:
        raise ValueError("need at least one sample point")
    traces = np.empty(pts.shape[0])
    verdicts = []
    for i, x in enumerate(pts):
        traces[i] = min_p_trace(hessian_fn(x), p)
        verdicts.append(_classify(traces[i], strict_tol, semi_tol))
    worst = int(np.argmin(traces))
    overall = min(verdicts, key=_RANKING.__getitem__)
    return FieldRegionReport(p=p, points=pts, traces=traces,
                             verdict=overall, worst_index=worst)


def boundary_p_convexity(defining_field, boundary_samples: Sequence[np.ndarray],
                         p: int, *,
                         grad_tol: float = 1e-8,
                         strict_tol: float = 1e-12,
                         semi_tol: float = 1e-12) -> FieldRegionReport:
    """p-convexity of a boundary, via tangential Hessian restriction.

    At each boundary sample of the defining function ``r`` (zero level set,
    ``r < 0`` inside), the Hessian of ``r`` is restricted to an orthonormal
    basis of the tangent space ``{v : <v, grad r> = 0}``, and the minimal
    p-trace of that ``(n-1) x (n-1)`` block is graded.

    Raises :class:`DegenerateGradient` when ``|grad r|`` falls below
    ``grad_tol`` at a sample, and requires ``p <= n - 1``.
    """
    pts = np.atleast_2d(np.asarray(list(boundary_samples), dtype=np.float64))
    if pts.shape[0] == 0:
        raise ValueError("need at least one boundary sample")
    n = pts.shape[1]
    if not 1 <= p <= n - 1:
        raise ValueError(f"p must be in [1, {n - 1}] for tangential p-planes, got {p}")
    traces = np.empty(pts.shape[0])
    verdicts = []
    for i, x in enumerate(pts):
        jet = defining_field.eval_jet2(x)
        grad = jet.grad
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= grad_tol:
            raise DegenerateGradient(
                f"|grad r| = {gnorm:.3e} <= {grad_tol:.1e} at boundary sample {x}")
        tangent = scipy.linalg.null_space(grad[None, :] / gnorm)   # (n, n-1), orthonormal
        block = tangent.T @ jet.hess @ tangent
        traces[i] = min_p_trace(block, p)
        verdicts.append(_classify(traces[i], strict_tol, semi_tol))
    worst = int(np.argmin(traces))
    overall = min(verdicts, key=_RANKING.__getitem__)
    return FieldRegionReport(p=p, points=pts, traces=traces,
                             verdict=overall, worst_index=worst)


# ---------------------------------------------------------------------------
# curvature-term algebra
# ---------------------------------------------------------------------------

def index_swap_two_forms(g: PointForm) -> np.ndarray:
    """The family of 2-forms obtained by single-index swaps of ``g``.

    For each increasing multi-index ``I = (i_1 < ... < i_p)`` the associated
    2-form is::

        sum_{a=1}^{p} sum_{i=1}^{n}  g_{i_1 .. (i)_a .. i_p}  w^i ^ w^{i_a}

    where the coefficient replaces the a-th index by ``i`` under the
    antisymmetric convention (vanishing on repeats).  Returns an array of
    shape ``(C(n,p), C(n,2))``: row ``r`` holds the 2-form attached to the
    multi-index of rank ``r``.
    """
    n, p = g.n, g.p
    if n < 2:
        raise ValueError("need n >= 2 for 2-forms")
    if p < 1:
        raise ValueError("need p >= 1")
    out = np.zeros((dim_forms(n, p), dim_forms(n, 2)))
    for r, I in enumerate(index_list(n, p)):
        members = set(I)
        for a, ia in enumerate(I):
            for i in range(1, n + 1):
                if i in members:       # repeat kills the coefficient, i = i_a kills the wedge
                    continue
                seq = list(I)
                seq[a] = i
                coeff = g.coefficient(tuple(seq))
                if coeff == 0.0:
                    continue
                if i < ia:
                    out[r, index_rank((i, ia), n)] += coeff
                else:
                    out[r, index_rank((ia, i), n)] -= coeff
    return out


def curvature_term(R: np.ndarray, g: PointForm) -> float:
    """``sum_I <R xi_I, xi_I>`` over the swap 2-forms of ``g``.

    ``R`` is a symmetric operator on 2-forms, given as a dense
    ``C(n,2) x C(n,2)`` matrix in the increasing-pair basis.
    """
    R = np.asarray(R, dtype=np.float64)
    m = dim_forms(g.n, 2)
    if R.shape != (m, m):
        raise ValueError(f"R must be {m}x{m} for n = {g.n}, got {R.shape}")
    if not np.allclose(R, R.T, atol=1e-12 * (1.0 + np.abs(R).max())):
        raise ValueError("R must be symmetric")
    xis = index_swap_two_forms(g)
    return float(np.einsum("rA,AB,rB->", xis, R, xis))


@dataclass
class CurvatureBoundsReport:
    """Two-sided eigenvalue bound on the curvature term."""

    term: float
    lower: float                      # p (n-p) lambda_min |g|^2
    upper: float                      # p (n-p) lambda_max |g|^2
    lambda_min: float
    lambda_max: float
    count: int                        # p (n-p)
    ok: bool


def curvature_bounds_check(R: np.ndarray, g: PointForm, *,
                           tol: float = 1e-10) -> CurvatureBoundsReport:
    """Verify ``p(n-p) l_min |g|^2 <= curvature_term <= p(n-p) l_max |g|^2``.

    ``l_min``/``l_max`` are the extreme eigenvalues of ``R`` on 2-forms.
    """
    R = np.asarray(R, dtype=np.float64)
    w = np.linalg.eigvalsh(0.5 * (R + R.T))
    lam, lam_top = float(w[0]), float(w[-1])
    n, p = g.n, g.p
    count = p * (n - p)
    g2 = g.inner(g)
    term = curvature_term(R, g)
    lower = count * lam * g2
    upper = count * lam_top * g2
    scale = 1.0 + max(abs(lower), abs(upper), abs(term))
    ok = (lower - tol * scale) <= term <= (upper + tol * scale)
    return CurvatureBoundsReport(term=term, lower=lower, upper=upper,
                                 lambda_min=lam, lambda_max=lam_top,
                                 count=count, ok=bool(ok))


def signature_count(n: int, p: int) -> int:
    """Count nonvanishing swap terms targeting a fixed multi-index.

    Brute-force enumerates all ``(I, a, i)`` with ``I`` increasing of length
    ``p``, position ``a``, free index ``i`` not in ``I``, whose swapped index
    set equals a fixed target ``J = (1, ..., p)``; each match contributes
    sign squared, i.e. one.  Asserts the count equals ``p (n - p)`` and
    returns it.
    """
    if not 1 <= p <= n:
        raise ValueError(f"p must be in [1, {n}], got {p}")
    target = frozenset(range(1, p + 1))
    count = 0
    for I in index_list(n, p):
        members = set(I)
        for a in range(p):
            for i in range(1, n + 1):
                if i in members:
                    continue
                swapped = members - {I[a]} | {i}
                if frozenset(swapped) == target:
                    count += 1     # sign^2 == 1 whenever the term survives
    expected = p * (n - p)
    if count != expected:
        raise AssertionError(
            f"signature enumeration for (n={n}, p={p}) gave {count}, expected {expected}")
    return count


def curvature_shift_report(theta: np.ndarray, curvature_floor: float, p: int, *,
                           strict_tol: float = 1e-12,
                           semi_tol: float = 1e-12) -> ConvexityReport:
    """Positivity of the curvature-shifted operator on p-forms.

    Grades ``min_p_trace(theta) + p (n - p) * curvature_floor`` against zero:
    the smallest eigenvalue of the induced operator plus the curvature shift
    ``p (n - p) * curvature_floor * Id``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"p must be in [1, {n}], got {p}")
    w, V = np.linalg.eigh(theta)
    shift = p * (n - p) * float(curvature_floor)
    value = float(w[:p].sum()) + shift
    return ConvexityReport(p=p, min_p_trace=value,
                           verdict=_classify(value, strict_tol, semi_tol),
                           witness_values=w[:p].copy(),
                           witness_vectors=V[:, :p].copy())
