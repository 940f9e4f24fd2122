"""Exterior algebra of constant-coefficient forms on Euclidean R^n.

A ``p``-form at a point is stored as its coefficient vector over the
lexicographically ordered strictly increasing multi-indices of length ``p``
drawn from ``{1, ..., n}`` (so ``dim = C(n, p)``).  The basis is orthonormal
for the Euclidean pairing, which makes inner products plain dot products.

The central object is the operator induced on ``p``-forms by a symmetric
matrix ``theta``::

    A_theta g = sum_{j,k} theta[j,k] * omega^k ^ (e_j _| g)

(wedge with the k-th basis covector after contracting with the j-th basis
vector).  Its quadratic form, spectrum, pseudo-inverse, and the two
inequality checks built from them live here.  Everything is dense numpy at
small ``n`` (the package targets n <= 12; C(12,6) = 924 keeps all tables
tiny).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import MembershipError, PreconditionError

__all__ = [
    "dim_forms",
    "index_list",
    "index_rank",
    "index_unrank",
    "PointForm",
    "oneform",
    "wedge",
    "interior",
    "quadform_action",
    "quadform_matrix",
    "pairing_quadratic",
    "quadform_eigen",
    "FormSpectrum",
    "quadform_pinv",
    "inverse_bound_check",
    "InverseBoundReport",
    "rank_one_image_check",
    "RankOneImageReport",
]

_MAX_N = 12


def dim_forms(n: int, p: int) -> int:
    """Dimension of the space of p-forms on R^n."""
    return math.comb(n, p)


def _check_np(n: int, p: int) -> None:
    if not (isinstance(n, int) and isinstance(p, int)):
        raise TypeError("n and p must be ints")
    if n < 1 or n > _MAX_N:
        raise ValueError(f"n must be in [1, {_MAX_N}], got {n}")
    if p < 0 or p > n:
        raise ValueError(f"p must be in [0, {n}], got {p}")


@lru_cache(maxsize=None)
def index_list(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    """All strictly increasing multi-indices of length p in {1..n}, lex order."""
    _check_np(n, p)
    return tuple(itertools.combinations(range(1, n + 1), p))


@lru_cache(maxsize=None)
def _rank_of(n: int, p: int) -> dict[tuple[int, ...], int]:
    return {idx: r for r, idx in enumerate(index_list(n, p))}


def index_rank(idx: tuple[int, ...], n: int) -> int:
    """Lex rank of a strictly increasing multi-index among those of its length."""
    idx = tuple(idx)
    table = _rank_of(n, len(idx))
    try:
        return table[idx]
    except KeyError:
        raise ValueError(f"{idx!r} is not a strictly increasing multi-index in 1..{n}") from None


def index_unrank(rank: int, n: int, p: int) -> tuple[int, ...]:
    """Inverse of :func:`index_rank`."""
    lst = index_list(n, p)
    if not 0 <= rank < len(lst):
        raise ValueError(f"rank {rank} out of range for C({n},{p}) = {len(lst)}")
    return lst[rank]


@lru_cache(maxsize=None)
def _insertion_table(n: int, p: int):
    """Tables describing insertion of a single index into a (p-1)-index.

    Returns ``(pos, sgn)`` of shape ``(n, C(n, p-1))`` where, for axis ``j``
    (1-based, row ``j-1``) and a (p-1)-index ``K`` of rank ``rK``:

    * ``pos[j-1, rK]`` is the rank of ``sorted({j} | K)`` among p-indices,
      or ``-1`` when ``j in K``;
    * ``sgn[j-1, rK]`` is ``(-1)**#{k in K : k < j}`` (the sign of moving
      ``j`` from the front into sorted position), or ``0`` when ``j in K``.

    With the antisymmetric coefficient convention, ``g_{jK} = sgn * g[pos]``.
    """
    _check_np(n, p)
    if p == 0:
        raise ValueError("insertion table needs p >= 1")
    km1 = index_list(n, p - 1)
    rank_p = _rank_of(n, p)
    pos = -np.ones((n, len(km1)), dtype=np.int64)
    sgn = np.zeros((n, len(km1)), dtype=np.float64)
    for rK, K in enumerate(km1):
        for j in range(1, n + 1):
            if j in K:
                continue
            below = sum(1 for k in K if k < j)
            merged = tuple(sorted((j,) + K))
            pos[j - 1, rK] = rank_p[merged]
            sgn[j - 1, rK] = -1.0 if (below % 2) else 1.0
    return pos, sgn


def _lift(n: int, p: int, coeffs: np.ndarray) -> np.ndarray:
    """Matrix G with G[j-1, rK] = g_{jK} (coefficient with j prepended)."""
    pos, sgn = _insertion_table(n, p)
    safe = np.where(pos >= 0, pos, 0)
    return np.where(pos >= 0, sgn * coeffs[safe], 0.0)


@dataclass(eq=False)
class PointForm:
    """A constant-coefficient p-form on R^n.

    Attributes
    ----------
    n, p : int
        Ambient dimension and form degree.
    coeffs : numpy.ndarray
        Coefficients over the lex-ordered increasing multi-indices,
        length ``C(n, p)``.
    """

    n: int
    p: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        _check_np(self.n, self.p)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        want = dim_forms(self.n, self.p)
        if self.coeffs.shape != (want,):
            raise ValueError(
                f"expected {want} coefficients for a {self.p}-form on R^{self.n}, "
                f"got shape {self.coeffs.shape}")

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, n: int, p: int) -> "PointForm":
        return cls(n, p, np.zeros(dim_forms(n, p)))

    @classmethod
    def basis(cls, n: int, idx: tuple[int, ...]) -> "PointForm":
        """The basis form omega^{i1} ^ ... ^ omega^{ip} for increasing idx."""
        idx = tuple(idx)
        c = np.zeros(dim_forms(n, len(idx)))
        c[index_rank(idx, n)] = 1.0
        return cls(n, len(idx), c)

    @classmethod
    def from_dict(cls, n: int, p: int, entries: dict[tuple[int, ...], float]) -> "PointForm":
        """Build from {increasing multi-index: coefficient}; missing = 0."""
        c = np.zeros(dim_forms(n, p))
        for idx, v in entries.items():
            if len(idx) != p:
                raise ValueError(f"index {idx} has length {len(idx)}, expected {p}")
            c[index_rank(tuple(idx), n)] = float(v)
        return cls(n, p, c)

    # -- algebra --------------------------------------------------------
    def inner(self, other: "PointForm") -> float:
        """Euclidean pairing <self, other> (orthonormal increasing basis)."""
        self._compat(other)
        return float(self.coeffs @ other.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def _compat(self, other: "PointForm") -> None:
        if (self.n, self.p) != (other.n, other.p):
            raise ValueError(
                f"degree/dimension mismatch: ({self.n},{self.p}) vs ({other.n},{other.p})")

    def __add__(self, other: "PointForm") -> "PointForm":
        self._compat(other)
        return PointForm(self.n, self.p, self.coeffs + other.coeffs)

    def __sub__(self, other: "PointForm") -> "PointForm":
        self._compat(other)
        return PointForm(self.n, self.p, self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "PointForm":
        return PointForm(self.n, self.p, self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self) -> "PointForm":
        return PointForm(self.n, self.p, -self.coeffs)

    def coefficient(self, idx: tuple[int, ...]) -> float:
        """Coefficient for an arbitrary (possibly unsorted) index sequence.

        Applies the antisymmetric convention: repeated entries give 0 and a
        permutation contributes its sign.
        """
        idx = tuple(idx)
        if len(set(idx)) != len(idx):
            return 0.0
        inv = sum(1 for a in range(len(idx)) for b in range(a + 1, len(idx))
                  if idx[a] > idx[b])
        sign = -1.0 if inv % 2 else 1.0
        return sign * float(self.coeffs[index_rank(tuple(sorted(idx)), self.n)])


def oneform(v: np.ndarray) -> PointForm:
    """The 1-form with coefficient vector v (the Euclidean flat of a vector)."""
    v = np.asarray(v, dtype=np.float64)
    return PointForm(v.shape[0], 1, v)


def _merge_sign(a: tuple[int, ...], b: tuple[int, ...]) -> float:
    inv = sum(1 for x in a for y in b if y < x)
    return -1.0 if inv % 2 else 1.0


def wedge(a: PointForm, b: PointForm) -> PointForm:
    """Wedge product of two forms on the same R^n."""
    if a.n != b.n:
        raise ValueError(f"ambient dimension mismatch: {a.n} vs {b.n}")
    n, p, q = a.n, a.p, b.p
    if p + q > n:
        raise ValueError(f"wedge degree {p}+{q} exceeds ambient dimension {n}")
    out = np.zeros(dim_forms(n, p + q))
    rank_out = _rank_of(n, p + q)
    ia, ib = index_list(n, p), index_list(n, q)
    for ra, A in enumerate(ia):
        ca = a.coeffs[ra]
        if ca == 0.0:
            continue
        sa = set(A)
        for rb, B in enumerate(ib):
            if sa & set(B):
                continue
            cb = b.coeffs[rb]
            if cb == 0.0:
                continue
            merged = tuple(sorted(A + B))
            out[rank_out[merged]] += _merge_sign(A, B) * ca * cb
    return PointForm(n, p + q, out)


def interior(v: np.ndarray, g: PointForm) -> PointForm:
    """Interior product (contraction) v _| g; degree drops by one.

    ``(v _| g)_K = sum_j v_j g_{jK}`` with the antisymmetric convention.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (g.n,):
        raise ValueError(f"vector has shape {v.shape}, expected ({g.n},)")
    if g.p == 0:
        raise ValueError("cannot contract a 0-form")
    G = _lift(g.n, g.p, g.coeffs)
    return PointForm(g.n, g.p - 1, v @ G)


def _check_sym(theta: np.ndarray, n: Optional[int] = None) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError(f"theta must be square, got shape {theta.shape}")
    if n is not None and theta.shape[0] != n:
        raise ValueError(f"theta is {theta.shape[0]}x{theta.shape[0]}, expected {n}x{n}")
    if not np.allclose(theta, theta.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(theta).max())):
        raise ValueError("theta must be symmetric")
    return 0.5 * (theta + theta.T)


def quadform_action(theta: np.ndarray, g: PointForm) -> PointForm:
    """Apply the operator induced by ``theta`` to the p-form ``g``.

    This realizes ``sum_{j,k} theta[j,k] omega^k ^ (e_j _| g)`` and is
    self-adjoint for the Euclidean pairing.
    """
    theta = _check_sym(theta, g.n)
    if g.p == 0:
        return PointForm.zero(g.n, 0)
    n, p = g.n, g.p
    G = _lift(n, p, g.coeffs)          # G[j, K] = g_{jK}
    H = theta @ G                      # H[k, K] = sum_j theta_{kj} g_{jK}
    pos, sgn = _insertion_table(n, p)
    out = np.zeros(dim_forms(n, p))
    valid = pos >= 0
    np.add.at(out, pos[valid], (sgn * H)[valid])
    return PointForm(n, p, out)


def pairing_quadratic(theta: np.ndarray, g: PointForm) -> float:
    """Direct-sum evaluation of ``<A_theta g, g>``: theta_jk g_jK g_kK.

    Independent route from :func:`quadform_action` followed by
    :meth:`PointForm.inner`; the two agree identically and tests pin that.
    """
    theta = _check_sym(theta, g.n)
    if g.p == 0:
        return 0.0
    G = _lift(g.n, g.p, g.coeffs)
    return float(np.einsum("jk,jK,kK->", theta, G, G))


def quadform_matrix(theta: np.ndarray, n: int, p: int) -> np.ndarray:
    """Dense matrix of the induced operator on p-forms (C(n,p) square)."""
    theta = _check_sym(theta, n)
    m = dim_forms(n, p)
    out = np.zeros((m, m))
    for r in range(m):
        e = np.zeros(m)
        e[r] = 1.0
        out[:, r] = quadform_action(theta, PointForm(n, p, e)).coeffs
    return out


@dataclass
class FormSpectrum:
    """Spectrum of the induced operator on p-forms.

    ``values[r]`` is the eigenvalue attached to the multi-index
    ``indices[r]`` *in the eigenbasis of theta* (base eigenvalues ascending):
    the sum of the selected base eigenvalues.  The associated eigenforms are
    wedges of the corresponding base eigenvectors.
    """

    n: int
    p: int
    base_values: np.ndarray          # (n,) ascending
    base_vectors: np.ndarray         # (n, n) columns
    values: np.ndarray               # (C(n,p),) sums over indices
    indices: tuple[tuple[int, ...], ...]

    def min_value(self) -> float:
        return float(self.values.min()) if self.values.size else 0.0


def quadform_eigen(theta: np.ndarray, p: int) -> FormSpectrum:
    """Eigenvalues of the induced operator: sums of theta's eigenvalues.

    Each increasing multi-index ``J`` (into the ascending eigenvalues of
    ``theta``) contributes ``sum_{j in J} lambda_j``.
    """
    theta = _check_sym(theta)
    n = theta.shape[0]
    _check_np(n, p)
    w, V = np.linalg.eigh(theta)
    idx = index_list(n, p)
    vals = np.array([sum(w[j - 1] for j in J) for J in idx])
    return FormSpectrum(n=n, p=p, base_values=w, base_vectors=V,
                        values=vals, indices=idx)


def quadform_pinv(theta: np.ndarray, f: PointForm, *,
                  kernel_tol: float = 1e-12,
                  membership_tol: float = 1e-8) -> PointForm:
    """Pseudo-inverse of the induced operator applied to ``f``.

    Requires ``f`` to lie in the image up to ``membership_tol`` (relative);
    otherwise :class:`MembershipError` reports the out-of-image residual.
    Eigenvalues below ``kernel_tol`` times the spectral radius are treated
    as kernel.
    """
    theta = _check_sym(theta, f.n)
    M = quadform_matrix(theta, f.n, f.p)
    w, V = np.linalg.eigh(M)
    c = V.T @ f.coeffs
    scale = float(np.abs(w).max()) if w.size else 0.0
    if scale == 0.0:
        kernel = np.ones_like(w, dtype=bool)
    else:
        kernel = np.abs(w) <= kernel_tol * scale
    fnorm = f.norm()
    res = float(np.linalg.norm(c[kernel]))
    if res > membership_tol * max(fnorm, 1e-300):
        raise MembershipError(
            f"form lies outside the operator image: residual {res:.3e} "
            f"(relative {res / max(fnorm, 1e-300):.3e})",
            residual=res, rel_residual=res / max(fnorm, 1e-300))
    inv = np.zeros_like(w)
    inv[~kernel] = 1.0 / w[~kernel]
    return PointForm(f.n, f.p, V @ (c * inv))


@dataclass
class InverseBoundReport:
    """Result of the inverse-pairing upper bound check."""

    lhs: float            # <A_theta^{-1} g, g>
    rhs: float            # (1/p^2) * (theta^{-1})_jk g_jK g_kK
    ok: bool
    slack: float          # rhs - lhs (nonnegative when the bound holds)


def inverse_bound_check(theta: np.ndarray, g: PointForm, *,
                        tol: float = 1e-12) -> InverseBoundReport:
    """Check ``<A_theta^{-1} g, g> <= (1/p^2) (theta^{-1})_jk g_jK g_kK``.

    ``theta`` must be symmetric positive definite.  The right-hand side is
    the quadratic pairing of the *inverse matrix*, which is the induced
    operator of ``theta^{-1}`` — a genuinely different code path from the
    pseudo-inverse on the left.
    """
    theta = _check_sym(theta, g.n)
    w = np.linalg.eigvalsh(theta)
    if w[0] <= 0.0:
        raise PreconditionError(
            f"theta must be positive definite (min eigenvalue {w[0]:.3e})")
    if g.p == 0:
        return InverseBoundReport(0.0, 0.0, True, 0.0)
    x = quadform_pinv(theta, g)
    lhs = x.inner(g)
    rhs = pairing_quadratic(np.linalg.inv(theta), g) / float(g.p) ** 2
    scale = max(abs(lhs), abs(rhs), 1.0)
    return InverseBoundReport(lhs=lhs, rhs=rhs,
                              ok=lhs <= rhs + tol * scale,
                              slack=rhs - lhs)


@dataclass
class RankOneImageReport:
    """Outcome of the rank-one shift image/inequality battery.

    For ``theta >= tau (x) tau`` (in the p-positive semi-definite sense) and a
    (p-1)-form ``xi``, the wedge ``tau ^ xi`` must lie in the image of the
    induced operator, with

    * ``<A^{-1}(tau ^ xi), tau ^ xi> <= |xi|^2``  (self inequality), and
    * ``<A^{-1} f, tau ^ xi> <= <A^{-1} f, f>^{1/2} |xi|`` for any f in the
      image (cross inequality).
    """

    membership_ok: bool
    membership_residual: float
    self_ok: bool
    self_value: float
    self_bound: float
    cross_ok: Optional[bool]
    cross_value: Optional[float]
    cross_bound: Optional[float]

    @property
    def all_ok(self) -> bool:
        return bool(self.membership_ok and self.self_ok
                    and (self.cross_ok is None or self.cross_ok))


def rank_one_image_check(theta: np.ndarray, tau: np.ndarray, xi: PointForm,
                         f: Optional[PointForm] = None, *,
                         pre_tol: float = 1e-10,
                         slack: float = 1e-10,
                         membership_tol: float = 1e-8) -> RankOneImageReport:
    """Verify the image membership and the two inner-product inequalities
    that a rank-one lower bound on ``theta`` guarantees.

    Raises :class:`PreconditionError` when ``theta - tau (x) tau`` fails
    p-positive semi-definiteness beyond ``pre_tol`` (p = xi.p + 1, measured
    by the smallest sum of p eigenvalues).
    """
    tau = np.asarray(tau, dtype=np.float64)
    theta = _check_sym(theta, xi.n)
    if tau.shape != (xi.n,):
        raise ValueError(f"tau has shape {tau.shape}, expected ({xi.n},)")
    p = xi.p + 1
    if p > xi.n:
        raise ValueError(f"xi degree {xi.p} leaves no room for a {p}-form on R^{xi.n}")
    shifted = theta - np.outer(tau, tau)
    w = np.linalg.eigvalsh(shifted)
    if float(w[:p].sum()) < -pre_tol * (1.0 + float(np.abs(w).max())):
        raise PreconditionError(
            "theta - tau(x)tau is not p-positive semi-definite "
            f"(smallest {p}-eigenvalue sum {w[:p].sum():.3e})")

    target = wedge(oneform(tau), xi)
    xi_norm2 = xi.inner(xi)
    try:
        x = quadform_pinv(theta, target, membership_tol=membership_tol)
        membership_ok, mres = True, 0.0
    except MembershipError as err:
        return RankOneImageReport(
            membership_ok=False, membership_residual=err.residual,
            self_ok=False, self_value=float("nan"), self_bound=xi_norm2,
            cross_ok=None, cross_value=None, cross_bound=None)

    self_value = x.inner(target)
    self_ok = self_value <= xi_norm2 + slack * (1.0 + abs(xi_norm2))

    cross_ok = cross_value = cross_bound = None
    if f is not None:
        y = quadform_pinv(theta, f, membership_tol=membership_tol)
        cross_value = y.inner(target)
        quad = max(y.inner(f), 0.0)
        cross_bound = math.sqrt(quad) * math.sqrt(max(xi_norm2, 0.0))
        cross_ok = cross_value <= cross_bound + slack * (1.0 + abs(cross_bound))

    return RankOneImageReport(
        membership_ok=membership_ok, membership_residual=mres,
        self_ok=bool(self_ok), self_value=float(self_value), self_bound=float(xi_norm2),
        cross_ok=cross_ok, cross_value=cross_value, cross_bound=cross_bound)
