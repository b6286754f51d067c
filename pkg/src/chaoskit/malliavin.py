"""Iterated Malliavin matrices of a pair of multiple integrals.

For (F, G) = (I_n(f), I_m(g)) the k-th iterated Malliavin matrix is the
2x2 Gram matrix of the k-th derivatives,

    [ ||D^k F||^2       <D^k F, D^k G> ]
    [ <D^k F, D^k G>    ||D^k G||^2    ],

and this module computes its determinant three independent ways:

* symbolically, as exact chaos arithmetic on the Gram entries;
* pointwise, as half the sum of squared 2x2 minors of the derivative
  coordinates (manifestly nonnegative);
* in closed form, as E det = T_0 + sum_{r>=1} T_r with T_0 built from
  contraction norms ||f x_s g||^2 and the T_r built from quadruple
  (hat) contractions.

It also provides the covariance determinant
det C = n!^2 (||f||^2 ||g||^2 - <f, g>^2), the inequality bounding
n^2 det C by a positive combination of expected determinants, and the
density/degeneracy verdict for equal orders: the pair admits a density
iff its components are not proportional, iff every E det of the iterated
matrices is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product as iter_product
from typing import Optional

import numpy as np

from .chaos import (
    ChaosExpansion,
    checked_factorial,
    derivative,
    evaluate,
    l2_inner,
    multiply,
)
from .tensor import (
    Tensor,
    contract,
    hat_contract,
    inner,
    orbit_info,
    random_symmetric,
    slice_tensor,
    symmetrize,
)

__all__ = [
    "CombinatorialCoeffs",
    "DensityReport",
    "DetBreakdown",
    "InequalityResult",
    "MalliavinPair",
    "Verdict",
    "combinatorial_coefficients",
    "cov_det",
    "covariance_inequality",
    "density_check",
    "det_chaos",
    "det_gram_eval",
    "expected_det",
    "expected_det_chaos",
    "expected_det_closed_form",
    "gram_chaos",
    "random_pair",
    "sum_of_squares_eval",
    "t0_term",
    "tr_term",
    "tr_term_direct",
]


@dataclass(frozen=True, eq=False)
class MalliavinPair:
    """The pair (F, G) = (I_n(f), I_m(g)) over a shared d-dimensional basis."""

    f: Tensor
    g: Tensor

    def __post_init__(self) -> None:
        if self.f.dim != self.g.dim:
            raise ValueError(f"dimension mismatch: {self.f.dim} != {self.g.dim}")
        if self.f.order < 1 or self.g.order < 1:
            raise ValueError("component orders must be >= 1")
        if not (self.f.symmetric and self.g.symmetric):
            raise ValueError("components must be symmetric tensors")

    @property
    def dim(self) -> int:
        return self.f.dim

    @property
    def n(self) -> int:
        return self.f.order

    @property
    def m(self) -> int:
        return self.g.order


def random_pair(dim: int, n: int, m: int, seed: int) -> MalliavinPair:
    """Pair with independent random symmetric components, reproducible by seed."""
    ss = np.random.SeedSequence(seed)
    sf, sg = ss.spawn(2)
    return MalliavinPair(random_symmetric(dim, n, sf), random_symmetric(dim, m, sg))


def _check_k(pair: MalliavinPair, k: int) -> None:
    kmax = min(pair.n, pair.m)
    if not 1 <= k <= kmax:
        raise ValueError(f"k = {k} out of range [1, {kmax}]")


# -- exact combinatorial coefficients ---------------------------------------


@dataclass(frozen=True)
class CombinatorialCoeffs:
    """Exact integer values of the three coefficient families.

    alpha scales the direct squared-minor form of T_r, beta its
    hat-contraction form, gamma the contraction-norm differences in the
    covariance inequality (nonnegative while s <= (n-1)/2).
    """

    alpha: int
    beta: int
    gamma: int


def _alpha(n: int, m: int, k: int, r: int) -> int:
    # (n! m! / ((n-k-r)! (m-k-r)! r!))^2 * (n+m-2k-2r)!
    q = math.perm(n, k + r) * math.perm(m, k + r)
    fr = checked_factorial(r)
    if q % fr:
        raise ArithmeticError("coefficient is not an integer; invalid arguments")
    checked_factorial(n)
    checked_factorial(m)
    return (q // fr) ** 2 * checked_factorial(n + m - 2 * k - 2 * r)


def _beta(n: int, m: int, k: int, r: int) -> int:
    # n!^2 m!^2 / ((n-k-r)! (m-k-r)! (r!)^2)
    checked_factorial(n)
    checked_factorial(m)
    checked_factorial(r)
    num = math.factorial(n) ** 2 * math.factorial(m) ** 2
    den = (
        math.factorial(n - k - r)
        * math.factorial(m - k - r)
        * math.factorial(r) ** 2
    )
    if num % den:
        raise ArithmeticError("coefficient is not an integer; invalid arguments")
    return num // den


def _gamma(n: int, s: int) -> int:
    # (n!^2 / ((n-s)! s!))^2 * n * (n-2s)
    checked_factorial(n)
    return (math.comb(n, s) * math.factorial(n)) ** 2 * n * (n - 2 * s)


def combinatorial_coefficients(
    n: int, m: int, k: int, r: int, s: int
) -> CombinatorialCoeffs:
    """Evaluate alpha(k, r), beta(k, r) and gamma(n, s) in exact integers."""
    if not 1 <= k <= min(n, m):
        raise ValueError(f"k = {k} out of range [1, {min(n, m)}]")
    if not 0 <= r <= min(n - k, m - k):
        raise ValueError(f"r = {r} out of range [0, {min(n - k, m - k)}]")
    if not 0 <= s <= n:
        raise ValueError(f"s = {s} out of range [0, {n}]")
    return CombinatorialCoeffs(
        alpha=_alpha(n, m, k, r), beta=_beta(n, m, k, r), gamma=_gamma(n, s)
    )


# -- symbolic route: Gram entries as chaos expansions ------------------------


def gram_chaos(
    pair: MalliavinPair, k: int
) -> tuple[ChaosExpansion, ChaosExpansion, ChaosExpansion]:
    """(||D^k F||^2, <D^k F, D^k G>, ||D^k G||^2) as exact chaos expansions.

    Built by multiplying derivative coordinates and summing over all
    k-multi-indices; coordinates that coincide by permutation symmetry
    are multiplied once and weighted by their orbit size.
    """
    _check_k(pair, k)
    d = pair.dim
    dF = derivative(ChaosExpansion.integral(pair.f), k)
    dG = derivative(ChaosExpansion.integral(pair.g), k)
    info = orbit_info(d, k)
    a = ChaosExpansion.zero(d)
    b = ChaosExpansion.zero(d)
    c = ChaosExpansion.zero(d)
    for rep, count in zip(info.reps, info.counts):
        idx = tuple(int(j) for j in rep)
        eF, eG = dF[idx], dG[idx]
        w = float(count)
        a = a + w * multiply(eF, eF)
        b = b + w * multiply(eF, eG)
        c = c + w * multiply(eG, eG)
    return a, b, c


def det_chaos(pair: MalliavinPair, k: int) -> ChaosExpansion:
    """det of the k-th iterated Malliavin matrix as a chaos expansion."""
    a, b, c = gram_chaos(pair, k)
    return multiply(a, c) - multiply(b, b)


def expected_det_chaos(pair: MalliavinPair, k: int) -> float:
    """Constant term of :func:`det_chaos`, computed without materializing it.

    E[a c - b^2] is evaluated by chaos orthogonality on the Gram entries,
    which avoids product tensors of order up to 2(n+m-2k).
    """
    a, b, c = gram_chaos(pair, k)
    return l2_inner(a, c) - l2_inner(b, b)


# -- pointwise route: sum of squared minors ----------------------------------


def _derivative_values(pair: MalliavinPair, k: int, pts: np.ndarray):
    """Coordinates of D^k F and D^k G at each point, shape (N, d**k) each."""
    d = pair.dim
    dF = derivative(ChaosExpansion.integral(pair.f), k)
    dG = derivative(ChaosExpansion.integral(pair.g), k)
    info = orbit_info(d, k)
    repsF = np.stack(
        [evaluate(dF[tuple(int(j) for j in rep)], pts) for rep in info.reps]
    )
    repsG = np.stack(
        [evaluate(dG[tuple(int(j) for j in rep)], pts) for rep in info.reps]
    )
    return repsF[info.inverse].T, repsG[info.inverse].T


def sum_of_squares_eval(pair: MalliavinPair, k: int, xi):
    """det of the k-th Malliavin matrix at xi via the squared-minor form.

    Returns 1/2 sum_{i, l} (A_i B_l - A_l B_i)^2 over all pairs of
    k-multi-indices, with A, B the derivative coordinates of F, G at xi.
    Nonnegative pointwise by construction, and equal as a polynomial to
    the evaluated symbolic determinant.  Accepts one point (d,) or a
    batch (N, d).
    """
    _check_k(pair, k)
    pts = np.asarray(xi, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != pair.dim:
        raise ValueError(f"points must have shape (d,) or (N, d) with d = {pair.dim}")
    A, B = _derivative_values(pair, k, pts)
    p = A.shape[1]
    out = np.empty(pts.shape[0])
    block = max(1, (1 << 21) // (p * p))  # bound transient (rows, p, p) arrays
    for lo in range(0, pts.shape[0], block):
        a = A[lo : lo + block]
        b = B[lo : lo + block]
        minors = a[:, :, None] * b[:, None, :] - a[:, None, :] * b[:, :, None]
        out[lo : lo + block] = 0.5 * np.einsum("nij,nij->n", minors, minors)
    return float(out[0]) if single else out


def det_gram_eval(pair: MalliavinPair, k: int, xi):
    """2x2 determinant of the evaluated Gram entries (debug cross-check).

    Agrees with :func:`sum_of_squares_eval` as a polynomial but is not
    guaranteed nonnegative under rounding.
    """
    _check_k(pair, k)
    pts = np.asarray(xi, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    A, B = _derivative_values(pair, k, pts)
    det = (A * A).sum(axis=1) * (B * B).sum(axis=1) - (A * B).sum(axis=1) ** 2
    return float(det[0]) if single else det


# -- closed-form route: contraction norms and hat contractions ---------------


def t0_term(pair: MalliavinPair, k: int) -> float:
    """Leading term of E det: weighted contraction-norm differences.

    m!^2 n!^2 / ((m-k)! (n-k)!) * sum_s C(m-k,s) C(n-k,s)
    (||f x_s g||^2 - ||f x_{s+k} g||^2).
    """
    _check_k(pair, k)
    n, m, f, g = pair.n, pair.m, pair.f, pair.g
    lead = (
        checked_factorial(m) ** 2
        * checked_factorial(n) ** 2
        // (math.factorial(m - k) * math.factorial(n - k))
    )
    total = 0.0
    for s in range(min(m - k, n - k) + 1):
        w = math.comb(m - k, s) * math.comb(n - k, s)
        total += w * (_contract_norm2(f, g, s) - _contract_norm2(f, g, s + k))
    return float(lead) * total


def _contract_norm2(f: Tensor, g: Tensor, s: int) -> float:
    c = contract(f, g, s)
    return inner(c, c)


def tr_term(pair: MalliavinPair, k: int, r: int) -> float:
    """Correction term T_r for r >= 1, via quadruple contractions.

    beta(k, r) * sum_s C(n-k-r,s) C(m-k-r,s)
    (hat(f,g,g,f; r,s) - hat(f,g,g,f; r,s+k)).  Nonnegative up to
    rounding: it equals a sum of squared norms (see tr_term_direct).
    """
    _check_k(pair, k)
    n, m, f, g = pair.n, pair.m, pair.f, pair.g
    if not 1 <= r <= min(n - k, m - k):
        raise ValueError(f"r = {r} out of range [1, {min(n - k, m - k)}]")
    beta = _beta(n, m, k, r)
    total = 0.0
    for s in range(min(n - k - r, m - k - r) + 1):
        w = math.comb(n - k - r, s) * math.comb(m - k - r, s)
        total += w * (
            hat_contract(f, g, g, f, r, s) - hat_contract(f, g, g, f, r, s + k)
        )
    return float(beta) * total


def tr_term_direct(pair: MalliavinPair, k: int, r: int) -> float:
    """T_r from its defining squared-minor form (independent of tr_term).

    1/2 alpha(k, r) * sum over all pairs (i, l) of k-multi-indices of
    || sym(f_i x_r g_l) - sym(f_l x_r g_i) ||^2, where f_i is the slice
    of f at i.  Valid for r = 0 too, where it equals t0_term.
    """
    _check_k(pair, k)
    n, m, f, g = pair.n, pair.m, pair.f, pair.g
    if not 0 <= r <= min(n - k, m - k):
        raise ValueError(f"r = {r} out of range [0, {min(n - k, m - k)}]")
    alpha = _alpha(n, m, k, r)
    d = pair.dim
    total = 0.0
    indices = list(iter_product(range(d), repeat=k))
    for i in indices:
        fi, gi = slice_tensor(f, i), slice_tensor(g, i)
        for l in indices:
            fl, gl = slice_tensor(f, l), slice_tensor(g, l)
            diff = symmetrize(contract(fi, gl, r)) - symmetrize(contract(fl, gi, r))
            total += inner(diff, diff)
    return 0.5 * float(alpha) * total


def expected_det(pair: MalliavinPair, k: int) -> float:
    """Closed-form E det of the k-th iterated Malliavin matrix."""
    _check_k(pair, k)
    rmax = min(pair.n - k, pair.m - k)
    return t0_term(pair, k) + sum(tr_term(pair, k, r) for r in range(1, rmax + 1))


@dataclass(frozen=True)
class DetBreakdown:
    """Per-k report: closed-form terms, symbolic oracle, optional MC estimate.

    closed_form = t0 + sum(tr); remainder = sum(tr); each tr is a sum of
    squared norms and so nonnegative up to rounding.
    """

    k: int
    t0: float
    tr: tuple[float, ...]
    remainder: float
    closed_form: float
    symbolic: float
    mc: Optional[object] = None  # mc_engine.Estimate when requested


def expected_det_closed_form(pair: MalliavinPair, k: int) -> DetBreakdown:
    """Full closed-form breakdown of E det, with the symbolic oracle value."""
    _check_k(pair, k)
    t0 = t0_term(pair, k)
    rmax = min(pair.n - k, pair.m - k)
    tr = tuple(tr_term(pair, k, r) for r in range(1, rmax + 1))
    remainder = float(sum(tr))
    return DetBreakdown(
        k=k,
        t0=t0,
        tr=tr,
        remainder=remainder,
        closed_form=t0 + remainder,
        symbolic=expected_det_chaos(pair, k),
    )


# -- covariance determinant, inequality, density verdict ---------------------


def _require_equal_orders(pair: MalliavinPair) -> int:
    if pair.n != pair.m:
        raise ValueError(
            f"equal chaos orders required, got n = {pair.n}, m = {pair.m}"
        )
    return pair.n


def cov_det(pair: MalliavinPair) -> float:
    """det of the covariance matrix: n!^2 (||f||^2 ||g||^2 - <f, g>^2).

    Nonnegative by Cauchy-Schwarz; zero exactly when f and g are
    linearly dependent.
    """
    n = _require_equal_orders(pair)
    nf2 = inner(pair.f, pair.f)
    ng2 = inner(pair.g, pair.g)
    fg = inner(pair.f, pair.g)
    return checked_factorial(n) ** 2 * (nf2 * ng2 - fg * fg)


@dataclass(frozen=True)
class InequalityResult:
    lhs: float
    rhs: float
    holds: bool


def covariance_inequality(pair: MalliavinPair, tol_rel: float = 1e-9) -> InequalityResult:
    """Check the bound on n^2 det C by expected iterated determinants.

    lhs = sum_{s=2}^{floor((n-1)/2)} n(n-2s)/s!^2 * E det^(s)
          + (n-1)^2 * E det^(1),
    rhs = n^2 det C, and holds means lhs >= rhs - tol_rel * scale.
    The sum is empty for n <= 4; for n = 2, 3, 4 the bound reduces to
    E det^(1) >= c_n det C with c_n = 4, 9/4, 16/9.
    """
    n = _require_equal_orders(pair)
    if n < 2:
        raise ValueError(f"the inequality requires order n >= 2, got {n}")
    lhs = (n - 1) ** 2 * expected_det(pair, 1)
    for s in range(2, (n - 1) // 2 + 1):
        w = Fraction(n * (n - 2 * s), math.factorial(s) ** 2)
        lhs += float(w) * expected_det(pair, s)
    rhs = n**2 * cov_det(pair)
    scale = max(1.0, abs(lhs), abs(rhs))
    return InequalityResult(lhs=lhs, rhs=rhs, holds=lhs >= rhs - tol_rel * scale)


class Verdict(str, Enum):
    DEGENERATE = "DEGENERATE"
    ABSOLUTELY_CONTINUOUS = "ABSOLUTELY_CONTINUOUS"


@dataclass(frozen=True)
class DensityReport:
    """Density verdict for equal-order pairs, plus the all-k determinant table.

    DEGENERATE means the law of (F, G) has no two-dimensional density,
    which for equal orders happens exactly when the components are
    proportional.  ``expected_dets[k-1]`` is E det of the k-th iterated
    matrix; ``consistent`` records that they are all at most tol_abs or
    all above it, as the theory requires.
    """

    verdict: Verdict
    cov_det: float
    tol_abs: float
    expected_dets: tuple[float, ...]
    consistent: bool


def default_density_tol(pair: MalliavinPair) -> float:
    """Scale-relative zero threshold: det C grows like n!^2 ||f||^2 ||g||^2."""
    n = _require_equal_orders(pair)
    scale = math.factorial(n) ** 2 * inner(pair.f, pair.f) * inner(pair.g, pair.g)
    return 1e-10 * max(scale, 1e-300)


def density_check(pair: MalliavinPair, tol_abs: Optional[float] = None) -> DensityReport:
    """Degeneracy verdict from det C, cross-tabulated with every E det."""
    n = _require_equal_orders(pair)
    if tol_abs is None:
        tol_abs = default_density_tol(pair)
    elif tol_abs <= 0:
        raise ValueError(f"tol_abs must be > 0, got {tol_abs}")
    c = cov_det(pair)
    dets = tuple(expected_det(pair, k) for k in range(1, n + 1))
    degenerate = c <= tol_abs
    consistent = all(v <= tol_abs for v in dets) or all(v > tol_abs for v in dets)
    return DensityReport(
        verdict=Verdict.DEGENERATE if degenerate else Verdict.ABSOLUTELY_CONTINUOUS,
        cov_det=c,
        tol_abs=tol_abs,
        expected_dets=dets,
        consistent=consistent,
    )
