"""Randomized invariant suites behind the ``verify`` command.

Each check draws seeded random instances, measures the worst deviation
from an identity that holds exactly in the algebra, and passes when that
deviation is within tolerance.  Every instance seed is an integer that
reproduces the instance via the public constructors, and failing
instances are listed in the report.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from . import malliavin as mal
from .chaos import (
    ChaosExpansion,
    derivative,
    divergence,
    evaluate,
    expectation,
    hermite,
    l2_inner,
    multiply,
)
from .mc import estimate_expected_det, estimate_moment, sample_gaussian, sample_gaussian_block
from .tensor import (
    Tensor,
    basis_tensor,
    contract,
    hat_contract,
    inner,
    norm,
    random_symmetric,
    slice_tensor,
    symmetrize,
    tensor_product,
)

__all__ = ["CheckResult", "VerifyConfig", "SUITES", "run_suites", "anchor_pair"]


@dataclass(frozen=True)
class VerifyConfig:
    dim: int = 3
    max_order: int = 4
    trials: int = 20
    samples: int = 20000
    seed: int = 0
    tol_rel: float = 1e-9
    tol_abs: float = 1e-12


@dataclass
class CheckResult:
    suite: str
    check: str
    seed: int
    trials: int
    observed: float
    expected: float
    tolerance: float
    passed: bool
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def instance_seed(base: int, salt: int, i: int) -> int:
    """Deterministic per-instance seed, loggable and replayable as an int."""
    ss = np.random.SeedSequence([base, salt, i])
    return int(ss.generate_state(1, np.uint64)[0])


def anchor_pair() -> mal.MalliavinPair:
    """The worked d=2, n=m=2 pair with E det = 12 at k=1 and det C = 2."""
    f = basis_tensor(2, (0, 0))
    g = symmetrize(basis_tensor(2, (0, 1)))
    return mal.MalliavinPair(f, g)


def _rel_err(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


class _Recorder:
    """Tracks the worst deviation and which instances exceeded tolerance."""

    def __init__(self, tolerance: float):
        self.tolerance = tolerance
        self.worst = 0.0
        self.failures: list[str] = []

    def add(self, deviation: float, context: str) -> None:
        if deviation > self.worst:
            self.worst = deviation
        if not deviation <= self.tolerance:
            self.failures.append(context)

    def result(self, suite: str, check: str, seed: int, trials: int) -> CheckResult:
        return CheckResult(
            suite=suite,
            check=check,
            seed=seed,
            trials=trials,
            observed=self.worst,
            expected=0.0,
            tolerance=self.tolerance,
            passed=not self.failures,
            failures=self.failures[:10],
        )


# -- tensor suite -------------------------------------------------------------


def check_slice_reassembly(cfg: VerifyConfig) -> CheckResult:
    """Summing sliced contractions over a shared multi-index collapses the
    slices back into a deeper contraction of the full tensors."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 1, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        m = int(rng.integers(1, cfg.max_order + 1))
        f = random_symmetric(d, n, seed)
        g = random_symmetric(d, m, seed + 1)
        for k in range(0, min(n, m) + 1):
            for r in range(0, min(n, m) - k + 1):
                total = Tensor.zeros(d, n + m - 2 * k - 2 * r, symmetric=False)
                for idx in itertools.product(range(d), repeat=k):
                    total = total + contract(
                        slice_tensor(f, idx), slice_tensor(g, idx), r
                    )
                direct = contract(f, g, r + k)
                dev = float(
                    np.max(np.abs(total.coeffs - direct.coeffs))
                ) / max(1.0, float(np.max(np.abs(direct.coeffs))))
                rec.add(dev, f"d={d} n={n} m={m} k={k} r={r} seed={seed}")
    return rec.result("tensor", "slice_reassembly", cfg.seed, cfg.trials)


def check_contraction_swap(cfg: VerifyConfig) -> CheckResult:
    """<f x_{n-r} h, g x_{m-r} l> = <f x_r g, h x_r l>."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 2, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        m = int(rng.integers(1, cfg.max_order + 1))
        f = random_symmetric(d, n, seed)
        h = random_symmetric(d, n, seed + 1)
        g = random_symmetric(d, m, seed + 2)
        ell = random_symmetric(d, m, seed + 3)
        for r in range(0, min(n - 1, m - 1) + 1):
            lhs = inner(contract(f, h, n - r), contract(g, ell, m - r))
            rhs = inner(contract(f, g, r), contract(h, ell, r))
            rec.add(_rel_err(lhs, rhs), f"d={d} n={n} m={m} r={r} seed={seed}")
    return rec.result("tensor", "contraction_swap", cfg.seed, cfg.trials)


def check_symmetrized_product_inner(cfg: VerifyConfig) -> CheckResult:
    """<sym(f x g), sym(l x h)> expands over contractions of the four tensors."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 3, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        m = int(rng.integers(1, cfg.max_order + 1))
        f = random_symmetric(d, n, seed)
        h = random_symmetric(d, n, seed + 1)
        g = random_symmetric(d, m, seed + 2)
        ell = random_symmetric(d, m, seed + 3)
        lhs = inner(symmetrize(tensor_product(f, g)), symmetrize(tensor_product(ell, h)))
        total = 0.0
        for r in range(0, min(n, m) + 1):
            total += (
                math.comb(n, r)
                * math.comb(m, r)
                * inner(contract(f, ell, r), contract(h, g, r))
            )
        rhs = math.factorial(m) * math.factorial(n) / math.factorial(m + n) * total
        rec.add(_rel_err(lhs, rhs), f"d={d} n={n} m={m} seed={seed}")
    return rec.result("tensor", "symmetrized_product_inner", cfg.seed, cfg.trials)


def check_hat_expansion(cfg: VerifyConfig) -> CheckResult:
    """<sym(f x_r g), sym(l x_r h)> expands over the quadruple contractions."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 4, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        m = int(rng.integers(1, cfg.max_order + 1))
        f = random_symmetric(d, n, seed)
        h = random_symmetric(d, n, seed + 1)
        g = random_symmetric(d, m, seed + 2)
        ell = random_symmetric(d, m, seed + 3)
        for r in range(0, min(n - 1, m - 1) + 1):
            lhs = inner(symmetrize(contract(f, g, r)), symmetrize(contract(ell, h, r)))
            total = 0.0
            for s in range(0, min(n - r, m - r) + 1):
                total += (
                    math.comb(n - r, s)
                    * math.comb(m - r, s)
                    * hat_contract(f, g, ell, h, r, s)
                )
            rhs = (
                math.factorial(n - r)
                * math.factorial(m - r)
                / math.factorial(m + n - 2 * r)
                * total
            )
            rec.add(_rel_err(lhs, rhs), f"d={d} n={n} m={m} r={r} seed={seed}")
    return rec.result("tensor", "hat_expansion", cfg.seed, cfg.trials)


def check_hat_swap(cfg: VerifyConfig) -> CheckResult:
    """Exchanging the roles (g, r) <-> (l, s) leaves the hat contraction fixed."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 5, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        m = int(rng.integers(1, cfg.max_order + 1))
        f = random_symmetric(d, n, seed)
        h = random_symmetric(d, n, seed + 1)
        g = random_symmetric(d, m, seed + 2)
        ell = random_symmetric(d, m, seed + 3)
        for r in range(0, min(n, m) + 1):
            for s in range(0, min(n, m) - r + 1):
                lhs = hat_contract(f, g, ell, h, r, s)
                rhs = hat_contract(f, ell, g, h, s, r)
                rec.add(_rel_err(lhs, rhs), f"d={d} n={n} m={m} r={r} s={s} seed={seed}")
    return rec.result("tensor", "hat_swap", cfg.seed, cfg.trials)


def check_symmetrize_projection(cfg: VerifyConfig) -> CheckResult:
    """symmetrize is idempotent and norm non-increasing."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 6, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(0, cfg.max_order + 1))
        raw = Tensor(d, n, rng.standard_normal((d,) * n))
        s1 = symmetrize(raw)
        s2 = symmetrize(Tensor(d, n, s1.coeffs))
        dev = float(np.max(np.abs(s1.coeffs - s2.coeffs))) if n else 0.0
        rec.add(dev / max(1.0, norm(s1)), f"d={d} n={n} seed={seed} idempotence")
        excess = norm(s1) - norm(raw)
        rec.add(max(excess, 0.0) / max(1.0, norm(raw)), f"d={d} n={n} seed={seed} norm")
    return rec.result("tensor", "symmetrize_projection", cfg.seed, cfg.trials)


# -- chaos suite --------------------------------------------------------------


def check_product_pointwise(cfg: VerifyConfig) -> CheckResult:
    """The product formula is a polynomial identity: it holds at every point."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 11, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        m = int(rng.integers(1, cfg.max_order + 1))
        F = ChaosExpansion.integral(random_symmetric(d, n, seed))
        G = ChaosExpansion.integral(random_symmetric(d, m, seed + 1))
        pts = rng.standard_normal((50, d))
        lhs = evaluate(multiply(F, G), pts)
        rhs = evaluate(F, pts) * evaluate(G, pts)
        dev = float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))))
        rec.add(dev, f"d={d} n={n} m={m} seed={seed}")
    return rec.result("chaos", "product_pointwise", cfg.seed, cfg.trials)


def check_isometry(cfg: VerifyConfig) -> CheckResult:
    """E[I_n(f) I_m(g)] is 0 for n != m and n! <f, g> for n = m."""
    rec = _Recorder(1e-12)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 12, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        m = int(rng.integers(1, cfg.max_order + 1))
        f = random_symmetric(d, n, seed)
        g = random_symmetric(d, m, seed + 1)
        F, G = ChaosExpansion.integral(f), ChaosExpansion.integral(g)
        observed = expectation(multiply(F, G))
        target = math.factorial(n) * inner(f, g) if n == m else 0.0
        rec.add(_rel_err(observed, target), f"d={d} n={n} m={m} seed={seed}")
        cross = l2_inner(F, G)
        rec.add(_rel_err(cross, target), f"l2 d={d} n={n} m={m} seed={seed}")
    return rec.result("chaos", "isometry", cfg.seed, cfg.trials)


def check_divergence_identity(cfg: VerifyConfig) -> CheckResult:
    """divergence(derivative(I_n(f), 1)) = n I_n(f), tensor by tensor."""
    rec = _Recorder(1e-12)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 13, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, max(cfg.max_order, 5) + 1))
        f = random_symmetric(d, n, seed)
        F = ChaosExpansion.integral(f)
        back = divergence(derivative(F, 1))
        target = n * f.coeffs
        got = back.terms[n].coeffs if n in back.terms else np.zeros_like(target)
        dev = float(np.max(np.abs(got - target))) / max(
            1.0, float(np.max(np.abs(target)))
        )
        extra = [k for k in back.terms if k != n]
        if extra:
            dev = max(dev, 1.0)
        rec.add(dev, f"d={d} n={n} seed={seed}")
    return rec.result("chaos", "divergence_identity", cfg.seed, cfg.trials)


def check_derivative_finite_difference(cfg: VerifyConfig) -> CheckResult:
    """First-derivative coordinates match central differences of evaluate."""
    rec = _Recorder(1e-5)
    step = 1e-5
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 14, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        F = ChaosExpansion.integral(random_symmetric(d, n, seed)) + ChaosExpansion.constant(
            d, float(rng.standard_normal())
        )
        dF = derivative(F, 1)
        xi = rng.standard_normal(d)
        for j in range(d):
            up, down = xi.copy(), xi.copy()
            up[j] += step
            down[j] -= step
            fd = (evaluate(F, up) - evaluate(F, down)) / (2 * step)
            an = evaluate(dF[(j,)], xi)
            rec.add(_rel_err(an, fd), f"d={d} n={n} j={j} seed={seed}")
    return rec.result("chaos", "derivative_finite_difference", cfg.seed, cfg.trials)


def check_hermite_orthonormality(cfg: VerifyConfig) -> CheckResult:
    """Quadrature: E[H_a(xi) H_b(xi)] = delta_ab a! under the standard normal."""
    rec = _Recorder(1e-9)
    nodes, weights = hermegauss(24)
    weights = weights / math.sqrt(2 * math.pi)
    top = max(cfg.max_order, 6)
    for a in range(top + 1):
        for b in range(a, top + 1):
            ha = np.asarray(hermite(a, nodes))
            hb = np.asarray(hermite(b, nodes))
            observed = float(np.sum(weights * ha * hb))
            target = math.factorial(a) if a == b else 0.0
            rec.add(
                abs(observed - target) / max(1.0, abs(target)), f"a={a} b={b}"
            )
    return rec.result("chaos", "hermite_orthonormality", cfg.seed, (top + 1) ** 2)


# -- malliavin suite -----------------------------------------------------------


def check_anchor_values(cfg: VerifyConfig) -> CheckResult:
    """Hand-verified values of the worked pair: terms 8 + 4, E det 12, det C 2."""
    rec = _Recorder(1e-12)
    pair = anchor_pair()
    b = mal.expected_det_closed_form(pair, 1)
    rec.add(_rel_err(b.t0, 8.0), "t0")
    rec.add(_rel_err(b.tr[0], 4.0), "t1")
    rec.add(_rel_err(b.closed_form, 12.0), "closed_form")
    rec.add(_rel_err(b.symbolic, 12.0), "symbolic")
    rec.add(_rel_err(mal.cov_det(pair), 2.0), "cov_det")
    rec.add(_rel_err(mal.expected_det(pair, 2), 8.0), "k=n reduces to n!^2 det C")
    ineq = mal.covariance_inequality(pair)
    rec.add(_rel_err(ineq.lhs, 12.0), "inequality lhs")
    rec.add(_rel_err(ineq.rhs, 8.0), "inequality rhs")
    rec.add(
        _rel_err(mal.sum_of_squares_eval(pair, 1, np.array([1.0, 0.0])), 4.0),
        "pointwise value at (1, 0)",
    )
    return rec.result("malliavin", "anchor_values", cfg.seed, 1)


def check_closed_vs_symbolic(cfg: VerifyConfig) -> CheckResult:
    """Closed form against the chaos-arithmetic oracle at every valid k."""
    rec = _Recorder(1e-8)
    top = min(cfg.max_order, 4)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 21, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, top + 1))
        m = int(rng.integers(1, top + 1))
        pair = mal.random_pair(d, n, m, seed)
        for k in range(1, min(n, m) + 1):
            closed = mal.expected_det(pair, k)
            symbolic = mal.expected_det_chaos(pair, k)
            dev = abs(closed - symbolic) / (1.0 + abs(symbolic))
            rec.add(dev, f"d={d} n={n} m={m} k={k} seed={seed}")
    return rec.result("malliavin", "closed_vs_symbolic", cfg.seed, cfg.trials)


def check_sum_of_squares_pointwise(cfg: VerifyConfig) -> CheckResult:
    """The squared-minor evaluation equals the evaluated symbolic determinant."""
    rec = _Recorder(cfg.tol_rel)
    top = min(cfg.max_order, 3)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 22, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, top + 1))
        m = int(rng.integers(1, top + 1))
        pair = mal.random_pair(d, n, m, seed)
        pts = rng.standard_normal((20, d))
        for k in range(1, min(n, m) + 1):
            sos = mal.sum_of_squares_eval(pair, k, pts)
            sym = evaluate(mal.det_chaos(pair, k), pts)
            gram = mal.det_gram_eval(pair, k, pts)
            # compare against the polynomial's magnitude on the sample;
            # per-point quotients degenerate at roots of the determinant
            scale = max(1.0, float(np.max(np.abs(sym))))
            rec.add(
                float(np.max(np.abs(sos - sym))) / scale,
                f"sos d={d} n={n} m={m} k={k} seed={seed}",
            )
            rec.add(
                float(np.max(np.abs(gram - sym))) / scale,
                f"gram d={d} n={n} m={m} k={k} seed={seed}",
            )
            if np.any(sos < 0):
                rec.add(1.0, f"negative sos d={d} n={n} m={m} k={k} seed={seed}")
    return rec.result("malliavin", "sum_of_squares_pointwise", cfg.seed, cfg.trials)


def check_term_nonnegativity(cfg: VerifyConfig) -> CheckResult:
    """Each correction term is a sum of squares, so never meaningfully negative."""
    rec = _Recorder(1e-10)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 23, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        m = int(rng.integers(1, cfg.max_order + 1))
        pair = mal.random_pair(d, n, m, seed)
        scale = _det_scale(pair)
        for k in range(1, min(n, m) + 1):
            b = mal.expected_det_closed_form(pair, k)
            for r, v in enumerate(b.tr, start=1):
                rec.add(max(-v, 0.0) / scale, f"T_{r} d={d} n={n} m={m} k={k} seed={seed}")
            rec.add(max(-b.t0, 0.0) / scale, f"T_0 d={d} n={n} m={m} k={k} seed={seed}")
            rec.add(
                max(-b.closed_form, 0.0) / scale,
                f"closed d={d} n={n} m={m} k={k} seed={seed}",
            )
    return rec.result("malliavin", "term_nonnegativity", cfg.seed, cfg.trials)


def _det_scale(pair: mal.MalliavinPair) -> float:
    return max(
        1.0,
        math.factorial(pair.n) ** 2
        * math.factorial(pair.m) ** 2
        * inner(pair.f, pair.f)
        * inner(pair.g, pair.g),
    )


def check_direct_term_agreement(cfg: VerifyConfig) -> CheckResult:
    """tr_term matches its defining squared-minor form, and t0 the r=0 case."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 24, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, min(cfg.dim, 3) + 1))
        n = int(rng.integers(1, min(cfg.max_order, 3) + 1))
        m = int(rng.integers(1, min(cfg.max_order, 3) + 1))
        pair = mal.random_pair(d, n, m, seed)
        for k in range(1, min(n, m) + 1):
            direct0 = mal.tr_term_direct(pair, k, 0)
            rec.add(
                _rel_err(direct0, mal.t0_term(pair, k)),
                f"r=0 d={d} n={n} m={m} k={k} seed={seed}",
            )
            for r in range(1, min(n - k, m - k) + 1):
                rec.add(
                    _rel_err(mal.tr_term_direct(pair, k, r), mal.tr_term(pair, k, r)),
                    f"r={r} d={d} n={n} m={m} k={k} seed={seed}",
                )
    return rec.result("malliavin", "direct_term_agreement", cfg.seed, cfg.trials)


def check_top_term_formula(cfg: VerifyConfig) -> CheckResult:
    """For n = m the top correction term reduces to two contraction pairings,
    and at k = n the whole determinant reduces to n!^2 det C."""
    rec = _Recorder(cfg.tol_rel)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 25, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(2, cfg.max_order + 1))
        pair = mal.random_pair(d, n, n, seed)
        f, g = pair.f, pair.g
        for k in range(1, n):
            r = n - k
            got = mal.tr_term(pair, k, r)
            lead = math.factorial(n) ** 4 / math.factorial(n - k) ** 2
            c_fg = contract(f, g, r)
            c_gf = contract(g, f, r)
            want = lead * (inner(c_fg, c_fg) - inner(c_fg, c_gf))
            rec.add(_rel_err(got, want), f"top r d={d} n={n} k={k} seed={seed}")
        reduced = mal.expected_det(pair, n)
        rec.add(
            _rel_err(reduced, math.factorial(n) ** 2 * mal.cov_det(pair)),
            f"k=n d={d} n={n} seed={seed}",
        )
    return rec.result("malliavin", "top_term_formula", cfg.seed, cfg.trials)


def check_degeneracy(cfg: VerifyConfig) -> CheckResult:
    """Proportional components zero out every k; generic pairs zero none."""
    rec = _Recorder(1e-12)
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 26, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(1, cfg.max_order + 1))
        f = random_symmetric(d, n, seed)
        c = float(rng.uniform(0.5, 3.0))
        prop = mal.MalliavinPair(f, f.scaled(c))
        scale = _det_scale(prop)
        report = mal.density_check(prop)
        if report.verdict is not mal.Verdict.DEGENERATE or not report.consistent:
            rec.add(1.0, f"verdict d={d} n={n} seed={seed}")
        for k, v in enumerate(report.expected_dets, start=1):
            rec.add(abs(v) / scale, f"prop k={k} d={d} n={n} seed={seed}")
        generic = mal.random_pair(d, n, n, seed)
        greport = mal.density_check(generic)
        if (
            greport.verdict is not mal.Verdict.ABSOLUTELY_CONTINUOUS
            or not greport.consistent
            or min(greport.expected_dets) <= 0
        ):
            rec.add(1.0, f"generic d={d} n={n} seed={seed}")
    return rec.result("malliavin", "degeneracy", cfg.seed, cfg.trials)


def check_covariance_inequality(cfg: VerifyConfig) -> CheckResult:
    """The determinant inequality and its small-order constants 4, 9/4, 16/9."""
    rec = _Recorder(cfg.tol_rel)
    constants = {2: 4.0, 3: 9.0 / 4.0, 4: 16.0 / 9.0}
    for i in range(cfg.trials):
        seed = instance_seed(cfg.seed, 27, i)
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, cfg.dim + 1))
        n = int(rng.integers(2, max(cfg.max_order, 5) + 1))
        pair = mal.random_pair(d, n, n, seed)
        res = mal.covariance_inequality(pair, tol_rel=cfg.tol_rel)
        margin = res.lhs - res.rhs
        scale = max(1.0, abs(res.lhs), abs(res.rhs))
        rec.add(max(-margin, 0.0) / scale, f"d={d} n={n} seed={seed}")
        if n in constants:
            e1 = mal.expected_det(pair, 1)
            bound = constants[n] * mal.cov_det(pair)
            rec.add(
                max(bound - e1, 0.0) / max(1.0, abs(e1), abs(bound)),
                f"direct d={d} n={n} seed={seed}",
            )
    return rec.result("malliavin", "covariance_inequality", cfg.seed, cfg.trials)


# -- mc suite -------------------------------------------------------------------


def check_mc_reproducibility(cfg: VerifyConfig) -> CheckResult:
    """Same (seed, n_samples) gives bit-identical results; blocks agree with
    single draws."""
    rec = _Recorder(0.0)
    pair = anchor_pair()
    a = estimate_expected_det(pair, 1, n_samples=5000, seed=cfg.seed)
    b = estimate_expected_det(pair, 1, n_samples=5000, seed=cfg.seed)
    if (a.mean, a.stderr) != (b.mean, b.stderr):
        rec.add(1.0, "estimate not reproducible")
    block = sample_gaussian_block(3, cfg.seed, 17, 40)
    for i in range(40):
        single = sample_gaussian(3, cfg.seed, 17 + i)
        if not np.array_equal(single, block[i]):
            rec.add(1.0, f"index {17 + i} differs between block and single draws")
    return rec.result("mc", "reproducibility", cfg.seed, 2)


def check_mc_consistency(cfg: VerifyConfig) -> CheckResult:
    """MC means fall within four standard errors of the closed form."""
    rec = _Recorder(0.05)
    reps = 20
    pairs = [anchor_pair(), mal.random_pair(2, 2, 2, instance_seed(cfg.seed, 31, 0))]
    for idx, pair in enumerate(pairs):
        closed = mal.expected_det(pair, 1)
        misses = 0
        for rep in range(reps):
            est = estimate_expected_det(
                pair, 1, n_samples=cfg.samples, seed=instance_seed(cfg.seed, 32, rep)
            )
            if abs(est.mean - closed) > 4 * est.stderr:
                misses += 1
        rec.add(misses / reps, f"pair {idx}: {misses}/{reps} outside 4 stderr")
    return rec.result("mc", "consistency", cfg.seed, reps * len(pairs))


def check_mc_stderr_scaling(cfg: VerifyConfig) -> CheckResult:
    """stderr shrinks like 1/sqrt(samples): ratio between 1e4 and 4e4 near 2.

    The quartic integrand makes a single stderr estimate noisy at 1e4
    samples, so the ratio is averaged over a few derived seeds before
    testing the [1.8, 2.2] band.
    """
    rec = _Recorder(0.2)
    pair = anchor_pair()
    reps = 5
    ratios = []
    for rep in range(reps):
        seed = instance_seed(cfg.seed, 34, rep)
        small = estimate_expected_det(pair, 1, n_samples=10_000, seed=seed)
        large = estimate_expected_det(pair, 1, n_samples=40_000, seed=seed)
        ratios.append(small.stderr / large.stderr)
    mean_ratio = sum(ratios) / reps
    rec.add(abs(mean_ratio - 2.0), f"mean ratio {mean_ratio:.3f} over {reps} seeds")
    return rec.result("mc", "stderr_scaling", cfg.seed, reps)


def check_mc_moments(cfg: VerifyConfig) -> CheckResult:
    """Moment estimator recovers the isometry E[I_n(f)^2] = n! ||f||^2."""
    rec = _Recorder(1.0)
    seed = instance_seed(cfg.seed, 33, 0)
    f = random_symmetric(2, 2, seed)
    F = ChaosExpansion.integral(f)
    target = 2.0 * inner(f, f)
    est = estimate_moment(F, 2, n_samples=cfg.samples, seed=seed)
    dev = abs(est.mean - target) / max(4 * est.stderr, 1e-12)
    rec.add(dev, f"second moment seed={seed}")
    est1 = estimate_moment(F, 1, n_samples=cfg.samples, seed=seed)
    rec.add(abs(est1.mean) / max(4 * est1.stderr, 1e-12), f"first moment seed={seed}")
    return rec.result("mc", "moments", cfg.seed, 2)


SUITES = {
    "tensor": (
        check_slice_reassembly,
        check_contraction_swap,
        check_symmetrized_product_inner,
        check_hat_expansion,
        check_hat_swap,
        check_symmetrize_projection,
    ),
    "chaos": (
        check_product_pointwise,
        check_isometry,
        check_divergence_identity,
        check_derivative_finite_difference,
        check_hermite_orthonormality,
    ),
    "malliavin": (
        check_anchor_values,
        check_closed_vs_symbolic,
        check_sum_of_squares_pointwise,
        check_term_nonnegativity,
        check_direct_term_agreement,
        check_top_term_formula,
        check_degeneracy,
        check_covariance_inequality,
    ),
    "mc": (
        check_mc_reproducibility,
        check_mc_consistency,
        check_mc_stderr_scaling,
        check_mc_moments,
    ),
}


def run_suites(cfg: VerifyConfig, suites: list[str]) -> list[CheckResult]:
    if "all" in suites:
        selected = list(SUITES)
    else:
        unknown = [s for s in suites if s not in SUITES]
        if unknown:
            raise ValueError(
                f"unknown suite(s) {unknown}; choose from {sorted(SUITES)} or 'all'"
            )
        selected = suites
    results = []
    for name in selected:
        for check in SUITES[name]:
            results.append(check(cfg))
    return results
