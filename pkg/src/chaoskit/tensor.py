"""Dense tensor algebra over a finite orthonormal basis of R^d.

An order-n tensor is stored as a dense array of d**n coefficients in
row-major multi-index order; order 0 is a single scalar.  All operations
are pure and every :class:`Tensor` is immutable, so values can be shared
freely across threads.

Indices are 0-based.  Classical treatments of Wiener chaos number the
orthonormal basis from 1, so entry ``(j1, ..., jk)`` here corresponds to
``(j1+1, ..., jk+1)`` there.

Contractions pair the *first* r slots of each operand.  For r > 0 this is
only well defined for symmetric operands, which is enforced; symmetry of
an input is tracked by a flag set by the constructions that guarantee it
(:func:`symmetrize`, :func:`random_symmetric`, slicing, ...).
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "basis_tensor",
    "basis_vector",
    "contract",
    "hat_contract",
    "inner",
    "is_symmetric",
    "norm",
    "random_symmetric",
    "slice_tensor",
    "symmetrize",
    "tensor_product",
    "tensors_allclose",
]


@dataclass(frozen=True, eq=False)
class Tensor:
    """Dense order-n coefficient array over a d-dimensional basis.

    Equality is identity; compare values with :func:`tensors_allclose`.

    Parameters
    ----------
    dim : int
        Basis dimension d, at least 1.
    order : int
        Tensor order n, at least 0.
    coeffs : array_like
        d**n coefficients with shape ``(d,) * n``.
    symmetric : bool
        Whether the coefficients are invariant under index permutation.
        Trusted by contraction preconditions; see :func:`is_symmetric`
        for an explicit check.
    """

    dim: int
    order: int
    coeffs: np.ndarray
    symmetric: bool = False

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.order < 0:
            raise ValueError(f"order must be >= 0, got {self.order}")
        arr = np.array(self.coeffs, dtype=np.float64, copy=True)
        expected = (self.dim,) * self.order
        if arr.shape != expected:
            raise ValueError(
                f"coeffs shape {arr.shape} does not match (dim,)*order {expected}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    # -- conveniences ---------------------------------------------------

    def __getitem__(self, idx):
        return self.coeffs[idx]

    def item(self) -> float:
        """Value of an order-0 tensor."""
        if self.order != 0:
            raise ValueError(f"item() requires order 0, got order {self.order}")
        return float(self.coeffs)

    def scaled(self, c: float) -> "Tensor":
        return Tensor(self.dim, self.order, c * self.coeffs, symmetric=self.symmetric)

    def __add__(self, other: "Tensor") -> "Tensor":
        _require_same_shape(self, other)
        return Tensor(
            self.dim,
            self.order,
            self.coeffs + other.coeffs,
            symmetric=self.symmetric and other.symmetric,
        )

    def __sub__(self, other: "Tensor") -> "Tensor":
        return self + other.scaled(-1.0)

    def __mul__(self, c: float) -> "Tensor":
        return self.scaled(float(c))

    __rmul__ = __mul__

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        tag = "symmetric" if self.symmetric else "general"
        return f"Tensor(dim={self.dim}, order={self.order}, {tag})"

    @staticmethod
    def zeros(dim: int, order: int, symmetric: bool = True) -> "Tensor":
        return Tensor(dim, order, np.zeros((dim,) * order), symmetric=symmetric)

    @staticmethod
    def scalar(dim: int, value: float) -> "Tensor":
        return Tensor(dim, 0, np.asarray(float(value)), symmetric=True)


def basis_vector(dim: int, j: int) -> Tensor:
    """Order-1 basis tensor e_j (0-based)."""
    if not 0 <= j < dim:
        raise ValueError(f"basis index {j} out of range [0, {dim})")
    arr = np.zeros(dim)
    arr[j] = 1.0
    return Tensor(dim, 1, arr, symmetric=True)


def basis_tensor(dim: int, indices: Sequence[int]) -> Tensor:
    """Elementary tensor e_{j1} x ... x e_{jk} (not symmetrized)."""
    idx = tuple(int(j) for j in indices)
    for j in idx:
        if not 0 <= j < dim:
            raise ValueError(f"basis index {j} out of range [0, {dim})")
    arr = np.zeros((dim,) * len(idx))
    arr[idx] = 1.0
    sym = len(idx) <= 1 or len(set(idx)) == 1
    return Tensor(dim, len(idx), arr, symmetric=sym)


def _require_same_dim(f: Tensor, g: Tensor) -> None:
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} != {g.dim}")


def _require_same_shape(f: Tensor, g: Tensor) -> None:
    _require_same_dim(f, g)
    if f.order != g.order:
        raise ValueError(f"order mismatch: {f.order} != {g.order}")


# -- permutation-orbit machinery -----------------------------------------
#
# Symmetrization, symmetry checks, and Hermite evaluation all reduce to
# grouping the d**n multi-indices into orbits under index permutation.
# The grouping depends only on (dim, order) and is cached.


class OrbitInfo(NamedTuple):
    inverse: np.ndarray  # flat position -> orbit id, shape (dim**order,)
    counts: np.ndarray  # orbit id -> orbit size, int64
    reps: np.ndarray  # orbit id -> sorted representative index, (n_orbits, order)
    multiplicities: np.ndarray  # orbit id -> per-axis index counts, (n_orbits, dim)


@lru_cache(maxsize=None)
def orbit_info(dim: int, order: int) -> OrbitInfo:
    """Orbit decomposition of the multi-index set [0,d)^n under permutation."""
    if order == 0:
        return OrbitInfo(
            inverse=np.zeros(1, dtype=np.int64),
            counts=np.ones(1, dtype=np.int64),
            reps=np.zeros((1, 0), dtype=np.int64),
            multiplicities=np.zeros((1, dim), dtype=np.int64),
        )
    grid = np.indices((dim,) * order).reshape(order, -1).T  # (d**n, n), C order
    key = np.sort(grid, axis=1)
    powers = dim ** np.arange(order, dtype=np.int64)
    codes = key @ powers
    _, first, inverse, counts = np.unique(
        codes, return_index=True, return_inverse=True, return_counts=True
    )
    reps = key[first]
    mult = np.stack([(reps == i).sum(axis=1) for i in range(dim)], axis=1)
    return OrbitInfo(
        inverse=inverse.astype(np.int64),
        counts=counts.astype(np.int64),
        reps=reps.astype(np.int64),
        multiplicities=mult.astype(np.int64),
    )


def symmetrize(f: Tensor) -> Tensor:
    """Average of f over all permutations of its indices.

    A projection: idempotent, linear, norm non-increasing, and the
    identity on symmetric inputs.
    """
    if f.order <= 1 or f.symmetric:
        if f.symmetric:
            return f
        return Tensor(f.dim, f.order, f.coeffs, symmetric=True)
    info = orbit_info(f.dim, f.order)
    flat = f.coeffs.ravel()
    sums = np.bincount(info.inverse, weights=flat, minlength=len(info.counts))
    out = (sums / info.counts)[info.inverse].reshape(f.coeffs.shape)
    return Tensor(f.dim, f.order, out, symmetric=True)


def is_symmetric(f: Tensor, tol: float = 1e-12) -> bool:
    """Exhaustive numeric symmetry check (relative to the largest entry)."""
    if f.order <= 1:
        return True
    info = orbit_info(f.dim, f.order)
    flat = f.coeffs.ravel()
    means = np.bincount(info.inverse, weights=flat, minlength=len(info.counts))
    means /= info.counts
    scale = max(1.0, float(np.max(np.abs(flat))) if flat.size else 0.0)
    return bool(np.max(np.abs(flat - means[info.inverse])) <= tol * scale)


# -- products and contractions --------------------------------------------


def tensor_product(f: Tensor, g: Tensor) -> Tensor:
    """Outer product f x g of order f.order + g.order."""
    return contract(f, g, 0)


def contract(f: Tensor, g: Tensor, r: int) -> Tensor:
    """Contraction of order r: sum over the first r slots of each operand.

    The result has order ``f.order + g.order - 2r`` with the remaining f
    slots first.  It is generally not symmetric as a whole, but is
    symmetric within the f block and within the g block.
    """
    _require_same_dim(f, g)
    if not 0 <= r <= min(f.order, g.order):
        raise ValueError(
            f"contraction order {r} out of range [0, {min(f.order, g.order)}]"
        )
    if r > 0 and not (f.symmetric and g.symmetric):
        raise ValueError("contraction with r > 0 requires symmetric operands")
    axes = (tuple(range(r)), tuple(range(r)))
    out = np.tensordot(f.coeffs, g.coeffs, axes=axes) if r else np.multiply.outer(
        f.coeffs, g.coeffs
    )
    order = f.order + g.order - 2 * r
    if order <= 1:
        sym = True
    elif f.order - r == 0:
        sym = g.symmetric
    elif g.order - r == 0:
        sym = f.symmetric
    else:
        sym = False
    return Tensor(f.dim, order, out, symmetric=sym)


def inner(f: Tensor, g: Tensor) -> float:
    """Euclidean inner product of the coefficient arrays."""
    _require_same_shape(f, g)
    return float(np.vdot(f.coeffs, g.coeffs))


def norm(f: Tensor) -> float:
    return math.sqrt(max(inner(f, f), 0.0))


def slice_tensor(f: Tensor, indices: Sequence[int]) -> Tensor:
    """Fix the first k indices of a symmetric tensor.

    Returns the order n-k tensor ``f[j1, ..., jk, :, ..., :]``, which is
    symmetric in the remaining slots.  Composes: slicing by i then by j
    equals slicing by the concatenation i + j.
    """
    idx = tuple(int(j) for j in indices)
    if not f.symmetric:
        raise ValueError("slice requires a symmetric tensor")
    if len(idx) > f.order:
        raise ValueError(f"slice length {len(idx)} exceeds order {f.order}")
    for j in idx:
        if not 0 <= j < f.dim:
            raise ValueError(f"slice index {j} out of range [0, {f.dim})")
    if not idx:
        return f
    return Tensor(f.dim, f.order - len(idx), f.coeffs[idx], symmetric=True)


_EINSUM_PATHS: dict = {}


def hat_contract(
    f: Tensor, g: Tensor, ell: Tensor, h: Tensor, r: int, s: int
) -> float:
    """Scalar quadruple contraction of (f x_r g) with (ell x_r h).

    With n = f.order = h.order and m = g.order = ell.order, pairs r slots
    between f and g and between ell and h, s slots between f and ell and
    between g and h, n-r-s slots between f and h, and m-r-s slots between
    g and ell.  Satisfies the swap identity: exchanging (g, r) with
    (ell, s) leaves the value unchanged.
    """
    n, m = f.order, g.order
    if h.order != n or ell.order != m:
        raise ValueError(
            f"order mismatch: expected orders (n, m, m, n) = ({n}, {m}, {m}, {n}), "
            f"got ({f.order}, {g.order}, {ell.order}, {h.order})"
        )
    for t in (g, ell, h):
        _require_same_dim(f, t)
    for t in (f, g, ell, h):
        if not t.symmetric:
            raise ValueError("hat contraction requires symmetric operands")
    if r < 0 or s < 0 or r + s > min(n, m):
        raise ValueError(f"(r, s) = ({r}, {s}) out of range: need r + s <= {min(n, m)}")

    letters = string.ascii_letters
    pos = 0

    def take(k: int) -> str:
        nonlocal pos
        out = letters[pos : pos + k]
        pos += k
        return out

    fg = take(r)  # f <-> g
    lh = take(r)  # ell <-> h
    fl = take(s)  # f <-> ell
    gh = take(s)  # g <-> h
    fh = take(n - r - s)  # f <-> h
    gl = take(m - r - s)  # g <-> ell
    expr = f"{fg}{fl}{fh},{fg}{gh}{gl},{lh}{fl}{gl},{lh}{gh}{fh}->"
    key = (f.dim, expr)
    operands = (f.coeffs, g.coeffs, ell.coeffs, h.coeffs)
    path = _EINSUM_PATHS.get(key)
    if path is None:
        path = np.einsum_path(expr, *operands, optimize="optimal")[0]
        _EINSUM_PATHS[key] = path
    return float(np.einsum(expr, *operands, optimize=path))


def random_symmetric(dim: int, order: int, seed) -> Tensor:
    """Symmetrization of an array of iid standard normal coefficients.

    Deterministic for a given seed (any value accepted by
    ``numpy.random.default_rng``).
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    rng = np.random.default_rng(seed)
    arr = np.asarray(rng.standard_normal((dim,) * order))
    return symmetrize(Tensor(dim, order, arr))


def tensors_allclose(
    f: Tensor, g: Tensor, rel: float = 1e-9, abs_tol: float = 0.0
) -> bool:
    """Entrywise closeness of two tensors of identical shape."""
    _require_same_shape(f, g)
    return bool(np.allclose(f.coeffs, g.coeffs, rtol=rel, atol=abs_tol))
