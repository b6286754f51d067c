"""JSON file formats for tensors, chaos expansions, pairs, and reports.

Tensor files list only nonzero entries; unlisted coefficients are zero.
A tensor stored with "symmetric": true is verified on load and rejected
if the coefficients are not actually symmetric; for non-symmetric files
the loader can be asked to symmetrize instead.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .malliavin import DetBreakdown, MalliavinPair
from .mc import Estimate
from .tensor import Tensor, is_symmetric, symmetrize
from .chaos import ChaosExpansion

__all__ = [
    "SchemaError",
    "breakdown_to_dict",
    "chaos_from_dict",
    "chaos_to_dict",
    "load_chaos",
    "load_pair",
    "load_tensor",
    "pair_from_dict",
    "pair_to_dict",
    "save_chaos",
    "save_pair",
    "save_tensor",
    "tensor_from_dict",
    "tensor_to_dict",
]

PathLike = Union[str, Path]


class SchemaError(ValueError):
    """A JSON document does not match the expected schema."""


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing key '{key}'")
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(f"{where}: '{key}' must be a number")
        return float(value)
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(f"{where}: '{key}' must be an integer")
        return value
    if not isinstance(value, kind):
        raise SchemaError(f"{where}: '{key}' has wrong type {type(value).__name__}")
    return value


# -- tensors -----------------------------------------------------------------


def tensor_to_dict(t: Tensor) -> dict:
    entries = []
    if t.order == 0:
        v = t.item()
        if v != 0.0:
            entries.append({"index": [], "value": v})
    else:
        for idx in np.argwhere(t.coeffs):
            entries.append(
                {"index": [int(j) for j in idx], "value": float(t.coeffs[tuple(idx)])}
            )
    return {
        "dim": t.dim,
        "order": t.order,
        "symmetric": bool(t.symmetric),
        "entries": entries,
    }


def tensor_from_dict(obj: dict, request_symmetrize: bool = False) -> Tensor:
    if not isinstance(obj, dict):
        raise SchemaError("tensor: document must be an object")
    dim = _require(obj, "dim", int, "tensor")
    order = _require(obj, "order", int, "tensor")
    flagged = _require(obj, "symmetric", bool, "tensor")
    entries = _require(obj, "entries", list, "tensor")
    if dim < 1 or order < 0:
        raise SchemaError(f"tensor: invalid dim {dim} or order {order}")
    coeffs = np.zeros((dim,) * order)
    for pos, entry in enumerate(entries):
        where = f"tensor entry {pos}"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: must be an object")
        index = _require(entry, "index", list, where)
        value = _require(entry, "value", float, where)
        if len(index) != order:
            raise SchemaError(f"{where}: index length {len(index)} != order {order}")
        for j in index:
            if not isinstance(j, int) or isinstance(j, bool) or not 0 <= j < dim:
                raise SchemaError(f"{where}: index {index} out of range for dim {dim}")
        if order == 0:
            coeffs = np.asarray(value, dtype=np.float64)
        else:
            coeffs[tuple(index)] = value
    t = Tensor(dim, order, coeffs, symmetric=False)
    if flagged:
        if not is_symmetric(t):
            raise SchemaError("tensor: flagged symmetric but coefficients are not")
        return Tensor(dim, order, coeffs, symmetric=True)
    if request_symmetrize:
        return symmetrize(t)
    return t


def load_tensor(path: PathLike, request_symmetrize: bool = False) -> Tensor:
    return tensor_from_dict(_read_json(path), request_symmetrize)


def save_tensor(t: Tensor, path: PathLike) -> None:
    _write_json(tensor_to_dict(t), path)


# -- chaos expansions ---------------------------------------------------------


def chaos_to_dict(F: ChaosExpansion) -> dict:
    return {
        "dim": F.dim,
        "terms": [
            {"order": k, "tensor": tensor_to_dict(t)}
            for k, t in sorted(F.terms.items())
        ],
    }


def chaos_from_dict(obj: dict) -> ChaosExpansion:
    if not isinstance(obj, dict):
        raise SchemaError("chaos expansion: document must be an object")
    dim = _require(obj, "dim", int, "chaos expansion")
    raw_terms = _require(obj, "terms", list, "chaos expansion")
    terms = {}
    for pos, item in enumerate(raw_terms):
        where = f"chaos term {pos}"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: must be an object")
        order = _require(item, "order", int, where)
        tensor = tensor_from_dict(_require(item, "tensor", dict, where))
        if not tensor.symmetric:
            tensor = symmetrize(tensor)
        if tensor.dim != dim or tensor.order != order:
            raise SchemaError(f"{where}: tensor shape disagrees with dim/order")
        if order in terms:
            raise SchemaError(f"{where}: duplicate order {order}")
        terms[order] = tensor
    return ChaosExpansion(dim, terms)


def load_chaos(path: PathLike) -> ChaosExpansion:
    return chaos_from_dict(_read_json(path))


def save_chaos(F: ChaosExpansion, path: PathLike) -> None:
    _write_json(chaos_to_dict(F), path)


# -- pairs --------------------------------------------------------------------


def pair_to_dict(pair: MalliavinPair, seed: Optional[int] = None) -> dict:
    out = {
        "dim": pair.dim,
        "n": pair.n,
        "m": pair.m,
        "f": tensor_to_dict(pair.f),
        "g": tensor_to_dict(pair.g),
    }
    if seed is not None:
        out["seed"] = seed
    return out


def pair_from_dict(obj: dict) -> MalliavinPair:
    if not isinstance(obj, dict):
        raise SchemaError("pair: document must be an object")
    dim = _require(obj, "dim", int, "pair")
    n = _require(obj, "n", int, "pair")
    m = _require(obj, "m", int, "pair")
    f = tensor_from_dict(_require(obj, "f", dict, "pair"))
    g = tensor_from_dict(_require(obj, "g", dict, "pair"))
    if (f.dim, f.order) != (dim, n) or (g.dim, g.order) != (dim, m):
        raise SchemaError("pair: component shapes disagree with dim/n/m")
    if not (f.symmetric and g.symmetric):
        raise SchemaError("pair: components must be stored as symmetric tensors")
    try:
        return MalliavinPair(f, g)
    except ValueError as exc:
        raise SchemaError(f"pair: {exc}") from exc


def load_pair(path: PathLike) -> MalliavinPair:
    return pair_from_dict(_read_json(path))


def save_pair(pair: MalliavinPair, path: PathLike, seed: Optional[int] = None) -> None:
    _write_json(pair_to_dict(pair, seed=seed), path)


# -- reports ------------------------------------------------------------------


def breakdown_to_dict(b: DetBreakdown) -> dict:
    mc = None
    if b.mc is not None:
        est: Estimate = b.mc
        mc = {
            "mean": est.mean,
            "stderr": est.stderr,
            "samples": est.samples,
            "seed": est.seed,
        }
    return {
        "k": b.k,
        "t0": b.t0,
        "tr": list(b.tr),
        "remainder": b.remainder,
        "closed_form": b.closed_form,
        "symbolic": b.symbolic,
        "mc": mc,
    }


def _read_json(path: PathLike) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc


def _write_json(obj: dict, path: PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
