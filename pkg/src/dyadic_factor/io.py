"""JSON formats for operators, vectors, block systems and colorings.

Rectangles are written "j:k,j':k'".  An operator is
``{"depth": N, "entries": [{"row": R, "col": S, "value": v}, ...]}`` with
zero entries omitted; a vector uses ``{"rect": R, "value": v}`` entries.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp

from .blocks import BlockBasis
from .combinatorics import Coloring
from .dyadic import DyadicRectangle, dimension, layout, order_index
from .errors import DyadicFactorError, MalformedInput
from .haar import HaarOperator, HaarVector
from .quasidiag import BlockSystem


def _jsonable(obj: Any):
    """Fallback encoder for numpy scalars/arrays and rationals."""
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def dumps(data, indent: int | None = 2) -> str:
    return json.dumps(data, indent=indent, default=_jsonable, sort_keys=False)


def loads(text: str, source: str = "<input>"):
    """json.loads with the error position in the diagnostics."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}",
                             {"source": source, "line": exc.lineno, "column": exc.colno,
                              "position": exc.pos}) from None


def read_json(path) -> Any:
    p = Path(path)
    return loads(p.read_text(), str(p))


def write_json(path, data, indent: int | None = 2) -> None:
    Path(path).write_text(dumps(data, indent) + "\n")


def _rect(s, where: str) -> DyadicRectangle:
    try:
        return DyadicRectangle.parse(s)
    except (DyadicFactorError, ValueError, TypeError, AttributeError) as exc:
        raise MalformedInput(f"{where}: bad rectangle {s!r}", {"where": where}) from exc


def _require(data, key: str, kind: str):
    if not isinstance(data, dict) or key not in data:
        raise MalformedInput(f"{kind} JSON needs a '{key}' field", {"missing": key})
    return data[key]


# -- operators ---------------------------------------------------------------

def operator_to_json(T: HaarOperator) -> dict:
    lay = layout(T.depth)
    coo = sp.coo_matrix(T.matrix)
    order = np.lexsort((coo.col, coo.row))
    entries = [{"row": str(lay.rect(int(coo.row[k]))), "col": str(lay.rect(int(coo.col[k]))),
                "value": float(coo.data[k])} for k in order if coo.data[k] != 0]
    return {"depth": T.depth, "entries": entries, "metadata": T.metadata}


def operator_from_json(data: dict) -> HaarOperator:
    depth = _require(data, "depth", "operator")
    entries = _require(data, "entries", "operator")
    try:
        depth = int(depth)
    except (TypeError, ValueError):
        raise MalformedInput("operator depth must be an integer") from None
    dim = dimension(depth)
    rows, cols, vals = [], [], []
    for k, e in enumerate(entries):
        where = f"entries[{k}]"
        if not isinstance(e, dict) or not {"row", "col", "value"} <= e.keys():
            raise MalformedInput(f"{where}: needs row, col, value", {"entry": k})
        r, c = _rect(e["row"], where), _rect(e["col"], where)
        if not (r.in_depth(depth) and c.in_depth(depth)):
            raise MalformedInput(f"{where}: rectangle outside depth {depth}", {"entry": k})
        rows.append(order_index(r) - 1)
        cols.append(order_index(c) - 1)
        vals.append(float(e["value"]))
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return HaarOperator(depth, mat, data.get("metadata"))


# -- vectors -------------------------------------------------------------------

def vector_to_json(f: HaarVector) -> dict:
    return {"depth": f.depth,
            "entries": [{"rect": str(r), "value": float(v)} for r, v in f.items()]}


def vector_from_json(data: dict) -> HaarVector:
    depth = int(_require(data, "depth", "vector"))
    coef = {}
    for k, e in enumerate(_require(data, "entries", "vector")):
        where = f"entries[{k}]"
        if not isinstance(e, dict) or not {"rect", "value"} <= e.keys():
            raise MalformedInput(f"{where}: needs rect, value", {"entry": k})
        coef[_rect(e["rect"], where)] = float(e["value"])
    return HaarVector.from_dict(depth, coef)


# -- block systems and colorings ---------------------------------------------

def system_to_json(sys: BlockBasis) -> dict:
    return sys.to_json()


def system_from_json(data: dict) -> BlockBasis:
    _require(data, "blocks", "system")
    _require(data, "depth", "system")
    try:
        return BlockSystem.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad block system: {exc}") from exc


def coloring_from_json(data, depth: int | None = None) -> Coloring:
    """A list of rectangles, or {"depth": n, "members": [...]}."""
    if isinstance(data, dict):
        members = _require(data, "members", "coloring")
        depth = int(data.get("depth", depth if depth is not None else -1))
    else:
        members = data
    rects = [_rect(s, f"members[{k}]") for k, s in enumerate(members)]
    if depth is None or depth < 0:
        depth = max((max(r.x.level, r.y.level) for r in rects), default=0)
    return Coloring(depth, rects)


def coloring_to_json(c: Coloring) -> dict:
    return {"depth": c.depth, "members": [str(r) for r in c.members()]}


__all__ = [
    "dumps", "loads", "read_json", "write_json",
    "operator_to_json", "operator_from_json", "vector_to_json", "vector_from_json",
    "system_to_json", "system_from_json", "coloring_from_json", "coloring_to_json",
]
