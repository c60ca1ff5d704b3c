"""JSON formats for matrices, Jordan structures and decompositions.

Complex scalars are ``[re, im]`` pairs.  A matrix is
``{"n": n, "entries": [[[re, im], ...], ...]}`` in row-major order and a
structure is ``{"blocks": [{"re": .., "im": .., "size": ..}, ...]}``.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import InputError
from .spectral import JordanStructureSpec, SpectralComponent, SpectralDecomposition


def complex_to_json(c) -> list[float]:
    c = complex(c)
    return [c.real, c.imag]


def complex_from_json(obj) -> complex:
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    if isinstance(obj, (list, tuple)) and len(obj) == 2 and all(isinstance(v, (int, float)) for v in obj):
        return complex(float(obj[0]), float(obj[1]))
    raise InputError(f"expected a number or an [re, im] pair, got {obj!r}")


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    return {"n": int(a.shape[0]), "entries": [[complex_to_json(v) for v in row] for row in a]}


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "entries" not in obj:
        raise InputError("matrix JSON needs an 'entries' field")
    rows = obj["entries"]
    n = obj.get("n", len(rows))
    if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
        raise InputError(f"matrix JSON is not {n}x{n}")
    a = np.array([[complex_from_json(v) for v in row] for row in rows], dtype=np.complex128).reshape(n, n)
    if not np.all(np.isfinite(a)):
        raise InputError("matrix entries must be finite")
    return a


def spec_to_json(spec: JordanStructureSpec) -> dict:
    return {
        "blocks": [{"re": complex(lam).real, "im": complex(lam).imag, "size": int(size)} for lam, size in spec.blocks]
    }


def spec_from_json(obj) -> JordanStructureSpec:
    if not isinstance(obj, dict) or not isinstance(obj.get("blocks"), list):
        raise InputError("structure JSON needs a 'blocks' list")
    blocks = []
    for b in obj["blocks"]:
        try:
            lam = complex(float(b["re"]), float(b.get("im", 0.0)))
            size = b["size"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad block {b!r}") from exc
        if not isinstance(size, int) or isinstance(size, bool) or not math.isfinite(abs(lam)):
            raise InputError(f"bad block {b!r}")
        blocks.append((lam, size))
    return JordanStructureSpec(tuple(blocks))


def decomposition_to_json(dec: SpectralDecomposition) -> dict:
    return {
        "n": dec.n,
        "cond_estimate": dec.cond_estimate,
        "components": [
            {
                "eigenvalue": complex_to_json(c.eigenvalue),
                "index": c.index,
                "projector": matrix_to_json(c.projector),
                "nilpotent": matrix_to_json(c.nilpotent),
            }
            for c in dec.components
        ],
        "structure": None if dec.structure is None else spec_to_json(dec.structure),
        "basis": None if dec.basis is None else matrix_to_json(dec.basis),
    }


def decomposition_from_json(obj) -> SpectralDecomposition:
    try:
        comps = tuple(
            SpectralComponent(
                complex_from_json(c["eigenvalue"]),
                matrix_from_json(c["projector"]),
                matrix_from_json(c["nilpotent"]),
                int(c["index"]),
            )
            for c in obj["components"]
        )
        n = int(obj["n"])
        cond = float(obj.get("cond_estimate", math.nan))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad decomposition JSON: {exc}") from exc
    if not comps or any(c.projector.shape[0] != n for c in comps):
        raise InputError("decomposition components do not match n")
    structure = spec_from_json(obj["structure"]) if obj.get("structure") else None
    basis = matrix_from_json(obj["basis"]) if obj.get("basis") else None
    return SpectralDecomposition(n, comps, cond, structure, basis)


def load_json(path) -> object:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def dumps(obj) -> str:
    """Deterministic JSON text; non-finite floats become strings."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return complex_to_json(obj)
    return obj
