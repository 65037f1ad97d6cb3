"""Codebook file format: a JSON document with pinned numeric formatting.

Field names are a public contract (see README).  Complex entries are stored
as [re, im] pairs printed with 17 significant digits, which round-trips
float64 exactly; serialization is deterministic, so identical codebooks
yield byte-identical documents.

Member weight vectors are not stored: they are re-derived from the shared
analog matrix, the digital columns and the member's in-composite rotation
(`codebooks.derive_members`), which reproduces them bit-for-bit.
"""

from __future__ import annotations

import json

import numpy as np

from .codebooks import (
    SCHEMES,
    CompositeCodeword,
    HierarchicalCodebook,
    derive_members,
)

__all__ = ["CodebookFormatError", "deserialize", "serialize"]

FORMAT_NAME = "mmw-hier-codebook"
FORMAT_VERSION = 1


class CodebookFormatError(ValueError):
    """Raised for malformed codebook documents, with a field/line diagnostic."""


def _fmt_float(x: float) -> str:
    # %.16e always prints 17 significant digits and parses back exactly
    return "%.16e" % float(x)


def _fmt_number(x) -> str:
    if isinstance(x, bool):
        raise TypeError("booleans have no place in this format")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return _fmt_float(x)


def _emit(obj, lines: list[str], indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines.append("{")
        items = list(obj.items())
        for pos, (key, val) in enumerate(items):
            lines.append(f"\n{pad}  {json.dumps(key)}: ")
            _emit(val, lines, indent + 1)
            if pos < len(items) - 1:
                lines.append(",")
        lines.append(f"\n{pad}}}")
    elif isinstance(obj, (list, tuple)):
        flat = all(isinstance(v, (int, float, np.integer, np.floating))
                   for v in obj)
        if flat:
            lines.append("[" + ", ".join(_fmt_number(v) for v in obj) + "]")
        else:
            lines.append("[")
            for pos, val in enumerate(obj):
                lines.append(f"\n{pad}  ")
                _emit(val, lines, indent + 1)
                if pos < len(obj) - 1:
                    lines.append(",")
            lines.append(f"\n{pad}]")
    elif isinstance(obj, str):
        lines.append(json.dumps(obj))
    else:
        lines.append(_fmt_number(obj))


def _complex_vector(v: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in v]


def serialize(cb: HierarchicalCodebook) -> str:
    """Render a codebook as the canonical text document."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "scheme": cb.scheme,
        "n_antennas": cb.n_antennas,
        "branching": cb.branching,
        "grid_size": int(cb.params.get("grid_size", 0)),
        "gamma_per": float(cb.params.get("gamma_per", 1.0)),
        "layers": [
            {
                "layer": k,
                "composites": [
                    {
                        "index": comp.index,
                        "analog_columns": [
                            _complex_vector(comp.f_rf[:, j])
                            for j in range(comp.f_rf.shape[1])
                        ],
                        "digital_columns": [
                            _complex_vector(comp.f_bb[:, j])
                            for j in range(comp.f_bb.shape[1])
                        ],
                        "members": [
                            {
                                "index": cw.index,
                                "coverage_start": cw.coverage.start,
                                "coverage_width": cw.coverage.width,
                            }
                            for cw in comp.members
                        ],
                    }
                    for comp in cb.layers[k]
                ],
            }
            for k in range(len(cb.layers))
        ],
    }
    lines: list[str] = []
    _emit(doc, lines, 0)
    return "".join(lines) + "\n"


def _expect(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise CodebookFormatError(f"missing field {path}.{key}")
    val = doc[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise CodebookFormatError(f"field {path}.{key} must be a number")
        return float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise CodebookFormatError(
            f"field {path}.{key} must be {kind.__name__}")
    return val


def _parse_complex_vector(raw, n: int, path: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != n:
        raise CodebookFormatError(f"{path} must list {n} complex entries")
    out = np.empty(n, dtype=np.complex128)
    for p, pair in enumerate(raw):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(v, (int, float)) for v in pair)):
            raise CodebookFormatError(f"{path}[{p}] must be a [re, im] pair")
        out[p] = complex(float(pair[0]), float(pair[1]))
    return out


def deserialize(text: str) -> HierarchicalCodebook:
    """Parse a codebook document, validating structure and invariants."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CodebookFormatError(
            f"malformed document at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from None
    if not isinstance(doc, dict):
        raise CodebookFormatError("document root must be an object")
    if doc.get("format") != FORMAT_NAME:
        raise CodebookFormatError(
            f"not a {FORMAT_NAME} document (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise CodebookFormatError(
            f"unsupported format version {doc.get('version')!r}")
    scheme = _expect(doc, "scheme", str, "$")
    if scheme not in SCHEMES:
        raise CodebookFormatError(
            f"unknown scheme tag {scheme!r}; expected one of {SCHEMES}")
    n = _expect(doc, "n_antennas", int, "$")
    branching = _expect(doc, "branching", int, "$")
    grid_size = _expect(doc, "grid_size", int, "$")
    gamma_per = _expect(doc, "gamma_per", float, "$")
    raw_layers = _expect(doc, "layers", list, "$")

    layers: list[list[CompositeCodeword]] = []
    ca_modulus = 1.0 / np.sqrt(n)
    for k, raw_layer in enumerate(raw_layers):
        path = f"$.layers[{k}]"
        if not isinstance(raw_layer, dict):
            raise CodebookFormatError(f"{path} must be an object")
        if _expect(raw_layer, "layer", int, path) != k:
            raise CodebookFormatError(f"{path}.layer must equal {k}")
        raw_comps = _expect(raw_layer, "composites", list, path)
        expected_comps = 1 if k == 0 else branching ** (k - 1)
        if len(raw_comps) != expected_comps:
            raise CodebookFormatError(
                f"{path} must hold {expected_comps} composites, "
                f"found {len(raw_comps)}")
        comps = []
        for c, raw_comp in enumerate(raw_comps, start=1):
            cpath = f"{path}.composites[{c - 1}]"
            if not isinstance(raw_comp, dict):
                raise CodebookFormatError(f"{cpath} must be an object")
            if _expect(raw_comp, "index", int, cpath) != c:
                raise CodebookFormatError(f"{cpath}.index must equal {c}")
            acols = _expect(raw_comp, "analog_columns", list, cpath)
            if not acols:
                raise CodebookFormatError(f"{cpath}.analog_columns is empty")
            f_rf = np.stack(
                [_parse_complex_vector(col, n, f"{cpath}.analog_columns[{j}]")
                 for j, col in enumerate(acols)], axis=1)
            if np.max(np.abs(np.abs(f_rf) - ca_modulus)) > 1e-9:
                raise CodebookFormatError(
                    f"{cpath}.analog_columns violate the constant-amplitude "
                    f"constraint |entry| = 1/sqrt({n})")
            dcols = _expect(raw_comp, "digital_columns", list, cpath)
            expected_members = 1 if k == 0 else branching
            if len(dcols) != expected_members:
                raise CodebookFormatError(
                    f"{cpath}.digital_columns must hold {expected_members} "
                    f"columns, found {len(dcols)}")
            f_bb = np.stack(
                [_parse_complex_vector(col, f_rf.shape[1],
                                       f"{cpath}.digital_columns[{j}]")
                 for j, col in enumerate(dcols)], axis=1)
            members = derive_members(k, c, f_rf, f_bb, branching)
            raw_members = _expect(raw_comp, "members", list, cpath)
            if len(raw_members) != len(members):
                raise CodebookFormatError(
                    f"{cpath}.members must hold {len(members)} entries")
            for cw, raw_cw in zip(members, raw_members):
                mpath = f"{cpath}.members[{cw.index}]"
                if not isinstance(raw_cw, dict):
                    raise CodebookFormatError(f"{mpath} must be an object")
                if _expect(raw_cw, "index", int, mpath) != cw.index:
                    raise CodebookFormatError(
                        f"{mpath}.index must equal {cw.index}")
                start = _expect(raw_cw, "coverage_start", float, mpath)
                width = _expect(raw_cw, "coverage_width", float, mpath)
                if (start != cw.coverage.start or width != cw.coverage.width):
                    raise CodebookFormatError(
                        f"{mpath} coverage [{start}, {start + width}] does "
                        f"not match the layer-{k} grid")
            comps.append(CompositeCodeword(k, c, f_rf, f_bb, members))
        layers.append(comps)

    if branching ** (len(layers) - 1) != n:
        raise CodebookFormatError(
            f"{len(layers)} layers inconsistent with n_antennas={n}, "
            f"branching={branching}")
    return HierarchicalCodebook(scheme, n, branching, layers,
                                params={"grid_size": grid_size,
                                        "gamma_per": gamma_per})
