"""JSON encodings for jets, symbol dumps and recovery reports.

Floats are written with Python's shortest round-trip ``repr``, so decoding a
dump reproduces every coefficient bit for bit.  Non-finite diagnostics are
written as ``null``.  Jets are stored as

    {"nvars": .., "order": .., "base_point": [..], "shape": [..],
     "terms": [[entry, exponents, re, im], ...]}

with zero coefficients omitted; ``entry`` is the index into the leading
(matrix) axes.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .geometry import BoundaryNormalMetric
from .jets import Jet, JetSpace
from .recovery import RecoveryReport, trace_relation
from .symbol_calculus import SymbolMatrix, SymbolSequence

SYMBOL_SCHEMA = "stokesdtn.symbols/1"
REPORT_SCHEMA = "stokesdtn.report/1"


class DumpError(ValueError):
    """Malformed or incompatible dump document."""


def encode_jet(a: Jet) -> dict:
    sp = a.space
    terms = []
    for entry in np.ndindex(*a.shape):
        c = a.coeffs[entry]
        for k in np.flatnonzero(c):
            terms.append([list(entry), [int(e) for e in sp.exponents[k]], float(c[k].real), float(c[k].imag)])
    return {
        "nvars": sp.nvars,
        "order": a.order,
        "space_order": sp.order,
        "base_point": [float(v) for v in sp.base_point],
        "shape": list(a.shape),
        "terms": terms,
    }


def decode_jet(doc: dict, space: JetSpace | None = None) -> Jet:
    if space is None:
        space = JetSpace(doc["nvars"], doc.get("space_order", doc["order"]), doc["base_point"])
    shape = tuple(doc["shape"])
    coeffs = np.zeros(shape + (space.size,), dtype=complex)
    for entry, exps, re, im in doc["terms"]:
        k = space.index(exps)
        if k is None:
            raise DumpError(f"exponent {exps} outside the jet space")
        coeffs[tuple(entry) + (k,)] = complex(re, im)
    return Jet(space, coeffs, doc["order"])


def clean_float(value):
    """``None`` for NaN/inf so the document stays strict JSON."""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def symbols_to_dict(seqs: list, mu: Jet, scenario: dict | None = None, truth: BoundaryNormalMetric | None = None) -> dict:
    doc = {
        "schema": SYMBOL_SCHEMA,
        "n": seqs[0].n,
        "depth": seqs[0].depth,
        "jet_order": seqs[0].space.order,
        "mu": encode_jet(mu),
        "sequences": [
            {
                "direction": [float(v) for v in s.direction],
                "symbols": [
                    {"degree": q.degree, "trustworthy_order": q.trustworthy_order, "entries": encode_jet(q.entries)}
                    for q in s.symbols
                ],
            }
            for s in seqs
        ],
    }
    if scenario is not None:
        doc["scenario"] = scenario
    if truth is not None:
        doc["ground_truth"] = {"g_upper": encode_jet(truth.g_upper), "mu": encode_jet(truth.mu)}
    return doc


def symbols_from_dict(doc: dict) -> tuple:
    """``(seqs, mu, truth)`` from a symbol dump; ``truth`` may be ``None``."""
    if doc.get("schema") != SYMBOL_SCHEMA:
        raise DumpError(f"expected schema {SYMBOL_SCHEMA!r}, got {doc.get('schema')!r}")
    n, depth = doc["n"], doc["depth"]
    mu = decode_jet(doc["mu"])
    seqs = []
    for s in doc["sequences"]:
        first = s["symbols"][0]["entries"]
        space = JetSpace(first["nvars"], first.get("space_order", first["order"]), first["base_point"])
        symbols = [SymbolMatrix(decode_jet(q["entries"], space), q["degree"]) for q in s["symbols"]]
        seqs.append(SymbolSequence(n, np.array(s["direction"], dtype=float), depth, symbols, space))
    truth = None
    if "ground_truth" in doc:
        gt = doc["ground_truth"]
        truth = BoundaryNormalMetric(decode_jet(gt["g_upper"]), decode_jet(gt["mu"]), check=False)
    return seqs, mu, truth


def report_to_dict(report: RecoveryReport, scenario: dict | None = None, status: str | None = None) -> dict:
    doc = {
        "schema": REPORT_SCHEMA,
        "n": report.n,
        "depth": report.depth,
        "jet_order": report.jet_order,
        "directions": [[float(v) for v in d] for d in report.directions],
        "trace_relation": {
            str(r): dict(zip(("a", "b", "contraction"), trace_relation(report.n, r)))
            for r in range(1, report.depth + 1)
        },
        "orders": [
            {
                "r": o.r,
                "trustworthy_order": o.trustworthy_order,
                "contraction_constant": o.constant,
                "h_source": o.h_source,
                "h_mismatch": clean_float(o.h_mismatch),
                "asymmetry": clean_float(o.asymmetry),
                "imag_max": clean_float(o.imag_max),
                "euler_defect": clean_float(o.euler_defect),
                "abs_error": clean_float(o.abs_error),
                "rel_error": clean_float(o.rel_error),
                "tensor": encode_jet(o.tensor),
            }
            for o in report.orders
        ],
        "max_rel_error": clean_float(report.max_rel_error),
    }
    if scenario is not None:
        doc["scenario"] = scenario
    if status is not None:
        doc["status"] = status
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, doc: dict) -> Path:
    """Write atomically: a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(dumps(doc))
    os.replace(tmp, path)
    return path


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DumpError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    return f"{v:.2e}"


def report_table(report: RecoveryReport) -> str:
    """Plain-text summary: one row per recovered order."""
    t = report.n - 1
    pairs = [(a, b) for a in range(t) for b in range(a, t)]
    head = ["r", "order", "h from"] + [f"g{a + 1}{b + 1}(0)" for a, b in pairs] + ["abs err", "rel err"]
    rows = []
    for o in report.orders:
        val = o.tensor.value.real + 0.0
        rows.append(
            [str(o.r), str(o.trustworthy_order), o.h_source or "-"]
            + [f"{val[a, b]: .6g}" for a, b in pairs]
            + [_fmt(o.abs_error), _fmt(o.rel_error)]
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(head)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"
