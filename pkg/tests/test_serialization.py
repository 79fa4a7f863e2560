import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokesdtn import serialization as ser
from stokesdtn.jets import JetSpace
from stokesdtn.recovery import default_directions, run_recovery
from stokesdtn.symbol_calculus import run_recursion

from conftest import random_metric


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 4), st.booleans())
def test_jet_round_trip_is_exact(seed, nvars, order, real):
    rng = np.random.default_rng(seed)
    sp = JetSpace(nvars, order, rng.normal(size=nvars))
    a = sp.random(rng, (2, 3), scale=rng.uniform(1e-3, 1e3), real=real).with_order(max(order - 1, 0))
    doc = json.loads(json.dumps(ser.encode_jet(a)))
    b = ser.decode_jet(doc)
    assert b.order == a.order and b.space == a.space
    assert np.array_equal(a.coeffs, b.coeffs)


def test_decode_rejects_foreign_exponents():
    doc = ser.encode_jet(JetSpace(2, 3).variable(0))
    doc["terms"][0][1] = [5, 0]
    with pytest.raises(ser.DumpError):
        ser.decode_jet(doc)


def test_symbol_dump_round_trip():
    m = random_metric(3, 5, 2)
    seqs = [run_recursion(m, d, 2) for d in default_directions(3)]
    doc = json.loads(ser.dumps(ser.symbols_to_dict(seqs, m.mu, {"n": 3}, m)))
    back, mu, truth = ser.symbols_from_dict(doc)
    assert np.array_equal(mu.coeffs, m.mu.coeffs)
    assert np.array_equal(truth.g_upper.coeffs, m.g_upper.coeffs)
    for s, t in zip(seqs, back):
        assert np.array_equal(s.direction, t.direction)
        for q, p in zip(s.symbols, t.symbols):
            assert q.degree == p.degree and q.trustworthy_order == p.trustworthy_order
            assert np.array_equal(q.entries.coeffs, p.entries.coeffs)
    a = run_recovery(seqs, m.mu, 2, truth=m)
    b = run_recovery(back, mu, 2, truth=truth)
    assert ser.dumps(ser.report_to_dict(a)) == ser.dumps(ser.report_to_dict(b))


def test_schema_checked():
    with pytest.raises(ser.DumpError):
        ser.symbols_from_dict({"schema": "something/else"})


def test_strict_json_and_atomic_write(tmp_path):
    assert ser.clean_float(float("nan")) is None
    assert ser.clean_float(1.5) == 1.5
    path = ser.write_json(tmp_path / "a" / "doc.json", {"x": [1.0, None]})
    assert ser.read_json(path) == {"x": [1.0, None]}
    assert [p.name for p in path.parent.iterdir()] == ["doc.json"]
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ser.DumpError):
        ser.read_json(tmp_path / "broken.json")


def test_report_table_lists_every_order():
    m = random_metric(2, 5, 1)
    seqs = [run_recursion(m, d, 2) for d in default_directions(2)]
    table = ser.report_table(run_recovery(seqs, m.mu, 2, truth=m))
    lines = table.strip().splitlines()
    assert lines[0].split()[:3] == ["r", "order", "h"]
    assert len(lines) == 4
