import json
import subprocess
import sys
import time

import pytest

from stokesdtn.cli import EXIT_BREACH, EXIT_OK, EXIT_USAGE, main


def write_config(tmp_path, **doc):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return str(path)


def flat_cfg(tmp_path):
    return write_config(tmp_path, n=2, depth=3, metric="flat", mu=1.0)


def random_cfg(tmp_path, n=3):
    return write_config(
        tmp_path, n=n, depth=2, seed=5, metric={"family": "random", "scale": 0.2}, mu={"kind": "random", "scale": 0.3}
    )


def test_flat_roundtrip_fast_and_exact(tmp_path, capsys):
    cfg = flat_cfg(tmp_path)
    t0 = time.perf_counter()
    code = main(["roundtrip", "--config", cfg, "--out", str(tmp_path / "out")])
    elapsed = time.perf_counter() - t0
    assert code == EXIT_OK
    assert elapsed < 1.0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["status"] == "pass"
    assert max(o["abs_error"] for o in report["orders"]) <= 1e-11
    assert [o["r"] for o in report["orders"]] == [0, 1, 2, 3]
    assert "status: pass" in capsys.readouterr().out


def test_forward_then_recover_matches_roundtrip(tmp_path):
    cfg = random_cfg(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["forward", "--config", cfg, "--out", str(a), "--jobs", "2"]) == EXIT_OK
    assert main(["recover", "--dump", str(a / "symbols.json"), "--out", str(a)]) == EXIT_OK
    assert main(["roundtrip", "--config", cfg, "--out", str(b)]) == EXIT_OK
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_roundtrip_deterministic(tmp_path):
    cfg = random_cfg(tmp_path, n=2)
    for name in ("x", "y"):
        assert main(["roundtrip", "--config", cfg, "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "x" / "report.json").read_bytes() == (tmp_path / "y" / "report.json").read_bytes()
    assert main(["roundtrip", "--config", cfg, "--seed", "6", "--out", str(tmp_path / "z")]) == EXIT_OK
    assert (tmp_path / "x" / "report.json").read_bytes() != (tmp_path / "z" / "report.json").read_bytes()


def test_verify_passes_and_detects_mutation(tmp_path, capsys):
    cfg = random_cfg(tmp_path, n=2)
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert all(c["passed"] for c in doc["checks"])
    assert main(["verify", "--config", cfg, "--out", str(tmp_path), "--mutate", "C0[1,2]"]) == EXIT_BREACH
    out = capsys.readouterr().out
    assert "FAIL  transformation identity" in out


@pytest.mark.parametrize(
    "doc",
    [{"n": 1, "depth": 1}, {"n": 2, "depth": 3, "jet_order": 3}],
)
def test_config_errors_exit_two(tmp_path, capsys, doc):
    cfg = write_config(tmp_path, **doc)
    assert main(["roundtrip", "--config", cfg]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["verify"]) == EXIT_USAGE
    assert main(["recover", "--dump", str(tmp_path / "missing.json")]) == EXIT_USAGE
    cfg = flat_cfg(tmp_path)
    assert main(["verify", "--config", cfg, "--out", str(tmp_path), "--mutate", "Z[0,0]"]) == EXIT_USAGE
    with pytest.raises(SystemExit):
        main(["roundtrip", "--config", cfg, "--jobs", "0"])


def test_module_entry_point(tmp_path):
    cfg = flat_cfg(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "stokesdtn", "roundtrip", "--config", cfg, "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "report.txt").exists()
