"""Command line entry point: ``forward``, ``recover``, ``roundtrip``, ``verify``.

Exit status: 0 when every check passes, 1 on a tolerance breach, 2 on a
usage, configuration or dump error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import serialization as ser
from .jets import JetError, OrderExhaustedError
from .recovery import RecoveryError, run_recovery
from .scenarios import (
    DEFAULT_TOLERANCES,
    ConfigError,
    ScenarioConfig,
    coordinate_space,
    generate_metric,
    load_config,
    scenario_directions,
)
from .stokes_system import assemble, check_transformation, mutate
from .symbol_calculus import full_symbol_residual, run_recursion

log = logging.getLogger("stokesdtn")

EXIT_OK, EXIT_BREACH, EXIT_USAGE = 0, 1, 2


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name:<28} {self.value:.3e}  (tol {self.tolerance:.1e})"


def forward(cfg: ScenarioConfig, mutation: str | None = None, jobs: int = 1) -> tuple:
    """Metric of the scenario and its symbol sequences, one per direction."""
    m = generate_metric(cfg)
    mats = assemble(m)
    if mutation:
        mats = mutate(mats, mutation)
    run = partial(run_recursion, m, depth=cfg.depth, tangential_order=cfg.tangential_order, mats=mats)
    dirs = list(scenario_directions(cfg))
    if jobs > 1 and len(dirs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            seqs = list(pool.map(run, dirs))
    else:
        seqs = [run(d) for d in dirs]
    return m, seqs


def _recover_doc(seqs, mu, depth, truth, tol, scenario=None) -> tuple:
    report = run_recovery(seqs, mu, depth, truth=truth)
    worst = report.max_rel_error
    imag = max(o.imag_max for o in report.orders)
    ok = imag <= tol["imaginary"] and (worst is None or worst <= tol["roundtrip"])
    return report, ser.report_to_dict(report, scenario, "pass" if ok else "fail"), ok


def _out_dir(args, cfg: ScenarioConfig | None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None and "dir" in cfg.output:
        return Path(cfg.output["dir"])
    return Path("out")


def _load(args) -> ScenarioConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None or args.depth is not None:
        cfg = cfg.with_overrides(seed=args.seed, depth=args.depth)
    return cfg


def cmd_forward(args) -> int:
    cfg = _load(args)
    m, seqs = forward(cfg, args.mutate, args.jobs)
    path = ser.write_json(_out_dir(args, cfg) / "symbols.json", ser.symbols_to_dict(seqs, m.mu, cfg.to_dict(), m))
    print(f"wrote {len(seqs)} symbol sequences (depth {cfg.depth}, K = {cfg.jet_order}) to {path}")
    return EXIT_OK


def _emit_report(out: Path, report, doc: dict) -> None:
    ser.write_json(out / "report.json", doc)
    (out / "report.txt").write_text(ser.report_table(report))
    print(ser.report_table(report), end="")
    print(f"status: {doc['status']}  (report in {out / 'report.json'})")


def cmd_recover(args) -> int:
    cfg = _load(args) if args.config else None
    out = _out_dir(args, cfg)
    dump = Path(args.dump) if args.dump else out / "symbols.json"
    doc = ser.read_json(dump)
    seqs, mu, truth = ser.symbols_from_dict(doc)
    scenario = doc.get("scenario")
    tol = dict(cfg.tolerances if cfg else (scenario or {}).get("tolerances", {}))
    for key, value in DEFAULT_TOLERANCES.items():
        tol.setdefault(key, value)
    depth = args.depth if args.depth is not None else doc["depth"]
    report, rdoc, ok = _recover_doc(seqs, mu, depth, truth, tol, scenario)
    _emit_report(out, report, rdoc)
    return EXIT_OK if ok else EXIT_BREACH


def cmd_roundtrip(args) -> int:
    cfg = _load(args)
    t0 = time.perf_counter()
    m, seqs = forward(cfg, args.mutate, args.jobs)
    report, rdoc, ok = _recover_doc(seqs, m.mu, cfg.depth, m, cfg.tolerances, cfg.to_dict())
    _emit_report(_out_dir(args, cfg), report, rdoc)
    log.info("roundtrip finished in %.2f s", time.perf_counter() - t0)
    return EXIT_OK if ok else EXIT_BREACH


def verify_scenario(cfg: ScenarioConfig, mutation: str | None = None) -> list:
    """Transformation identity, factorization residual and homogeneity checks."""
    tol = cfg.tolerances
    m = generate_metric(cfg)
    mats = assemble(m)
    if mutation:
        mats = mutate(mats, mutation)
    results = []

    rng = np.random.default_rng([cfg.seed, 4])
    sp = coordinate_space(cfg)
    w, f = sp.random(rng, (cfg.n,)), sp.random(rng)
    chk = check_transformation(m, w, f, mats)
    results.append(
        CheckResult("transformation identity", chk.relative, tol["transformation"],
                    chk.relative <= tol["transformation"], {"absolute": chk.absolute, "order": chk.order})
    )

    worst_res, worst_euler = 0.0, 0.0
    for d in scenario_directions(cfg):
        seq = run_recursion(m, d, cfg.depth, tangential_order=cfg.tangential_order, mats=mats)
        for deg, (rel, _, _) in full_symbol_residual(seq).items():
            worst_res = max(worst_res, rel)
        for q in seq.symbols:
            if q.trustworthy_order >= 1 and q.entries.max_abs() > 0:
                worst_euler = max(worst_euler, q.euler_defect(cfg.n))
    results.append(CheckResult("factorization residual", worst_res, tol["residual"], worst_res <= tol["residual"]))
    results.append(
        CheckResult("symbol homogeneity", worst_euler, tol["homogeneity"], worst_euler <= tol["homogeneity"])
    )
    return results


def cmd_verify(args) -> int:
    cfg = _load(args)
    results = verify_scenario(cfg, args.mutate)
    for r in results:
        print(r.line())
    doc = {
        "schema": "stokesdtn.verify/1",
        "scenario": cfg.to_dict(),
        "mutation": args.mutate,
        "checks": [
            {"name": r.name, "value": ser.clean_float(r.value), "tolerance": r.tolerance, "passed": r.passed, **r.detail}
            for r in results
        ],
    }
    ser.write_json(_out_dir(args, cfg) / "verify.json", doc)
    return EXIT_OK if all(r.passed for r in results) else EXIT_BREACH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stokesdtn", description="Boundary symbols of the Stokes DtN map and metric recovery.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    cmds = {
        "forward": (cmd_forward, "compute symbols and write a dump"),
        "recover": (cmd_recover, "recover boundary metric jets from a dump"),
        "roundtrip": (cmd_roundtrip, "forward + recover with ground-truth comparison"),
        "verify": (cmd_verify, "transformation, residual and homogeneity checks"),
    }
    for name, (fn, text) in cmds.items():
        s = sub.add_parser(name, help=text)
        s.set_defaults(func=fn)
        s.add_argument("--config", help="scenario JSON file")
        s.add_argument("--out", help="output directory (default: config output.dir or ./out)")
        s.add_argument("--seed", type=int, help="override the scenario seed")
        s.add_argument("--depth", type=int, help="override the recursion depth")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for per-direction runs")
        s.add_argument("--mutate", metavar="ENTRY", help=argparse.SUPPRESS if name == "recover" else
                       "test-only fault injection, e.g. 'C0[1,2]'")
        if name == "recover":
            s.add_argument("--dump", help="symbol dump (default: <out>/symbols.json)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, ser.DumpError, OrderExhaustedError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RecoveryError, JetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except ValueError as exc:  # e.g. a malformed --mutate entry
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
