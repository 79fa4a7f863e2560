"""Scenario configuration and generation of metric / viscosity jets.

A scenario is a single JSON document::

    {
      "n": 3, "depth": 3, "jet_order": "auto", "tangential_order": 1,
      "seed": 7,
      "metric": {"family": "random", "scale": 0.2},
      "mu": {"kind": "random", "scale": 0.3},
      "directions": "minimal",
      "tolerances": {"roundtrip": 1e-8},
      "output": {"dir": "out"}
    }

Metric families (``g^{ab}`` is the inverse metric, tangential block):

* ``flat``: ``delta^{ab}``;
* ``conformal``: ``a(x) delta^{ab}`` with ``a`` given by ``coefficients``;
* ``diagonal``: ``delta^{ab} + diag(p_1(x), ..)`` with ``entries`` a list of tables;
* ``random``: identity plus a seeded symmetric perturbation whose base
  value has spectral norm ``< 1/2``;
* ``table``: explicit ``entries`` keyed ``"a,b"`` for ``a <= b``.

Coefficient tables map comma-separated exponents (``"0,2"`` for ``x_2**2``)
to a number or ``[re, im]``.  Viscosity kinds: ``constant`` (``value``),
``table`` (``coefficients``), ``random`` (``exp`` of a seeded jet).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jets
from .geometry import BoundaryNormalMetric, MetricError
from .jets import JetSpace
from .recovery import default_directions
from .symbol_calculus import required_order

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "DEFAULT_TOLERANCES",
    "coordinate_space",
    "generate_metric",
    "generate_mu",
    "load_config",
    "parse_config",
    "scenario_directions",
]

DEFAULT_TOLERANCES = {
    "transformation": 1e-10,
    "residual": 1e-9,
    "homogeneity": 1e-10,
    "roundtrip": 1e-8,
    "imaginary": 1e-10,
}

METRIC_FAMILIES = ("flat", "conformal", "diagonal", "random", "table")
MU_KINDS = ("constant", "table", "random")


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the field."""


@dataclass
class ScenarioConfig:
    n: int
    depth: int
    jet_order: int
    tangential_order: int = 1
    auto_order: bool = True
    seed: int = 0
    metric: dict = field(default_factory=lambda: {"family": "flat"})
    mu: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    directions: object = "minimal"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "depth": self.depth,
            "jet_order": "auto" if self.auto_order else self.jet_order,
            "resolved_jet_order": self.jet_order,
            "tangential_order": self.tangential_order,
            "seed": self.seed,
            "metric": self.metric,
            "mu": self.mu,
            "directions": self.directions,
            "tolerances": self.tolerances,
        }

    def with_overrides(self, seed: int | None = None, depth: int | None = None) -> ScenarioConfig:
        d = self.to_dict()
        d.pop("resolved_jet_order")
        d["output"] = self.output
        if seed is not None:
            d["seed"] = seed
        if depth is not None:
            d["depth"] = depth
        return parse_config(d)


def _int_field(doc: dict, name: str, default=None, minimum: int | None = None) -> int:
    value = doc.get(name, default)
    if value is None:
        raise ConfigError(f"missing required field '{name}'")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field '{name}' must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"field '{name}' must be >= {minimum}, got {value}")
    return value


def parse_config(doc: dict) -> ScenarioConfig:
    """Validate a decoded config document."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    n = _int_field(doc, "n")
    if n < 2:
        raise ConfigError(f"field 'n': dimension must satisfy n >= 2, got {n}")
    depth = _int_field(doc, "depth", 1, minimum=0)
    t_order = _int_field(doc, "tangential_order", 1, minimum=0)
    raw_k = doc.get("jet_order", "auto")
    if raw_k == "auto":
        k, auto = required_order(depth, t_order), True
    else:
        k, auto = _int_field(doc, "jet_order"), False
        need = required_order(depth, t_order)
        if k < need:
            raise ConfigError(
                f"field 'jet_order': depth {depth} with tangential_order {t_order} needs jet_order >= {need}, got {k}"
            )
    seed = _int_field(doc, "seed", 0, minimum=0)

    metric = doc.get("metric", {"family": "flat"})
    if isinstance(metric, str):
        metric = {"family": metric}
    if not isinstance(metric, dict) or metric.get("family") not in METRIC_FAMILIES:
        raise ConfigError(f"field 'metric.family' must be one of {METRIC_FAMILIES}")
    mu = doc.get("mu", {"kind": "constant", "value": 1.0})
    if isinstance(mu, (int, float)) and not isinstance(mu, bool):
        mu = {"kind": "constant", "value": float(mu)}
    if not isinstance(mu, dict) or mu.get("kind") not in MU_KINDS:
        raise ConfigError(f"field 'mu.kind' must be one of {MU_KINDS}")

    directions = doc.get("directions", "minimal")
    minimal = (n - 1) * n // 2
    if isinstance(directions, dict):
        count = directions.get("oversampled")
        if isinstance(count, bool) or not isinstance(count, int) or count < minimal:
            raise ConfigError(f"field 'directions.oversampled' must be an integer >= {minimal}")
    elif directions != "minimal":
        raise ConfigError("field 'directions' must be \"minimal\" or {\"oversampled\": count}")

    tolerances = dict(DEFAULT_TOLERANCES)
    extra = doc.get("tolerances", {})
    if not isinstance(extra, dict):
        raise ConfigError("field 'tolerances' must be an object")
    for key, value in extra.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"field 'tolerances.{key}' is unknown")
        if not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"field 'tolerances.{key}' must be a positive number")
        tolerances[key] = float(value)
    output = doc.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("field 'output' must be an object")

    cfg = ScenarioConfig(n, depth, k, t_order, auto, seed, metric, mu, directions, tolerances, output)
    # catches family parameters that break the metric invariants
    try:
        generate_metric(cfg)
    except (MetricError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"field 'metric'/'mu': {exc}") from exc
    return cfg


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc)


def coordinate_space(cfg: ScenarioConfig) -> JetSpace:
    return JetSpace(cfg.n, cfg.jet_order, names=[f"x{i + 1}" for i in range(cfg.n)])


def _parse_exponents(key: str, nvars: int) -> tuple:
    parts = [int(p) for p in str(key).split(",")]
    if len(parts) != nvars or min(parts) < 0:
        raise ValueError(f"coefficient key {key!r} needs {nvars} non-negative exponents")
    return tuple(parts)


def _parse_value(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def table_jet(space: JetSpace, table: dict) -> jets.Jet:
    """Jet from a ``{"e1,..,en": value}`` coefficient table; higher degrees are dropped."""
    coeffs = {}
    for key, value in table.items():
        e = _parse_exponents(key, space.nvars)
        if sum(e) <= space.order:
            coeffs[e] = _parse_value(value)
    return space.from_dict(coeffs)


def _rng(cfg: ScenarioConfig, salt: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, salt])


def _random_tangential(cfg: ScenarioConfig, space: JetSpace) -> jets.Jet:
    t = cfg.n - 1
    scale = float(cfg.metric.get("scale", 0.2))
    if not 0 <= scale < 0.5:
        raise ValueError("random metric scale must lie in [0, 1/2)")
    rng = _rng(cfg, 1)
    p = space.random(rng, (t, t), scale=scale, decay=float(cfg.metric.get("decay", 0.5)))
    p = 0.5 * (p + p.T)
    base = p.value.real
    norm = np.linalg.norm(base, 2)
    if norm >= scale and norm > 0:
        # keep the base perturbation strictly inside the ball of radius 1/2
        c = p.coeffs.copy()
        c[..., 0] *= 0.99 * scale / norm
        p = jets.Jet(space, c)
    return space.identity(t) + p


def generate_metric(cfg: ScenarioConfig, space: JetSpace | None = None) -> BoundaryNormalMetric:
    """The scenario metric with its viscosity, as coordinate jets."""
    if space is None:
        space = coordinate_space(cfg)
    t = cfg.n - 1
    fam = cfg.metric["family"]
    if fam == "flat":
        h = space.identity(t)
    elif fam == "conformal":
        a = table_jet(space, cfg.metric.get("coefficients", {"0" + ",0" * (cfg.n - 1): 1.0}))
        h = a * np.eye(t)
    elif fam == "diagonal":
        entries = cfg.metric.get("entries", [])
        if len(entries) > t:
            raise ValueError(f"diagonal family takes at most {t} entries")
        c = space.identity(t).coeffs
        for a, table in enumerate(entries):
            c[a, a] += table_jet(space, table).coeffs
        h = jets.Jet(space, c)
    elif fam == "random":
        h = _random_tangential(cfg, space)
    else:
        c = space.zeros((t, t)).coeffs
        for key, table in cfg.metric.get("entries", {}).items():
            a, b = (int(v) for v in key.split(","))
            if not (0 <= a < t and 0 <= b < t):
                raise ValueError(f"table entry {key!r} outside the {t}x{t} tangential block")
            c[a, b] = c[b, a] = table_jet(space, table).coeffs
        h = jets.Jet(space, c)
    return BoundaryNormalMetric.from_tangential(h, generate_mu(cfg, space))


def generate_mu(cfg: ScenarioConfig, space: JetSpace | None = None) -> jets.Jet:
    if space is None:
        space = coordinate_space(cfg)
    kind = cfg.mu["kind"]
    if kind == "constant":
        value = float(cfg.mu.get("value", 1.0))
        if not value > 0:
            raise ValueError("constant viscosity must be positive")
        return space.constant(value)
    if kind == "table":
        return table_jet(space, cfg.mu["coefficients"])
    rng = _rng(cfg, 2)
    return jets.exp(space.random(rng, scale=float(cfg.mu.get("scale", 0.3))))


def scenario_directions(cfg: ScenarioConfig) -> np.ndarray:
    """Directions in ``xi'``; normalization against the metric happens per run."""
    dirs = default_directions(cfg.n)
    if isinstance(cfg.directions, dict):
        extra = cfg.directions["oversampled"] - len(dirs)
        if extra > 0:
            rng = _rng(cfg, 3)
            more = rng.normal(size=(extra, cfg.n - 1))
            more /= np.linalg.norm(more, axis=1, keepdims=True)
            dirs = np.vstack([dirs, more])
    return dirs

