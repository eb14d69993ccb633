"""Run configuration, checker dispatch and the JSON report.

Report schema ``tamecert.report/1`` (all keys always present):

``schema``
    ``"tamecert.report/1"``.
``tool_version``
    Package version that wrote the report.
``map``
    ``{"name", "hash", "m", "n", "source"}``; ``hash`` is the first 16 hex
    digits of the SHA-256 of the canonical map text ``source``.
``config``
    The full :class:`RunConfig` after defaults, including the seed.
``strategy``
    Sampling strategy actually used, plus ``eps_bdry_abs`` and ``samples``.
``certificates``
    One object per checker, in run order: ``theorem``, ``verdict`` (``pass``,
    ``pass-heuristic``, ``fail``, ``inconclusive``), ``conditions`` (name to
    verdict), ``witnesses`` (scalars, vectors and row-major matrices),
    ``tolerances``, ``sampled_only``, ``notes``.
``timings``
    Wall-clock seconds per checker, plus ``"sampling"``.

Floats that are NaN are written as ``null`` and infinities as the strings
``"inf"`` and ``"-inf"``. Keys are sorted, so equal inputs give byte-identical
files except for ``timings``.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, fields, replace

from . import __version__
from .certify import (
    Certificate,
    SampleStrategy,
    Tolerances,
    check_Cce,
    check_Ce,
    check_S,
    check_thm1,
    check_thm3,
    check_thm4,
    check_thm12,
    check_winding,
    injectivity_probe,
    sample_jacobians,
)
from .dsl import parse_domain, parse_expr
from .piecewise import PiecewiseMap

SCHEMA = "tamecert.report/1"
CHECKERS = ("thm1", "thm12", "ce", "cce", "s", "thm3", "thm4", "winding", "probe")
DEFAULT_CHECKERS = CHECKERS[:-1]  # what --all selects
THEOREM = {"thm1": "THM1", "thm12": "THM12", "ce": "THM2", "cce": "THM21", "s": "S",
           "thm3": "THM3", "thm4": "THM4", "winding": "WINDING", "probe": "PROBE"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a ``check`` run depends on. Unknown keys are rejected."""

    map: str = ""
    domain: str | None = None  # e.g. "box [0.5, 1], [0.5, 1]"
    checkers: list = field(default_factory=lambda: list(DEFAULT_CHECKERS))
    seed: int = 0
    grid: int = 11
    random: int = 500
    boundary: int = 50
    eps_bdry: float | None = None
    tolerances: dict = field(default_factory=dict)
    src_perm: list | None = None  # 0-based
    tgt_perm: list | None = None
    loci: list | None = None  # B for thm12; defaults to the map's declared loci
    pair_budget: int = 2000
    probe_pairs: int = 10_000
    segment_budget: int = 200
    fiber_budget: int = 50
    winding_radii: list | None = None
    winding_samples: int = 720
    out: str | None = None

    def __post_init__(self):
        bad = [c for c in self.checkers if c not in CHECKERS]
        if bad:
            raise ConfigError(f"unknown checker(s): {', '.join(bad)}")
        try:
            Tolerances.from_overrides(self.tolerances)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for name in ("grid", "random", "boundary", "pair_budget", "probe_pairs",
                     "segment_budget", "fiber_budget", "winding_samples"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def tol(self) -> Tolerances:
        return Tolerances.from_overrides(self.tolerances)

    @property
    def strategy(self) -> SampleStrategy:
        return SampleStrategy(self.grid, self.random, self.boundary, self.seed, self.eps_bdry)


@dataclass
class Report:
    map: dict
    config: dict
    strategy: dict
    certificates: list  # of Certificate
    timings: dict
    tool_version: str = __version__
    schema: str = SCHEMA

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)

    def certificate(self, theorem: str) -> Certificate:
        for c in self.certificates:
            if c.theorem == theorem:
                return c
        raise KeyError(theorem)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "tool_version": self.tool_version,
            "map": self.map,
            "config": self.config,
            "strategy": self.strategy,
            "certificates": [c.to_dict() for c in self.certificates],
            "timings": self.timings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(d["map"], d["config"], d["strategy"],
                   [Certificate.from_dict(c) for c in d["certificates"]], d["timings"],
                   d["tool_version"], d["schema"])

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))


def apply_domain(f: PiecewiseMap, domain: str | None) -> PiecewiseMap:
    if not domain:
        return f
    return replace(f, domain=parse_domain(domain, f.m))


def run_checks(f: PiecewiseMap, config: RunConfig) -> Report:
    """Sample ``f`` once and run the selected checkers in a fixed order."""
    f = apply_domain(f, config.domain)
    tol = config.tol
    timings = {}
    t0 = time.perf_counter()
    samples = sample_jacobians(f, config.strategy)
    timings["sampling"] = time.perf_counter() - t0
    loci = None
    if config.loci is not None:
        loci = [parse_expr(s, f.m) for s in config.loci]
    seed = config.seed
    runners = {
        "thm1": lambda: check_thm1(samples, tol=tol, f=f),
        "thm12": lambda: check_thm12(f, samples, loci, config.pair_budget, tol, seed=seed),
        "ce": lambda: check_Ce(samples, tol=tol, seed=seed),
        "cce": lambda: check_Cce(samples, tol=tol),
        "s": lambda: check_S(f, config.segment_budget, samples, tol, seed),
        "thm3": lambda: check_thm3(f, samples, config.src_perm, config.tgt_perm, tol),
        "thm4": lambda: check_thm4(f, samples, config.src_perm, config.tgt_perm,
                                   config.fiber_budget, tol, seed),
        "winding": lambda: check_winding(f, config.winding_radii, config.winding_samples, tol),
        "probe": lambda: injectivity_probe(f, config.probe_pairs, tol, seed),
    }
    certs = []
    for name in CHECKERS:
        if name not in config.checkers:
            continue
        t0 = time.perf_counter()
        cert = runners[name]()
        timings[name] = time.perf_counter() - t0
        certs.append(cert)
    strategy = {**config.strategy.as_dict(), "eps_bdry_abs": samples.eps_bdry,
                "samples": len(samples)}
    mapinfo = {"name": f.name, "hash": f.hash, "m": f.m, "n": f.n, "source": f.to_text()}
    report = Report(mapinfo, config.to_dict(), strategy, certs, timings)
    # normalise through the codec so in-memory and on-disk reports agree
    return Report.from_json(report.to_json())
