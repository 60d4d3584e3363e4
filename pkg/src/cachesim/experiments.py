"""Seeded Monte Carlo driver: scenarios, paired trials, CSV reports, single-antenna rate table.

Every trial index i gets its own generator seeded by (seed, i). All schemes and
placements of a trial share that draw (geometry, channel, demands, placement),
and one draw serves the whole SNR grid, so comparisons are paired.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .channel import BeamCache, path_loss_gain, sample_ppp_disk, sample_rayleigh
from .complex_field import symrate_complex
from .cyclic import run_cyclic_delivery
from .finite_field import symrate_finite
from .maxmin import build_codewords_centralized, build_codewords_decentralized, symrate_maxmin
from .model import ConfigError, RateResult, SystemConfig, parse_log_base
from .placement import place_centralized, place_decentralized

SCHEMES = ("maxmin", "complex", "finite", "cyclic", "two_user_only", "uncoded", "all_user")
PLACEMENTS = ("centralized", "decentralized")
GEOMETRIES = ("unit_gain", "ppp_disk")
DEFAULT_SNR_DB = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
CSV_HEADER = ("scenario", "scheme", "placement", "snr_db", "trials", "r_sym_mean", "r_sym_stderr", "flags")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    K: int
    L: int
    N: int
    M: float | tuple[float, ...]
    f: int
    geometry: str = "unit_gain"
    radius: float = 1.0
    k0: float = 1.0
    d0: float = 1.0
    exponent: float = 3.0
    snr_db: tuple[float, ...] = DEFAULT_SNR_DB
    trials: int = 100
    schemes: tuple[str, ...] = ("maxmin",)
    placements: tuple[str, ...] = ("decentralized",)
    log_base: float = 2.0
    seed: int = 0
    distinct_demands: bool = False

    def __post_init__(self):
        for name in ("snr_db", "schemes", "placements"):
            val = getattr(self, name)
            object.__setattr__(self, name, (val,) if isinstance(val, (str, int, float)) else tuple(val))
        if not np.isscalar(self.M):
            object.__setattr__(self, "M", tuple(float(m) for m in self.M))
        object.__setattr__(self, "snr_db", tuple(float(x) for x in self.snr_db))
        object.__setattr__(self, "log_base", parse_log_base(self.log_base))
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.snr_db:
            raise ConfigError("the SNR grid is empty")
        if not self.schemes or not self.placements:
            raise ConfigError("need at least one scheme and one placement")
        if bad := set(self.schemes) - set(SCHEMES):
            raise ConfigError(f"unknown schemes {sorted(bad)}; choose from {SCHEMES}")
        if bad := set(self.placements) - set(PLACEMENTS):
            raise ConfigError(f"unknown placements {sorted(bad)}; choose from {PLACEMENTS}")
        if len(set(self.schemes)) != len(self.schemes) or len(set(self.placements)) != len(self.placements):
            raise ConfigError("schemes and placements must not repeat")
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"geometry must be one of {GEOMETRIES}")
        if min(self.radius, self.d0, self.k0) <= 0:
            raise ConfigError("radius, d0 and k0 must be positive")
        if self.distinct_demands and self.N < self.K:
            raise ConfigError("distinct demands need N >= K")
        system = self.system  # runs SystemConfig validation
        if "centralized" in self.placements:
            t = system.t
            if self.f % math.comb(self.K, t):
                raise ConfigError(f"centralized placement needs f divisible by C({self.K},{t})")

    @property
    def system(self) -> SystemConfig:
        return SystemConfig(K=self.K, L=self.L, N=self.N, M=self.M, f=self.f)

    @property
    def p_max(self) -> np.ndarray:
        return 10.0 ** (np.asarray(self.snr_db) / 10.0)

    def replace(self, **changes) -> "ScenarioConfig":
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return ScenarioConfig.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        for key, val in data.items():
            if isinstance(val, tuple):
                data[key] = list(val)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        if extra := set(data) - known:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


BUILTIN_SCENARIOS = {
    "example_a": ScenarioConfig(
        name="example_a", K=3, L=2, N=3, M=1.0, f=1200,
        schemes=("maxmin", "complex", "finite"), placements=("centralized", "decentralized"),
        distinct_demands=True),
    "fig3_homo": ScenarioConfig(
        name="fig3_homo", K=5, L=2, N=5, M=1.5, f=1000, geometry="ppp_disk",
        schemes=("cyclic", "two_user_only", "all_user", "uncoded")),
    "fig3_hetero": ScenarioConfig(
        name="fig3_hetero", K=5, L=2, N=5, M=(0.5, 1.0, 1.5, 2.0, 2.5), f=1000, geometry="ppp_disk",
        schemes=("cyclic", "two_user_only", "all_user", "uncoded")),
}


def load_scenario(source: str | Path) -> ScenarioConfig:
    """A built-in scenario name or the path of a JSON config file."""
    if str(source) in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[str(source)]
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"no built-in scenario or config file named {source!r}; "
                          f"built-ins: {sorted(BUILTIN_SCENARIOS)}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("a config file must hold a JSON object")
    data.setdefault("name", path.stem)
    return ScenarioConfig.from_dict(data)


@dataclass(eq=False)
class TrialDraw:
    index: int
    H: np.ndarray
    demands: tuple[int, ...]
    caches: dict
    exchange_seed: np.random.SeedSequence


def draw_trial(config: ScenarioConfig, index: int) -> TrialDraw:
    ss = np.random.SeedSequence([config.seed, index])
    main, exchange = ss.spawn(2)
    rng = np.random.default_rng(main)
    system = config.system
    geometry = None
    if config.geometry == "ppp_disk":
        geometry = sample_ppp_disk(config.K, config.radius, rng, fixed_count=config.K)
    H = sample_rayleigh(system, geometry, rng, k0=config.k0, d0=config.d0, exponent=config.exponent).H
    if config.distinct_demands:
        d = rng.permutation(config.N)[:config.K]
    else:
        d = rng.integers(0, config.N, size=config.K)
    caches = {}
    for placement in config.placements:
        caches[placement] = (place_centralized(system) if placement == "centralized"
                             else place_decentralized(system, rng))
    return TrialDraw(index, H, tuple(int(x) for x in d), caches, exchange)


def evaluate(config: ScenarioConfig, draw: TrialDraw, scheme: str, placement: str,
             beams: BeamCache | None = None) -> RateResult:
    """R_sym of one scheme on one draw, over the whole SNR grid."""
    cache, d, H = draw.caches[placement], draw.demands, draw.H
    p, base = config.p_max, config.log_base
    beams = beams or BeamCache(H)
    if scheme == "maxmin":
        words = (build_codewords_centralized(cache, d) if placement == "centralized"
                 else build_codewords_decentralized(cache, d))
        return symrate_maxmin(words, H, p, base, beams)
    if scheme == "complex":
        return symrate_complex(cache, d, H, config.system, p_max=p, base=base, beams=beams)
    if scheme == "finite":
        return symrate_finite(cache, d, H, config.system, p_max=p, base=base, beams=beams)
    # the same exchange-graph draw for every exchange mode
    rng = np.random.default_rng(draw.exchange_seed)
    return run_cyclic_delivery(cache, d, H, p, scheme, rng=rng, base=base, beams=beams)


@dataclass
class TrialOutcome:
    index: int
    rates: dict[tuple[str, str], np.ndarray]
    flags: dict[tuple[str, str], tuple[str, ...]]


def run_trial(config: ScenarioConfig, index: int,
              inspect: Callable[[TrialDraw, str, str, RateResult], None] | None = None) -> TrialOutcome:
    draw = draw_trial(config, index)
    beams = BeamCache(draw.H)
    rates, flags = {}, {}
    for placement in config.placements:
        for scheme in config.schemes:
            res = evaluate(config, draw, scheme, placement, beams)
            rates[(scheme, placement)] = np.broadcast_to(np.asarray(res.r_sym, dtype=float),
                                                         (len(config.snr_db),)).copy()
            flags[(scheme, placement)] = tuple(res.flags)
            if inspect is not None:
                inspect(draw, scheme, placement, res)
    return TrialOutcome(index, rates, flags)


def _run_chunk(args) -> list[TrialOutcome]:
    config, indices = args
    return [run_trial(config, i) for i in indices]


@dataclass
class TrialSet:
    """Paired per-trial samples: ``rates[(scheme, placement)]`` has shape (trials, |snr grid|)."""

    config: ScenarioConfig
    rates: dict[tuple[str, str], np.ndarray]
    flag_counts: dict[tuple[str, str], dict[str, int]] = field(default_factory=dict)


def simulate(config: ScenarioConfig, *, workers: int = 1,
             inspect: Callable[[TrialDraw, str, str, RateResult], None] | None = None) -> TrialSet:
    """Run every trial; results are ordered by trial index whatever ``workers`` is."""
    indices = range(config.trials)
    if workers > 1 and inspect is None:
        chunks = [(config, list(indices[w::workers])) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = [o for part in pool.map(_run_chunk, chunks) for o in part]
        outcomes.sort(key=lambda o: o.index)
    else:
        outcomes = [run_trial(config, i, inspect) for i in indices]
    keys = [(s, p) for p in config.placements for s in config.schemes]
    rates = {k: np.stack([o.rates[k] for o in outcomes]) for k in keys}
    counts = {}
    for k in keys:
        c: dict[str, int] = {}
        for o in outcomes:
            for name in o.flags[k]:
                c[name] = c.get(name, 0) + 1
        counts[k] = c
    return TrialSet(config, rates, counts)


@dataclass(frozen=True)
class RateReport:
    scenario: str
    scheme: str
    placement: str
    snr_db: float
    trials: int
    r_sym_mean: float
    r_sym_stderr: float
    flags: str = ""


def summarize(trials: TrialSet) -> list[RateReport]:
    cfg = trials.config
    reports = []
    for (scheme, placement), x in trials.rates.items():
        n = x.shape[0]
        mean = x.mean(axis=0)
        stderr = x.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
        flags = ";".join(f"{k}={v}" for k, v in sorted(trials.flag_counts.get((scheme, placement), {}).items()))
        for j, snr in enumerate(cfg.snr_db):
            reports.append(RateReport(cfg.name, scheme, placement, snr, n, float(mean[j]),
                                      float(stderr[j]), flags))
    return reports


def _fmt(x: float) -> str:
    return format(x, ".6g")


def emit_csv(reports: Sequence[RateReport], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in reports:
            w.writerow([r.scenario, r.scheme, r.placement, _fmt(r.snr_db), r.trials,
                        _fmt(r.r_sym_mean), _fmt(r.r_sym_stderr), r.flags])
    return path


def read_csv(path: str | Path) -> list[RateReport]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [RateReport(r["scenario"], r["scheme"], r["placement"], float(r["snr_db"]), int(r["trials"]),
                       float(r["r_sym_mean"]), float(r["r_sym_stderr"]), r["flags"]) for r in rows]


def run_scenario(config: ScenarioConfig, out: str | Path | None = None, *, workers: int = 1) -> list[RateReport]:
    reports = summarize(simulate(config, workers=workers))
    if out is not None:
        emit_csv(reports, out)
    return reports


@dataclass
class Table1Result:
    """``rates[label][s]`` with label "2" or "e"; ``per_trial`` keeps the natural-log samples."""

    semantics: str
    rates: dict[str, dict[int, float]]
    stderr: dict[str, dict[int, float]]
    per_trial: dict[int, np.ndarray]


def _mean_min_all_subsets(x: np.ndarray, s: int) -> np.ndarray:
    """Average of min over all size-s subsets, row-wise, from order statistics."""
    n = x.shape[1]
    xs = np.sort(x, axis=1)
    w = np.array([math.comb(n - i, s - 1) for i in range(1, n + 1)], dtype=float) / math.comb(n, s)
    return xs @ w


def table1_estimate(trials: int, s_values: Sequence[int], rng: np.random.Generator, *, p_max: float = 0.1,
                    users: int = 50, radius: float = 1.0, k0: float = 1.0, d0: float = 1.0,
                    exponent: float = 3.0, semantics: str = "random") -> Table1Result:
    """Single-antenna multicast rate R_s = E[min_{i in S} log(1 + P g_i |h_i|^2)].

    Users are uniform on a disk around the transmitter. ``semantics`` is
    "random" (one uniform subset per trial, nested across s) or
    "all_subsets_mean" (exact mean over all size-s subsets of the drop).
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if semantics not in ("random", "all_subsets_mean"):
        raise ConfigError(f"unknown subset semantics {semantics!r}")
    if any(not 1 <= s <= users for s in s_values):
        raise ConfigError(f"subset sizes must lie in 1..{users}")
    dist = radius * np.sqrt(rng.random((trials, users)))
    g = path_loss_gain(dist, k0, d0, exponent)
    fade = rng.exponential(size=(trials, users))
    nats = np.log1p(p_max * g * fade)
    order = rng.random((trials, users)).argsort(axis=1)
    per_trial = {}
    for s in s_values:
        if semantics == "random":
            per_trial[s] = np.take_along_axis(nats, order[:, :s], axis=1).min(axis=1)
        else:
            per_trial[s] = _mean_min_all_subsets(nats, s)
    rates, stderr = {}, {}
    for label, scale in (("2", 1 / math.log(2)), ("e", 1.0)):
        rates[label] = {s: float(v.mean() * scale) for s, v in per_trial.items()}
        stderr[label] = {s: float(v.std(ddof=1) * scale / math.sqrt(trials)) if trials > 1 else 0.0
                         for s, v in per_trial.items()}
    return Table1Result(semantics, rates, stderr, per_trial)
