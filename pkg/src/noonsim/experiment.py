"""Delay scans and the coincidence-analysis formulas.

Scan rates are count rates: ``rep_rate`` times the per-pulse probability of
the coincidence.  With that convention the accidental-combination formulas

    R4 = [R2(AB) R2(CD) + R2(AC) R2(BD) + R2(AD) R2(BC)] / R0
    R6 = sum_P R2(P) R4(complement of P) / R0

compare directly against simulated higher-order scans.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import circuits as _circuits
from .circuits import Circuit
from .fock import apply_linear_map, coincidence_distribution
from .source import Scenario, emission_weight, pdc_state
from .temporal import GaussianPacket, exchange_ratio

R0 = 76e6  # pump repetition rate, Hz
C_UM_PER_FS = 0.299792458
UNITS = ("fs", "um")


class MissingPatternError(KeyError):
    pass


def normalize_pattern(pattern: str) -> str:
    return "".join(sorted(pattern))


@dataclass(frozen=True)
class ScanResult:
    delays: np.ndarray
    rates: np.ndarray
    label: str
    unit: str = "fs"
    clipped: tuple[int, ...] = ()

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if d.shape != r.shape or d.ndim != 1:
            raise ValueError("delays and rates must be 1-d arrays of equal length")
        if np.any(r < 0):
            raise ValueError(f"scan {self.label!r} has negative rates")
        if self.unit not in UNITS:
            raise ValueError(f"unknown delay unit {self.unit!r}")
        d.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "rates", r)

    def __len__(self):
        return len(self.delays)

    def baseline(self) -> float:
        """Rate at the largest ``|delay|`` (averaged over both ends if symmetric)."""
        far = np.abs(self.delays)
        return float(self.rates[far == far.max()].mean())

    def scaled(self, factor: float) -> "ScanResult":
        return ScanResult(self.delays, self.rates * factor, self.label, self.unit)

    def in_unit(self, unit: str) -> "ScanResult":
        if unit == self.unit:
            return self
        if unit not in UNITS:
            raise ValueError(f"unknown delay unit {unit!r}")
        factor = C_UM_PER_FS if unit == "um" else 1 / C_UM_PER_FS
        return ScanResult(self.delays * factor, self.rates, self.label, unit, self.clipped)

    def to_csv(self, path) -> None:
        lines = [f"# label={self.label} unit={self.unit}"]
        lines += [f"{d!r},{r!r}" for d, r in zip(self.delays.tolist(), self.rates.tolist())]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "ScanResult":
        text = Path(path).read_text().splitlines()
        if not text or not text[0].startswith("#"):
            raise ValueError(f"{path}: missing '# label=... unit=...' header")
        meta = dict(tok.split("=", 1) for tok in text[0][1:].split())
        rows = np.array([[float(x) for x in line.split(",")] for line in text[1:] if line.strip()])
        rows = rows.reshape(-1, 2)
        return cls(rows[:, 0], rows[:, 1], meta.get("label", ""), meta.get("unit", "fs"))


def _check_grid(scans: Iterable[ScanResult]) -> np.ndarray:
    scans = list(scans)
    grid = scans[0].delays
    for s in scans[1:]:
        if s.delays.shape != grid.shape or not np.array_equal(s.delays, grid):
            raise ValueError(f"scan {s.label!r} is on a different delay grid")
        if s.unit != scans[0].unit:
            raise ValueError("scans use different delay units")
    return grid


# -- simulation -------------------------------------------------------------


def _pattern_keys(circuit: Circuit, patterns: Sequence[str]) -> dict[str, tuple[int, ...]]:
    keys = {}
    for p in patterns:
        modes = circuit.modes(p)
        idx = sorted(m.index for m in modes)
        if len(set(idx)) != len(idx):
            raise ValueError(f"pattern {p!r} repeats a detector")
        keys[p] = tuple(idx)
    return keys


def _rates_at(args) -> dict[str, float]:
    scenario, circuit, patterns, dT = args
    linmap = _circuits.compile(circuit)
    keys = _pattern_keys(circuit, patterns)
    by_n: dict[int, list[str]] = {}
    for p in patterns:
        by_n.setdefault(len(p), []).append(p)

    out: dict[str, float] = {}
    for n, pats in by_n.items():
        order = (n + 1) // 2
        configs = list(scenario.subsets(order))
        acc = dict.fromkeys(pats, 0.0)
        for sub in configs:
            st = pdc_state(sub, order, dT, circuit.n_paths).state.sector(2 * order)
            scale = emission_weight(sub) / st.norm_sq()
            dist = coincidence_distribution(apply_linear_map(linmap, st), n)
            for p in pats:
                acc[p] += scale * dist.get(keys[p], 0.0)
        for p in pats:
            out[p] = acc[p] / len(configs)
    return out


def delay_scans(
    scenario: Scenario,
    circuit: Circuit,
    patterns: Sequence[str],
    delays: Sequence[float],
    rep_rate: float = R0,
    max_workers: int | None = None,
) -> dict[str, ScanResult]:
    """Coincidence rates of several detector patterns over one delay grid.

    Each pattern of ``n`` detectors is fed by the ``ceil(n/2)``-pair term of the
    source.  When the scenario holds more pairs than that, every subset of
    pairs is simulated and the rates averaged (an equal-weight mixture).
    Grid points are independent; ``max_workers > 1`` spreads them over
    processes without changing the result.
    """
    patterns = list(dict.fromkeys(patterns))
    delays = np.asarray(delays, dtype=float)
    if delays.size == 0:
        raise ValueError("delay grid is empty")
    if not patterns:
        raise ValueError("no coincidence patterns requested")
    _pattern_keys(circuit, patterns)
    for p in patterns:
        if (len(p) + 1) // 2 > scenario.n_pairs:
            raise ValueError(f"pattern {p!r} needs more pairs than the scenario provides")

    jobs = [(scenario, circuit, patterns, float(d)) for d in delays]
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers) as pool:
            points = list(pool.map(_rates_at, jobs))
    else:
        points = [_rates_at(j) for j in jobs]
    return {
        p: ScanResult(delays, rep_rate * np.array([pt[p] for pt in points]), p)
        for p in patterns
    }


def delay_scan(
    scenario: Scenario,
    circuit: Circuit,
    detectors,
    delays: Sequence[float],
    rep_rate: float = R0,
    max_workers: int | None = None,
) -> ScanResult:
    """Coincidence rate of one detector pattern (e.g. ``"ABCD"``) versus delay."""
    pattern = "".join(detectors)
    return delay_scans(scenario, circuit, [pattern], delays, rep_rate, max_workers)[pattern]


# -- accidental combinations -------------------------------------------------


def combine_accidental_four(
    r_ab: ScanResult,
    r_cd: ScanResult,
    r_ac: ScanResult,
    r_bd: ScanResult,
    r_ad: ScanResult,
    r_bc: ScanResult,
    rep_rate: float = R0,
    label: str = "ABCD",
) -> ScanResult:
    """Four-fold rate expected from two independent pairs."""
    scans = (r_ab, r_cd, r_ac, r_bd, r_ad, r_bc)
    grid = _check_grid(scans)
    rates = (r_ab.rates * r_cd.rates + r_ac.rates * r_bd.rates + r_ad.rates * r_bc.rates) / rep_rate
    return ScanResult(grid, rates, label, r_ab.unit)


def _lookup(scans: Mapping[str, ScanResult], pattern: str) -> ScanResult:
    table = {normalize_pattern(k): v for k, v in scans.items()}
    try:
        return table[normalize_pattern(pattern)]
    except KeyError:
        raise MissingPatternError(f"no scan for pattern {pattern!r}") from None


def four_fold_from_pairs(two_fold: Mapping[str, ScanResult], quad: str, rep_rate: float = R0) -> ScanResult:
    """Accidental four-fold rate for detectors ``quad`` built from two-fold scans."""
    a, b, c, d = quad
    pairs = [a + b, c + d, a + c, b + d, a + d, b + c]
    return combine_accidental_four(*(_lookup(two_fold, p) for p in pairs), rep_rate=rep_rate, label=quad)


SIX_MODES = ("four_plus_two", "two_by_three")


def combine_accidental_six(
    two_fold: Mapping[str, ScanResult],
    four_fold: Mapping[str, ScanResult] | None,
    rep_rate: float = R0,
    mode: str = "four_plus_two",
    labels: str = "ABCDEF",
) -> ScanResult:
    """Six-fold rate from a pair plus a four-photon group.

    Sums ``R2(P) R4(rest) / R0`` over the 15 ways of picking the pair's two
    detectors.  In ``"two_by_three"`` mode each ``R4`` is itself built from
    two-fold scans, so every split into three pairs is counted three times.
    """
    if mode not in SIX_MODES:
        raise ValueError(f"unknown combination mode {mode!r} (expected one of {SIX_MODES})")
    if mode == "four_plus_two" and four_fold is None:
        raise MissingPatternError("four_plus_two mode needs four-fold scans")
    terms = []
    for pair in combinations(labels, 2):
        rest = "".join(x for x in labels if x not in pair)
        r2 = _lookup(two_fold, "".join(pair))
        if mode == "four_plus_two":
            r4 = _lookup(four_fold, rest)
        else:
            r4 = four_fold_from_pairs(two_fold, rest, rep_rate)
        terms.append((r2, r4))
    grid = _check_grid([s for t in terms for s in t])
    rates = sum(r2.rates * r4.rates for r2, r4 in terms) / rep_rate
    return ScanResult(grid, rates, labels, terms[0][0].unit)


# -- E/A estimators ----------------------------------------------------------


@dataclass(frozen=True)
class EAEstimate:
    """Exchange ratio E/A.  ``value`` is clamped to [0, 1]; ``raw`` is not."""

    raw: float
    method: str
    feasible: bool = True
    value: float = field(init=False)

    def __post_init__(self):
        v = min(max(self.raw, 0.0), 1.0) if math.isfinite(self.raw) else math.nan
        object.__setattr__(self, "value", v)

    @property
    def clamped(self) -> bool:
        return self.value != self.raw


def v4_from_ea(v2: float, ea: float) -> float:
    """Four-photon visibility for two-photon visibility ``v2`` and exchange ratio ``ea``."""
    return (2 * v2 * (1 + 3 * ea) - v2**2 * (1 + ea)) / (3 * (1 + ea))


def ea_from_v4(v4: float, v2: float) -> EAEstimate:
    """Invert :func:`v4_from_ea` for the exchange ratio."""
    if not 0 < v2 <= 1:
        raise ValueError("v2 must lie in (0, 1]")
    num = 3 * v4 - v2 * (2 - v2)
    den = 6 * v2 - v2**2 - 3 * v4
    if abs(den) < 1e-15:
        raise ZeroDivisionError(f"v4={v4} sits on the ea -> infinity asymptote for v2={v2}")
    raw = num / den
    return EAEstimate(raw, "from_visibility", 0 <= raw <= 1)


def ea_from_baseline_ratio(direct_baseline: float, combined_baseline: float) -> EAEstimate:
    """E/A from the far-delay ratio of direct to accidental four-fold rates (= 1 + E/A)."""
    if not combined_baseline > 0:
        raise ValueError("combined baseline must be positive")
    raw = direct_baseline / combined_baseline - 1
    return EAEstimate(raw, "from_baseline_ratio", 0 <= raw <= 1)


def ea_from_packets(g1: GaussianPacket, g2: GaussianPacket) -> EAEstimate:
    return EAEstimate(exchange_ratio(g1, g2), "from_packets")


def subtract_background(scan: ScanResult, b: float) -> ScanResult:
    """Remove a constant background, clipping at zero (clipped indices recorded)."""
    if b < 0:
        raise ValueError("background must be non-negative")
    shifted = scan.rates - b
    clipped = tuple(int(i) for i in np.flatnonzero(shifted < 0))
    return ScanResult(scan.delays, np.maximum(shifted, 0.0), scan.label, scan.unit, clipped)


def patterns_of(labels: str, n: int) -> list[str]:
    return ["".join(c) for c in combinations(labels, n)]
