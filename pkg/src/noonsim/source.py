"""Multi-pair down-conversion states with explicit pair emission times.

Pair ``k`` is created by ``A_k = a_H^dag(g_k) a_V^dag(shift(g_k, dT))`` where
``g_k`` is a Gaussian packet centred on the pair's emission time and ``dT``
is the polarization delay set by the movable fiber arm.  The ``K``-pair term
of the state is

    eta^K / sqrt(K!) * A_1 A_2 ... A_K |0>

which reduces to ``sqrt(K!) eta^K |K>_H |K>_V`` when all pairs share one
packet.  With more pairs than ``K`` the term is averaged over all
``K``-subsets of pairs.

Rates are not read off these amplitudes directly.  A configuration of ``K``
pairs is emitted with probability

    W_K = eta^(2K) / K! * perm(P),    P[j, k] = <g_j|g_k>^2

``P`` is the Gram matrix of the pair (biphoton) wavefunctions, whose squared
entries are the exchange ratios.  ``W_K`` is Poissonian (``eta^(2K) / K!``) for well separated pairs and thermal
(``eta^(2K)``) for pairs sharing one packet; scans weight the normalized
configuration state by ``W_K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .fock import ExternalMode, Pol, StateVector, permanent
from .temporal import (
    GaussianPacket,
    InternalBasis,
    build_internal_basis,
    exchange_ratio,
    packet_overlap,
    shift_packet,
)

DEFAULT_ETA = 0.1
DEFAULT_SIGMA = 100 * math.sqrt(2)  # fs; gives a two-photon dip of rms width 200 fs
WELL_SEPARATED = 20.0  # separations in units of sigma

PAIR_COUNTS = {
    "four_x_one": 2,
    "two_x_two": 2,
    "six_x_one": 3,
    "four_x_one_plus_two": 3,
    "two_x_three": 3,
}
KINDS = tuple(PAIR_COUNTS) + ("custom",)


@dataclass(frozen=True)
class Scenario:
    kind: str
    pair_times: tuple[float, ...]
    sigma: float = DEFAULT_SIGMA
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        object.__setattr__(self, "pair_times", tuple(float(t) for t in self.pair_times))
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.pair_times:
            raise ValueError("scenario needs at least one pair")
        expected = PAIR_COUNTS.get(self.kind)
        if expected is not None and len(self.pair_times) != expected:
            raise ValueError(f"{self.kind} needs {expected} pairs, got {len(self.pair_times)}")

    @property
    def n_pairs(self) -> int:
        return len(self.pair_times)

    def packets(self) -> list[GaussianPacket]:
        return [GaussianPacket(t, self.sigma) for t in self.pair_times]

    def subsets(self, order: int) -> Iterator["Scenario"]:
        """Sub-scenarios made of every ``order``-subset of the pairs."""
        for idx in combinations(range(self.n_pairs), order):
            times = tuple(self.pair_times[i] for i in idx)
            yield replace(self, kind="custom", pair_times=times)


def scenario_build(
    kind: str,
    sigma: float = DEFAULT_SIGMA,
    separation: float | None = None,
    eta: float = DEFAULT_ETA,
) -> Scenario:
    """Pair emission times for the named distinguishability scenario.

    ``separation`` defaults to ``20 * sigma``; it should also exceed the
    largest delay that will be scanned so that a V photon delayed by ``dT``
    never overlaps an H photon of a different pair.
    """
    if separation is None:
        separation = WELL_SEPARATED * sigma
    if separation < 0:
        raise ValueError("separation must be non-negative")
    s = float(separation)
    times = {
        "four_x_one": (0.0, 0.0),
        "six_x_one": (0.0, 0.0, 0.0),
        "two_x_two": (0.0, s),
        "four_x_one_plus_two": (0.0, 0.0, s),
        "two_x_three": (0.0, s, 2 * s),
    }
    if kind not in times:
        raise ValueError(f"unknown scenario kind {kind!r} (expected one of {', '.join(times)})")
    return Scenario(kind, times[kind], sigma, eta)


def pair_scenario(sigma: float = DEFAULT_SIGMA, eta: float = DEFAULT_ETA) -> Scenario:
    """A single pair, the source of two-fold reference scans."""
    return Scenario("custom", (0.0,), sigma, eta)


@dataclass(frozen=True)
class SourceState:
    state: StateVector
    basis: InternalBasis
    order: int


def pair_gram(scenario: Scenario) -> np.ndarray:
    """Overlaps of the pair wavefunctions ``g_j(t) g_j(t')``."""
    g = scenario.packets()
    return np.array([[packet_overlap(a, b) ** 2 for b in g] for a in g])


def exchange_matrix(scenario: Scenario) -> np.ndarray:
    g = scenario.packets()
    return np.array([[exchange_ratio(a, b) for b in g] for a in g])


def emission_weight(scenario: Scenario) -> float:
    """Probability that all pairs of ``scenario`` are emitted in one pulse."""
    k = scenario.n_pairs
    return scenario.eta ** (2 * k) / math.factorial(k) * float(permanent(pair_gram(scenario)).real)


def pair_packets(scenario: Scenario, dT: float) -> list[tuple[GaussianPacket, GaussianPacket]]:
    """``(H packet, V packet)`` for each pair, V delayed by ``dT``."""
    return [(g, shift_packet(g, dT)) for g in scenario.packets()]


def pdc_state(scenario: Scenario, order: int, dT: float = 0.0, n_paths: int = 1) -> SourceState:
    """Source state on path 0 expanded up to ``order`` pairs.

    ``n_paths`` sets the external mode space so the state can be fed directly
    into a circuit.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if order > scenario.n_pairs:
        raise ValueError(f"order {order} exceeds the {scenario.n_pairs} pairs of the scenario")
    pairs = pair_packets(scenario, dT)
    basis = build_internal_basis([p for pair in pairs for p in pair])
    h, v = ExternalMode(0, Pol.H), ExternalMode(0, Pol.V)
    ops = [((h, basis.vector(gh)), (v, basis.vector(gv))) for gh, gv in pairs]

    state = StateVector.vacuum(n_paths, basis)
    for k in range(1, order + 1):
        subsets = list(combinations(range(len(ops)), k))
        coeff = scenario.eta**k / math.sqrt(math.factorial(k)) / len(subsets)
        for idx in subsets:
            flat = [op for i in idx for op in ops[i]]
            state = state + StateVector.from_creation_ops(flat, n_paths, basis, coeff)
    return SourceState(state, basis, order)


def pair_sector_coefficient(source: SourceState, k: int) -> complex:
    """Coefficient of the normalized ``|k>_H |k>_V`` ket (single internal mode only)."""
    if source.basis.dim != 1:
        raise ValueError("defined only when all photons share one internal mode")
    h, v = ExternalMode(0, Pol.H).index, ExternalMode(0, Pol.V).index
    c = source.state.terms.get(tuple(sorted((h,) * k + (v,) * k)), 0j)
    return c * math.factorial(k)


def permuted(scenario: Scenario, order: Sequence[int]) -> Scenario:
    return replace(scenario, pair_times=tuple(np.asarray(scenario.pair_times)[list(order)]))
