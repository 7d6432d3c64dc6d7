"""Temporal wavepackets and the orthonormal internal basis they span.

Photons are labelled by real, transform-limited Gaussian amplitude profiles

    g(t) = (2 pi sigma^2)^(-1/4) exp(-(t - t0)^2 / (4 sigma^2))

so that two packets of equal width overlap as exp(-(t1 - t2)^2 / (8 sigma^2)).
All times are in femtoseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

RANK_TOL = 1e-9


@dataclass(frozen=True)
class GaussianPacket:
    t0: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def amplitude(self, t):
        """Evaluate the (real) amplitude profile at times ``t``."""
        t = np.asarray(t, dtype=float)
        return (2 * np.pi * self.sigma**2) ** -0.25 * np.exp(
            -((t - self.t0) ** 2) / (4 * self.sigma**2)
        )


def _check_widths(g1: GaussianPacket, g2: GaussianPacket) -> None:
    if g1.sigma != g2.sigma:
        raise ValueError(
            f"packets must share one width (got sigma={g1.sigma} and {g2.sigma})"
        )


def packet_overlap(g1: GaussianPacket, g2: GaussianPacket) -> float:
    """Overlap integral of two equal-width Gaussian packets."""
    _check_widths(g1, g2)
    dt = g1.t0 - g2.t0
    return math.exp(-(dt * dt) / (8 * g1.sigma**2))


def shift_packet(g: GaussianPacket, dT: float) -> GaussianPacket:
    return GaussianPacket(g.t0 + dT, g.sigma)


def exchange_ratio(g1: GaussianPacket, g2: GaussianPacket) -> float:
    """Pair-exchange weight E/A for two pairs emitted in packets g1 and g2.

    Exchanging two pairs swaps both their H and their V photons, so the
    weight is the squared overlap for each polarization: ``|<g1|g2>|**4``.
    """
    return packet_overlap(g1, g2) ** 4


@dataclass(frozen=True, eq=False)
class InternalBasis:
    """Orthonormal basis spanning a set of packets.

    Attributes:
        packets: the distinct packets in the order they were supplied.
        gram: analytic overlap matrix ``gram[i, j] = <p_i|p_j>``.
        transform: ``(dim, len(packets))`` matrix; column ``j`` holds the
            expansion of packet ``j`` in the orthonormal basis, so that
            ``transform.conj().T @ transform`` reproduces ``gram``.
    """

    packets: tuple[GaussianPacket, ...]
    gram: np.ndarray = field(repr=False)
    transform: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.transform.shape[0]

    def index(self, packet: GaussianPacket) -> int:
        return self.packets.index(packet)

    def vector(self, packet: GaussianPacket) -> np.ndarray:
        """Expansion coefficients of ``packet`` (which must be in the basis)."""
        return self.transform[:, self.index(packet)]

    def __eq__(self, other):
        if not isinstance(other, InternalBasis):
            return NotImplemented
        return self.packets == other.packets

    def __hash__(self):
        return hash(self.packets)


def build_internal_basis(
    packets: Sequence[GaussianPacket], rank_tol: float = RANK_TOL
) -> InternalBasis:
    """Gram-Schmidt orthonormalization driven by the analytic Gram matrix.

    Duplicate packets are merged before orthonormalization, and a packet
    whose squared residual after projecting out the earlier basis vectors
    falls below ``rank_tol`` adds no new dimension.
    """
    if len(packets) == 0:
        raise ValueError("at least one packet is required")
    unique = tuple(dict.fromkeys(packets))
    n = len(unique)
    gram = np.array([[packet_overlap(a, b) for b in unique] for a in unique])

    # columns of `coeffs` express each orthonormal vector in terms of packets
    coeffs: list[np.ndarray] = []
    transform = np.zeros((n, n))
    for j in range(n):
        proj = np.array([c @ gram[:, j] for c in coeffs])
        residual_sq = gram[j, j] - float(proj @ proj) if coeffs else gram[j, j]
        transform[: len(coeffs), j] = proj
        if residual_sq <= rank_tol:
            continue
        norm = math.sqrt(residual_sq)
        new = np.zeros(n)
        new[j] = 1.0
        for k, c in enumerate(coeffs):
            new -= proj[k] * c
        new /= norm
        transform[len(coeffs), j] = norm
        coeffs.append(new)

    dim = len(coeffs)
    return InternalBasis(unique, gram, transform[:dim].copy())
