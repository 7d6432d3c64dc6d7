"""Polarization-optics elements and the NOON-projection circuits.

Every element is a unitary on the ``2 * n_paths`` external modes.  Presets:

``hom``
    Polarizing splitter sends the V photon of the input pair to path 1, where
    it is rotated to H and meets its partner on a 50:50 beam splitter.
``noon4``
    Two equal arms, V phases 0 and pi/2, each analysed at 45 degrees.
``noon6``
    Three equal arms, V phases 0, 2pi/3 and 4pi/3, each analysed at 45 degrees.

In the NOON presets each arm's polarizing splitter keeps H on the arm's own
path and routes V to the path ``arm + n_arms``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Union

import numpy as np

from .fock import ExternalMode, LinearMap, Pol


@dataclass(frozen=True)
class BeamSplitter:
    """Polarization-independent splitter between two paths.

    ``convention="symmetric"`` uses an ``i`` on reflection; ``"real"`` uses
    the real form with a minus sign on one reflection.
    """

    path_a: int
    path_b: int
    transmissivity: float = 0.5
    convention: str = "symmetric"

    def __post_init__(self):
        if not 0 < self.transmissivity < 1:
            raise ValueError("transmissivity must lie in (0, 1)")
        if self.path_a == self.path_b:
            raise ValueError("beam splitter needs two distinct paths")
        if self.convention not in ("symmetric", "real"):
            raise ValueError(f"unknown beam splitter convention {self.convention!r}")

    @property
    def paths(self) -> tuple[int, ...]:
        return (self.path_a, self.path_b)

    def matrix(self, n_paths: int) -> np.ndarray:
        t = math.sqrt(self.transmissivity)
        r = math.sqrt(1 - self.transmissivity)
        if self.convention == "symmetric":
            block = np.array([[t, 1j * r], [1j * r, t]])
        else:
            block = np.array([[t, -r], [r, t]])
        m = np.eye(2 * n_paths, dtype=complex)
        for pol in Pol:
            idx = [ExternalMode(self.path_a, pol).index, ExternalMode(self.path_b, pol).index]
            m[np.ix_(idx, idx)] = block
        return m


@dataclass(frozen=True)
class PolPhaseShifter:
    """Phase ``theta`` on the V component of one path."""

    path: int
    theta: float

    @property
    def paths(self) -> tuple[int, ...]:
        return (self.path,)

    def matrix(self, n_paths: int) -> np.ndarray:
        m = np.eye(2 * n_paths, dtype=complex)
        v = ExternalMode(self.path, Pol.V).index
        m[v, v] = np.exp(1j * self.theta)
        return m


@dataclass(frozen=True)
class Rotator:
    """Polarization rotation: H -> cos H + sin V, V -> -sin H + cos V."""

    path: int
    angle: float

    @property
    def paths(self) -> tuple[int, ...]:
        return (self.path,)

    def matrix(self, n_paths: int) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        m = np.eye(2 * n_paths, dtype=complex)
        h = ExternalMode(self.path, Pol.H).index
        v = ExternalMode(self.path, Pol.V).index
        m[np.ix_([h, v], [h, v])] = [[c, -s], [s, c]]
        return m


@dataclass(frozen=True)
class PolarizingSplitter:
    """Routes H of ``path_in`` to ``path_h_out`` and V to ``path_v_out``.

    Realized as a mode permutation: the displaced modes arrive through the
    splitter's unused input port.
    """

    path_in: int
    path_h_out: int
    path_v_out: int

    def __post_init__(self):
        if self.path_h_out == self.path_v_out:
            raise ValueError("polarizing splitter outputs must be distinct paths")

    @property
    def paths(self) -> tuple[int, ...]:
        return (self.path_in, self.path_h_out, self.path_v_out)

    def matrix(self, n_paths: int) -> np.ndarray:
        perm = list(range(2 * n_paths))
        for pol, out in ((Pol.H, self.path_h_out), (Pol.V, self.path_v_out)):
            a, b = ExternalMode(self.path_in, pol).index, ExternalMode(out, pol).index
            perm[a], perm[b] = perm[b], perm[a]
        m = np.zeros((2 * n_paths, 2 * n_paths), dtype=complex)
        m[perm, range(2 * n_paths)] = 1
        return m


Element = Union[BeamSplitter, PolPhaseShifter, Rotator, PolarizingSplitter]


@dataclass(frozen=True)
class Circuit:
    n_paths: int
    elements: tuple[Element, ...] = ()
    detectors: Mapping[str, ExternalMode] = field(default_factory=dict)
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        modes = list(self.detectors.values())
        if len(set(modes)) != len(modes):
            raise ValueError("detector labels must map to distinct modes")
        for label, mode in self.detectors.items():
            if not 0 <= mode.path < self.n_paths:
                raise ValueError(f"detector {label} on nonexistent path {mode.path}")

    @property
    def labels(self) -> str:
        return "".join(sorted(self.detectors))

    def modes(self, pattern) -> list[ExternalMode]:
        """Map a pattern such as ``"ABCD"`` (or a sequence of labels) to modes."""
        try:
            return [self.detectors[label] for label in pattern]
        except KeyError as err:
            raise ValueError(f"unknown detector label {err.args[0]!r} for circuit {self.name}") from None


class UnitaryCheck(NamedTuple):
    passed: bool
    residual: float


def check_unitary(m: LinearMap | np.ndarray, tol: float = 1e-10) -> UnitaryCheck:
    mat = m.matrix if isinstance(m, LinearMap) else np.asarray(m)
    residual = float(np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))))
    return UnitaryCheck(residual <= tol, residual)


def compile(c: Circuit) -> LinearMap:
    """Product of the element unitaries, first element applied first."""
    m = np.eye(2 * c.n_paths, dtype=complex)
    for el in c.elements:
        bad = [p for p in el.paths if not 0 <= p < c.n_paths]
        if bad:
            raise ValueError(f"{type(el).__name__} references path {bad[0]} outside 0..{c.n_paths - 1}")
        m = el.matrix(c.n_paths) @ m
    return LinearMap(m)


def _analysers(arms: int) -> list[Element]:
    els: list[Element] = []
    for arm in range(arms):
        els.append(Rotator(arm, math.pi / 4))
        els.append(PolarizingSplitter(arm, arm, arm + arms))
    return els


def _arm_labels(arms: int) -> dict[str, ExternalMode]:
    labels = "ABCDEF"
    out = {}
    for arm in range(arms):
        out[labels[2 * arm]] = ExternalMode(arm, Pol.H)
        out[labels[2 * arm + 1]] = ExternalMode(arm + arms, Pol.V)
    return out


def preset(name: str, bs_convention: str = "symmetric") -> Circuit:
    if name == "hom":
        els = [
            PolarizingSplitter(0, 0, 1),
            Rotator(1, math.pi / 2),
            BeamSplitter(0, 1, 0.5, bs_convention),
        ]
        dets = {"A": ExternalMode(0, Pol.H), "B": ExternalMode(1, Pol.H)}
        return Circuit(2, els, dets, name)
    if name == "noon4":
        els = [BeamSplitter(0, 1, 0.5, bs_convention), PolPhaseShifter(1, math.pi / 2)]
        return Circuit(4, els + _analysers(2), _arm_labels(2), name)
    if name == "noon6":
        els = [
            BeamSplitter(0, 1, 2 / 3, bs_convention),
            BeamSplitter(0, 2, 0.5, bs_convention),
            PolPhaseShifter(1, 2 * math.pi / 3),
            PolPhaseShifter(2, 4 * math.pi / 3),
        ]
        return Circuit(6, els + _analysers(3), _arm_labels(3), name)
    raise ValueError(f"unknown circuit preset {name!r} (expected hom, noon4 or noon6)")


PRESETS = ("hom", "noon4", "noon6")

compile_circuit = compile
