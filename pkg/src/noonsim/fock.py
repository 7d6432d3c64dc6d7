"""Exact few-photon state algebra over dressed modes.

A dressed mode is an external mode ``(path, pol)`` together with an index into
an orthonormal internal (temporal) basis.  Dressed modes are numbered

    index = (2 * path + pol) * dim + internal

which makes the natural integer order the lexicographic order on
``(path, pol, internal)``.

A :class:`StateVector` is a polynomial in creation operators acting on the
vacuum: each key is a sorted tuple of dressed-mode indices (a monomial) and
each value is the complex coefficient of that operator product.  The product
``a_1^n1 a_2^n2 ... |0>`` has squared norm ``n1! n2! ...``; that factor is
applied wherever inner products or probabilities are taken.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import IntEnum
from itertools import combinations, combinations_with_replacement
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .temporal import InternalBasis

PRUNE_TOL = 1e-14
UNITARY_TOL = 1e-10

Monomial = tuple[int, ...]


class BasisMismatchError(ValueError):
    """Raised when two states live on different internal bases or path counts."""


class Pol(IntEnum):
    H = 0
    V = 1


class ExternalMode(NamedTuple):
    path: int
    pol: Pol

    @property
    def index(self) -> int:
        return 2 * self.path + int(self.pol)

    @classmethod
    def from_index(cls, index: int) -> "ExternalMode":
        return cls(index // 2, Pol(index % 2))

    def __str__(self):
        return f"{self.path}{self.pol.name}"


class DressedMode(NamedTuple):
    external: ExternalMode
    internal: int = 0

    def index(self, dim: int) -> int:
        if not 0 <= self.internal < dim:
            raise ValueError(f"internal index {self.internal} outside basis of dim {dim}")
        return self.external.index * dim + self.internal

    @classmethod
    def from_index(cls, index: int, dim: int) -> "DressedMode":
        return cls(ExternalMode.from_index(index // dim), index % dim)


def _occupation_factor(monomial: Monomial) -> int:
    """``prod(n_m!)`` for the repeated modes of a monomial."""
    f = 1
    for n in Counter(monomial).values():
        if n > 1:
            f *= math.factorial(n)
    return f


def _prune(terms: Mapping[Monomial, complex], tol: float = PRUNE_TOL) -> dict:
    return {m: complex(c) for m, c in terms.items() if abs(c) > tol}


@dataclass(frozen=True)
class StateVector:
    """Superposition of creation-operator monomials on the vacuum.

    ``basis`` is ``None`` for a single internal mode.
    """

    terms: Mapping[Monomial, complex]
    n_paths: int
    basis: InternalBasis | None = None

    def __post_init__(self):
        n_dressed = 2 * self.n_paths * self.dim
        merged: dict[Monomial, complex] = defaultdict(complex)
        for m, c in self.terms.items():
            if any(not 0 <= i < n_dressed for i in m):
                raise ValueError(f"monomial {m} references a mode outside {n_dressed} dressed modes")
            merged[tuple(sorted(m))] += c
        object.__setattr__(self, "terms", MappingProxyType(_prune(merged)))

    @property
    def dim(self) -> int:
        return 1 if self.basis is None else self.basis.dim

    # -- constructors -----------------------------------------------------

    @classmethod
    def vacuum(cls, n_paths: int, basis: InternalBasis | None = None) -> "StateVector":
        return cls({(): 1.0}, n_paths, basis)

    @classmethod
    def fock(
        cls,
        occupations: Mapping[ExternalMode | DressedMode, int],
        n_paths: int,
        basis: InternalBasis | None = None,
    ) -> "StateVector":
        """Normalized Fock ket with the given occupation numbers."""
        dim = 1 if basis is None else basis.dim
        modes: list[int] = []
        for mode, n in occupations.items():
            if isinstance(mode, ExternalMode) or not isinstance(mode, DressedMode):
                mode = DressedMode(ExternalMode(*mode))
            modes.extend([mode.index(dim)] * n)
        mono = tuple(sorted(modes))
        return cls({mono: 1 / math.sqrt(_occupation_factor(mono))}, n_paths, basis)

    @classmethod
    def from_creation_ops(
        cls,
        ops: Sequence[tuple[ExternalMode, np.ndarray]],
        n_paths: int,
        basis: InternalBasis | None = None,
        coeff: complex = 1.0,
    ) -> "StateVector":
        """``coeff * prod_k a^dag(ext_k, v_k) |0>`` for internal vectors ``v_k``."""
        dim = 1 if basis is None else basis.dim
        poly: dict[Monomial, complex] = {(): complex(coeff)}
        for ext, vec in ops:
            vec = np.atleast_1d(np.asarray(vec, dtype=complex))
            if vec.shape != (dim,):
                raise ValueError(f"internal vector must have length {dim}")
            form = [(ext.index * dim + i, c) for i, c in enumerate(vec) if abs(c) > PRUNE_TOL]
            poly = _multiply_linear(poly, form)
        return cls(poly, n_paths, basis)

    # -- algebra ------------------------------------------------------------

    def _check_compatible(self, other: "StateVector") -> None:
        if self.n_paths != other.n_paths:
            raise BasisMismatchError(f"path counts differ ({self.n_paths} vs {other.n_paths})")
        if self.basis != other.basis:
            raise BasisMismatchError("states are expressed over different internal bases")

    def __add__(self, other: "StateVector") -> "StateVector":
        self._check_compatible(other)
        out = defaultdict(complex, self.terms)
        for m, c in other.terms.items():
            out[m] += c
        return StateVector(out, self.n_paths, self.basis)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector({m: scalar * c for m, c in self.terms.items()}, self.n_paths, self.basis)

    __rmul__ = __mul__

    def sector(self, n: int) -> "StateVector":
        """Projection onto the ``n``-photon subspace."""
        return StateVector({m: c for m, c in self.terms.items() if len(m) == n}, self.n_paths, self.basis)

    def photon_numbers(self) -> list[int]:
        return sorted({len(m) for m in self.terms})

    def norm_sq(self) -> float:
        return sum(abs(c) ** 2 * _occupation_factor(m) for m, c in self.terms.items())

    def external_modes(self, monomial: Monomial) -> tuple[int, ...]:
        return tuple(i // self.dim for i in monomial)


def _multiply_linear(poly: Mapping[Monomial, complex], form: Sequence[tuple[int, complex]]) -> dict:
    """Multiply a polynomial by the linear form ``sum_j c_j a^dag_j``."""
    out: dict[Monomial, complex] = defaultdict(complex)
    for mono, c in poly.items():
        for j, cj in form:
            # keep the monomial sorted: insert j after any equal entries
            k = len(mono)
            while k and mono[k - 1] > j:
                k -= 1
            out[mono[:k] + (j,) + mono[k:]] += c * cj
    return out


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Bosonic inner product ``<a|b>``."""
    a._check_compatible(b)
    small, large = (a, b) if len(a.terms) <= len(b.terms) else (b, a)
    total = 0j
    for m, c in small.terms.items():
        other = large.terms.get(m)
        if other is not None:
            total += (c.conjugate() * other if small is a else other.conjugate() * c) * _occupation_factor(m)
    return total


@dataclass(frozen=True)
class LinearMap:
    """Matrix acting on external creation operators.

    Column ``e`` holds the image of ``a^dag_e``:  ``a^dag_e -> sum_j M[j, e] a^dag_j``,
    with external modes indexed ``2 * path + pol``.
    """

    matrix: np.ndarray = field(repr=False)
    lossy: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError(f"expected a square matrix of even size, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_paths(self) -> int:
        return self.matrix.shape[0] // 2

    def unitarity_residual(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.matrix @ other.matrix, self.lossy or other.lossy)


def apply_linear_map(m: LinearMap, s: StateVector) -> StateVector:
    """Substitute every creation operator by its image under ``m``.

    Internal indices are carried through untouched.
    """
    if m.n_paths != s.n_paths:
        raise ValueError(f"map acts on {m.n_paths} paths but state has {s.n_paths}")
    if not m.lossy and m.unitarity_residual() > UNITARY_TOL:
        raise ValueError("map is not unitary; pass lossy=True to apply it anyway")
    dim = s.dim
    mat = m.matrix
    images: dict[int, list[tuple[int, complex]]] = {}

    def image(i: int) -> list[tuple[int, complex]]:
        if i not in images:
            e, internal = divmod(i, dim)
            col = mat[:, e]
            images[i] = [(j * dim + internal, col[j]) for j in np.flatnonzero(np.abs(col) > PRUNE_TOL)]
        return images[i]

    out: dict[Monomial, complex] = defaultdict(complex)
    for mono, c in s.terms.items():
        poly: dict[Monomial, complex] = {(): c}
        for i in mono:
            poly = _multiply_linear(poly, image(i))
        for k, v in poly.items():
            out[k] += v
    return StateVector(out, s.n_paths, s.basis)


def coincidence_distribution(s: StateVector, n: int) -> dict[tuple[int, ...], float]:
    """Detection probabilities of every external occupation pattern in the n-photon sector.

    Keys are sorted tuples of external-mode indices (repeated for bunched
    outcomes); internal configurations are summed incoherently.
    """
    dist: dict[tuple[int, ...], float] = defaultdict(float)
    dim = s.dim
    for m, c in s.terms.items():
        if len(m) == n:
            dist[tuple(i // dim for i in m)] += abs(c) ** 2 * _occupation_factor(m)
    return dict(dist)


def _detector_key(detectors: Sequence[ExternalMode]) -> tuple[int, ...]:
    if len(detectors) == 0:
        raise ValueError("detector list is empty")
    idx = [ExternalMode(*d).index for d in detectors]
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate detector modes in {list(detectors)}")
    return tuple(sorted(idx))


def coincidence_probability(s: StateVector, detectors: Sequence[ExternalMode]) -> float:
    """Probability of exactly one photon in each detector mode and none elsewhere.

    Only the sector with ``len(detectors)`` photons contributes; internal
    configurations are summed incoherently (slow detectors).
    """
    key = _detector_key(detectors)
    n_ext = 2 * s.n_paths
    if key[-1] >= n_ext:
        raise ValueError(f"detector outside the {n_ext} external modes")
    dim = s.dim
    total = 0.0
    for m, c in s.terms.items():
        if len(m) == len(key) and tuple(i // dim for i in m) == key:
            total += abs(c) ** 2
    return total


def permanent(a) -> complex:
    """Matrix permanent by Ryser's formula with Gray-code ordering."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0j
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    sign_n = (-1) ** n
    prev = 0
    for k in range(1, 2**n):
        gray = k ^ (k >> 1)
        changed = gray ^ prev
        j = changed.bit_length() - 1
        if gray & changed:
            row_sums += a[:, j]
        else:
            row_sums -= a[:, j]
        prev = gray
        sign = -1 if bin(gray).count("1") % 2 else 1
        total += sign * np.prod(row_sums)
    return sign_n * total


def bunched_outcomes(n_ext: int, n: int) -> list[tuple[int, ...]]:
    """All external occupation patterns of ``n`` photons with at least one repeated mode."""
    return [p for p in combinations_with_replacement(range(n_ext), n) if len(set(p)) < n]


def coincidence_patterns(n_ext: int, n: int) -> list[tuple[int, ...]]:
    return list(combinations(range(n_ext), n))


def noon_state(n: int, n_paths: int = 1, path: int = 0) -> StateVector:
    """``(|n,0> - |0,n>) / sqrt(2)`` in the H/V modes of one path."""
    h = ExternalMode(path, Pol.H).index
    v = ExternalMode(path, Pol.V).index
    c = 1 / math.sqrt(2 * math.factorial(n))
    return StateVector({(h,) * n: c, (v,) * n: -c}, n_paths)


def noon_overlap(s: StateVector, n: int) -> float:
    """``|<NOON_n|s>|^2`` on path 0 for a single-internal-mode state."""
    if n < 2:
        raise ValueError("NOON projection needs n >= 2")
    if s.dim != 1:
        raise ValueError("NOON overlap is defined for a single temporal mode only")
    noon = noon_state(n, s.n_paths)
    return abs(inner_product(noon, StateVector(s.terms, s.n_paths))) ** 2


def iter_modes(monomial: Monomial, dim: int) -> Iterable[DressedMode]:
    return (DressedMode.from_index(i, dim) for i in monomial)
