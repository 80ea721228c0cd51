"""Sparse polarization-resolved Fock states, ensembles and comparison metrics.

A basis ket is stored as a sorted tuple of ``(mode, polarization, count)``
entries with zero counts omitted, so the empty tuple is the vacuum. Pure
states map kets to complex amplitudes; mixed states are ensembles of
normalized pure states with positive weights.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

PRUNE_EPSILON = 1e-14
DEFAULT_PHOTON_CAP = 12
# Mode labels at or above this stride denote extra temporal slots of the
# base mode ``label % SLOT_STRIDE``: same optics, same detector, but photons
# in different slots never interfere.
SLOT_STRIDE = 1000


class Polarization(enum.IntEnum):
    H = 0
    V = 1


H = Polarization.H
V = Polarization.V

Channel = tuple[int, Polarization]
Ket = tuple[tuple[int, Polarization, int], ...]

VACUUM_KET: Ket = ()


class FockError(Exception):
    """Base class for simulator errors."""


class UnknownMode(FockError):
    pass


class NonUnitary(FockError):
    pass


class ZeroProbability(FockError):
    pass


class DimensionMismatch(FockError):
    pass


class PhotonCapExceeded(FockError):
    pass


class InvalidParams(FockError, ValueError):
    pass


def slot_mode(mode: int, slot: int) -> int:
    return mode + SLOT_STRIDE * slot


def base_mode(mode: int) -> int:
    return mode % SLOT_STRIDE


def slot_modes(modes: Iterable[int], mode: int) -> list[int]:
    """All declared labels (any slot) that share the base mode ``mode``."""
    return sorted(m for m in modes if base_mode(m) == base_mode(mode))


def merge_slots(ket: Ket) -> Ket:
    """Forget slot labels, pooling photon counts on each base mode."""
    return make_ket([((base_mode(m), p), n) for m, p, n in ket])


# --- kets -----------------------------------------------------------------


def make_ket(occupations: Mapping[Channel, int] | Iterable[tuple[Channel, int]]) -> Ket:
    """Canonical ket from a ``{(mode, pol): count}`` association."""
    items = occupations.items() if isinstance(occupations, Mapping) else occupations
    merged: dict[Channel, int] = defaultdict(int)
    for (mode, pol), n in items:
        if n < 0:
            raise InvalidParams(f"negative occupation {n} on mode {mode}")
        merged[(int(mode), Polarization(pol))] += int(n)
    return tuple(sorted((m, p, n) for (m, p), n in merged.items() if n))


def ket_occupations(ket: Ket) -> dict[Channel, int]:
    return {(m, p): n for m, p, n in ket}


def ket_photons(ket: Ket) -> int:
    return sum(n for _, _, n in ket)


def ket_mode_photons(ket: Ket, mode: int) -> int:
    return sum(n for m, _, n in ket if m == mode)


def split_ket(ket: Ket, modes: Iterable[int]) -> tuple[Ket, Ket]:
    """Split ``ket`` into (entries on ``modes``, remaining entries)."""
    modes = set(modes)
    inside = tuple(e for e in ket if e[0] in modes)
    outside = tuple(e for e in ket if e[0] not in modes)
    return inside, outside


def join_kets(a: Ket, b: Ket) -> Ket:
    return make_ket([((m, p), n) for m, p, n in a + b])


def format_ket(ket: Ket) -> str:
    """Render ``ket`` as e.g. ``"1H@1 1V@2"``; the vacuum renders as ``""``."""
    return " ".join(f"{n}{p.name}@{m}" for m, p, n in ket)


def parse_ket(text: str) -> Ket:
    entries = []
    for token in text.split():
        count_pol, _, mode = token.partition("@")
        if not mode or not count_pol or count_pol[-1] not in "HV":
            raise ValueError(f"malformed ket token {token!r}")
        entries.append(((int(mode), Polarization[count_pol[-1]]), int(count_pol[:-1])))
    return make_ket(entries)


# --- pure states ----------------------------------------------------------


@dataclass(frozen=True)
class PureState:
    """Sparse superposition over Fock kets.

    ``modes`` is the declared set of spatial modes; it may be larger than the
    set of modes that actually carry photons.
    """

    amplitudes: Mapping[Ket, complex]
    modes: frozenset[int] = frozenset()
    prune_epsilon: float = PRUNE_EPSILON

    def __post_init__(self):
        amps = {}
        for ket, amp in self.amplitudes.items():
            amp = complex(amp)
            if abs(amp) >= self.prune_epsilon:
                amps[ket] = amp
        modes = frozenset(self.modes) | {m for ket in amps for m, _, _ in ket}
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "modes", modes)

    def __iter__(self) -> Iterator[tuple[Ket, complex]]:
        return iter(sorted(self.amplitudes.items()))

    def __len__(self) -> int:
        return len(self.amplitudes)

    def amplitude(self, ket: Ket) -> complex:
        return self.amplitudes.get(ket, 0j)

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def normalize(self) -> PureState:
        n = self.norm()
        if n == 0.0:
            raise ZeroProbability("cannot normalize the zero vector")
        return PureState({k: a / n for k, a in self.amplitudes.items()}, self.modes)

    def scale(self, factor: complex) -> PureState:
        return PureState({k: a * factor for k, a in self.amplitudes.items()}, self.modes)

    def max_photons(self) -> int:
        return max((ket_photons(k) for k in self.amplitudes), default=0)

    def with_modes(self, modes: Iterable[int]) -> PureState:
        return PureState(self.amplitudes, self.modes | frozenset(modes))

    def __add__(self, other: PureState) -> PureState:
        out = dict(self.amplitudes)
        for k, a in other.amplitudes.items():
            out[k] = out.get(k, 0j) + a
        return PureState(out, self.modes | other.modes)


def vacuum(modes: Iterable[int] = ()) -> PureState:
    return PureState({VACUUM_KET: 1.0}, frozenset(modes))


def basis_state(occupations: Mapping[Channel, int], modes: Iterable[int] = ()) -> PureState:
    return PureState({make_ket(occupations): 1.0}, frozenset(modes))


def total_photons(state: PureState) -> int:
    """Photon number of a state with definite photon number.

    Raises ``ValueError`` for superpositions of different photon numbers.
    """
    counts = {ket_photons(k) for k in state.amplitudes}
    if not counts:
        return 0
    if len(counts) > 1:
        raise ValueError(f"state has indefinite photon number {sorted(counts)}")
    return counts.pop()


def _check_cap(state: PureState, cap: int) -> None:
    n = state.max_photons()
    if n > cap:
        raise PhotonCapExceeded(f"state carries {n} photons, cap is {cap}")


def create_photon(
    state: PureState, mode: int, pol: Polarization, cap: int = DEFAULT_PHOTON_CAP
) -> PureState:
    """Apply the creation operator for ``(mode, pol)``; the result is not renormalized."""
    pol = Polarization(pol)
    out: dict[Ket, complex] = {}
    for ket, amp in state.amplitudes.items():
        occ = ket_occupations(ket)
        n = occ.get((mode, pol), 0)
        occ[(mode, pol)] = n + 1
        new = make_ket(occ)
        out[new] = out.get(new, 0j) + amp * math.sqrt(n + 1)
    result = PureState(out, state.modes | {mode})
    _check_cap(result, cap)
    return result


def tensor(*states: PureState) -> PureState:
    """Tensor product of states on disjoint mode sets."""
    result = vacuum()
    for st in states:
        if result.modes & st.modes:
            raise DimensionMismatch(f"overlapping modes {sorted(result.modes & st.modes)}")
        out = {}
        for ka, aa in result.amplitudes.items():
            for kb, ab in st.amplitudes.items():
                out[ka + kb if not ka or not kb else join_kets(ka, kb)] = aa * ab
        result = PureState(out, result.modes | st.modes)
    return result


def _power_expansion(row: np.ndarray, n: int) -> dict[tuple[int, ...], complex]:
    """Coefficients of ``(sum_j row[j] b_j)**n`` as commuting monomials."""
    poly: dict[tuple[int, ...], complex] = {(0,) * len(row): 1.0}
    nz = [j for j, c in enumerate(row) if c != 0]
    for _ in range(n):
        nxt: dict[tuple[int, ...], complex] = defaultdict(complex)
        for mono, c in poly.items():
            for j in nz:
                m = list(mono)
                m[j] += 1
                nxt[tuple(m)] += c * row[j]
        poly = nxt
    return poly


def check_unitary(matrix: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    u = np.asarray(matrix, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NonUnitary(f"matrix of shape {u.shape} is not square")
    if not np.allclose(u @ u.conj().T, np.eye(len(u)), atol=tol, rtol=0):
        raise NonUnitary("coefficient matrix is not unitary")
    return u


def apply_linear_map(
    state: PureState,
    modes_in: Sequence[Channel],
    coeff_matrix,
    cap: int = DEFAULT_PHOTON_CAP,
) -> PureState:
    """Apply a passive linear-optical transformation.

    Each creation operator on channel ``modes_in[i]`` is replaced by
    ``sum_j U[i, j]`` times the creation operator on ``modes_in[j]``.
    Channels not listed are untouched.
    """
    channels = [(int(m), Polarization(p)) for m, p in modes_in]
    if len(set(channels)) != len(channels):
        raise InvalidParams("modes_in must be distinct")
    for m, _ in channels:
        if m not in state.modes:
            raise UnknownMode(f"mode {m} is not declared in the state")
    u = check_unitary(coeff_matrix)
    if u.shape[0] != len(channels):
        raise DimensionMismatch(f"{u.shape[0]}x{u.shape[0]} matrix for {len(channels)} channels")
    _check_cap(state, cap)

    index = {ch: i for i, ch in enumerate(channels)}
    powers: dict[tuple[int, int], dict] = {}
    out: dict[Ket, complex] = defaultdict(complex)
    for ket, amp in state.amplitudes.items():
        counts = [0] * len(channels)
        rest = []
        for m, p, n in ket:
            i = index.get((m, p))
            if i is None:
                rest.append(((m, p), n))
            else:
                counts[i] = n
        poly: dict[tuple[int, ...], complex] = {(0,) * len(channels): amp}
        for i, n in enumerate(counts):
            if n == 0:
                continue
            key = (i, n)
            if key not in powers:
                powers[key] = _power_expansion(u[i], n)
            factor = 1.0 / math.sqrt(math.factorial(n))
            nxt: dict[tuple[int, ...], complex] = defaultdict(complex)
            for mono, c in poly.items():
                for mono2, c2 in powers[key].items():
                    nxt[tuple(a + b for a, b in zip(mono, mono2))] += c * c2 * factor
            poly = nxt
        for mono, c in poly.items():
            bose = math.sqrt(math.prod(math.factorial(k) for k in mono))
            new = make_ket(rest + [(channels[j], k) for j, k in enumerate(mono) if k])
            out[new] += c * bose
    return PureState(out, state.modes)


# --- ensembles ------------------------------------------------------------


@dataclass(frozen=True)
class Ensemble:
    """Density operator ``sum_i w_i |psi_i><psi_i|`` as weighted pure branches."""

    branches: tuple[tuple[float, PureState], ...]
    modes: frozenset[int] = field(default=frozenset())

    def __post_init__(self):
        branches = tuple((float(w), s) for w, s in self.branches if w > 0.0)
        modes = frozenset(self.modes).union(*(s.modes for _, s in branches))
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "modes", modes)

    @classmethod
    def pure(cls, state: PureState) -> Ensemble:
        return cls(((1.0, state.normalize()),), state.modes)

    @classmethod
    def mixture(cls, items: Iterable[tuple[float, PureState]], modes: Iterable[int] = ()) -> Ensemble:
        """Build from ``(weight, state)`` pairs; states are normalized here."""
        return cls(tuple((w, s.normalize()) for w, s in items if w > 0.0), frozenset(modes))

    @classmethod
    def from_unnormalized(
        cls, items: Iterable[tuple[float, PureState]], modes: Iterable[int] = ()
    ) -> Ensemble:
        """Absorb each state's squared norm into its weight, without renormalizing the total."""
        branches = []
        for w, s in items:
            nsq = s.norm_sq()
            if w * nsq > 0.0:
                branches.append((w * nsq, s.scale(1.0 / math.sqrt(nsq))))
        return cls(tuple(branches), frozenset(modes))

    def __iter__(self):
        return iter(self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    def trace(self) -> float:
        return float(sum(w for w, _ in self.branches))

    def normalize(self) -> Ensemble:
        t = self.trace()
        if t <= 0.0:
            raise ZeroProbability("ensemble has zero trace")
        return Ensemble(tuple((w / t, s) for w, s in self.branches), self.modes)

    def map_states(self, fn) -> Ensemble:
        """Apply ``fn`` to every branch; branches see the ensemble's declared modes."""
        return Ensemble(
            tuple(
                (w, fn(s if s.modes >= self.modes else s.with_modes(self.modes)))
                for w, s in self.branches
            ),
            self.modes,
        )

    def with_modes(self, modes: Iterable[int]) -> Ensemble:
        return Ensemble(self.branches, self.modes | frozenset(modes))

    def kets(self) -> list[Ket]:
        return sorted({k for _, s in self.branches for k in s.amplitudes})

    def max_photons(self) -> int:
        return max((s.max_photons() for _, s in self.branches), default=0)

    def merge(self, tol: float = 1e-13) -> Ensemble:
        """Merge branches whose states coincide up to a global phase."""
        merged: list[list] = []
        for w, s in self.branches:
            for entry in merged:
                t = entry[1]
                if t.amplitudes.keys() == s.amplitudes.keys() and abs(abs(_inner(t, s)) - 1.0) < tol:
                    entry[0] += w
                    break
            else:
                merged.append([w, s])
        return Ensemble(tuple((w, s) for w, s in merged), self.modes)

    def simplify(self, tol: float = 1e-13) -> Ensemble:
        """Canonical spectral ensemble of the same density operator."""
        dm = to_density_matrix(self)
        vals, vecs = np.linalg.eigh(dm.matrix)
        branches = []
        for lam, vec in zip(vals[::-1], vecs.T[::-1]):
            if lam <= tol:
                continue
            # fix the global phase on the largest component
            j = int(np.argmax(np.abs(vec)))
            vec = vec * (abs(vec[j]) / vec[j])
            st = PureState(dict(zip(dm.basis, vec)), self.modes)
            branches.append((float(lam), st.normalize()))
        return Ensemble(tuple(branches), self.modes)


def tensor_ensembles(*ensembles: Ensemble) -> Ensemble:
    result = Ensemble(((1.0, vacuum()),))
    for ens in ensembles:
        if result.modes & ens.modes:
            raise DimensionMismatch(f"overlapping modes {sorted(result.modes & ens.modes)}")
        result = Ensemble(
            tuple((wa * wb, tensor(sa, sb)) for wa, sa in result for wb, sb in ens),
            result.modes | ens.modes,
        )
    return result


def _inner(a: PureState, b: PureState) -> complex:
    """<a|b>."""
    if len(a) > len(b):
        return sum(a.amplitudes.get(k, 0j).conjugate() * amp for k, amp in b.amplitudes.items())
    return sum(amp.conjugate() * b.amplitudes.get(k, 0j) for k, amp in a.amplitudes.items())


def inner(a: PureState, b: PureState) -> complex:
    return complex(_inner(a, b))


def split_by_modes(state: PureState, modes: Iterable[int]) -> dict[Ket, PureState]:
    """Group components by their occupation of ``modes``.

    Returns ``{ket_on_modes: unnormalized state on the other modes}``. Distinct
    keys are orthogonal on ``modes``, so tracing out ``modes`` turns each value
    into an independent branch.
    """
    modes = frozenset(modes)
    groups: dict[Ket, dict[Ket, complex]] = defaultdict(dict)
    for ket, amp in state.amplitudes.items():
        inside, outside = split_ket(ket, modes)
        groups[inside][outside] = amp
    rest = state.modes - modes
    return {k: PureState(v, rest) for k, v in groups.items()}


def condition_on_vacuum(ens: Ensemble, modes: Iterable[int]) -> tuple[float, Ensemble]:
    """Project onto zero photons in ``modes``; return (probability, renormalized ensemble)."""
    modes = frozenset(modes)
    missing = modes - ens.modes
    if missing:
        raise UnknownMode(f"modes {sorted(missing)} not declared")
    kept = []
    for w, s in ens:
        part = {k: a for k, a in s.amplitudes.items() if not any(m in modes for m, _, _ in k)}
        kept.append((w, PureState(part, s.modes - modes)))
    out = Ensemble.from_unnormalized(kept, ens.modes - modes)
    p = out.trace()
    if p <= 0.0:
        raise ZeroProbability(f"no component is empty on modes {sorted(modes)}")
    return min(p, 1.0), out.normalize()


def partial_trace(ens: Ensemble, keep: Iterable[int]) -> Ensemble:
    keep = frozenset(keep)
    missing = keep - ens.modes
    if missing:
        raise UnknownMode(f"modes {sorted(missing)} not declared")
    drop = ens.modes - keep
    items = []
    for w, s in ens:
        for part in split_by_modes(s, drop).values():
            items.append((w, part))
    return Ensemble.from_unnormalized(items, keep)


# --- dense view and metrics -----------------------------------------------


@dataclass(frozen=True)
class DensityMatrix:
    basis: tuple[Ket, ...]
    matrix: np.ndarray
    modes: frozenset[int] = frozenset()

    def index(self, ket: Ket) -> int:
        return self.basis.index(ket)

    def element(self, bra: Ket, ket: Ket) -> complex:
        try:
            return complex(self.matrix[self.index(bra), self.index(ket)])
        except ValueError:
            return 0j

    def check(self, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-10) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=herm_tol, rtol=0):
            raise InvalidParams("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > trace_tol:
            raise InvalidParams(f"trace {np.trace(m).real} != 1")
        if len(m) and np.linalg.eigvalsh(m).min() < -psd_tol:
            raise InvalidParams("density matrix is not positive semidefinite")


def to_density_matrix(ens: Ensemble, basis: Sequence[Ket] | None = None) -> DensityMatrix:
    basis = tuple(ens.kets() if basis is None else basis)
    idx = {k: i for i, k in enumerate(basis)}
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for w, s in ens:
        vec = np.zeros(len(basis), dtype=complex)
        for k, a in s.amplitudes.items():
            vec[idx[k]] = a
        rho += w * np.outer(vec, vec.conj())
    return DensityMatrix(basis, rho, ens.modes)


def from_density_matrix(dm: DensityMatrix, tol: float = 1e-14) -> Ensemble:
    vals, vecs = np.linalg.eigh(dm.matrix)
    branches = []
    for lam, vec in zip(vals, vecs.T):
        if lam > tol:
            branches.append((float(lam), PureState(dict(zip(dm.basis, vec)), dm.modes).normalize()))
    return Ensemble(tuple(branches), dm.modes)


def _common_matrices(a: Ensemble, b: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    if a.modes != b.modes:
        raise DimensionMismatch(f"mode sets differ: {sorted(a.modes)} vs {sorted(b.modes)}")
    basis = sorted(set(a.kets()) | set(b.kets()))
    return to_density_matrix(a, basis).matrix, to_density_matrix(b, basis).matrix


def trace_distance(a: Ensemble, b: Ensemble) -> float:
    ra, rb = _common_matrices(a, b)
    if not len(ra):
        return 0.0
    eig = np.linalg.eigvalsh(ra - rb)
    return float(0.5 * np.abs(eig).sum())


def fidelity_with_pure(ens: Ensemble, target: PureState) -> float:
    """<target|rho|target>."""
    return float(sum(w * abs(_inner(target, s)) ** 2 for w, s in ens))


def purity(ens: Ensemble) -> float:
    return float(
        sum(wa * wb * abs(_inner(sa, sb)) ** 2 for wa, sa in ens for wb, sb in ens)
    )


def photon_number_distribution(ens: Ensemble, modes: Iterable[int] | None = None) -> dict[int, float]:
    modes = ens.modes if modes is None else frozenset(modes)
    dist: dict[int, float] = defaultdict(float)
    for w, s in ens:
        for k, a in s.amplitudes.items():
            dist[sum(n for m, _, n in k if m in modes)] += w * abs(a) ** 2
    return dict(sorted(dist.items()))


def mean_photon_number(ens: Ensemble) -> float:
    return float(sum(n * p for n, p in photon_number_distribution(ens).items()))
