"""Optical elements, loss channels and photon detectors acting on ensembles."""

from __future__ import annotations

import dataclasses
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .fock import (
    H,
    V,
    Ensemble,
    InvalidParams,
    Polarization,
    PureState,
    UnknownMode,
    SLOT_STRIDE,
    apply_linear_map,
    slot_mode,
    slot_modes,
)

QUARTER_PI = math.pi / 4


@dataclass(frozen=True)
class Pbs:
    """Polarizing beam splitter: H stays in its mode, V swaps between ``a`` and ``b``."""

    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise InvalidParams("PBS ports must be distinct modes")

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Rotator:
    """Half-wave-plate style map H -> cos H + sin V, V -> sin H - cos V."""

    mode: int
    angle: float = QUARTER_PI

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise InvalidParams("rotator angle must be finite")

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class PolarizerH:
    mode: int

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class Loss:
    mode: int
    transmissivity: float

    def __post_init__(self):
        if not 0.0 <= self.transmissivity <= 1.0:
            raise InvalidParams(f"transmissivity {self.transmissivity} outside [0, 1]")

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class PolFlip:
    """Exchange H and V on one mode (a rotator at 45 degrees up to a sign on V)."""

    mode: int

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class PhaseFlip:
    """Sign flip on the V component of one mode."""

    mode: int

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)


Element = Union[Pbs, Rotator, PolarizerH, Loss, PolFlip, PhaseFlip]

ELEMENT_KINDS = {
    "pbs": Pbs,
    "rotator": Rotator,
    "polarizer_h": PolarizerH,
    "loss": Loss,
    "pol_flip": PolFlip,
    "phase_flip": PhaseFlip,
}
_KIND_OF = {cls: kind for kind, cls in ELEMENT_KINDS.items()}


def element_to_dict(elem: Element) -> dict:
    d = asdict(elem)
    modes = list(elem.modes)
    params = {k: v for k, v in d.items() if k not in ("a", "b", "mode")}
    return {"kind": _KIND_OF[type(elem)], "modes": modes, "params": params}


def element_from_dict(d: dict) -> Element:
    try:
        cls = ELEMENT_KINDS[d["kind"]]
    except KeyError:
        raise InvalidParams(f"unknown element kind {d.get('kind')!r}") from None
    modes = list(d["modes"])
    params = dict(d.get("params", {}))
    if cls is Pbs:
        return Pbs(*modes)
    (mode,) = modes
    return cls(mode, **params)


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    number_resolving: bool = False

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise InvalidParams(f"detector efficiency {self.efficiency} outside [0, 1]")


@dataclass(frozen=True, order=True)
class ClickOutcome:
    clicked: bool
    count: Optional[int] = None

    def __post_init__(self):
        if self.count is not None and self.clicked != (self.count >= 1):
            raise InvalidParams("clicked must agree with count")

    def __str__(self) -> str:
        if self.count is not None:
            return str(self.count)
        return "click" if self.clicked else "none"


def rotator_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, s], [s, -c]])


PBS_MATRIX = np.array(
    [
        # a_H, a_V, b_H, b_V
        [1, 0, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
    ],
    dtype=float,
)


def _check_modes(ens: Ensemble, modes: Iterable[int]) -> None:
    for m in modes:
        if m not in ens.modes:
            raise UnknownMode(f"mode {m} is not declared in the ensemble")


def lose_channel(state: PureState, mode: int, pol: Polarization, t: float) -> list[PureState]:
    """Kraus branches of a pure-loss channel on one polarization channel.

    Branch ``k`` is the (unnormalized) state after exactly ``k`` photons leaked
    into the traced-out environment.
    """
    if t == 1.0:
        return [state]
    by_k: dict[int, dict] = defaultdict(dict)
    for ket, amp in state.amplitudes.items():
        n = 0
        rest = []
        for m, p, c in ket:
            if m == mode and p == pol:
                n = c
            else:
                rest.append((m, p, c))
        for k in range(n + 1):
            coef = math.sqrt(math.comb(n, k) * t ** (n - k) * (1.0 - t) ** k)
            if coef == 0.0:
                continue
            kept = tuple(sorted(rest + ([(mode, pol, n - k)] if n - k else [])))
            by_k[k][kept] = by_k[k].get(kept, 0j) + amp * coef
    return [PureState(v, state.modes) for _, v in sorted(by_k.items())]


def _apply_loss(ens: Ensemble, mode: int, channels: dict) -> Ensemble:
    items = list(ens.branches)
    for pol, t in channels.items():
        nxt = []
        for w, s in items:
            nxt.extend((w, part) for part in lose_channel(s, mode, pol, t))
        items = nxt
    return Ensemble.from_unnormalized(items, ens.modes)


def shift_element(elem: Element, slot: int) -> Element:
    """The same element acting on time slot ``slot`` of its modes."""
    changes = {
        name: slot_mode(getattr(elem, name), slot)
        for name in ("a", "b", "mode")
        if hasattr(elem, name)
    }
    return dataclasses.replace(elem, **changes)


def apply_element(ens: Ensemble, elem: Element) -> Ensemble:
    """Apply ``elem`` to every time slot of its modes."""
    _check_modes(ens, elem.modes)
    for slot in sorted({m // SLOT_STRIDE for m in ens.modes}):
        shifted = elem if slot == 0 else shift_element(elem, slot)
        ens = _apply_one(ens.with_modes(shifted.modes), shifted)
    return ens


def _apply_one(ens: Ensemble, elem: Element) -> Ensemble:
    if isinstance(elem, Pbs):
        chans = [(elem.a, H), (elem.a, V), (elem.b, H), (elem.b, V)]
        return ens.map_states(lambda s: apply_linear_map(s, chans, PBS_MATRIX))
    if isinstance(elem, Rotator):
        chans = [(elem.mode, H), (elem.mode, V)]
        u = rotator_matrix(elem.angle)
        return ens.map_states(lambda s: apply_linear_map(s, chans, u))
    if isinstance(elem, PolFlip):
        chans = [(elem.mode, H), (elem.mode, V)]
        return ens.map_states(lambda s: apply_linear_map(s, chans, np.array([[0, 1], [1, 0]])))
    if isinstance(elem, PhaseFlip):
        chans = [(elem.mode, H), (elem.mode, V)]
        return ens.map_states(lambda s: apply_linear_map(s, chans, np.diag([1, -1])))
    if isinstance(elem, Loss):
        t = elem.transmissivity
        return _apply_loss(ens, elem.mode, {H: t, V: t})
    if isinstance(elem, PolarizerH):
        return _apply_loss(ens, elem.mode, {V: 0.0})
    raise InvalidParams(f"unsupported element {elem!r}")


def apply_elements(ens: Ensemble, elements: Iterable[Element]) -> Ensemble:
    for elem in elements:
        ens = apply_element(ens, elem)
    return ens


def detect(
    ens: Ensemble, mode: int, det: DetectorModel, pol: Optional[Polarization] = None
) -> list[tuple[ClickOutcome, float, Ensemble]]:
    """Measure the photon number in ``mode`` (or in one polarization channel of it).

    The detector efficiency is applied as a loss channel in front of an ideal
    counter. Photons in every time slot of ``mode`` are pooled into one count.
    The detected channel is removed from the surviving states; when the whole
    mode is detected its labels are also dropped from the declared modes.
    Outcomes are returned in ascending order with their probabilities and
    normalized conditional ensembles.
    """
    _check_modes(ens, [mode])
    labels = slot_modes(ens.modes, mode)
    pols = (H, V) if pol is None else (Polarization(pol),)
    lossy = ens
    for label in labels:
        lossy = _apply_loss(lossy, label, {p: det.efficiency for p in pols})
    grouped: dict[ClickOutcome, list] = defaultdict(list)
    for w, s in lossy:
        for inside, part in _split_channels(s, labels, pols).items():
            n = sum(c for _, _, c in inside)
            outcome = ClickOutcome(n >= 1, n if det.number_resolving else None)
            grouped[outcome].append((w, part))
    remaining = ens.modes - set(labels) if pol is None else ens.modes
    results = []
    for outcome in sorted(grouped):
        out = Ensemble.from_unnormalized(grouped[outcome], remaining)
        p = out.trace()
        if p > 0.0:
            results.append((outcome, p, out.normalize()))
    return results


def _split_channels(state: PureState, labels, pols) -> dict:
    """Group components by their occupation of the detected channels."""
    groups: dict = defaultdict(dict)
    for ket, amp in state.amplitudes.items():
        inside = tuple(e for e in ket if e[0] in labels and e[1] in pols)
        outside = tuple(e for e in ket if not (e[0] in labels and e[1] in pols))
        groups[inside][outside] = amp
    modes = state.modes - set(labels) if len(pols) == 2 else state.modes
    return {k: PureState(v, modes) for k, v in groups.items()}
