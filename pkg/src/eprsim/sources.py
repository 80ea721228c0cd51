"""Photon-pair source models as ensembles on a pair of spatial modes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

from .elements import PolFlip, apply_element
from .fock import (
    H,
    V,
    Ensemble,
    InvalidParams,
    PureState,
    basis_state,
    create_photon,
    slot_mode,
    tensor,
    vacuum,
)


class BellForm(enum.Enum):
    PHI_PLUS = "phi_plus"
    PSI_PLUS = "psi_plus"


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidParams(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class HeraldedEpr:
    eta_s: float

    def __post_init__(self):
        _check_unit("eta_s", self.eta_s)


@dataclass(frozen=True)
class SpdcEpr:
    """Pair source truncated after the double-pair term; ``x=1`` is Poissonian."""

    eta_s: float
    x: float = 1.0
    # "distinguishable": the second pair occupies its own time slot, so its
    # photons never interfere with the first pair's; "bosonic": both pairs
    # share the same modes.
    double_pair: str = "distinguishable"

    def __post_init__(self):
        _check_unit("eta_s", self.eta_s)
        if not self.x >= 0.0:
            raise InvalidParams(f"x={self.x} must be non-negative")
        if self.double_pair not in ("bosonic", "distinguishable"):
            raise InvalidParams(f"unknown double_pair model {self.double_pair!r}")


@dataclass(frozen=True)
class CavityPair:
    p0: float
    p1: float
    p2: float
    p3: float
    bell_form: BellForm = BellForm.PHI_PLUS

    def __post_init__(self):
        for name in ("p0", "p1", "p2", "p3"):
            if getattr(self, name) < 0.0:
                raise InvalidParams(f"{name} must be non-negative")
        total = self.p0 + self.p1 + self.p2 + self.p3
        if abs(total - 1.0) > 1e-12:
            raise InvalidParams(f"cavity weights sum to {total}, not 1")
        object.__setattr__(self, "bell_form", BellForm(self.bell_form))


@dataclass(frozen=True)
class PerfectEpr:
    eta_s: float = 1.0


SourceSpec = Union[HeraldedEpr, SpdcEpr, CavityPair, PerfectEpr]


def bell_state(mode_a: int, mode_b: int, form: BellForm = BellForm.PHI_PLUS) -> PureState:
    r = 1 / math.sqrt(2)
    if BellForm(form) is BellForm.PHI_PLUS:
        kets = [{(mode_a, H): 1, (mode_b, H): 1}, {(mode_a, V): 1, (mode_b, V): 1}]
    else:
        kets = [{(mode_a, H): 1, (mode_b, V): 1}, {(mode_a, V): 1, (mode_b, H): 1}]
    return basis_state(kets[0]).scale(r) + basis_state(kets[1]).scale(r)


def _pair_creation(state: PureState, mode_a: int, mode_b: int) -> PureState:
    hh = create_photon(create_photon(state, mode_a, H), mode_b, H)
    vv = create_photon(create_photon(state, mode_a, V), mode_b, V)
    return (hh + vv).scale(1 / math.sqrt(2))


def two_pair_state(mode_a: int, mode_b: int) -> PureState:
    """Normalized state of two pairs emitted into the same two modes."""
    if mode_a == mode_b:
        raise InvalidParams("source modes must be distinct")
    st = vacuum((mode_a, mode_b))
    return _pair_creation(_pair_creation(st, mode_a, mode_b), mode_a, mode_b).normalize()


def distinguishable_two_pair(mode_a: int, mode_b: int) -> PureState:
    """Two Bell pairs in separate time slots of the same two modes."""
    first = bell_state(mode_a, mode_b)
    second = bell_state(slot_mode(mode_a, 1), slot_mode(mode_b, 1))
    return tensor(first, second)


def make_source(spec: SourceSpec, mode_a: int, mode_b: int) -> Ensemble:
    if mode_a == mode_b:
        raise InvalidParams("source modes must be distinct")
    modes = (mode_a, mode_b)
    vac = vacuum(modes)
    if isinstance(spec, PerfectEpr):
        return Ensemble.pure(bell_state(mode_a, mode_b).with_modes(modes))
    if isinstance(spec, HeraldedEpr):
        return Ensemble.mixture(
            [(1.0 - spec.eta_s, vac), (spec.eta_s, bell_state(mode_a, mode_b))], modes
        )
    if isinstance(spec, SpdcEpr):
        eta, x = spec.eta_s, spec.x
        z = 1.0 + x * eta**2 / 2
        items = [(1.0 - eta, vac), (eta, bell_state(mode_a, mode_b))]
        w2 = x * eta**2 / 2
        if spec.double_pair == "bosonic":
            items.append((w2, two_pair_state(mode_a, mode_b)))
        else:
            items.append((w2, distinguishable_two_pair(mode_a, mode_b)))
        return Ensemble.mixture([(w / z, s) for w, s in items], modes)
    if isinstance(spec, CavityPair):
        items = [(spec.p0, vac)]
        for mode, p in ((mode_a, spec.p1), (mode_b, spec.p2)):
            for pol in (H, V):
                items.append((p / 2, basis_state({(mode, pol): 1}, modes)))
        items.append((spec.p3, bell_state(mode_a, mode_b, spec.bell_form)))
        ens = Ensemble.mixture(items, modes)
        return ens
    raise InvalidParams(f"unknown source spec {spec!r}")


def convert_bell(ens: Ensemble, mode: int) -> Ensemble:
    """Flip H and V on ``mode``; turns psi+ pairs into phi+ pairs."""
    return apply_element(ens, PolFlip(mode))


def source_to_dict(spec: SourceSpec) -> dict:
    if isinstance(spec, PerfectEpr):
        return {"source": "perfect-epr"}
    if isinstance(spec, HeraldedEpr):
        return {"source": "heralded-epr", "eta_s": spec.eta_s}
    if isinstance(spec, SpdcEpr):
        d = {"source": "spdc", "eta_s": spec.eta_s, "x": spec.x}
        if spec.double_pair != "distinguishable":
            d["double_pair"] = spec.double_pair
        return d
    if isinstance(spec, CavityPair):
        return {
            "source": "cavity",
            "p0": spec.p0,
            "p1": spec.p1,
            "p2": spec.p2,
            "p3": spec.p3,
            "bell_form": spec.bell_form.value,
        }
    raise InvalidParams(f"unknown source spec {spec!r}")


def source_from_dict(d: dict) -> SourceSpec:
    kind = d.get("source")
    if kind == "perfect-epr":
        return PerfectEpr()
    if kind == "heralded-epr":
        return HeraldedEpr(float(d["eta_s"]))
    if kind == "spdc":
        return SpdcEpr(float(d["eta_s"]), float(d.get("x", 1.0)), d.get("double_pair", "distinguishable"))
    if kind == "cavity":
        return CavityPair(
            float(d["p0"]),
            float(d["p1"]),
            float(d["p2"]),
            float(d["p3"]),
            BellForm(d.get("bell_form", "phi_plus")),
        )
    raise InvalidParams(f"unknown source kind {kind!r}")
