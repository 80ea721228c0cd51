"""Independently degraded GHZ states and the type-II fusion gate."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .elements import (
    ClickOutcome,
    DetectorModel,
    Pbs,
    PolFlip,
    Rotator,
    apply_element,
    apply_elements,
    detect,
)
from .fock import (
    H,
    SLOT_STRIDE,
    V,
    Ensemble,
    InvalidParams,
    UnknownMode,
    basis_state,
    mean_photon_number,
    trace_distance,
    vacuum,
)


@dataclass(frozen=True)
class IdGhzSpec:
    n: int
    f: float
    mode_labels: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParams("an ID-GHZ state needs at least one qubit")
        if not 0.0 <= self.f <= 1.0:
            raise InvalidParams(f"loss rate f={self.f} outside [0, 1]")
        if self.mode_labels is not None and len(self.mode_labels) != self.n:
            raise InvalidParams("need exactly n mode labels")

    @property
    def modes(self) -> tuple[int, ...]:
        return self.mode_labels if self.mode_labels is not None else tuple(range(1, self.n + 1))


def ghz_state(modes: Sequence[int]):
    hs = basis_state({(m, H): 1 for m in modes}, modes)
    vs = basis_state({(m, V): 1 for m in modes}, modes)
    return (hs + vs).normalize()


def id_ghz(spec: IdGhzSpec | int, f: Optional[float] = None, modes: Optional[Sequence[int]] = None) -> Ensemble:
    """GHZ state with every photon lost independently with probability ``f``.

    Accepts either an :class:`IdGhzSpec` or ``id_ghz(n, f, modes)``.
    """
    if not isinstance(spec, IdGhzSpec):
        spec = IdGhzSpec(int(spec), float(f), tuple(modes) if modes is not None else None)
    labels = spec.modes
    n, f = spec.n, spec.f
    items = []
    for k in range(n + 1):
        weight = f ** (n - k) * (1.0 - f) ** k
        if weight == 0.0:
            continue
        for survivors in itertools.combinations(labels, k):
            if k == 0:
                items.append((weight, vacuum(labels)))
            elif k == n:
                items.append((weight, ghz_state(labels)))
            else:
                for pol in (H, V):
                    items.append((weight / 2, basis_state({(m, pol): 1 for m in survivors}, labels)))
    return Ensemble.mixture(items, labels)


def fit_id_ghz(ens: Ensemble, n: int) -> tuple[float, float]:
    """Estimate the loss rate from the mean photon number and measure the misfit.

    Returns ``(f_hat, residual)`` with ``residual`` the trace distance to
    ``id_ghz(n, f_hat)`` on the same modes. ``f_hat`` is clipped to [0, 1].
    """
    labels = sorted(m for m in ens.modes if m < SLOT_STRIDE)
    if len(labels) != n:
        raise InvalidParams(f"ensemble has {len(labels)} base modes, expected {n}")
    f_hat = min(1.0, max(0.0, 1.0 - mean_photon_number(ens) / n))
    model = id_ghz(n, f_hat, labels).with_modes(ens.modes)
    return f_hat, trace_distance(ens, model)


def qubit_count_after_fusion(n_a: int, n_b: int) -> int:
    if n_a < 1 or n_b < 1:
        raise InvalidParams("both inputs need at least one qubit")
    return n_a + n_b - 2


@dataclass(frozen=True)
class FusionOutcome:
    label: str  # "success" | "failure" | "loss_detected"
    probability: float
    state: Optional[Ensemble]
    pattern: tuple[tuple[str, ClickOutcome], ...] = ()
    corrected: bool = False

    def pattern_str(self) -> str:
        return " ".join(f"{ch}={o}" for ch, o in self.pattern)


SUCCESS, FAILURE, LOSS_DETECTED = "success", "failure", "loss_detected"


def _zz_correlation(ens: Ensemble, a: int, b: int) -> float:
    """<Z_a Z_b> over the components carrying one photon in each of ``a`` and ``b``."""
    num = den = 0.0
    for w, s in ens:
        for ket, amp in s.amplitudes.items():
            pa = [p for m, p, n in ket if m == a for _ in range(n)]
            pb = [p for m, p, n in ket if m == b for _ in range(n)]
            if len(pa) == 1 and len(pb) == 1:
                weight = w * abs(amp) ** 2
                den += weight
                num += weight * (1.0 if pa[0] == pb[0] else -1.0)
    return num / den if den > 0 else 0.0


def infer_side(ens: Ensemble, qubit_a: int, qubit_b: int) -> frozenset[int]:
    """Modes polarization-correlated with ``qubit_b`` rather than ``qubit_a``."""
    side = set()
    for m in ens.modes - {qubit_a, qubit_b}:
        ca, cb = _zz_correlation(ens, qubit_a, m), _zz_correlation(ens, qubit_b, m)
        if cb > ca + 0.5:
            side.add(m)
        elif not ca > cb + 0.5:
            raise InvalidParams(
                f"cannot tell which input mode {m} belongs to; pass side_b explicitly"
            )
    return frozenset(side)


def _classify(pattern, det: DetectorModel, qubit_a: int, qubit_b: int) -> str:
    def photons(mode):
        outs = [o for (m, _), o in pattern if m == mode]
        if det.number_resolving:
            return sum(o.count for o in outs)
        return sum(o.clicked for o in outs)

    na, nb = photons(qubit_a), photons(qubit_b)
    if na == 1 and nb == 1:
        return SUCCESS
    if na + nb >= 2:
        return FAILURE
    return LOSS_DETECTED


def fuse_type_ii(
    ens: Ensemble,
    qubit_a: int,
    qubit_b: int,
    det: DetectorModel = DetectorModel(),
    side_b: Optional[Iterable[int]] = None,
) -> list[FusionOutcome]:
    """Type-II fusion of ``qubit_a`` and ``qubit_b``.

    Both photons are rotated by 45 degrees, combined on a PBS, rotated again
    and counted in each polarization channel of each output. Every click
    pattern is returned as its own outcome. On success the two measured
    photons are consumed; when the heralded parities disagree, every
    surviving mode of ``side_b`` (inferred from ZZ correlations if not given)
    is flipped so the fused state is in standard GHZ form.
    """
    for m in (qubit_a, qubit_b):
        if m not in ens.modes:
            raise UnknownMode(f"mode {m} is not declared")
    if qubit_a == qubit_b:
        raise InvalidParams("fusion needs two distinct modes")
    flip_modes = frozenset(side_b) if side_b is not None else infer_side(ens, qubit_a, qubit_b)

    quarter = math.pi / 4
    ens = apply_elements(
        ens,
        [Rotator(qubit_a, quarter), Rotator(qubit_b, quarter), Pbs(qubit_a, qubit_b),
         Rotator(qubit_a, quarter), Rotator(qubit_b, quarter)],
    )
    leaves = [((), 1.0, ens)]
    for ch in ((qubit_a, H), (qubit_a, V), (qubit_b, H), (qubit_b, V)):
        nxt = []
        for pattern, p, e in leaves:
            for outcome, q, post in detect(e, ch[0], det, pol=ch[1]):
                nxt.append((pattern + ((ch, outcome),), p * q, post))
        leaves = nxt

    results = []
    for pattern, p, e in leaves:
        e = _drop_modes(e, (qubit_a, qubit_b))
        label = _classify(pattern, det, qubit_a, qubit_b)
        corrected = False
        if label == SUCCESS:
            clicked = [ch for ch, o in pattern if o.clicked]
            if clicked[0][1] != clicked[1][1]:
                for m in sorted(flip_modes & e.modes):
                    e = apply_element(e, PolFlip(m))
                corrected = True
        readable = tuple((f"{m}{pol.name}", o) for (m, pol), o in pattern)
        results.append(FusionOutcome(label, p, e, readable, corrected))
    return results


def _drop_modes(ens: Ensemble, modes: Iterable[int]) -> Ensemble:
    modes = frozenset(modes)
    for _, s in ens:
        for ket in s.amplitudes:
            if any(m in modes for m, _, _ in ket):
                raise InvalidParams("cannot drop a mode that still carries photons")
    keep = ens.modes - modes
    return Ensemble(
        tuple((w, type(s)(s.amplitudes, keep)) for w, s in ens),
        keep,
    )


def outcome_probabilities(outcomes: Sequence[FusionOutcome]) -> dict[str, float]:
    totals = {SUCCESS: 0.0, FAILURE: 0.0, LOSS_DETECTED: 0.0}
    for o in outcomes:
        totals[o.label] += o.probability
    return totals


def success_state(outcomes: Sequence[FusionOutcome]) -> tuple[float, Ensemble]:
    """Total success probability and the success-conditioned state (all patterns pooled)."""
    hits = [o for o in outcomes if o.label == SUCCESS]
    p = sum(o.probability for o in hits)
    if p <= 0.0:
        return 0.0, None
    items = [(o.probability / p * w, s) for o in hits for w, s in o.state]
    return p, Ensemble(tuple(items), hits[0].state.modes)


def fuse_id_ghz(
    n_a: int, n_b: int, f: float, det: DetectorModel = DetectorModel()
) -> tuple[list[FusionOutcome], tuple[int, ...]]:
    """Fuse the last qubit of ``id_ghz(n_a, f)`` with the last qubit of ``id_ghz(n_b, f)``.

    The inputs live on modes ``1..n_a`` and ``n_a+1..n_a+n_b``. Returns the
    outcomes and the surviving mode labels.
    """
    from .fock import tensor_ensembles

    modes_a = tuple(range(1, n_a + 1))
    modes_b = tuple(range(n_a + 1, n_a + n_b + 1))
    ens = tensor_ensembles(id_ghz(n_a, f, modes_a), id_ghz(n_b, f, modes_b))
    outcomes = fuse_type_ii(ens, modes_a[-1], modes_b[-1], det, side_b=modes_b[:-1])
    return outcomes, modes_a[:-1] + modes_b[:-1]
