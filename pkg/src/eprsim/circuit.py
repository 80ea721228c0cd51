"""Three-pair GHZ construction: sources, PBS network, post-selection on three clicks."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .elements import (
    ClickOutcome,
    DetectorModel,
    Element,
    Pbs,
    PolarizerH,
    Rotator,
    apply_elements,
    detect,
    element_from_dict,
    element_to_dict,
)
from .fock import (
    H,
    V,
    Ensemble,
    InvalidParams,
    Ket,
    PureState,
    ZeroProbability,
    base_mode,
    basis_state,
    fidelity_with_pure,
    format_ket,
    make_ket,
    merge_slots,
    tensor_ensembles,
    to_density_matrix,
)
from .sources import BellForm, CavityPair, SourceSpec, convert_bell, make_source


@dataclass(frozen=True)
class GhzCircuitLayout:
    elements: tuple[Element, ...]
    source_modes: tuple[tuple[int, int], ...] = ((1, 2), (3, 4), (5, 6))
    detected: tuple[int, ...] = (2, 4, 6)
    outputs: tuple[int, ...] = (1, 3, 5)

    def __post_init__(self):
        declared = {m for pair in self.source_modes for m in pair}
        for elem in self.elements:
            if not set(elem.modes) <= declared:
                raise InvalidParams(f"{elem} references undeclared modes")
        if len(set(self.detected)) != len(self.detected):
            raise InvalidParams("each mode may be detected only once")
        if not set(self.detected) <= declared or set(self.detected) & set(self.outputs):
            raise InvalidParams("detected modes must be declared and disjoint from outputs")

    def to_dict(self) -> dict:
        return {
            "source_modes": [list(p) for p in self.source_modes],
            "elements": [element_to_dict(e) for e in self.elements],
            "detected": list(self.detected),
            "outputs": list(self.outputs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> GhzCircuitLayout:
        return cls(
            elements=tuple(element_from_dict(e) for e in d["elements"]),
            source_modes=tuple(tuple(p) for p in d.get("source_modes", ((1, 2), (3, 4), (5, 6)))),
            detected=tuple(d.get("detected", (2, 4, 6))),
            outputs=tuple(d.get("outputs", (1, 3, 5))),
        )


def _projection_stage(modes: Sequence[int]) -> list[Element]:
    stage: list[Element] = []
    for m in modes:
        stage += [Rotator(m, math.pi / 4), PolarizerH(m)]
    return stage


def canonical_layout() -> GhzCircuitLayout:
    """PBS(2,4), PBS(2,6), then a 45 degree rotator and H polarizer before each detector.

    With this wiring the double-pair error kets come out on exactly the mode
    combinations listed for the SPDC source (e.g. H1 V1 H5, not H1 V1 H3).
    """
    return GhzCircuitLayout((Pbs(2, 4), Pbs(2, 6), *_projection_stage((2, 4, 6))))


def mirrored_layout() -> GhzCircuitLayout:
    """PBS(2,4), PBS(4,6): the canonical wiring with modes 3 and 5 exchanged."""
    return GhzCircuitLayout((Pbs(2, 4), Pbs(4, 6), *_projection_stage((2, 4, 6))))


def ghz_pure(modes: Sequence[int] = (1, 3, 5)) -> PureState:
    hs = basis_state({(m, H): 1 for m in modes}, modes)
    vs = basis_state({(m, V): 1 for m in modes}, modes)
    return (hs + vs).normalize()


@dataclass(frozen=True)
class ConditionalResult:
    probability: float
    state: Optional[Ensemble]
    click_pattern: tuple[ClickOutcome, ...]

    @property
    def succeeded(self) -> bool:
        return self.probability > 0.0 and self.state is not None


def success_pattern(det: DetectorModel, n: int = 3) -> tuple[ClickOutcome, ...]:
    """Every detector registers a photon: a click, or a count of exactly one."""
    outcome = ClickOutcome(True, 1) if det.number_resolving else ClickOutcome(True)
    return (outcome,) * n


def prepare(specs: Sequence[SourceSpec], layout: GhzCircuitLayout) -> Ensemble:
    """Source ensembles after the layout's optical elements, before detection."""
    if len(specs) != len(layout.source_modes):
        raise InvalidParams(f"expected {len(layout.source_modes)} sources, got {len(specs)}")
    parts = []
    for spec, (a, b) in zip(specs, layout.source_modes):
        src = make_source(spec, a, b)
        if isinstance(spec, CavityPair) and spec.bell_form is BellForm.PSI_PLUS:
            src = convert_bell(src, b)
        parts.append(src)
    return apply_elements(tensor_ensembles(*parts), layout.elements)


def outcome_tree(
    specs: Sequence[SourceSpec],
    det: DetectorModel,
    layout: Optional[GhzCircuitLayout] = None,
    order: Optional[Sequence[int]] = None,
) -> list[tuple[tuple[ClickOutcome, ...], float, Ensemble]]:
    """Every click pattern on the detected modes with its probability and conditional state."""
    layout = layout or canonical_layout()
    order = tuple(order or layout.detected)
    leaves = [((), 1.0, prepare(specs, layout))]
    for mode in order:
        nxt = []
        for pattern, p, ens in leaves:
            for outcome, q, post in detect(ens, mode, det):
                nxt.append((pattern + (outcome,), p * q, post))
        leaves = nxt
    if order != tuple(layout.detected):
        perm = [order.index(m) for m in layout.detected]
        leaves = [(tuple(pat[i] for i in perm), p, e) for pat, p, e in leaves]
    return leaves


def run_ghz_circuit(
    specs: Sequence[SourceSpec],
    det: DetectorModel,
    layout: Optional[GhzCircuitLayout] = None,
    order: Optional[Sequence[int]] = None,
) -> ConditionalResult:
    """Post-select the circuit on every detector registering a photon.

    Only the branch of the outcome tree consistent with success is followed.
    A zero success probability is returned as ``probability=0, state=None``.
    """
    layout = layout or canonical_layout()
    order = tuple(order or layout.detected)
    wanted = success_pattern(det, len(layout.detected))
    ens = prepare(specs, layout)
    probability = 1.0
    for mode in order:
        hits = [(q, post) for outcome, q, post in detect(ens, mode, det) if outcome == wanted[0]]
        if not hits:
            return ConditionalResult(0.0, None, wanted)
        q, ens = hits[0]
        probability *= q
    return ConditionalResult(probability, ens, wanted)


# --- output analysis --------------------------------------------------------

# Double-occupancy error kets of the SPDC source, as (mode: pols) occupations
# on the output modes (1, 3, 5).
DOUBLE_PAIR_TERMS = (
    ((1, "HV"), (5, "H")),
    ((1, "HV"), (3, "V")),
    ((3, "HV"), (1, "H")),
    ((3, "HV"), (5, "V")),
    ((5, "HV"), (1, "V")),
    ((5, "HV"), (3, "H")),
)


def double_pair_kets(outputs: Sequence[int] = (1, 3, 5)) -> list[Ket]:
    relabel = dict(zip((1, 3, 5), outputs))
    kets = []
    for term in DOUBLE_PAIR_TERMS:
        occ = {}
        for mode, pols in term:
            for p in pols:
                occ[(relabel[mode], H if p == "H" else V)] = 1
        kets.append(make_ket(occ))
    return kets


def _error_class(pattern: tuple[int, ...]) -> str:
    n = sum(pattern)
    if max(pattern, default=0) >= 2:
        return "double_occupancy"
    missing = len(pattern) - n
    return {0: "ghz_sector", 1: "one_missing", 2: "two_missing"}.get(missing, "vacuum")


@dataclass
class OutputReport:
    probability: float
    ghz_fidelity: float
    ghz_weight: float
    vacuum_weight: float
    fitted_f: float
    fit_residual: float
    class_weights: dict[str, float]
    pattern_weights: dict[tuple[int, ...], float]
    diagonal: dict[str, float]
    double_pair_ratios: list[float] = field(default_factory=list)
    remainder_ratio: float = 0.0

    def to_dict(self) -> dict:
        return {
            "probability": self.probability,
            "ghz_fidelity": self.ghz_fidelity,
            "ghz_weight": self.ghz_weight,
            "vacuum_weight": self.vacuum_weight,
            "fitted_f": self.fitted_f,
            "fit_residual": self.fit_residual,
            "class_weights": self.class_weights,
            "pattern_weights": {
                ",".join(map(str, k)): v for k, v in self.pattern_weights.items()
            },
            "diagonal": self.diagonal,
            "double_pair_ratios": self.double_pair_ratios,
            "remainder_ratio": self.remainder_ratio,
        }


def analyze_output(result: ConditionalResult, outputs: Sequence[int] = (1, 3, 5)) -> OutputReport:
    """Decompose a conditional output state into the GHZ part and error classes.

    The GHZ weight is twice the H...H / V...V coherence, i.e. the weight ``w``
    in ``rho = w |GHZ><GHZ| + (diagonal terms)``. Diagonal weights pool photons
    over time slots. The double-pair ratios are the six SPDC error-ket weights
    divided by the GHZ weight; the remainder ratio is whatever lies outside
    those seven terms, also relative to the GHZ weight.
    """
    from .fusion import fit_id_ghz

    if not result.succeeded:
        raise ZeroProbability("circuit never succeeded; nothing to analyze")
    ens = result.state
    dm = to_density_matrix(ens)
    hhh = make_ket({(m, H): 1 for m in outputs})
    vvv = make_ket({(m, V): 1 for m in outputs})
    ghz_weight = 2.0 * abs(dm.element(hhh, vvv))

    diagonal: dict[Ket, float] = defaultdict(float)
    for i, ket in enumerate(dm.basis):
        diagonal[merge_slots(ket)] += float(dm.matrix[i, i].real)
    patterns: dict[tuple[int, ...], float] = defaultdict(float)
    classes: dict[str, float] = defaultdict(float)
    for ket, w in diagonal.items():
        pat = tuple(sum(n for m, _, n in ket if base_mode(m) == o) for o in outputs)
        patterns[pat] += w
        classes[_error_class(pat)] += w
    classes["ghz_coherent"] = ghz_weight

    six = [diagonal.get(k, 0.0) for k in double_pair_kets(outputs)]
    if ghz_weight > 0.0:
        ratios = [w / ghz_weight for w in six]
        remainder = (ens.trace() - ghz_weight - sum(six)) / ghz_weight
    else:
        ratios, remainder = [0.0] * 6, math.inf
    f_hat, residual = fit_id_ghz(ens, len(outputs))
    return OutputReport(
        probability=result.probability,
        ghz_fidelity=fidelity_with_pure(ens, ghz_pure(outputs)),
        ghz_weight=ghz_weight,
        vacuum_weight=diagonal.get((), 0.0),
        fitted_f=f_hat,
        fit_residual=residual,
        class_weights=dict(sorted(classes.items())),
        pattern_weights=dict(sorted(patterns.items())),
        diagonal={format_ket(k) or "vac": w for k, w in sorted(diagonal.items()) if w > 1e-15},
        double_pair_ratios=ratios,
        remainder_ratio=remainder,
    )

