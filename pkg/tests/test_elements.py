import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprsim.circuit import canonical_layout
from eprsim.elements import (
    ClickOutcome,
    DetectorModel,
    Loss,
    Pbs,
    PhaseFlip,
    PolarizerH,
    PolFlip,
    Rotator,
    apply_element,
    apply_elements,
    detect,
    element_from_dict,
    element_to_dict,
)
from eprsim.fock import (
    H,
    V,
    Ensemble,
    InvalidParams,
    UnknownMode,
    basis_state,
    fidelity_with_pure,
    slot_mode,
    trace_distance,
)
from eprsim.verify import random_ensemble


def pure(occ, modes=()):
    return Ensemble.pure(basis_state(occ, modes))


def test_pbs_routes_v_across():
    out = apply_element(pure({(2, H): 1, (4, V): 1}), Pbs(2, 4))
    assert fidelity_with_pure(out, basis_state({(2, H): 1, (2, V): 1})) == pytest.approx(1.0)
    out = apply_element(pure({(2, V): 1}, (2, 4)), Pbs(2, 4))
    assert fidelity_with_pure(out, basis_state({(4, V): 1})) == pytest.approx(1.0)


def test_rotator_on_h_and_v():
    r = 1 / math.sqrt(2)
    out = apply_element(pure({(1, H): 1}), Rotator(1))
    target = basis_state({(1, H): 1}).scale(r) + basis_state({(1, V): 1}).scale(r)
    assert fidelity_with_pure(out, target) == pytest.approx(1.0)
    out = apply_element(pure({(1, V): 1}), Rotator(1))
    target = basis_state({(1, H): 1}).scale(r) + basis_state({(1, V): 1}).scale(-r)
    assert fidelity_with_pure(out, target) == pytest.approx(1.0)


def test_rotator_twice_is_identity():
    ens = random_ensemble(np.random.default_rng(3), (1, 2), 3)
    out = apply_elements(ens, [Rotator(1, 0.3), Rotator(1, 0.3)])
    assert trace_distance(out, ens) < 1e-10


def test_polarizer_blocks_v():
    out = apply_element(pure({(1, V): 1}), PolarizerH(1))
    assert fidelity_with_pure(out, basis_state({}, (1,))) == pytest.approx(1.0)
    out = apply_element(pure({(1, H): 1}), PolarizerH(1))
    assert fidelity_with_pure(out, basis_state({(1, H): 1})) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_polarizer_is_idempotent(seed):
    ens = random_ensemble(np.random.default_rng(seed), (1, 2), 3)
    once = apply_element(ens, PolarizerH(1))
    twice = apply_element(once, PolarizerH(1))
    assert trace_distance(once, twice) < 1e-10


def test_loss_limits():
    ens = pure({(1, H): 1, (1, V): 1})
    assert trace_distance(apply_element(ens, Loss(1, 1.0)), ens) < 1e-12
    gone = apply_element(ens, Loss(1, 0.0))
    assert fidelity_with_pure(gone, basis_state({}, (1,))) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 1))
def test_losses_compose_multiplicatively(seed, t1, t2):
    ens = random_ensemble(np.random.default_rng(seed), (1, 2), 3)
    a = apply_elements(ens, [Loss(1, t1), Loss(1, t2)])
    b = apply_element(ens, Loss(1, t1 * t2))
    assert trace_distance(a, b) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_elements_preserve_trace(seed):
    ens = random_ensemble(np.random.default_rng(seed), (1, 2), 3)
    for elem in (Pbs(1, 2), Rotator(2, 0.7), PolarizerH(1), Loss(2, 0.4), PolFlip(1), PhaseFlip(2)):
        assert apply_element(ens, elem).trace() == pytest.approx(1.0, abs=1e-10)


def test_flip_elements():
    out = apply_element(pure({(1, H): 1}), PolFlip(1))
    assert fidelity_with_pure(out, basis_state({(1, V): 1})) == pytest.approx(1.0)
    r = 1 / math.sqrt(2)
    plus = basis_state({(1, H): 1}).scale(r) + basis_state({(1, V): 1}).scale(r)
    minus = basis_state({(1, H): 1}).scale(r) + basis_state({(1, V): 1}).scale(-r)
    assert fidelity_with_pure(apply_element(Ensemble.pure(plus), PhaseFlip(1)), minus) == pytest.approx(1.0)


def test_elements_act_on_every_time_slot():
    late = slot_mode(1, 1)
    ens = pure({(1, H): 1, (late, H): 1}, (1, late))
    out = apply_element(ens, PolFlip(1))
    assert fidelity_with_pure(out, basis_state({(1, V): 1, (late, V): 1})) == pytest.approx(1.0)


def test_invalid_elements():
    with pytest.raises(InvalidParams):
        Pbs(2, 2)
    with pytest.raises(InvalidParams):
        Loss(1, 1.5)
    with pytest.raises(InvalidParams):
        Rotator(1, float("nan"))
    with pytest.raises(UnknownMode):
        apply_element(pure({(1, H): 1}), Pbs(1, 9))
    with pytest.raises(InvalidParams):
        element_from_dict({"kind": "mirror", "modes": [1]})
    with pytest.raises(InvalidParams):
        DetectorModel(-0.1)


@pytest.mark.parametrize("elem", [Pbs(2, 4), Rotator(3, 0.25), PolarizerH(5), Loss(1, 0.3), PolFlip(2), PhaseFlip(6)])
def test_element_dict_round_trip(elem):
    assert element_from_dict(element_to_dict(elem)) == elem


def test_detection_single_photon():
    res = detect(pure({(1, H): 1}), 1, DetectorModel(0.8))
    probs = {o: p for o, p, _ in res}
    assert probs[ClickOutcome(True)] == pytest.approx(0.8)
    assert probs[ClickOutcome(False)] == pytest.approx(0.2)
    for _, _, ens in res:
        assert 1 not in ens.modes


def test_detection_two_photons_half_efficiency():
    res = detect(pure({(1, H): 1, (1, V): 1}), 1, DetectorModel(0.5))
    probs = {o: p for o, p, _ in res}
    assert probs[ClickOutcome(True)] == pytest.approx(0.75)
    res = detect(pure({(1, H): 2}), 1, DetectorModel(0.5, number_resolving=True))
    probs = {o.count: p for o, p, _ in res}
    assert probs == pytest.approx({0: 0.25, 1: 0.5, 2: 0.25})


def test_detection_pools_time_slots():
    late = slot_mode(1, 1)
    res = detect(pure({(1, H): 1, (late, V): 1}, (1, late)), 1, DetectorModel(1.0, True))
    assert [(o.count, p) for o, p, _ in res] == [(2, pytest.approx(1.0))]
    assert res[0][2].modes == frozenset()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_bucket_detector_is_coarse_grained_counter(seed, eta):
    ens = random_ensemble(np.random.default_rng(seed), (1, 2), 3)
    bucket = {o.clicked: p for o, p, _ in detect(ens, 1, DetectorModel(eta))}
    counts = detect(ens, 1, DetectorModel(eta, True))
    clicked = sum(p for o, p, _ in counts if o.count >= 1)
    assert bucket.get(True, 0.0) == pytest.approx(clicked, abs=1e-10)
    assert sum(bucket.values()) == pytest.approx(1.0, abs=1e-10)


def test_detection_conditional_state():
    # photon on mode 2 heralds the partner on mode 1
    r = 1 / math.sqrt(2)
    psi = basis_state({(1, H): 1, (2, H): 1}).scale(r) + basis_state({(1, V): 1, (2, V): 1}).scale(r)
    res = detect(Ensemble.pure(psi), 2, DetectorModel(1.0), pol=H)
    click = [e for o, _, e in res if o.clicked][0]
    assert fidelity_with_pure(click, basis_state({(1, H): 1}, click.modes)) == pytest.approx(1.0)


def test_layout_round_trip():
    from eprsim.circuit import GhzCircuitLayout
    lay = canonical_layout()
    assert GhzCircuitLayout.from_dict(lay.to_dict()) == lay
    assert [type(e).__name__ for e in lay.elements].count("Pbs") == 2
