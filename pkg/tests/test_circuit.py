import itertools
import math

import pytest

from eprsim.circuit import (
    GhzCircuitLayout,
    analyze_output,
    canonical_layout,
    double_pair_kets,
    ghz_pure,
    mirrored_layout,
    outcome_tree,
    run_ghz_circuit,
)
from eprsim.elements import DetectorModel, Pbs, PolarizerH, Rotator
from eprsim.fock import H, V, InvalidParams, ZeroProbability, fidelity_with_pure, format_ket, trace_distance
from eprsim.sources import BellForm, CavityPair, HeraldedEpr, PerfectEpr, SpdcEpr

PERFECT = [PerfectEpr()] * 3
IDEAL = DetectorModel()


def test_perfect_sources_give_ghz():
    res = run_ghz_circuit(PERFECT, IDEAL)
    assert res.probability == pytest.approx(1 / 32, abs=1e-12)
    assert fidelity_with_pure(res.state, ghz_pure()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("etas", [(0.9, 0.5, 0.7), (1.0, 0.2, 0.6)])
@pytest.mark.parametrize("eta_d", [1.0, 0.8])
def test_success_probability_factorizes(etas, eta_d):
    expected = math.prod(etas) * eta_d**3 / 32
    for perm in itertools.permutations(etas):
        res = run_ghz_circuit([HeraldedEpr(e) for e in perm], DetectorModel(eta_d))
        assert res.probability == pytest.approx(expected, rel=1e-10)


def test_heralded_output_is_id_ghz():
    res = run_ghz_circuit([HeraldedEpr(0.6)] * 3, DetectorModel(0.7))
    rep = analyze_output(res)
    assert 0.0 <= rep.fitted_f <= 1.0
    assert rep.fit_residual < 1e-10


def test_measurement_order_does_not_matter():
    specs = [SpdcEpr(0.5, 1.0)] * 3
    base = run_ghz_circuit(specs, DetectorModel(0.8))
    for order in ((6, 4, 2), (4, 6, 2)):
        other = run_ghz_circuit(specs, DetectorModel(0.8), order=order)
        assert other.probability == pytest.approx(base.probability, rel=1e-10)
        assert trace_distance(other.state, base.state) < 1e-10


def test_outcome_tree_is_complete():
    leaves = outcome_tree([SpdcEpr(0.6, 0.5)] * 3, DetectorModel(0.9))
    assert sum(p for _, p, _ in leaves) == pytest.approx(1.0, abs=1e-10)
    success = [p for pat, p, _ in leaves if all(o.clicked for o in pat)]
    assert success[0] == pytest.approx(run_ghz_circuit([SpdcEpr(0.6, 0.5)] * 3, DetectorModel(0.9)).probability)


def test_zero_success_probability():
    res = run_ghz_circuit([HeraldedEpr(0.0)] * 3, IDEAL)
    assert res.probability == 0.0 and res.state is None and not res.succeeded
    with pytest.raises(ZeroProbability):
        analyze_output(res)


def test_wrong_number_of_sources():
    with pytest.raises(InvalidParams):
        run_ghz_circuit(PERFECT[:2], IDEAL)


def test_double_pair_error_kets():
    names = [format_ket(k) for k in double_pair_kets()]
    assert names == [
        "1H@1 1V@1 1H@5",
        "1H@1 1V@1 1V@3",
        "1H@1 1H@3 1V@3",
        "1H@3 1V@3 1V@5",
        "1V@1 1H@5 1V@5",
        "1H@3 1H@5 1V@5",
    ]


@pytest.mark.parametrize("x", [0.5, 1.0])
def test_spdc_double_pair_ratios(x):
    eta = 0.01
    rep = analyze_output(run_ghz_circuit([SpdcEpr(eta, x)] * 3, IDEAL))
    for r in rep.double_pair_ratios:
        assert r == pytest.approx(x / 2 * (1 - eta), rel=1e-9)


def test_bosonic_double_pairs_give_a_third():
    eta, x = 0.01, 1.0
    rep = analyze_output(run_ghz_circuit([SpdcEpr(eta, x, "bosonic")] * 3, IDEAL))
    for r in rep.double_pair_ratios:
        assert r == pytest.approx(x / 3 * (1 - eta), rel=1e-9)


def test_mirrored_layout_swaps_outputs_three_and_five():
    spec = [SpdcEpr(0.01, 1.0)] * 3
    rep = analyze_output(run_ghz_circuit(spec, IDEAL, mirrored_layout()), outputs=(1, 5, 3))
    for r in rep.double_pair_ratios:
        assert r == pytest.approx(0.5 * 0.99, rel=1e-9)


def test_cavity_output():
    p0, p1, p2, p3 = 0.1, 0.2, 0.1, 0.6
    res = run_ghz_circuit([CavityPair(p0, p1, p2, p3, BellForm.PSI_PLUS)] * 3, IDEAL)
    rep = analyze_output(res)
    assert rep.fitted_f == pytest.approx(p2 / (p2 + p3), abs=1e-12)
    assert rep.fit_residual < 1e-10


def test_report_weights_sum_to_one():
    rep = analyze_output(run_ghz_circuit([SpdcEpr(0.4, 1.0)] * 3, DetectorModel(0.9)))
    assert sum(rep.pattern_weights.values()) == pytest.approx(1.0, abs=1e-10)
    assert 0.0 <= rep.ghz_fidelity <= 1.0
    assert set(rep.to_dict()) >= {"probability", "ghz_fidelity", "fitted_f", "double_pair_ratios"}


def test_canonical_layout_shape():
    lay = canonical_layout()
    assert lay.source_modes == ((1, 2), (3, 4), (5, 6))
    assert lay.detected == (2, 4, 6) and lay.outputs == (1, 3, 5)
    kinds = [type(e) for e in lay.elements]
    assert kinds.count(Pbs) == 2 and kinds.count(Rotator) == 3 and kinds.count(PolarizerH) == 3


def test_layout_validation():
    with pytest.raises(InvalidParams):
        GhzCircuitLayout((Pbs(2, 8),), ((1, 2), (3, 4), (5, 6)), (2, 4, 6), (1, 3, 5))
