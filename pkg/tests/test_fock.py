import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprsim.fock import (
    H,
    V,
    DimensionMismatch,
    Ensemble,
    NonUnitary,
    PhotonCapExceeded,
    PureState,
    UnknownMode,
    ZeroProbability,
    apply_linear_map,
    basis_state,
    condition_on_vacuum,
    create_photon,
    fidelity_with_pure,
    format_ket,
    from_density_matrix,
    make_ket,
    parse_ket,
    partial_trace,
    tensor,
    to_density_matrix,
    total_photons,
    trace_distance,
    vacuum,
)
from eprsim.fusion import id_ghz
from eprsim.circuit import ghz_pure
from eprsim.verify import random_ensemble, random_state, random_unitary

from oracles import (
    dense_partial_trace,
    symbolic_fock_expansion,
    transition_amplitude,
    trace_norm_distance,
)

R2 = 1 / math.sqrt(2)
ROT45 = np.array([[1, 1], [1, -1]]) * R2


def ket(**occ):
    """ket(H1=1, V2=1) -> canonical ket."""
    return make_ket({(int(k[1:]), H if k[0] == "H" else V): n for k, n in occ.items()})


def test_vacuum():
    vac = vacuum()
    assert dict(vac.amplitudes) == {(): 1.0}
    assert vac.norm() == 1.0
    assert total_photons(vac) == 0


def test_create_photon_examples():
    one = create_photon(vacuum(), 1, H)
    assert dict(one.amplitudes) == {ket(H1=1): 1.0}
    two = create_photon(one, 1, H)
    assert two.amplitude(ket(H1=2)) == pytest.approx(math.sqrt(2))
    assert two.norm() == pytest.approx(math.sqrt(2))
    assert dict(create_photon(one, 2, V).amplitudes) == {ket(H1=1, V2=1): 1.0}


@pytest.mark.parametrize("word", [w for n in range(1, 4) for w in itertools.product(range(4), repeat=n)])
def test_creation_monomials_match_symbolic_oracle(word):
    channels = [(1, H), (1, V), (2, H), (2, V)]
    state = vacuum()
    for c in word:
        state = create_photon(state, *channels[c])
    counts = [word.count(c) for c in range(4)]
    # (a_c^dag)^n |0> = sqrt(n!) |n>
    rows = np.eye(4)
    oracle = symbolic_fock_expansion(rows, counts)
    scale = math.sqrt(math.prod(math.factorial(n) for n in counts))
    expected = {make_ket({channels[j]: n for j, n in enumerate(m)}): a * scale for m, a in oracle.items()}
    assert set(state.amplitudes) == set(expected)
    for k, a in expected.items():
        assert state.amplitude(k) == pytest.approx(a, abs=1e-12)


def test_photon_cap_is_a_hard_error():
    state = vacuum()
    for _ in range(3):
        state = create_photon(state, 1, H, cap=3)
    with pytest.raises(PhotonCapExceeded):
        create_photon(state, 1, H, cap=3)


def test_rotator_on_single_photon():
    out = apply_linear_map(basis_state({(1, H): 1}), [(1, H), (1, V)], ROT45)
    assert out.amplitude(ket(H1=1)) == pytest.approx(R2)
    assert out.amplitude(ket(V1=1)) == pytest.approx(R2)


def test_rotator_on_two_photons_matches_symbolic_expansion():
    out = apply_linear_map(basis_state({(1, H): 2}), [(1, H), (1, V)], ROT45)
    assert out.amplitude(ket(H1=2)) == pytest.approx(0.5)
    assert out.amplitude(ket(H1=1, V1=1)) == pytest.approx(R2)
    assert out.amplitude(ket(V1=2)) == pytest.approx(0.5)
    oracle = symbolic_fock_expansion([[1, 1]], [2])
    for (nh, nv), amp in oracle.items():
        assert out.amplitude(ket(H1=nh, V1=nv) if nv else ket(H1=nh)) == pytest.approx(amp * R2 ** 2 * 2 / 2)


def test_identity_map_is_identity():
    st_ = random_state(np.random.default_rng(1), (1, 2), 3)
    out = apply_linear_map(st_, [(1, H), (1, V), (2, H), (2, V)], np.eye(4))
    for k, a in st_.amplitudes.items():
        assert out.amplitude(k) == pytest.approx(a)


def test_linear_map_errors():
    st_ = basis_state({(1, H): 1})
    with pytest.raises(NonUnitary):
        apply_linear_map(st_, [(1, H), (1, V)], [[1, 1], [0, 1]])
    with pytest.raises(UnknownMode):
        apply_linear_map(st_, [(7, H), (7, V)], np.eye(2))


@pytest.mark.parametrize("seed", range(8))
def test_linear_map_matches_permanent_oracle(seed):
    rng = np.random.default_rng(seed)
    channels = [(1, H), (1, V), (2, H)]
    u = random_unitary(rng, 3)
    for n_in in itertools.product(range(3), repeat=3):
        if sum(n_in) > 3:
            continue
        src = basis_state({c: n for c, n in zip(channels, n_in) if n}, (1, 2))
        out = apply_linear_map(src, channels, u)
        for n_out in itertools.product(range(4), repeat=3):
            if sum(n_out) != sum(n_in):
                continue
            k = make_ket({c: n for c, n in zip(channels, n_out) if n})
            assert out.amplitude(k) == pytest.approx(transition_amplitude(u, n_in, n_out), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_linear_maps_preserve_norm(seed):
    rng = np.random.default_rng(seed)
    state = random_state(rng, (1, 2, 3), 6)
    chans = [(m, p) for m in (1, 2, 3) for p in (H, V)]
    out = apply_linear_map(state, chans, random_unitary(rng, 6))
    assert out.norm_sq() == pytest.approx(1.0, abs=1e-10)


def test_condition_on_vacuum_examples():
    p, ens = condition_on_vacuum(Ensemble.pure(vacuum((2,))), [2])
    assert p == 1.0 and dict(ens.branches[0][1].amplitudes) == {(): 1.0}

    mix = Ensemble.mixture([(0.5, vacuum((2,))), (0.5, basis_state({(2, H): 1}))])
    p, ens = condition_on_vacuum(mix, [2])
    assert p == pytest.approx(0.5)

    sup = (basis_state({(2, H): 1}) + basis_state({(3, H): 1})).normalize()
    p, ens = condition_on_vacuum(Ensemble.pure(sup), [2])
    assert p == pytest.approx(0.5)
    # projector oracle: P = |0><0| on mode 2 kills the first term
    assert fidelity_with_pure(ens, basis_state({(3, H): 1})) == pytest.approx(1.0)
    assert ens.modes == frozenset({3})


def test_condition_on_vacuum_zero_probability():
    with pytest.raises(ZeroProbability):
        condition_on_vacuum(Ensemble.pure(basis_state({(2, H): 1})), [2])


def test_conditioning_outcomes_partition_probability():
    rng = np.random.default_rng(5)
    ens = random_ensemble(rng, (1, 2), 3)
    p_vac = condition_on_vacuum(ens, [2])[0]
    dm = to_density_matrix(ens)
    p_occupied = sum(
        dm.matrix[i, i].real for i, k in enumerate(dm.basis) if any(m == 2 for m, _, _ in k)
    )
    assert p_vac + p_occupied == pytest.approx(1.0, abs=1e-10)


def _epr():
    return (basis_state({(1, H): 1, (2, H): 1}) + basis_state({(1, V): 1, (2, V): 1})).normalize()


def test_partial_trace_examples():
    ens = Ensemble.pure(_epr())
    assert trace_distance(partial_trace(ens, [1, 2]), ens) == pytest.approx(0.0, abs=1e-15)

    reduced = partial_trace(ens, [1])
    expected = Ensemble.mixture([(0.5, basis_state({(1, H): 1})), (0.5, basis_state({(1, V): 1}))])
    assert trace_distance(reduced, expected) < 1e-12

    prod = Ensemble.pure(basis_state({(1, H): 1, (2, H): 1}))
    assert trace_distance(partial_trace(prod, [1]), Ensemble.pure(basis_state({(1, H): 1}))) < 1e-12

    with pytest.raises(UnknownMode):
        partial_trace(ens, [9])


def test_partial_trace_matches_dense_oracle():
    # Two single-photon polarization qubits: encode |H>=0, |V>=1.
    rng = np.random.default_rng(11)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    amps = {}
    for i, (p1, p2) in enumerate(itertools.product((H, V), repeat=2)):
        amps[make_ket({(1, p1): 1, (2, p2): 1})] = psi[i]
    ens = Ensemble.pure(PureState(amps))
    oracle = dense_partial_trace(np.outer(psi, psi.conj()), (2, 2), keep=[0])
    got = to_density_matrix(partial_trace(ens, [1]), [ket(H1=1), ket(V1=1)]).matrix
    assert np.allclose(got, oracle, atol=1e-12)


def test_trace_distance_examples():
    h = Ensemble.pure(basis_state({(1, H): 1}))
    v = Ensemble.pure(basis_state({(1, V): 1}))
    mixed = Ensemble.mixture([(0.5, basis_state({(1, H): 1})), (0.5, basis_state({(1, V): 1}))])
    assert trace_distance(h, h) == pytest.approx(0.0)
    assert trace_distance(h, v) == pytest.approx(1.0)
    assert trace_distance(h, mixed) == pytest.approx(0.5)
    oracle = trace_norm_distance(np.diag([1.0, 0.0]), np.diag([0.5, 0.5]))
    assert trace_distance(h, mixed) == pytest.approx(oracle)
    with pytest.raises(DimensionMismatch):
        trace_distance(h, Ensemble.pure(basis_state({(2, H): 1})))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_distance_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_ensemble(rng, (1, 2), 2, 2) for _ in range(3))
    dab = trace_distance(a, b)
    assert 0.0 <= dab <= 1.0 + 1e-12
    assert dab == pytest.approx(trace_distance(b, a), abs=1e-9)
    assert dab <= trace_distance(a, c) + trace_distance(c, b) + 1e-9


def test_fidelity_examples():
    ghz = ghz_pure()
    assert fidelity_with_pure(Ensemble.pure(ghz), ghz) == pytest.approx(1.0)
    assert fidelity_with_pure(Ensemble.pure(vacuum((1, 3, 5))), ghz) == 0.0
    # (1-f)^3 from the coherent term only
    assert fidelity_with_pure(id_ghz(3, 0.25, (1, 3, 5)), ghz) == pytest.approx(0.421875, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_density_matrix_round_trip(seed):
    ens = random_ensemble(np.random.default_rng(seed), (1, 2), 3)
    dm = to_density_matrix(ens)
    dm.check()
    assert trace_distance(from_density_matrix(dm), ens) < 1e-10
    assert trace_distance(ens.simplify(), ens) < 1e-10


def test_ket_text_round_trip():
    k = ket(H1=1, V2=2)
    assert format_ket(k) == "1H@1 2V@2"
    assert parse_ket(format_ket(k)) == k
    assert parse_ket("") == ()
    with pytest.raises(ValueError):
        parse_ket("1X@2")


def test_tensor_rejects_overlapping_modes():
    with pytest.raises(DimensionMismatch):
        tensor(basis_state({(1, H): 1}), basis_state({(1, V): 1}))


def test_pruning_drops_tiny_amplitudes():
    st_ = PureState({ket(H1=1): 1.0, ket(V1=1): 1e-15})
    assert len(st_) == 1


def test_merge_combines_identical_branches():
    s = basis_state({(1, H): 1})
    ens = Ensemble(((0.25, s), (0.25, s.scale(-1)), (0.5, basis_state({(1, V): 1}))))
    merged = ens.merge()
    assert len(merged) == 2
    assert trace_distance(merged, ens) < 1e-12
