import numpy as np
import pytest
import scipy.sparse as sp

from eeflow.flows import (
    FlowError,
    block_edges,
    build_supranetwork,
    embodied_flow,
    layer_block,
    make_network,
    parse_flat_labels,
    read_network,
    write_network,
)
from eeflow.ingest import synth_dataset
from eeflow.leontief import build_coefficients, solve_leontief
from eeflow.model import MrioDataset, ValidationError
from eeflow.centrality import strengths
from oracles import embodied_flows_loop, neumann_inverse


def _solve(d):
    return solve_leontief(build_coefficients(d))


def _network(d, **kw):
    return build_supranetwork(d, _solve(d), **kw)


def test_single_economy_scalar_example():
    # a = 1/3 so l = 1.5; c = 2, f = 3
    d = MrioDataset.from_arrays(
        intermediate_use=np.array([[1.0]]),
        total_output=np.array([3.0]),
        final_demand=np.array([[3.0]]),
        energy_satellite=np.array([[2.0]]),
    )
    ls = _solve(d)
    assert ls.leontief_inverse[0, 0] == pytest.approx(1.5, rel=1e-15)
    assert embodied_flow(d, ls, 0, 0, 0, 0) == pytest.approx(9.0, rel=1e-15)
    assert _network(d).total_flow == pytest.approx(9.0, rel=1e-15)


def test_zero_demand_annihilates():
    d = synth_dataset(3, 2, seed=1)
    d = d.replace(final_demand=np.zeros_like(d.final_demand))
    ls = _solve(d)
    assert embodied_flow(d, ls, 0, 1, 1, 0) == 0.0
    sn = build_supranetwork(d, ls)
    assert sn.total_flow == 0.0
    assert sn.dense().max() == 0.0


@pytest.mark.parametrize("seed", range(4))
def test_matches_triple_loop(seed):
    d = synth_dataset(2, 2, seed=seed)
    a = build_coefficients(d).a
    ref = embodied_flows_loop(d.energy_satellite.tolist(), neumann_inverse(a),
                              d.final_demand.tolist(), 2, 2)
    w = _network(d).dense()
    assert np.allclose(w, ref, rtol=1e-8, atol=0)


def test_single_layer_total_is_quadratic_form():
    d = synth_dataset(4, 1, seed=9)
    ls = _solve(d)
    c = d.energy_satellite[:, 0]
    f = d.final_demand[:, 0]
    expected = c @ ls.leontief_inverse @ f
    assert _network(d).total_flow == pytest.approx(expected, rel=1e-9)


def test_pointwise_equals_batched():
    d = synth_dataset(2, 3, seed=2)
    ls = _solve(d)
    w = build_supranetwork(d, ls).dense()
    for alpha in range(3):
        for beta in range(3):
            for i in range(2):
                for j in range(2):
                    q = max(embodied_flow(d, ls, i, j, alpha, beta), 0.0)
                    assert w[alpha * 2 + i, beta * 2 + j] == pytest.approx(q, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("kappa", [0.5, 3.0, 1e3])
def test_linear_in_satellite(kappa):
    d = synth_dataset(3, 2, seed=5)
    w = _network(d).dense()
    w2 = _network(d.replace(energy_satellite=d.energy_satellite * kappa)).dense()
    nz = w > 0
    assert np.allclose(w2[nz] / w[nz], kappa, rtol=1e-12, atol=0)
    assert (w2[~nz] == 0).all()


@pytest.mark.parametrize("kappa", [0.25, 8.0])
def test_linear_in_final_demand(kappa):
    d = synth_dataset(3, 2, seed=6)
    w = _network(d).dense()
    w2 = _network(d.replace(final_demand=d.final_demand * kappa)).dense()
    nz = w > 0
    assert np.allclose(w2[nz] / w[nz], kappa, rtol=1e-12, atol=0)


def test_block_partition_is_exact():
    d = synth_dataset(3, 3, seed=4)
    sn = _network(d)
    blocks = [[layer_block(sn, a, b) for b in range(3)] for a in range(3)]
    assert np.array_equal(np.block(blocks), sn.dense())


def test_block_of_zero_network_is_zero():
    sn = make_network(np.zeros((6, 6)), *_labels(3, 2))
    assert not layer_block(sn, 1, 0).any()
    assert block_edges(sn, 0, 0) == []
    assert len(block_edges(sn, 0, 0, include_zero=True)) == 9


def test_block_row_sums_are_intra_out_strength():
    d = synth_dataset(3, 2, seed=8)
    sn = _network(d)
    w = sn.dense()
    for a in range(2):
        intra = np.array([sum(w[a * 3 + i, a * 3 + j] for j in range(3)) for i in range(3)])
        assert np.allclose(layer_block(sn, a, a).sum(axis=1), intra, rtol=1e-14)


def test_block_out_of_range():
    sn = make_network(np.zeros((4, 4)), *_labels(2, 2))
    with pytest.raises(ValidationError):
        layer_block(sn, 2, 0)


def test_block_by_code():
    d = synth_dataset(2, 2, seed=0)
    sn = _network(d)
    code = d.economy_codes[1]
    assert np.array_equal(layer_block(sn, d.economy(code), d.economy(code)), layer_block(sn, 1, 1))
    edges = block_edges(sn, 1, 0)
    assert all(s in d.sector_codes and t in d.sector_codes for s, t, _ in edges)


def _permute(d, sec_perm, eco_perm):
    n_sec, n_eco = d.n_sectors, d.layer_count
    flat = np.array([e * n_sec + s for e in eco_perm for s in sec_perm])
    return MrioDataset.from_arrays(
        intermediate_use=d.intermediate_use[np.ix_(flat, flat)],
        total_output=d.total_output[flat],
        final_demand=d.final_demand[flat][:, eco_perm],
        energy_satellite=d.energy_satellite[np.ix_(sec_perm, eco_perm)],
    ), flat


def test_total_flow_permutation_invariant():
    d = synth_dataset(3, 3, seed=12)
    sn = _network(d)
    p, flat = _permute(d, [2, 0, 1], [1, 2, 0])
    sn2 = _network(p)
    assert sn2.total_flow == pytest.approx(sn.total_flow, rel=1e-12)
    assert np.allclose(sn2.dense(), sn.dense()[np.ix_(flat, flat)], rtol=1e-12)


def test_nonnegative_with_raw_negatives():
    d = synth_dataset(3, 2, seed=13)
    f = d.final_demand.copy()
    f[0, 1] = -5.0
    d = d.replace(final_demand=f)
    sn = _network(d)
    assert sn.dense().min() >= 0
    assert sn.clamped_count == 3
    assert np.isfinite(sn.dense()).all()


def test_total_flow_equals_sum():
    sn = _network(synth_dataset(4, 2, seed=3))
    assert sn.total_flow == pytest.approx(sn.dense().sum(), rel=1e-9)


def test_sparse_storage_equivalent():
    d = synth_dataset(3, 3, seed=3, density=0.1)
    dense = _network(d, sparse=False)
    sparse = _network(d, sparse=True)
    assert sp.issparse(sparse.w) and not sp.issparse(dense.w)
    assert np.array_equal(sparse.dense(), dense.dense())
    s1, s2 = strengths(dense), strengths(sparse)
    assert np.allclose(s1.node_layer_in, s2.node_layer_in, rtol=1e-13)


def test_auto_storage_by_density():
    w = np.zeros((4, 4))
    w[0, 0] = 1
    assert make_network(w, *_labels(2, 2)).is_sparse
    assert not make_network(np.ones((4, 4)), *_labels(2, 2)).is_sparse


def test_make_network_rejects_bad_weights():
    with pytest.raises(ValidationError):
        make_network(-np.ones((4, 4)), *_labels(2, 2))
    with pytest.raises(FlowError):
        make_network(np.full((4, 4), np.inf), *_labels(2, 2))
    with pytest.raises(ValidationError):
        make_network(np.ones((3, 3)), *_labels(2, 2))


def test_mismatched_system():
    d = synth_dataset(2, 2, seed=0)
    other = _solve(synth_dataset(3, 2, seed=0))
    with pytest.raises(ValidationError):
        build_supranetwork(d, other)


def test_network_file_roundtrip(tmp_path):
    d = synth_dataset(3, 2, seed=1)
    sn = _network(d)
    write_network(sn, tmp_path / "w.tsv")
    back = read_network(tmp_path / "w.tsv")
    assert np.array_equal(back.dense(), sn.dense())
    assert back.sector_codes == sn.sector_codes
    assert back.economy_codes == sn.economy_codes


def test_parse_flat_labels():
    assert parse_flat_labels(["a@X", "b@X", "a@Y", "b@Y"]) == (["a", "b"], ["X", "Y"])
    with pytest.raises(ValidationError):
        parse_flat_labels(["a@X", "a@Y", "b@X", "b@Y"])
    with pytest.raises(ValidationError):
        parse_flat_labels(["aX"])


def _labels(n_sec, n_eco):
    d = MrioDataset.from_arrays(
        intermediate_use=np.zeros((n_sec * n_eco,) * 2),
        total_output=np.ones(n_sec * n_eco),
        final_demand=np.zeros((n_sec * n_eco, n_eco)),
        energy_satellite=np.zeros((n_sec, n_eco)),
    )
    return d.sectors, d.economies
