from pathlib import Path

import numpy as np
import pytest

from eeflow.ingest import (
    IngestError,
    load_dataset,
    read_manifest,
    read_matrix,
    synth_dataset,
    write_dataset,
)
from eeflow.leontief import build_coefficients, spectral_radius
from eeflow.reference import reference_economies, reference_sectors, sector_code_for


def test_roundtrip_is_exact(tmp_path):
    d = synth_dataset(4, 3, seed=11)
    m = write_dataset(d, tmp_path / "ds")
    back = load_dataset(m.path)
    assert back.equals(d)
    assert back.clamp_counts == {k: 0 for k in back.clamp_counts}


def test_roundtrip_awkward_values(tmp_path):
    d = synth_dataset(2, 2, seed=1)
    u = np.array(d.intermediate_use)
    u[0, 0] = 0.1
    u[0, 1] = 1e-300
    u[1, 0] = 123456789.123456789
    u[1, 1] = 5e-324
    d2 = d.replace(intermediate_use=u)
    back = load_dataset(write_dataset(d2, tmp_path).path)
    assert np.array_equal(back.intermediate_use, u)


def test_roundtrip_preserves_label_order(tmp_path):
    d = synth_dataset(3, 4, seed=5)
    back = load_dataset(write_dataset(d, tmp_path).path)
    assert back.sector_codes == d.sector_codes
    assert back.economy_codes == d.economy_codes
    assert [s.name for s in back.sectors] == [s.name for s in d.sectors]


def test_write_to_unwritable_location(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        write_dataset(synth_dataset(2, 2, seed=0), blocker / "sub")


def test_synth_is_deterministic():
    a = synth_dataset(3, 2, seed=7, spectral_target=0.6)
    b = synth_dataset(3, 2, seed=7, spectral_target=0.6)
    assert a.equals(b)
    assert not a.equals(synth_dataset(3, 2, seed=8, spectral_target=0.6))


def test_synth_files_byte_identical(tmp_path):
    write_dataset(synth_dataset(3, 2, seed=7), tmp_path / "a")
    write_dataset(synth_dataset(3, 2, seed=7), tmp_path / "b")
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


@pytest.mark.parametrize("seed", range(10))
def test_synth_spectral_radius_bound(seed):
    d = synth_dataset(3, 2, seed=seed, spectral_target=0.6)
    a = build_coefficients(d).a
    # oracle: plain power iteration on A, plus a dense eigensolver
    x = np.ones(a.shape[0])
    est = 0.0
    for _ in range(2000):
        y = a @ x
        est = np.linalg.norm(y, 1) / np.linalg.norm(x, 1)
        x = y / np.linalg.norm(y, 1)
    assert est <= 0.6 + 1e-9
    assert np.abs(np.linalg.eigvals(a)).max() <= 0.6 + 1e-9
    assert spectral_radius(a)[0] <= 0.6 + 1e-9


def test_synth_entries_nonnegative():
    d = synth_dataset(5, 3, seed=2)
    for arr in (d.intermediate_use, d.total_output, d.final_demand, d.energy_satellite):
        assert (arr >= 0).all()


def test_synth_rejects_bad_args():
    with pytest.raises(ValueError):
        synth_dataset(0, 2)
    with pytest.raises(ValueError):
        synth_dataset(2, 2, spectral_target=1.5)


def _write_with(tmp_path, clamp, mutate):
    d = synth_dataset(3, 2, seed=3)
    m = write_dataset(d, tmp_path, clamp_negatives=clamp)
    path = m.resolve("intermediate_use")
    values, rows, cols = read_matrix(path)
    mutate(values)
    from eeflow.ingest import write_matrix

    write_matrix(path, values, rows, cols)
    return m.path


def test_clamp_negatives(tmp_path):
    def put(v):
        v[1, 2] = -1.0

    d = load_dataset(_write_with(tmp_path, True, put))
    assert d.intermediate_use[1, 2] == 0.0
    assert d.clamp_counts["intermediate_use"] == 1
    assert sum(d.clamp_counts.values()) == 1


def test_clamp_count_equals_raw_negatives(tmp_path):
    def put(v):
        v[0, :3] = [-1, -2, -3]
        v[5, 5] = -0.5

    d = load_dataset(_write_with(tmp_path, True, put))
    assert d.clamp_counts["intermediate_use"] == 4


def test_negatives_fatal_without_clamp(tmp_path):
    def put(v):
        v[1, 2] = -1.0

    with pytest.raises(IngestError, match="negative"):
        load_dataset(_write_with(tmp_path, False, put))


def test_nan_is_fatal(tmp_path):
    def put(v):
        v[0, 0] = np.nan

    with pytest.raises(IngestError, match="NaN"):
        load_dataset(_write_with(tmp_path, True, put))


def test_inf_is_fatal(tmp_path):
    def put(v):
        v[0, 0] = np.inf

    with pytest.raises(IngestError, match="NaN/Inf"):
        load_dataset(_write_with(tmp_path, True, put))


def test_shape_mismatch(tmp_path):
    d = synth_dataset(3, 2, seed=3)
    m = write_dataset(d, tmp_path)
    path = m.resolve("intermediate_use")
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(IngestError, match="labels"):
        load_dataset(m.path)


def test_label_mismatch(tmp_path):
    d = synth_dataset(3, 2, seed=3)
    m = write_dataset(d, tmp_path)
    path = m.resolve("final_demand")
    text = path.read_text().replace("AFG\tALB", "ALB\tAFG", 1)
    path.write_text(text)
    with pytest.raises(IngestError, match="column labels"):
        load_dataset(m.path)


def test_manifest_errors(tmp_path):
    p = tmp_path / "manifest.txt"
    p.write_text("n_sectors = 2\n")
    with pytest.raises(IngestError, match="n_economies"):
        read_manifest(p)
    p.write_text("n_sectors = 2\nn_economies = 1\nbogus = 1\n")
    with pytest.raises(IngestError, match="unknown"):
        read_manifest(p)
    p.write_text("n_sectors = 2\nn_economies = 1\nenergy_semantics = watts\n")
    with pytest.raises(IngestError, match="energy_semantics"):
        read_manifest(p)
    with pytest.raises(IngestError):
        read_manifest(tmp_path / "missing.txt")


def test_manifest_records_semantics(tmp_path):
    d = synth_dataset(2, 2, seed=0)
    m = read_manifest(write_dataset(d, tmp_path).path)
    assert m.energy_semantics == "intensity"
    assert m.clamp_negatives is True
    assert m.n_sectors == 2 and m.n_economies == 2


def test_declared_size_mismatch(tmp_path):
    d = synth_dataset(2, 2, seed=0)
    m = write_dataset(d, tmp_path)
    text = Path(m.path).read_text().replace("n_sectors = 2", "n_sectors = 3")
    Path(m.path).write_text(text)
    with pytest.raises(IngestError, match="declares"):
        load_dataset(m.path)


def test_reference_lists():
    sectors = reference_sectors()
    economies = reference_economies()
    assert len(sectors) == 26
    assert len(economies) == 189
    assert len({s.code for s in sectors}) == 26
    assert len({e.code for e in economies}) == 189
    codes = {s.code for s in sectors}
    assert {"EGW", "PC", "TR", "MP", "CO", "EHO", "EM", "FI&BA", "RE&RI"} <= codes
    assert {"CHN", "USA", "RUS", "IND", "JPN"} <= {e.code for e in economies}
    assert sector_code_for("electricity, gas and  water") == "EGW"
    assert sector_code_for("unknown") is None
