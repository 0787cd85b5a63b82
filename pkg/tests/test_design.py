import pytest

from tcmnoma.design import build_design, export_design, render_design_summary
from tcmnoma.errors import InvalidDimensions


def test_toy_design_bundle(toy_design):
    d = toy_design
    assert len(d.signal_set) == 16
    assert d.bits_per_label == 3
    assert d.q == 1
    assert d.parity_octal == ("2", "5")
    assert not d.searched
    assert d.flush_units == 2
    assert d.profile.certified


def test_full_design_bundle(full_design):
    d = full_design
    assert len(d.signal_set) == 512
    assert d.bits_per_label == 7
    assert d.q == 2
    assert d.searched
    assert d.profile.certified
    assert d.profile.d_free_sq == min(d.profile.delta_min_sq, d.profile.delta_free_sq)
    assert d.mean_energy > 0


def test_design_requires_power_of_two_tones():
    with pytest.raises(InvalidDimensions):
        build_design(
            K=3, N=1, J=3, preset=None, q=1, r=1,
            registers=2, parity_octal=["2", "5"], base_size=16,
        )


def test_design_rejects_oversized_code():
    with pytest.raises(InvalidDimensions):
        build_design(
            K=2, N=2, J=2, preset=[[1, 1], [1, 1]], q=1, r=3,
            registers=2, parity_octal=["2", "4", "1", "15"], base_size=16,
        )


def test_export_writes_artifacts(toy_design, tmp_path):
    paths = export_design(toy_design, tmp_path)
    names = {p.name for p in paths}
    assert names == {"points.csv", "tree.txt", "labeling.txt", "summary.txt"}
    for p in paths:
        assert p.exists() and p.stat().st_size > 0
    assert "signal set size 16" in render_design_summary(toy_design)
