import pytest

from tcmnoma.design import build_design
from tcmnoma.harness import SimConfig, design_for


@pytest.fixture(scope="session")
def full_design():
    """Six-user, four-tone configuration with searched polynomials.

    Built through the harness cache so simulation tests reuse the same bundle.
    """
    return design_for(SimConfig.from_dict({}), "tcm-noma")


@pytest.fixture(scope="session")
def lattice_design():
    """Baseline bundle: one shared lattice set per tone, conventional split."""
    return design_for(SimConfig.from_dict({}), "lc-tcm")


@pytest.fixture(scope="session")
def toy_design():
    """Two users sharing two tones; small enough for exhaustive checks."""
    return build_design(
        K=2,
        N=2,
        J=2,
        preset=[[1, 1], [1, 1]],
        q=1,
        r=1,
        registers=2,
        parity_octal=["2", "5"],
        base_size=16,
    )
