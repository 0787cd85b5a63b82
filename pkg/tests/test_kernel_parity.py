"""Compiled and pure-Python branch kernels must agree bit for bit."""

import numpy as np
import pytest

from tcmnoma import _kernel_py
from tcmnoma.decoder import _Setup

speedups = pytest.importorskip("tcmnoma._speedups")


def _random_call(design, rng, n_survivors, gate2):
    setup = _Setup(design.mapping, design.diagram, design.labeling)
    metrics = rng.uniform(0.0, 5.0, size=n_survivors)
    states = rng.integers(
        0, design.diagram.n_states, size=(n_survivors, setup.K)
    ).astype(np.int16)
    y = rng.normal(size=setup.K) + 1j * rng.normal(size=setup.K)
    h = rng.normal(size=setup.K) + 1j * rng.normal(size=setup.K)
    args = (
        metrics,
        states,
        y,
        h,
        setup.pos_by_label,
        setup.label_table,
        setup.next_table,
        setup.slice_user,
        setup.slice_shift,
        setup.q,
        design.mapping.J,
        gate2,
        setup.bits_per_tone,
        setup.v_bits,
    )
    return args


@pytest.mark.parametrize("gate2", [-1.0, 0.5, 4.0])
def test_toy_kernels_agree(toy_design, gate2):
    rng = np.random.default_rng(17)
    for trial in range(20):
        args = _random_call(toy_design, rng, int(rng.integers(1, 9)), gate2)
        fast = speedups.decode_unit(*args)
        slow = _kernel_py.decode_unit(*args)
        for a, b in zip(fast, slow):
            if isinstance(a, np.ndarray):
                assert a.dtype == b.dtype
                assert a.tobytes() == b.tobytes()
            else:
                assert a == b


@pytest.mark.parametrize("gate2", [-1.0, 25.0])
def test_full_scale_kernels_agree(full_design, gate2):
    rng = np.random.default_rng(23)
    for trial in range(4):
        args = _random_call(full_design, rng, int(rng.integers(1, 6)), gate2)
        fast = speedups.decode_unit(*args)
        slow = _kernel_py.decode_unit(*args)
        for a, b in zip(fast, slow):
            if isinstance(a, np.ndarray):
                assert a.tobytes() == b.tobytes()
            else:
                assert a == b


def test_kernel_kind_labels():
    assert speedups.KERNEL_KIND == "compiled"
    assert _kernel_py.KERNEL_KIND == "python"
