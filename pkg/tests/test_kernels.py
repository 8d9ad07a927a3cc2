import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scramble_bound import kernels

needs_compiled = pytest.mark.skipif(kernels.compiled is None, reason="extension not built")
finite = st.floats(-5, 5, allow_nan=False)


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(
    energies=arrays(float, st.integers(1, 12), elements=finite),
    t=arrays(float, 7, elements=st.floats(-30, 30)),
    tau=arrays(float, 7, elements=st.floats(-2, 2)),
    data=st.data(),
)
def test_spectral_sum_backends_agree(energies, t, tau, data):
    weights = data.draw(arrays(float, energies.size, elements=st.floats(0.01, 1)))
    weights /= weights.sum()
    a = kernels.compiled.spectral_sum(energies, weights, t, tau)
    b = kernels.fallback.spectral_sum(energies, weights, t, tau)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-13)


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(rate=st.floats(0.1, 3), depth=st.floats(0.1, 1e4), theta=st.floats(0, 1.5), energy=st.floats(0, 40))
def test_quadrature_kernels_backends_agree(rate, depth, theta, energy):
    nodes = np.linspace(0, 6 / rate, 301)
    q = np.full(nodes.size, nodes[1])
    a = kernels.compiled.double_exp_sum(nodes, q, rate, depth)
    b = kernels.fallback.double_exp_sum(nodes, q, rate, depth)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)
    re_a, im_a = kernels.compiled.shifted_fourier_sum(nodes, q, rate, theta, energy)
    re_b, im_b = kernels.fallback.shifted_fourier_sum(nodes, q, rate, theta, energy)
    scale = kernels.fallback.double_exp_sum(nodes, q, rate, 2 * np.cos(theta)) + 1e-300
    assert abs(re_a - re_b) <= 1e-11 * scale
    assert abs(im_a - im_b) <= 1e-11 * scale


def test_zero_weight_levels_outside_support_are_ignored(backend):
    energies = np.array([-1.0, 0.5, 900.0])
    weights = np.array([0.5, 0.5, 0.0])
    re, im, shift = kernels.spectral_sum(energies, weights, [0.0], [-1.5])
    total = np.exp(shift) * (re + 1j * im)
    assert np.all(np.isfinite(total))
    assert total[0].real == pytest.approx(0.5 * np.exp(-1.5) + 0.5 * np.exp(0.75))


def test_peak_shift_keeps_large_euclidean_times_finite(backend):
    re, im, shift = kernels.spectral_sum([0.0, 400.0], [0.5, 0.5], [0.0], [-2.0])
    assert shift[0] == pytest.approx(800.0)
    assert re[0] == pytest.approx(0.5 + 0.5 * np.exp(-800.0))


def test_environment_variable_selects_fallback():
    env = dict(os.environ, SCRAMBLE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from scramble_bound import kernels; print(kernels.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "python"


def test_backend_name_matches_import():
    assert kernels.BACKEND == ("cython" if kernels.compiled is not None else "python")
