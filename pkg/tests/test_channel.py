import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coopisac.channel import (
    Geometry, RadioParams, dbm_to_watts, dump_channels, generate_channels, load_channels,
    path_loss, steering_vector,
)


def test_dbm_conversion():
    assert dbm_to_watts(-90) == pytest.approx(1e-12)
    assert dbm_to_watts(30) == pytest.approx(1.0)


def test_path_loss_free_space():
    lam = 0.1
    assert path_loss(lam, 10.0) == pytest.approx(0.1 / (4 * np.pi * 10.0))


@given(st.floats(0, np.pi), st.floats(-np.pi, np.pi), st.integers(1, 4), st.integers(1, 4))
def test_steering_vector_explicit(theta, phi, nr, nc):
    a = steering_vector(theta, phi, (nr, nc))
    ref = np.empty(nr * nc, complex)
    for i in range(nr):
        for j in range(nc):
            ref[i * nc + j] = np.exp(-1j * np.pi * np.sin(theta) * (i * np.cos(phi) + 2 * j * np.sin(phi)))
    assert np.allclose(a, ref, atol=1e-12)
    assert np.allclose(np.abs(a), 1.0)


def test_shapes_and_determinism(default_channels):
    ch = default_channels
    assert ch.h.shape == (3, 16) and ch.g.shape == (3, 5, 16) and ch.z.shape == (3, 5, 3, 16)
    again = generate_channels(Geometry.default(), RadioParams(), 0)
    assert np.array_equal(ch.g, again.g) and np.array_equal(ch.z, again.z)
    other = generate_channels(Geometry.default(), RadioParams(), 1)
    assert not np.array_equal(ch.g, other.g)
    assert np.array_equal(ch.h, other.h)  # BS-CUE links are pure LoS


def test_substreams_stable_under_truncation():
    g = Geometry.default()
    full = generate_channels(g, RadioParams(), 4)
    part = generate_channels(Geometry(g.bs_position, g.cue_positions, g.due_positions[:2]), RadioParams(), 4)
    assert np.array_equal(full.g[:, :2], part.g)


def test_extended_channels(default_channels):
    ch = default_channels
    assert np.array_equal(ch.h_ext(1), np.tile(ch.h[1], 4))
    assert np.array_equal(ch.g_ext(0, 2)[16:32], ch.g[0, 2])
    assert np.array_equal(ch.z_ext(2, 1)[32:48], ch.z[2, 2, 1])


def test_rician_power_near_path_loss():
    # the unit-modulus LoS part plus unit-variance NLoS keep E|g_n|^2 = PL^2
    g = Geometry.default()
    radio = RadioParams(grid=(8, 8))
    pw = np.mean([np.mean(np.abs(generate_channels(g, radio, s).g[0, 0]) ** 2) for s in range(40)])
    d = np.linalg.norm(g.due_positions[0] - g.cue_positions[0])
    assert pw == pytest.approx(path_loss(radio.wavelength, d) ** 2, rel=0.1)


def test_roundtrip(tmp_path, tiny_channels):
    p = tmp_path / "ch.json"
    dump_channels(tiny_channels, p)
    back = load_channels(p)
    assert np.array_equal(back.h, tiny_channels.h)
    assert np.array_equal(back.z, tiny_channels.z)
    assert back.noise_sense == tiny_channels.noise_sense and back.seed == 3


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Geometry([0, 0, 0], [[0, 0, 0]], [[1, 1, 1]])
    with pytest.raises(ValueError):
        RadioParams(noise_cue=0.0)
    with pytest.raises(ValueError):
        RadioParams(grid=(0, 4))
    with pytest.raises(ValueError):
        RadioParams(carrier_freq=-1)
