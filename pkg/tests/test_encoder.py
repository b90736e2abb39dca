import numpy as np
import pytest

from wmplanlab import encoder as enc_mod
from wmplanlab import envs
from wmplanlab.encoder import (encode, encode_dataset, encoder_hash,
                               latent_distance, load_encoder,
                               make_identity, make_random_fourier,
                               save_encoder)


def test_identity_encode():
    enc = make_identity(2)
    o = np.array([0.3, 0.7])
    assert np.array_equal(encode(enc, o), o)


def test_encode_dimension_check():
    enc = make_identity(2)
    with pytest.raises(ValueError, match="dim"):
        encode(enc, np.zeros(3))


def test_random_fourier_frozen_and_deterministic():
    enc = make_random_fourier(2, d_z=64, seed=3)
    o = np.array([0.1, 0.9])
    z1 = encode(enc, o)
    z2 = encode(enc, o)
    assert np.array_equal(z1, z2)
    assert z1.shape == (64,)
    assert not enc.W.flags.writeable
    enc_again = make_random_fourier(2, d_z=64, seed=3)
    assert np.array_equal(enc_again.W, enc.W)
    assert encoder_hash(enc_again) == encoder_hash(enc)


def test_random_fourier_norm_bound():
    # |sin|,|cos| <= 1 gives ||z|| <= sqrt(2 d_f) * sqrt(2/d_f) = 2
    enc = make_random_fourier(2, d_z=64, seed=0)
    rng = np.random.default_rng(1)
    for _ in range(200):
        z = encode(enc, rng.uniform(-5, 5, size=2))
        assert np.linalg.norm(z) <= 2.0 + 1e-12


def test_random_fourier_batch_matches_single():
    enc = make_random_fourier(4, d_z=32, seed=2)
    rng = np.random.default_rng(0)
    batch = rng.standard_normal((10, 4))
    Z = encode(enc, batch)
    for i in range(10):
        assert np.array_equal(Z[i], encode(enc, batch[i]))


def test_random_fourier_injective_on_grid():
    # 64x64 grid of Wall2D positions: no two distinct points within 1e-6
    enc = make_random_fourier(2, d_z=64, seed=0)
    xs = np.linspace(0, 1, 64)
    pts = np.array([[x, y] for x in xs for y in xs])
    Z = encode(enc, pts)
    sq = np.sum(Z * Z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * (Z @ Z.T)
    np.fill_diagonal(d2, np.inf)
    assert np.sqrt(max(d2.min(), 0.0)) > 1e-6


def test_latent_distance():
    assert latent_distance(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 0.0
    assert latent_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(2.0)
    rng = np.random.default_rng(5)
    z1, z2 = rng.standard_normal(16), rng.standard_normal(16)
    direct = sum((a - b) ** 2 for a, b in zip(z1, z2))
    assert latent_distance(z1, z2) == pytest.approx(direct)
    with pytest.raises(ValueError):
        latent_distance(np.zeros(3), np.zeros(4))


def test_d_z_must_be_even():
    with pytest.raises(ValueError):
        make_random_fourier(2, d_z=7)


def test_encode_dataset_fills_latents(wall_spec):
    data = envs.generate_dataset(wall_spec, 3, 6, "random", seed=0)
    enc = make_random_fourier(2, d_z=16, seed=0)
    out = encode_dataset(enc, data)
    for traj in out.trajectories:
        assert traj.latents.shape == (6, 16)
        assert np.array_equal(traj.latents[0], encode(enc, traj.obs[0]))
    # source dataset untouched
    assert all(t.latents is None for t in data.trajectories)


def test_encoder_save_load_roundtrip(tmp_path):
    enc = make_random_fourier(2, d_z=24, sigma=3.0, seed=9)
    save_encoder(tmp_path / "enc", enc)
    back = load_encoder(tmp_path / "enc")
    assert back.kind == enc.kind
    assert back.d_z == enc.d_z
    assert np.array_equal(back.W, enc.W)
    assert np.array_equal(back.b, enc.b)
    assert encoder_hash(back) == encoder_hash(enc)
    ident = make_identity(4)
    save_encoder(tmp_path / "ident", ident)
    back2 = load_encoder(tmp_path / "ident")
    assert back2.kind == enc_mod.IDENTITY and back2.W is None
