import numpy as np
import pytest

import gaborscat as gs
from gaborscat.errors import DomainError

K0 = 1.45


@pytest.fixture(scope="module")
def setup(request):
    fp = gs.FrameParams(X=0.5, alpha=float(np.sqrt(2 / 3)),
                        beta=float(np.sqrt(2 / 3)), M=3, N=2)
    zg = gs.ZGrid(z_min=-0.3, delta=0.05, n_k=12)
    cfg = gs.EwaldConfig(split=gs.optimal_split(K0, zg.delta), k0=K0)
    spat = gs.build_spatial_table(fp, zg, cfg, 2, 3)
    spec = gs.build_spectral_table(fp, zg, cfg, 2, 3)
    return fp, zg, cfg, spat, spec


def _entry_oracle_spatial(q, p, d, fp, zg, cfg):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 16
    e, k0 = cfg.split, cfg.k0

    def f(x):
        x = float(x)
        fs = complex(gs.f_spatial(q, p, x, fp))
        gsv = complex(gs.g_z_spatial(d, x, zg))
        return mp.e ** (k0 * k0 / (4 * x * x)) / x * fs * gsv

    return complex(mp.quad(f, [e, 3 * e, 10 * e, 40 * e, 200 * e, mp.inf]))


def _entry_oracle_spectral(q, p, d, fp, zg, cfg):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 16
    e, k0 = cfg.split, cfg.k0

    def f(w):
        w = float(w)
        z = complex(gs.zeta_path(w, e))
        return (mp.e ** (k0 * k0 * z * z / 4)
                * complex(gs.f_spectral(q, p, z, fp))
                * complex(gs.g_z_spectral(d, z, zg))
                * complex(gs.zeta_path_derivative(w, e)))

    head = mp.quad(f, [1 / e, 1.5 / e, 2 / e])
    tail = mp.quadosc(f, [2 / e, mp.inf],
                      zeros=lambda n: mp.sqrt(8 * mp.pi * n / (k0 * k0)
                                              + (2 / e) ** 2))
    return complex(head + tail)


def test_spatial_entries_match_high_precision(setup):
    fp, zg, cfg, spat, _ = setup
    for (q, p, d) in [(0, 0, 0), (1, 2, 0), (0, 0, -1), (2, -1, 3)]:
        oracle = _entry_oracle_spatial(q, p, d, fp, zg, cfg)
        got = spat.entry(q, p, d)
        assert abs(got - oracle) <= 1e-9 * max(abs(oracle), 1e-12)


def test_spectral_entries_match_high_precision(setup):
    fp, zg, cfg, _, spec = setup
    for (q, p, d) in [(0, 0, 0), (2, -1, 3)]:
        oracle = _entry_oracle_spectral(q, p, d, fp, zg, cfg)
        got = spec.entry(q, p, d)
        assert abs(got - oracle) <= 1e-8 * max(abs(oracle), 1e-12)


def test_qp_symmetry(setup):
    _, _, _, spat, spec = setup
    for t in (spat, spec):
        scale = np.abs(t.data).max()
        assert np.abs(t.data - t.data[::-1, ::-1, :]).max() <= 1e-12 * scale


def test_rebuild_bit_identical(setup):
    fp, zg, cfg, spat, spec = setup
    again = gs.build_spatial_table(fp, zg, cfg, 2, 3)
    assert np.array_equal(spat.data, again.data)
    again = gs.build_spectral_table(fp, zg, cfg, 2, 3)
    assert np.array_equal(spec.data, again.data)


def test_spatial_d_decay_envelope(setup):
    # |T[q,p,d]| / |T[q,p,0]| tracks exp(-d^2 Delta^2 E^2) within a factor 10
    # for moderate positive d (the large-xi Gaussian of the z kernel)
    fp, zg, cfg, spat, _ = setup
    e = cfg.split
    for d in (2, 3, 4, 5):
        ratio = abs(spat.entry(0, 0, d)) / abs(spat.entry(0, 0, 0))
        bound = np.exp(-d * d * zg.delta ** 2 * e * e)
        assert bound / 10 < ratio < bound * 10


def test_spectral_cap_doubling_negligible(setup):
    fp, zg, cfg, _, spec = setup
    # rebuilding with a doubled block budget must not move any entry
    wide = gs.build_spectral_table(fp, zg, cfg, 2, 3, averaging_depth=60)
    scale = np.abs(spec.data).max()
    assert np.abs(wide.data - spec.data).max() <= cfg.quad_tol * scale


def test_truncation_point_monotone_in_p(setup):
    fp, zg, cfg, *_ = setup
    pts = [gs.truncation_point("spectral", 0, p, 0, fp, zg, cfg)
           for p in range(0, 8)]
    assert all(b <= a + 1e-12 for a, b in zip(pts, pts[1:]))
    # spatial cutoffs capped at 100 E, spectral at 200 / E
    assert gs.truncation_point("spatial", 0, 0, 0, fp, zg, cfg) <= 100 * cfg.split
    assert gs.truncation_point("spectral", 0, 0, 0, fp, zg, cfg) <= 200 / cfg.split


def test_spatial_truncation_solves_envelope(setup):
    # d = 0 case: sqrt(pi)/(4 X xi^3) e^{-pi a^2 q^2/2} = trunc_tol (below cap)
    fp, zg, cfg, *_ = setup
    loose = gs.EwaldConfig(split=cfg.split, k0=K0, trunc_tol=1e-6)
    got = gs.truncation_point("spatial", 0, 0, 0, fp, zg, loose)
    envelope = (np.exp(loose.k0 ** 2 / (4 * got ** 2)) / (2 * fp.X * got ** 2)
                * np.sqrt(np.pi) / (2 * got))
    assert envelope == pytest.approx(loose.trunc_tol, rel=1e-6)


def test_zero_skip_far_entries(setup):
    # entries with the q-Gaussian below trunc_tol at the lower limit are zero
    fp, zg, cfg, spat, _ = setup
    assert spat.entry(spat.q_max, 0, 0) == 0
    # d-skip needs m_d * Delta * E above the log threshold; force it with a
    # loose trunc_tol on a throwaway build
    loose = gs.EwaldConfig(split=cfg.split, k0=cfg.k0, trunc_tol=1e-2)
    small = gs.build_spatial_table(fp, zg, loose, 2, 3)
    assert small.entry(0, 0, zg.n_k) == 0
    assert small.entry(0, 0, 0) != 0


def test_cache_round_trip_bit_exact(setup, tmp_path):
    fp, zg, cfg, spat, spec = setup
    for table in (spat, spec):
        path = gs.cache_path(tmp_path, table.kind, fp, zg, cfg, 2, 3)
        gs.save_table(table, path)
        back = gs.load_table(path, fp, zg, cfg, 2, 3, table.kind)
        assert np.array_equal(back.data, table.data)
        assert back.data.tobytes() == table.data.tobytes()


def test_cache_rejects_mismatched_parameters(setup, tmp_path):
    fp, zg, cfg, spat, _ = setup
    path = gs.cache_path(tmp_path, "spatial", fp, zg, cfg, 2, 3)
    gs.save_table(spat, path)
    other = gs.EwaldConfig(split=cfg.split * 1.5, k0=K0)
    with pytest.raises(DomainError):
        gs.load_table(path, fp, zg, other, 2, 3, "spatial")


def test_load_or_build_cache_hit(setup, tmp_path):
    fp, zg, cfg, *_ = setup
    _, _, hit1 = gs.load_or_build(tmp_path, fp, zg, cfg, 2, 3)
    spat2, spec2, hit2 = gs.load_or_build(tmp_path, fp, zg, cfg, 2, 3)
    assert not hit1 and hit2
    assert spat2.kind == "spatial" and spec2.kind == "spectral"


def test_magic_bytes(setup, tmp_path):
    fp, zg, cfg, spat, _ = setup
    path = gs.cache_path(tmp_path, "spatial", fp, zg, cfg, 2, 3)
    gs.save_table(spat, path)
    assert path.read_bytes()[:4] == b"EGKT"
