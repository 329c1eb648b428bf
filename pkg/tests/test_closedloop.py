import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import hz
from resetloop.closedloop import (
    ClosedLoopPrediction,
    SuperposeInput,
    loop_quantities,
    norms,
    per,
    phase_rotated_gain,
    predict,
    predict_base_linear,
    predict_disturbance,
    predict_noise,
    predict_reference,
    reconstruct_time,
    superpose,
    to_db,
)
from resetloop.elements import ResetController
from resetloop.errors import PredictionError
from resetloop.hosidf import required_nmax
from resetloop.lti import RationalTf, freq_response, gain
from resetloop.presets import OMEGA_C, cglp_pid, r_ci, r_pci

GRID = [hz(f) for f in (2.0, 10.0, 40.0, 150.0, 600.0)]


def _single(X, nmax=1, omega=1.0):
    E = np.zeros((nmax + 1) // 2, complex)
    E[: len(X)] = X
    return ClosedLoopPrediction("reference", omega, nmax, E, E.copy(), E.copy())


@pytest.fixture(scope="module")
def c04():
    return cglp_pid("C04")


def test_loop_quantity_identities(c04, plant):
    for w in GRID:
        q = loop_quantities(c04, plant, w)
        assert q.Sl1 * (1 + q.L1) == pytest.approx(1, abs=1e-12)
        assert q.Sl_bl * (1 + q.L_bl) == pytest.approx(1, abs=1e-12)


def test_first_harmonic_identities(c04, plant):
    for w in GRID:
        r = predict_reference(c04, plant, w)
        d = predict_disturbance(c04, plant, w)
        n = predict_noise(c04, plant, w)
        P = freq_response(plant, w)
        S1, T1 = r.E[0], r.Y[0]
        assert S1 + T1 == pytest.approx(1, abs=1e-12)
        assert d.E[0] == pytest.approx(-P * S1, rel=1e-12)
        assert d.U[0] == pytest.approx(-T1, rel=1e-12)
        assert n.E[0] == pytest.approx(-S1, rel=1e-12)
        assert n.Y[0] == pytest.approx(S1, rel=1e-12)


def test_harmonic_pattern_identities(c04, plant):
    w = hz(40)
    r, n = predict_reference(c04, plant, w), predict_noise(c04, plant, w)
    for p in (r, predict_disturbance(c04, plant, w), n):
        np.testing.assert_allclose(p.E[1:], -p.Y[1:], rtol=1e-14)
        assert np.all(p.E[1:] != 0)
    np.testing.assert_allclose(np.abs(n.E), np.abs(r.E), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3), st.integers(1, 21))
def test_rot_magnitude_and_phase(S1, n):
    rot = phase_rotated_gain(S1, n)
    assert abs(rot) == pytest.approx(abs(S1), rel=1e-12)
    d = np.angle(rot) - n * np.angle(S1)
    assert abs((d + math.pi) % (2 * math.pi) - math.pi) < 1e-9


@pytest.mark.parametrize("channel", ["reference", "disturbance", "noise"])
def test_linear_collapse(plant, channel):
    c = cglp_pid("C04", gamma=1.0, alpha=1.0)
    for w in GRID:
        p = predict(c, plant, w, channel)
        assert np.all(p.E[1:] == 0) and np.all(p.U[1:] == 0)
        bl = predict_base_linear(c, plant, w, channel)
        for s in "eyu":
            assert p.table(s)[0] == pytest.approx(bl.table(s)[0], rel=1e-10)
    q = loop_quantities(c, plant, hz(40))
    r = predict_reference(c, plant, hz(40))
    assert r.E[0] == pytest.approx(1 / (1 + q.L_bl), rel=1e-10)
    d = predict_disturbance(c, plant, hz(40))
    assert d.Y[0] == pytest.approx(q.P / (1 + q.L_bl), rel=1e-10)
    assert predict_noise(c, plant, hz(40)).Y[0] == pytest.approx(q.Sl_bl, rel=1e-10)


def test_c04_40hz_reference(c04, plant):
    p = predict_reference(c04, plant, hz(40))
    assert to_db(norms(p, "e").linf) == pytest.approx(-16.2313, abs=0.5)


def test_rpci_1hz_disturbance(plant):
    c = r_pci(0.0)
    w = hz(1)
    p = predict_disturbance(c, plant, w, required_nmax(w, OMEGA_C))
    assert to_db(norms(p, "e").linf) == pytest.approx(-28.1948, abs=1.0)


def test_singular_closed_loop():
    ctrl = ResetController(gain(1.0), 0, [])
    with pytest.raises(PredictionError):
        predict(ctrl, RationalTf((-1.0,), (1.0,)), 1.0, "reference")


def test_reconstruct_time():
    t, x = reconstruct_time(_single([1.0j], omega=2.0), "e", 64)
    np.testing.assert_allclose(x, np.sin(2.0 * t + math.pi / 2), atol=1e-14)
    p = _single([1.0, 0.3 - 0.2j], nmax=3)
    _, a = reconstruct_time(p, "e", 100)
    _, b = reconstruct_time(-p, "e", 100)
    np.testing.assert_allclose(a, -b)
    with pytest.raises(ValueError):
        reconstruct_time(_single([1.0], nmax=11), "e", 20)


def test_norms_examples():
    rep = norms(_single([2.5]), "e")
    assert rep.l2 == pytest.approx(2.5 / math.sqrt(2), rel=1e-14)
    assert rep.linf == pytest.approx(2.5, rel=1e-6)
    assert norms(_single([0.0]), "e") == norms(_single([0.0]), "e")
    assert norms(_single([0.0]), "e").l2 == 0 and norms(_single([0.0]), "e").linf == 0
    rep = norms(_single([1.0, 1.0], nmax=3), "e")
    th = np.linspace(0, 2 * math.pi, 1_000_000, endpoint=False)
    brute = np.max(np.abs(np.sin(th) + np.sin(3 * th)))
    assert rep.linf == pytest.approx(brute, rel=1e-4)
    assert rep.l2 == pytest.approx(1.0, rel=1e-14)


def test_per_examples():
    assert per(0.3, 0.3) == 0
    assert per(2.0, 1.0) == pytest.approx(1.0)
    m, p = 10 ** (-17.4046 / 20), 10 ** (-16.2313 / 20)
    assert per(m, p) == pytest.approx(0.127, abs=0.001)
    with pytest.raises(PredictionError):
        per(1.0, 0.0)


def test_scaled_prediction_phase(c04, plant):
    p = predict_reference(c04, plant, hz(40))
    q = p.scaled(2.0, 0.3)
    for k, n in enumerate(p.orders):
        assert q.E[k] == pytest.approx(2.0 * p.E[k] * np.exp(1j * n * 0.3))


def test_superpose_dominance(c04, plant):
    res = superpose(c04, plant, [SuperposeInput("reference", hz(40), 1.0),
                                 SuperposeInput("reference", hz(300), 0.01)])
    assert res.valid and res.dominant == 0
    assert res.roles == ("reset", "base_linear")
    assert res.combined_linf == pytest.approx(sum(c.linf for c in res.contributions))
    eq = superpose(c04, plant, [("reference", hz(40), 1.0), ("reference", hz(40), 1.0, 0.5)])
    assert not eq.valid and eq.violations == ((0, 1),)
    with pytest.raises(ValueError):
        superpose(c04, plant, [("reference", hz(40), 1.0)])
    with pytest.raises(ValueError):
        SuperposeInput("bogus", 1.0)


def test_prediction_is_deterministic(plant):
    c = r_ci(0.0)
    a = predict_reference(c, plant, hz(5), 31)
    b = predict_reference(c, plant, hz(5), 31)
    assert np.array_equal(a.E, b.E)
