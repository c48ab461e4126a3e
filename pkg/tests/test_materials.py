import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermal_casimir import materials as m


def test_vacuum_is_unity():
    xi = np.array([0.0, 1e10, 1e16])
    assert np.all(m.eval_imag(m.vacuum(), xi) == 1.0)


def test_drude_closed_form():
    model = m.drude(1e15, 1e13)
    xi = 3e14
    assert m.eval_imag(model, xi) == pytest.approx(1 + 1e30 / (xi * (xi + 1e13)), rel=1e-14)


def test_drude_zero_frequency_raises():
    with pytest.raises(m.ZeroFrequencySingular):
        m.eval_imag(m.gold(), 0.0)


def test_negative_frequency_rejected():
    with pytest.raises(ValueError):
        m.eval_imag(m.gold(), -1.0)


def test_perfect_mirror_is_infinite():
    assert math.isinf(m.eval_imag(m.perfect_mirror(), 1e14))


def test_intrinsic_silicon_limits():
    si = m.intrinsic_silicon()
    assert m.eval_imag(si, 0.0) == pytest.approx(m.SILICON_EPS_STATIC)
    assert m.eval_imag(si, 1e20) == pytest.approx(m.SILICON_EPS_INFINITY, rel=1e-6)


def test_doping_term_vanishes_at_high_and_grows_at_low_frequency():
    doped, intrinsic = m.doped_silicon(), m.intrinsic_silicon()
    hi = m.eval_imag(doped, 1e19) - m.eval_imag(intrinsic, 1e19)
    assert 0 < hi < 1e-6
    xi = np.array([1e8, 1e7])
    d = m.eval_imag(doped, xi) - m.eval_imag(intrinsic, xi)
    # 1/xi growth well below the relaxation rate
    assert d[1] / d[0] == pytest.approx(10.0, rel=1e-4)


def test_carrier_drude_from_doping():
    wp, gamma = m.silicon_carrier_drude(density=1e24, effective_mass=1.0, mobility=0.1)
    from scipy import constants as c

    assert wp == pytest.approx(math.sqrt(1e24 * c.e**2 / (c.epsilon_0 * c.m_e)))
    assert gamma == pytest.approx(c.e / (c.m_e * 0.1))


def test_real_axis_drude_is_passive():
    w = np.geomspace(1e12, 1e17, 50)
    assert np.all(m.eval_real(m.gold(), w).imag > 0)
    assert np.all(m.eval_real(m.doped_silicon(), w).imag > 0)


def test_tabulated_kramers_kronig_reproduces_drude():
    wp, g = 1e15, 1e13
    w = np.geomspace(1e12, 1e19, 4000)
    table = m.tabulated(zip(w, wp**2 * g / (w * (w**2 + g**2))), wp, g)
    xi = np.geomspace(1e12, 1e16, 9)
    ref = m.eval_imag(m.drude(wp, g), xi)
    np.testing.assert_allclose(m.eval_imag(table, xi), ref, rtol=1e-6)


def test_load_table_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# omega,Im eps\n1e14,2.0\n2e14,oops\n")
    with pytest.raises(ValueError, match=":3:"):
        m.load_table(p, 0.0, 0.0)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        m.drude(-1.0, 1.0)
    with pytest.raises(ValueError):
        m.PermittivityModel(m.Kind.TWO_OSCILLATOR, eps_static=0.5, eps_infinity=1.0)
    with pytest.raises(ValueError):
        m.tabulated([(2.0, 1.0), (1.0, 1.0)], 0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(
    wp=st.floats(1e13, 1e17),
    gamma=st.floats(1e11, 1e15),
    x1=st.floats(1e9, 1e18),
    x2=st.floats(1e9, 1e18),
)
def test_imaginary_axis_monotone_and_above_one(wp, gamma, x1, x2):
    model = m.drude(wp, gamma)
    lo, hi = sorted((x1, x2))
    e_lo, e_hi = m.eval_imag(model, lo), m.eval_imag(model, hi)
    assert e_hi >= 1.0
    assert e_lo >= e_hi
