import numpy as np
import pytest

from curveflow.errors import SpeedLawDomainError
from curveflow.speed_law import SpeedLaw, check_hypotheses, law_name, parse_law, power_law

BUILTIN_PS = (1.0 / 3.0, 1.0, 2.0, 3.0)


def test_power_law_values():
    assert power_law(1).g(5.0) == 1.0
    assert power_law(1.0 / 3.0).g(8.0) == pytest.approx(0.25, rel=1e-14)
    assert power_law(2).tail_integral(1.0) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_power_law_rejects_nonpositive_exponent():
    for p in (0.0, -1.0):
        with pytest.raises(ValueError):
            power_law(p)


def test_phi_closed_forms():
    law = power_law(1)
    assert law.phi(2.0) == pytest.approx(2.0)
    assert law.phi_prime(2.0) == pytest.approx(1.0)
    assert law.phi_double_prime(2.0) == pytest.approx(0.0, abs=1e-14)
    law3 = power_law(3)
    assert law3.phi(2.0) == pytest.approx(8.0)
    assert law3.phi_prime(2.0) == pytest.approx(12.0)
    assert law3.phi_double_prime(2.0) == pytest.approx(12.0)


def test_phi_rejects_nonpositive_curvature():
    law = power_law(2)
    for bad in (0.0, -1.0):
        with pytest.raises(SpeedLawDomainError):
            law.phi(bad)
    with pytest.raises(SpeedLawDomainError):
        law.phi(np.array([1.0, -2.0]))


@pytest.mark.parametrize("p", BUILTIN_PS)
def test_phi_derivatives_match_finite_differences(p):
    # centered differences of phi as the independent oracle
    law = power_law(p)
    rng = np.random.default_rng(7)
    ks = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), size=100))
    for k in ks:
        h1 = 1e-6 * k
        fd1 = (law.phi(k + h1) - law.phi(k - h1)) / (2.0 * h1)
        assert fd1 == pytest.approx(law.phi_prime(k), rel=1e-6)
        h2 = 1e-4 * k
        fd2 = (law.phi(k + h2) - 2.0 * law.phi(k) + law.phi(k - h2)) / (h2 * h2)
        scale = max(abs(law.phi_double_prime(k)), law.phi(k) / (k * k))
        assert abs(fd2 - law.phi_double_prime(k)) <= 1e-5 * scale


@pytest.mark.parametrize("p", BUILTIN_PS)
def test_tail_integral_against_quadrature(p):
    closed = power_law(p)
    free = SpeedLaw(g=closed.g, g_prime=closed.g_prime,
                    g_double_prime=closed.g_double_prime,
                    label=closed.label, tail_integral=None)
    for k in (0.5, 1.0, 3.0, 20.0):
        assert free.tail_mass(k) == pytest.approx(closed.tail_mass(k), rel=1e-8)


def test_gx2_convexity_identity_matches_second_differences():
    # (G x^2)'' computed through Phi must agree with direct differencing
    for p in BUILTIN_PS:
        law = power_law(p)
        xs = np.geomspace(0.2, 50.0, 17)
        via_phi = law.phi_double_prime(xs) * xs + 2.0 * law.phi_prime(xs)
        h = 1e-4 * xs
        gx2 = lambda x: law.g(x) * x * x
        fd = (gx2(xs + h) - 2.0 * gx2(xs) + gx2(xs - h)) / (h * h)
        assert np.allclose(via_phi, fd, rtol=1e-5, atol=1e-10)


def test_check_hypotheses_power_laws():
    rep1 = check_hypotheses(power_law(1), 0.1, 100.0, 64)
    assert rep1.all_ok and rep1.witness_c0 == pytest.approx(0.0, abs=1e-12)
    rep3 = check_hypotheses(power_law(3), 0.1, 100.0, 64)
    assert rep3.all_ok and rep3.witness_c0 == pytest.approx(2.0, rel=1e-12)


def test_check_hypotheses_flags_decreasing_g():
    law = SpeedLaw(g=lambda x: np.exp(-x), g_prime=lambda x: -np.exp(-x),
                   g_double_prime=lambda x: np.exp(-x), label="exp(-x)")
    rep = check_hypotheses(law, 1.0, 10.0, 32)
    assert not rep.h1_ok
    assert rep.worst_violation > 0.0
    assert rep.witness_x is not None


def test_check_hypotheses_affine_law_fails_h1():
    rep = check_hypotheses(power_law(1.0 / 3.0), 0.1, 100.0, 64)
    assert not rep.h1_ok
    assert rep.h2_convexity_ok  # x^(4/3) is convex


def test_check_hypotheses_validates_arguments():
    with pytest.raises(ValueError):
        check_hypotheses(power_law(1), -1.0, 10.0)
    with pytest.raises(ValueError):
        check_hypotheses(power_law(1), 1.0, 0.5)
    with pytest.raises(ValueError):
        check_hypotheses(power_law(1), 0.1, 10.0, n_probes=8)


def test_check_hypotheses_nonfinite_probe_carries_abscissa():
    law = SpeedLaw(g=lambda x: np.sqrt(50.0 - x), g_prime=lambda x: x * 0.0,
                   g_double_prime=lambda x: x * 0.0, label="broken")
    with np.errstate(invalid="ignore"):
        with pytest.raises(SpeedLawDomainError) as err:
            check_hypotheses(law, 1.0, 100.0, 32)
    assert err.value.abscissa is not None and err.value.abscissa > 50.0


def test_parse_law_round_trip():
    law = parse_law("power:0.5")
    assert law.g(4.0) == pytest.approx(0.5)
    assert law_name(law) == "power:0.5"
    with pytest.raises(ValueError):
        parse_law("mystery:1")
