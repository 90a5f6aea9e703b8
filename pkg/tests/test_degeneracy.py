import math
import time
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import lambertw

from freetransmission.degeneracy import (RHO_CAP, DegeneracyLaw, ExponentField, ModulusSpec, NoAdmissibleRadius,
                                         Phase, PhaseRule, beta_at, classify_phase, constant, constant_law,
                                         delta1_threshold, exponent_stack, gaussian_bump, modulus_condition_holds,
                                         sign_law, single_phase_law)
from freetransmission.grid import make_grid

SQRT = ModulusSpec("sqrt")


def nondegenerate_law(beta=1.0):
    return DegeneracyLaw((Phase(PhaseRule("nondegenerate_set"), constant(beta)),), constant(0.0), 0.0, beta)


def sqrt_threshold_closed_form(eps):
    """Root of ln(1/rho) sqrt(rho) = eps on the small-rho branch via Lambert W_{-1}."""
    s = -2.0 * lambertw(-eps / 2.0, -1).real
    return math.exp(-s)


def test_classify_sign_law_examples():
    law = sign_law(1.0, 2.0)
    assert classify_phase(law, 0.3, [0.0, 0.0]) == 1
    assert classify_phase(law, -0.3, [0.0, 0.0]) == 2
    assert classify_phase(law, 0.0, [1.0, 0.0]) == 0


def test_classify_nondegenerate_law():
    law = nondegenerate_law()
    assert classify_phase(law, 0.0, [0.0, 0.0]) == 0
    assert classify_phase(law, 0.0, [0.1, 0.0]) == 1
    assert classify_phase(law, 0.2, [0.0, 0.0]) == 1


def test_first_matching_rule_wins():
    law = DegeneracyLaw((Phase(PhaseRule("gradient_band", band=(0.0, 1.0)), constant(0.5)),
                         Phase(PhaseRule("positive_set"), constant(1.0))), constant(0.0), 0.0, 1.0)
    assert classify_phase(law, 1.0, [0.5, 0.0]) == 1
    assert classify_phase(law, 1.0, [2.0, 0.0]) == 2


def test_zero_set_tolerance():
    law = DegeneracyLaw((Phase(PhaseRule("zero_set", tolerance=1e-3), constant(1.0)),), constant(0.0), 0.0, 1.0)
    assert classify_phase(law, 5e-4, [0.0, 0.0]) == 1
    assert classify_phase(law, 2e-3, [0.0, 0.0]) == 0


def test_beta_at_examples():
    law = DegeneracyLaw((Phase(PhaseRule("positive_set"), constant(1.0)),), constant(0.0), 0.0, 1.0)
    assert beta_at(law, np.zeros(2), 2.0, [0.0, 0.0]) == 1.0
    bump = single_phase_law(gaussian_bump(2.0, 0.1))
    assert beta_at(bump, np.zeros(2), 0.0, [0.0, 0.0]) == 2.0
    got = beta_at(bump, np.array([0.5, 0.0]), 0.0, [0.0, 0.0])
    with mpmath.workdps(50):
        ref = float(2 * mpmath.exp(-mpmath.mpf("0.25") / (2 * mpmath.mpf("0.1") ** 2)))
    assert got == pytest.approx(ref, rel=1e-13)
    assert got == pytest.approx(7.45e-6, rel=1e-3)


def test_beta_at_rejects_malformed_table():
    table = np.full((5, 5), 3.0)
    law = DegeneracyLaw((), ExponentField("table", table=table), 0.0, 1.0)
    with pytest.raises(ValueError, match="malformed"):
        beta_at(law, np.zeros(2), 0.0, [0.0, 0.0])


def test_law_rejects_out_of_bounds_field():
    with pytest.raises(ValueError):
        single_phase_law(gaussian_bump(2.0, 0.1), beta_m=0.0, beta_M=1.0)
    with pytest.raises(ValueError):
        DegeneracyLaw((), constant(0.5), 1.0, 0.5)


def test_a3_warning_on_load():
    cfg = constant_law(2.0).to_config()
    with pytest.warns(UserWarning, match="beta_M"):
        law = DegeneracyLaw.from_config(cfg)
    assert law.a3_warning
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not DegeneracyLaw.from_config(constant_law(0.5).to_config()).a3_warning


def test_law_config_round_trip():
    law = DegeneracyLaw((Phase(PhaseRule("gradient_band", 0.0, (0.1, 2.0)), gaussian_bump(0.5, 0.3, (0.1, 0.0))),
                         Phase(PhaseRule("negative_set", 1e-4), constant(0.25))),
                        constant(0.1), 0.0, 0.5, ModulusSpec("log_power", p=3.0))
    back = DegeneracyLaw.from_config(law.to_config())
    assert back.to_config() == law.to_config()


def test_modulus_examples():
    assert modulus_condition_holds(ModulusSpec("log_power", p=2.0)).passed
    rep = modulus_condition_holds(ModulusSpec("log_power", p=1.0))
    assert not rep.passed and rep.final_value == pytest.approx(1.0)
    assert np.allclose(rep.tail, 1.0)
    rep = modulus_condition_holds(SQRT)
    assert rep.passed and rep.analytic_limit == 0.0
    assert modulus_condition_holds(ModulusSpec("zero")).passed


def test_modulus_condition_domain():
    with pytest.raises(ValueError):
        modulus_condition_holds(SQRT, t_min=0.5)


def test_table_modulus_matches_sqrt_on_nodes():
    t = np.logspace(-12, -1, 23)
    table = ModulusSpec("table", t_table=tuple(t), w_table=tuple(np.sqrt(t)))
    assert np.allclose(table(t), np.sqrt(t), rtol=1e-12)
    with pytest.raises(ValueError):
        ModulusSpec("table", t_table=(1e-3, 1e-2), w_table=(0.2, 0.1))


def test_delta1_reference_values():
    assert delta1_threshold(SQRT, 1e-2) == pytest.approx(4.7e-7, rel=0.05)
    assert delta1_threshold(SQRT, 1e-3) == pytest.approx(2.55e-9, rel=0.05)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3, 1e-5])
def test_delta1_matches_lambert_w(eps):
    # once rho is small the sup over k sits at k = 1, so the threshold solves s exp(-s/2) = eps
    assert delta1_threshold(SQRT, eps) == pytest.approx(sqrt_threshold_closed_form(eps), rel=2e-3)


def test_delta1_zero_modulus_is_cap():
    assert delta1_threshold(ModulusSpec("zero"), 1e-3) == RHO_CAP


def test_delta1_no_admissible_radius():
    with pytest.raises(NoAdmissibleRadius):
        delta1_threshold(ModulusSpec("log_power", p=1.0), 0.5)


def test_delta1_is_fast():
    t0 = time.perf_counter()
    delta1_threshold(SQRT, 1e-2)
    delta1_threshold(SQRT, 1e-3)
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.invariant
def test_classify_total_on_random_pairs():
    rng = np.random.default_rng(0)
    u = rng.normal(size=100_000)
    u[::7] = 0.0
    grad = rng.normal(size=(100_000, 2))
    grad[::11] = 0.0
    laws = [sign_law(1.0, 2.0), nondegenerate_law(),
            DegeneracyLaw((Phase(PhaseRule("gradient_band", band=(0.5, 1.5)), constant(0.5)),
                           Phase(PhaseRule("zero_set", 1e-2), constant(0.2))), constant(0.0), 0.0, 0.5)]
    for law in laws:
        idx = classify_phase(law, u, grad)
        assert idx.shape == u.shape
        assert np.all((idx >= 0) & (idx < law.n_phases))
        # the index is the first matching rule, or 0 when none match
        hits = np.stack([ph.rule.contains(u, grad) for ph in law.phases])
        first = np.where(hits.any(axis=0), hits.argmax(axis=0) + 1, 0)
        assert np.array_equal(idx, first)


law_strategy = st.one_of(
    st.builds(lambda a, w: single_phase_law(gaussian_bump(a, w)), st.floats(0, 3), st.floats(0.05, 2)),
    st.builds(lambda p, n, z: sign_law(p, n, z), st.floats(0, 2), st.floats(0, 2), st.floats(0, 2)),
    st.builds(lambda b: nondegenerate_law(b), st.floats(0, 2)),
)


@pytest.mark.invariant
@given(law=law_strategy, seed=st.integers(0, 2**16))
def test_beta_within_bounds_at_every_node(law, seed):
    g = make_grid(2, 17)
    rng = np.random.default_rng(seed)
    u = rng.normal(size=g.shape)
    grad = rng.normal(size=g.shape + (2,))
    vals = beta_at(law, g.coords(), u, grad)
    assert np.all(vals >= law.beta_m - 1e-12) and np.all(vals <= law.beta_M + 1e-12)
    assert exponent_stack(law, g.coords()).shape == (law.n_phases,) + g.shape


@pytest.mark.invariant
@given(e1=st.floats(1e-6, 0.3), e2=st.floats(1e-6, 0.3))
def test_delta1_monotone(e1, e2):
    e1, e2 = sorted((e1, e2))
    assert delta1_threshold(SQRT, e1) <= delta1_threshold(SQRT, e2)


@pytest.mark.invariant
@given(eps=st.floats(1e-6, 0.3), p=st.floats(1.5, 4.0), kind=st.sampled_from(["sqrt", "log_power"]))
def test_admissible_rho_controls_sequence(eps, p, kind):
    omega = ModulusSpec(kind, p=p)
    try:
        rho = delta1_threshold(omega, eps)
    except NoAdmissibleRadius:
        return
    k = np.arange(1, 1001, dtype=float)
    seq = k * omega.of_log(-k * math.log(rho))
    # k omega(rho^k) <= k ln(1/rho) omega(rho^k) <= eps since rho < 1/e
    assert np.all(seq <= eps * (1 + 1e-9))
