import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwhit.errors import NonDecayingTail, PoleProximity, RankUnsupported
from qwhit.qdilog import ModularParameter, c_function
from qwhit.whittaker import (
    WhittakerOptions,
    asymptotic_estimate,
    mb_kernel,
    mb_normalization,
    mfrak_recursion,
    mfrak_symmetrized,
    rho,
    sklyanin_m,
    sklyanin_mfrak,
    whittaker,
    whittaker_mb_normalized,
)

# Psi^(2) at b=1, lam=(0.3,-0.2), x=(0.1,0.5): Givental at eps and eps/2 and Mellin-Barnes agree to 5e-15
PSI2_REF = 0.046045602450397426 - 0.12484517113631181j
# L_1(0.1, (0.3,-0.2); 0.4) at b=1
L1_REF = 0.12764312295943697 - 0.3179351225562916j

P1 = ModularParameter(1.0)


def rel(a, b):
    return abs(a - b) / abs(b)


def test_rho():
    assert rho(1, [5.0, 2.0]) == 0
    assert rho(2, [3, 1]) == 1
    assert rho(3, [1, 0, -1]) == 2
    with pytest.raises(ValueError):
        rho(3, [1, 2])


def test_measure_values():
    P = ModularParameter(0.8)
    assert sklyanin_m([0.4], P) == 1
    d = 0.7 - 0.1
    assert sklyanin_m([0.7, 0.1], P) == pytest.approx(2 * math.sinh(math.pi * 0.8 * d) * math.sinh(math.pi * d / 0.8))
    assert sklyanin_m([0.7, 0.7], P) == 0
    # against the c-function product form
    lam = [0.3, -0.4]
    via_c = 0.5 / (c_function(lam[0] - lam[1], P) * c_function(lam[1] - lam[0], P))
    assert rel(sklyanin_m(lam, P), via_c) < 1e-10


@pytest.mark.parametrize("b", (0.6, 1.0, 1.3))
def test_mfrak_identities(b):
    P = ModularParameter(b)
    rng = np.random.default_rng(7)
    for n in (2, 3):
        for _ in range(3):
            lam = rng.uniform(-1, 1, n)
            assert rel(mfrak_symmetrized(lam, P), sklyanin_m(lam, P)) < 1e-9
            assert rel(mfrak_recursion(lam, P), sklyanin_mfrak(lam, P)) < 1e-9
    assert sklyanin_mfrak([0.3], P) == 1


def test_rank_one_is_plane_wave():
    assert whittaker([0.3], [0.7], P1) == pytest.approx(cmath.exp(2j * math.pi * 0.21))
    assert whittaker_mb_normalized([0.3], [0.7], P1) == whittaker([0.3], [0.7], P1)


def test_rank_two_regression():
    lam, x = (0.3, -0.2), (0.1, 0.5)
    assert rel(whittaker(lam, x, P1), PSI2_REF) < 1e-9
    half = WhittakerOptions(epsilon=0.25 * P1.im_cb)
    assert rel(whittaker(lam, x, P1, half), PSI2_REF) < 1e-9
    mb = WhittakerOptions(method="mellin_barnes")
    assert rel(whittaker(lam, x, P1, mb), PSI2_REF) < 1e-9
    assert rel(whittaker((-0.2, 0.3), x, P1), PSI2_REF) < 1e-8


def test_mb_normalization_roundtrip():
    lam, x = (0.3, -0.2), (0.1, 0.5)
    psi = whittaker_mb_normalized(lam, x, P1)
    assert rel(psi, cmath.exp(-0.5j * math.pi * (0.09 + 0.04)) * PSI2_REF) < 1e-9
    assert rel(psi / mb_normalization(lam), whittaker(lam, x, P1)) < 1e-14


def test_mb_kernel():
    mu, lam, x2 = 0.1, (0.3, -0.2), 0.4
    closed = (
        cmath.exp(1j * math.pi * (2 * x2 - mu) * (sum(lam) - mu))
        * c_function(lam[0] - mu, P1)
        * c_function(lam[1] - mu, P1)
        / P1.zeta
    )
    val = mb_kernel([mu], lam, x2, P1)
    assert rel(val, closed) < 1e-12
    assert rel(val, L1_REF) < 1e-12
    # x_next enters through a unit phase only
    assert abs(mb_kernel([mu], lam, -1.3, P1)) == pytest.approx(abs(val), rel=1e-12)
    with pytest.raises(PoleProximity):
        mb_kernel([0.3], lam, x2, P1)
    with pytest.raises(ValueError):
        mb_kernel([0.1, 0.2], lam, x2, P1)


def test_rank_three_routes():
    lam, x = (0.3, -0.1, -0.35), (0.2, 0.0, -0.3)
    a = whittaker(lam, x, P1)
    c = whittaker(lam, x, P1, WhittakerOptions(method="mellin_barnes"))
    assert isinstance(a, complex)
    assert rel(a, c) < 1e-3
    assert rel(whittaker((-0.1, -0.35, 0.3), x, P1), a) < 1e-6


def test_options_validation():
    with pytest.raises(ValueError):
        WhittakerOptions(method="steepest")
    with pytest.raises(ValueError):
        whittaker((0.1, 0.2), (0, 0), P1, WhittakerOptions(epsilon=2 * P1.im_cb))
    with pytest.raises(RankUnsupported):
        whittaker(np.zeros(4), np.zeros(4), P1)
    with pytest.raises(ValueError):
        whittaker((0.1, 0.2), (0.0,), P1)


def test_modular_duality():
    P = ModularParameter(0.8)
    lam, x = (0.25, -0.4), (0.3, -0.2)
    assert rel(whittaker(lam, x, P), whittaker(lam, x, P.dual())) < 1e-8


def test_complex_coordinates():
    lam = (0.3, -0.2)
    mb = WhittakerOptions(method="mellin_barnes")
    x = (0.1, 0.5 - 0.5j)
    assert rel(whittaker(lam, x, P1), whittaker(lam, x, P1, mb)) < 1e-9
    # a full -ib shift is reachable only through the Givental contours
    deep = (0.1, 0.5 - 1j)
    assert np.isfinite(whittaker(lam, deep, P1))
    with pytest.raises(NonDecayingTail):
        whittaker(lam, deep, P1, mb)


def test_asymptotic_estimate():
    assert asymptotic_estimate([0.3], [0.5], P1) == pytest.approx(cmath.exp(2j * math.pi * 0.15))
    with pytest.raises(PoleProximity):
        asymptotic_estimate([0.3, 0.3], [1.0, -1.0], P1)
    lam = (0.3, -0.2)
    errs = []
    # past R ~ b + 1/b the gap is already at round-off
    for R in (0.25 * P1.s, 0.5 * P1.s, 0.75 * P1.s):
        est = asymptotic_estimate(lam, (R, -R), P1)
        errs.append(rel(whittaker(lam, (R, -R), P1), est))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6


def test_outside_chamber_decay():
    lam = (0.3, -0.2)
    mags = [abs(whittaker(lam, (-k * P1.s, k * P1.s), P1)) for k in (2, 3, 4)]
    assert mags[0] > mags[1] > mags[2]


@settings(max_examples=10, deadline=None)
@given(
    l1=st.floats(-0.8, 0.8),
    l2=st.floats(-0.8, 0.8),
    x1=st.floats(-1, 1),
    x2=st.floats(-1, 1),
)
def test_property_lambda_symmetry(l1, l2, x1, x2):
    a = whittaker((l1, l2), (x1, x2), P1)
    c = whittaker((l2, l1), (x1, x2), P1)
    assert abs(a - c) <= 1e-8 * max(abs(a), 1e-3)


def test_permutations_rank_three_measure():
    P = ModularParameter(1.2)
    lam = np.array([0.4, -0.1, 0.25])
    ref = sklyanin_m(lam, P)
    for p in itertools.permutations(range(3)):
        assert sklyanin_m(lam[list(p)], P) == pytest.approx(ref, rel=1e-12)
