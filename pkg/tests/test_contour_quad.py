import math

import numpy as np
import pytest

from qwhit import contour_quad as cq
from qwhit.errors import BudgetExceeded, NonDecayingTail, NoSeparatingPath
from qwhit.qdilog import ModularParameter, log_phi, phi


def gauss(t):
    return np.exp(-math.pi * t * t)


def test_gaussian_on_real_line():
    r = cq.integrate(gauss, cq.ContourPath.line(0.0), 1e-13)
    assert abs(r.value - 1) < 1e-12
    assert r.evaluations >= 1 and np.isfinite(r.abs_error)


def test_gaussian_shifted_line():
    r = cq.integrate(gauss, cq.ContourPath.line(0.3), 1e-13)
    assert abs(r.value - 1) < 1e-12


def test_path_with_detour():
    path = cq.ContourPath((-1 + 0j, -1 - 0.5j, 1 - 0.5j, 1 + 0j), 0.0, 0.0)
    assert abs(cq.integrate(gauss, path, 1e-12).value - 1) < 1e-11


def test_path_validation():
    with pytest.raises(ValueError):
        cq.ContourPath((), 0.0, 0.1)
    with pytest.raises(ValueError):
        cq.ContourPath((1 + 0j, 1 + 0j), 0.0, 0.0)
    with pytest.raises(ValueError):
        cq.ContourPath((0.5j,), 0.0, 0.0)


@pytest.mark.parametrize("w", [0.2 + 0.5j, -0.3 + 0.2j])
def test_fourier_kernel_integral(w):
    P = ModularParameter(1.0)
    c = P.c_b
    f = lambda t: np.exp(2j * math.pi * t * (w - c) - log_phi(t - c, P, 1e-12))
    r = cq.integrate(f, cq.ContourPath.line(min(0.25 * P.im_cb, 0.5 * w.imag)), 1e-11)
    ref = P.zeta * phi(w, P, 1e-12)
    assert abs(r.value - ref) < 1e-9 * abs(ref)


def test_contour_shift_invariance():
    # entire in the strip |Im t| < 1/2 and decaying on every line in it
    f = lambda t: 1 / np.cosh(math.pi * t) * np.exp(0.7j * t)
    vals = [cq.integrate(f, cq.ContourPath.line(y), 1e-12) for y in (-0.3, 0.0, 0.2)]
    for v in vals[1:]:
        assert abs(v.value - vals[0].value) <= v.abs_error + vals[0].abs_error + 1e-13
    # closed form: int sech(pi t) e^{ikt} dt = sech(k/2)
    assert abs(vals[1].value - 1 / math.cosh(0.35)) < 1e-11


def test_error_estimates_are_honest():
    rng = np.random.default_rng(5)
    hits = total = 0
    for a in rng.uniform(0.3, 3.0, 30):
        k = rng.uniform(-2, 2)
        f = lambda t: np.exp(-a * t * t + 1j * k * t)
        truth = math.sqrt(math.pi / a) * math.exp(-k * k / (4 * a))
        r = cq.integrate(f, cq.ContourPath.line(0.0), 1e-8)
        total += 1
        hits += abs(r.value - truth) <= 5 * r.abs_error + 1e-15
    assert hits >= 0.95 * total


def test_non_decaying_tail():
    with pytest.raises(NonDecayingTail):
        cq.integrate(lambda t: np.exp(1j * t), cq.ContourPath.line(0.0), 1e-8)


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        cq.integrate(lambda t: np.exp(-t * t) * np.cos(40 * t), cq.ContourPath.line(0.0), 1e-12, budget=50)


def test_nested_gaussian():
    r = cq.integrate_nested(lambda s, t: np.exp(-math.pi * (s * s + t * t)), [cq.ContourPath.line()] * 2, 1e-10)
    assert abs(r.value - 1) < 1e-9


def test_nested_product_consistency():
    f1 = lambda s: np.exp(-s * s + 0.3j * s)
    f2 = lambda t: np.exp(-2 * (t - 0.1) ** 2)
    one = cq.integrate(f1, cq.ContourPath.line(), 1e-12).value * cq.integrate(f2, cq.ContourPath.line(0.1), 1e-12).value
    both = cq.integrate_nested(lambda s, t: f1(s) * f2(t), [cq.ContourPath.line(), cq.ContourPath.line(0.1)], 1e-10)
    assert abs(both.value - one) < 1e-9 * abs(one)


def test_nested_rejects_high_dimension():
    with pytest.raises(ValueError):
        cq.integrate_nested(lambda *a: 0, [cq.ContourPath.line()] * 4)


def test_separating_contour_already_separated():
    path = cq.separating_contour([0.5 + 0.1j], [-0.5 - 0.1j], 0.0)
    assert path.is_line() and path.left_offset == 0.0


def test_separating_contour_one_sided():
    P = ModularParameter(1.0)
    path = cq.separating_contour([P.c_b], [], 0.5 * P.im_cb)
    assert path.is_line() and path.left_offset == pytest.approx(0.5 * P.im_cb)


def test_separating_contour_detour():
    path = cq.separating_contour([0.2 - 0.2j], [], 0.0)
    assert not path.is_line()
    # the path dips below the anchor and returns to the default line
    assert min(v.imag for v in path.vertices) < -0.2
    assert path.left_offset == path.right_offset == 0.0
    assert abs(cq.integrate(gauss, path, 1e-12).value - 1) < 1e-11


def test_no_separating_path():
    with pytest.raises(NoSeparatingPath):
        cq.separating_contour([0.5 - 0.3j], [0.5 + 0.3j], 0.0)
