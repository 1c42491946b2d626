"""Non-compact quantum dilogarithm, its c-function companion and modular constants.

Inside the strip ``|Im z| < Im c_b`` the logarithm of phi is computed from its
defining Fourier-type integral over the real line with a small semicircle above
the origin.  Elsewhere the difference equations in steps of ``i b`` and
``i/b`` carry ``z`` back into a narrower strip first.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._rules import WG, WK, XK
from .errors import PoleProximity, QuadratureFailure

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModularParameter:
    b: float

    def __post_init__(self):
        b = float(self.b)
        if not (b > 0.0 and math.isfinite(b)):
            raise ValueError(f"b must be a positive real number, got {self.b!r}")
        object.__setattr__(self, "b", b)

    @property
    def b_inv(self) -> float:
        return 1.0 / self.b

    @property
    def s(self) -> float:
        """b + 1/b, i.e. 2 Im c_b."""
        return self.b + 1.0 / self.b

    @property
    def c_b(self) -> complex:
        return 0.5j * self.s

    @property
    def delta_b(self) -> complex:
        return 0.5j * (self.b - 1.0 / self.b)

    @property
    def q(self) -> complex:
        return cmath.exp(1j * math.pi * self.b**2)

    @property
    def zeta(self) -> complex:
        # 1 - 4 c_b^2 = 3 + b^2 + b^-2
        return cmath.exp(1j * math.pi * (3.0 + self.b**2 + self.b**-2) / 12.0)

    @property
    def zeta_inv(self) -> complex:
        # zeta^-2 exp(-pi i c_b^2) collapses to exp(pi i (b^2 + b^-2) / 12)
        return cmath.exp(1j * math.pi * (self.b**2 + self.b**-2) / 12.0)

    @property
    def im_cb(self) -> float:
        return 0.5 * self.s

    def dual(self) -> "ModularParameter":
        return ModularParameter(1.0 / self.b)

    def default_delta_pole(self) -> float:
        return 1e-6 * self.s


@dataclass(frozen=True)
class PoleLatticePoint:
    m: int
    n: int
    kind: str
    location: complex

    @classmethod
    def make(cls, m, n, kind, P):
        if kind not in ("pole", "zero"):
            raise ValueError(f"kind must be 'pole' or 'zero', got {kind!r}")
        if m < 0 or n < 0:
            raise ValueError("lattice indices must be nonnegative")
        w = P.c_b + 1j * P.b * m + 1j * n / P.b
        return cls(m, n, kind, w if kind == "pole" else -w)


def lattice_points(P, kind="pole", height=None):
    """All lattice points with |Im| up to ``height`` (default 4 Im c_b)."""
    height = 4.0 * P.im_cb if height is None else height
    out = []
    m = 0
    while P.im_cb + P.b * m <= height:
        n = 0
        while P.im_cb + P.b * m + n / P.b <= height:
            out.append(PoleLatticePoint.make(m, n, kind, P))
            n += 1
        m += 1
    return out


def _distance_to_lattice(y, P):
    """Distance from i*y (y >= Im c_b - small) to {i(Im c_b + b m + n/b)}."""
    y = y - P.im_cb
    if y < 0:
        return -y
    best = math.inf
    b, bi = P.b, 1.0 / P.b
    m = 0
    while b * m <= y + bi:
        rem = y - b * m
        n = max(0, round(rem / bi))
        for nn in (n - 1, n, n + 1):
            if nn >= 0:
                best = min(best, abs(rem - nn * bi))
        m += 1
    return best


def _check_poles(z, P, delta, sign=1.0):
    # sign=+1: poles of phi at +(c_b + ...); sign=-1: zeros at -(c_b + ...)
    zr = np.real(z)
    zi = np.imag(z) * sign
    near = (np.abs(zr) < delta) & (zi > P.im_cb - delta)
    if not np.any(near):
        return
    for x, y in zip(np.atleast_1d(zr)[np.atleast_1d(near)], np.atleast_1d(zi)[np.atleast_1d(near)]):
        d = math.hypot(x, _distance_to_lattice(float(y), P))
        if d < delta:
            what = "pole" if sign > 0 else "zero"
            raise PoleProximity(f"z={complex(x, sign * y)} is within {delta:g} of a {what} of phi (b={P.b})")


# ---------------------------------------------------------------------------
# strip kernel
#
# log phi(z) = arc + int_r^oo h(t) dt with
#   arc = -i int_0^pi exp(-2izt) / (4 sinh(bt) sinh(t/b)) dtheta,  t = r e^{i theta}
#   h(t) = (e^{-2izt} - e^{2izt}) e^{-st} / (t (1 - e^{-2bt}) (1 - e^{-2t/b}))
#
# For |Re z| >= ROTATE_X the two exponentials oscillate fast on the real line, so
# each is integrated along its own ray r + rho e^{-+i THETA} where it decays; the
# denominator has no zeros with Re t > 0, so the rotation crosses nothing.

ROTATE_X = 2.0
THETA = math.pi / 3.0


def _strip_params(z, b, tol):
    s = b + 1.0 / b
    az = abs(z)
    r = min(0.5, s / 8.0)
    if az * r > 1.5:
        r = 1.5 / az
    margin = s - 2.0 * abs(z.imag)
    tail = (math.log(1.0 / (tol * 1e-3)) + 2.0) / margin
    T = max(r + 1.0, r + tail)
    H = min(3.0 * min(b, 1.0 / b), 2.5 / (abs(z.real) + 1e-300))
    return s, r, T, H


@_accel.njit
def _ray_params(z, s, r, tol, theta):
    """Length and panel cap along a rotated ray for the strip kernel."""
    rate = 2.0 * abs(z.real) * math.sin(theta) + (s - 2.0 * abs(z.imag)) * math.cos(theta)
    L = (math.log(1.0 / (tol * 1e-3)) + 2.0 + 2.0 * abs(z.imag) * r) / rate
    return L, 6.0 / abs(z)


@_accel.njit
def _strip_kernel_numba(zs, b, tol, xk, wk, wg, rotate_x, theta):
    n = zs.shape[0]
    vals = np.empty(n, dtype=np.complex128)
    errs = np.empty(n, dtype=np.float64)
    s = b + 1.0 / b
    bi = 1.0 / b
    for i in range(n):
        z = zs[i]
        az = abs(z)
        r = min(0.5, s / 8.0)
        if az * r > 1.5:
            r = 1.5 / az
        margin = s - 2.0 * abs(z.imag)
        tail = (math.log(1.0 / (tol * 1e-3)) + 2.0) / margin
        T = max(r + 1.0, r + tail)
        H = min(3.0 * min(b, bi), 2.5 / (abs(z.real) + 1e-300))
        acc = 0.0 + 0.0j
        err = 0.0
        # arc, four panels in theta
        for quarter in range(4):
            lo = 0.25 * math.pi * quarter
            hw = 0.125 * math.pi
            sk = 0.0 + 0.0j
            sg = 0.0 + 0.0j
            for k in range(21):
                th = lo + hw * (xk[k] + 1.0)
                t = r * complex(math.cos(th), math.sin(th))
                g = np.exp(-2j * z * t) / (4.0 * np.sinh(b * t) * np.sinh(t * bi))
                sk += wk[k] * g
                sg += wg[k] * g
            acc += -1j * hw * sk
            err += hw * abs(sk - sg)
        if abs(z.real) >= rotate_x:
            sgn = 1.0 if z.real > 0 else -1.0
            L, Hr = _ray_params(z, s, r, tol, theta)
            for part in range(2):
                # e^{-2izt} decays along e^{-i sgn theta}, e^{+2izt} along e^{+i sgn theta}
                sign = -1.0 if part == 0 else 1.0
                d = complex(math.cos(theta), sign * sgn * math.sin(theta))
                a = 0.0
                while a < L:
                    step = min(0.5 * (r + a), Hr)
                    hw = 0.5 * step
                    c = a + hw
                    sk = 0.0 + 0.0j
                    sg = 0.0 + 0.0j
                    for k in range(21):
                        t = r + d * (c + hw * xk[k])
                        h = np.exp(sign * 2j * z * t - s * t) / (t * (1.0 - np.exp(-2.0 * b * t)) * (1.0 - np.exp(-2.0 * t * bi)))
                        sk += wk[k] * h
                        sg += wg[k] * h
                    acc += -sign * d * hw * sk
                    err += hw * abs(sk - sg)
                    a += step
        else:
            # real half-line with geometric grading near r
            a = r
            while a < T:
                step = min(a, H)
                c = a + 0.5 * step
                hw = 0.5 * step
                sk = 0.0 + 0.0j
                sg = 0.0 + 0.0j
                for k in range(21):
                    t = c + hw * xk[k]
                    e1 = np.exp(-2j * z * t - s * t)
                    e2 = np.exp(2j * z * t - s * t)
                    h = (e1 - e2) / (t * (1.0 - math.exp(-2.0 * b * t)) * (1.0 - math.exp(-2.0 * t * bi)))
                    sk += wk[k] * h
                    sg += wg[k] * h
                acc += hw * sk
                err += hw * abs(sk - sg)
                a += step
        vals[i] = acc
        errs[i] = err
    return vals, errs


def _strip_kernel_numpy(zs, b, tol):
    s = b + 1.0 / b
    bi = 1.0 / b
    n = zs.shape[0]
    vals = np.empty(n, dtype=np.complex128)
    errs = np.empty(n, dtype=np.float64)
    # arc: identical theta nodes for every z, only the radius differs
    th = np.concatenate([0.25 * np.pi * j + 0.125 * np.pi * (XK + 1.0) for j in range(4)])
    wk_arc = 0.125 * np.pi * np.tile(WK, 4)
    wg_arc = 0.125 * np.pi * np.tile(WG, 4)
    # ragged panel list: start, half width, owner, ray start, direction, exponent sign
    edges_lo, edges_hw, owner, starts, dirs, signs, radii = [], [], [], [], [], [], np.empty(n)
    for i, z in enumerate(zs):
        z = complex(z)
        _, r, T, H = _strip_params(z, b, tol)
        radii[i] = r
        if abs(z.real) >= ROTATE_X:
            sgn = 1.0 if z.real > 0 else -1.0
            L, Hr = _ray_params(z, s, r, tol, THETA)
            lo = []
            a = 0.0
            while a < L:
                lo.append(a)
                a += min(0.5 * (r + a), Hr)
            lo = np.array(lo)
            hw_ = 0.5 * (np.append(lo[1:], a) - lo)
            for sign in (-1.0, 1.0):
                edges_lo.append(lo)
                edges_hw.append(hw_)
                owner.append(np.full(lo.size, i))
                starts.append(np.full(lo.size, r))
                dirs.append(np.full(lo.size, cmath.exp(1j * sign * sgn * THETA)))
                signs.append(np.full(lo.size, sign))
            continue
        lo = []
        a = r
        while a < T:
            lo.append(a)
            a += min(a, H)
        lo = np.array(lo)
        hi = np.append(lo[1:], a)
        edges_lo.append(lo)
        edges_hw.append(0.5 * (hi - lo))
        owner.append(np.full(lo.size, i))
        starts.append(np.zeros(lo.size))
        dirs.append(np.ones(lo.size, dtype=complex))
        signs.append(np.zeros(lo.size))
    t = radii[:, None] * np.exp(1j * th)[None, :]
    g = np.exp(-2j * zs[:, None] * t) / (4.0 * np.sinh(b * t) * np.sinh(t * bi))
    vals[:] = -1j * (g @ wk_arc)
    errs[:] = np.abs(g @ (wk_arc - wg_arc))

    lo = np.concatenate(edges_lo)
    hw = np.concatenate(edges_hw)
    own = np.concatenate(owner)
    t0 = np.concatenate(starts)
    dd = np.concatenate(dirs)
    sg_ = np.concatenate(signs)
    # chunk the ragged panel list to bound memory
    chunk = 20000
    for start in range(0, lo.size, chunk):
        sl = slice(start, start + chunk)
        rho = (lo[sl] + hw[sl])[:, None] + hw[sl][:, None] * XK[None, :]
        tt = t0[sl][:, None] + dd[sl][:, None] * rho
        zz = zs[own[sl]][:, None]
        den = tt * (-np.expm1(-2.0 * b * tt)) * (-np.expm1(-2.0 * tt * bi))
        sign = sg_[sl][:, None]
        # sign 0 marks the real half-line, where both exponentials share the panel
        h = np.where(
            sign == 0,
            (np.exp(-2j * zz * tt - s * tt) - np.exp(2j * zz * tt - s * tt)) / den,
            np.exp(sign * 2j * zz * tt - s * tt) / den,
        )
        h = h * np.where(sign == 0, 1.0, -sign * dd[sl][:, None])
        sk = hw[sl] * (h @ WK)
        sg = hw[sl] * (h @ WG)
        vals += np.bincount(own[sl], weights=sk.real, minlength=n) + 1j * np.bincount(own[sl], weights=sk.imag, minlength=n)
        errs += np.bincount(own[sl], weights=np.abs(sk - sg), minlength=n)
    return vals, errs


def log_phi_strip(z, b, tol=1e-9, use_numba=None):
    """Raw strip evaluation; caller guarantees |Im z| < (b + 1/b)/2."""
    zs = np.ascontiguousarray(np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel())
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    if use_numba:
        return _strip_kernel_numba(zs, float(b), float(tol), XK, WK, WG, ROTATE_X, THETA)
    return _strip_kernel_numpy(zs, float(b), float(tol))


# ---------------------------------------------------------------------------
# ladder


def _log1p_exp(logx):
    """log(1 + e^{logx}) without overflow; only the exponential of the result is meaningful."""
    out = np.empty_like(logx)
    big = logx.real > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~big] = np.log1p(np.exp(logx[~big]))
        out[big] = logx[big] + np.log1p(np.exp(-logx[big]))
    return out


def _ladder(z, P):
    """Move z into |Im z| <= min(b,1/b)/2; return shifted z and accumulated log factor."""
    z = z.copy()
    acc = np.zeros_like(z)
    big, small = max(P.b, 1.0 / P.b), min(P.b, 1.0 / P.b)
    for beta in (big, small):
        while True:
            up = z.imag < -0.5 * beta - 1e-12
            down = z.imag > 0.5 * beta + 1e-12
            if not (np.any(up) or np.any(down)):
                break
            # phi(w) = (1 + q_beta e^{2 pi beta w}) phi(w + i beta)
            if np.any(up):
                w = z[up]
                acc[up] += _log1p_exp(TWO_PI * beta * w + 1j * math.pi * beta * beta)
                z[up] = w + 1j * beta
            # phi(w) = phi(w - i beta) / (1 + q_beta^-1 e^{2 pi beta w})
            if np.any(down):
                w = z[down]
                acc[down] -= _log1p_exp(TWO_PI * beta * w - 1j * math.pi * beta * beta)
                z[down] = w - 1j * beta
    return z, acc


def log_phi(z, P, tol=1e-9, delta_pole=None, return_error=False):
    """A logarithm of phi_b(z); the branch is arbitrary but exp() of it is phi_b(z)."""
    arr = np.asarray(z, dtype=np.complex128)
    shape = arr.shape
    flat = arr.ravel()
    delta = P.default_delta_pole() if delta_pole is None else delta_pole
    _check_poles(flat, P, delta)
    if flat.size == 0:
        out = flat.copy()
        return (out.reshape(shape), np.zeros(shape)) if return_error else out.reshape(shape)
    shifted, acc = _ladder(flat, P)
    # evaluate each distinct shifted point once
    uniq, inv = np.unique(shifted, return_inverse=True)
    vals, errs = log_phi_strip(uniq, P.b, tol)
    # far from the origin the oscillatory strip integral loses digits to rounding,
    # roughly in proportion to |z|^2 (the size of the Gaussian asymptote)
    floor = 64 * np.finfo(float).eps * (1.0 + np.abs(vals) + np.abs(uniq) ** 2)
    bad = ~np.isfinite(vals) | (errs > np.maximum(tol, floor))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureFailure(f"strip quadrature for phi at {uniq[i]} has error {errs[i]:.3g} > tol={tol:g}")
    out = acc + vals[inv.ravel()]
    if return_error:
        return out.reshape(shape), errs[inv.ravel()].reshape(shape)
    return out.reshape(shape) if shape else complex(out[0])


def phi(z, P, tol=1e-9, delta_pole=None):
    lp = log_phi(z, P, tol, delta_pole)
    out = np.exp(lp)
    return complex(out) if np.ndim(out) == 0 else out


def log_c_function(z, P, tol=1e-9, delta_pole=None):
    w = np.asarray(z, dtype=np.complex128) - P.c_b
    delta = P.default_delta_pole() if delta_pole is None else delta_pole
    # poles of c are zeros of phi(z - c_b)
    _check_poles(w.ravel(), P, delta, sign=-1.0)
    lp = log_phi(w, P, tol, delta)
    return -np.log(P.zeta) + 0.5j * math.pi * (w * w - P.c_b**2) - lp


def c_function(z, P, tol=1e-9, delta_pole=None):
    """c(z) from phi(w) = zeta^-1 c(w + c_b)^-1 exp(pi i (w^2 - c_b^2) / 2)."""
    out = np.exp(log_c_function(z, P, tol, delta_pole))
    return complex(out) if np.ndim(out) == 0 else out


def phi_pole_residue_check(P, tol=1e-9, eps=1e-4 * (1 + 1j), at="pole"):
    """Residual of the leading Laurent term of phi at +c_b (pole) or -c_b (zero)."""
    eps = complex(eps)
    delta = 0.1 * abs(eps)
    if at == "pole":
        val = phi(eps + P.c_b, P, tol, delta_pole=delta)
        return abs(2j * math.pi * P.zeta * eps * val - 1.0)
    if at == "zero":
        val = phi(eps - P.c_b, P, tol, delta_pole=delta)
        return abs(P.zeta * val / (2j * math.pi * eps) + 1.0)
    raise ValueError(f"at must be 'pole' or 'zero', got {at!r}")
