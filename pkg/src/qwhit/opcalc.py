"""Operators in the momenta p_j = (1/2 pi i) d/dx_j and positions x_j, applied to test functions.

Two evaluation routes are provided.  ``apply_phi_momentum`` evaluates a single
factor phi(p_j + u)^(+-1) at a point by adaptive contour quadrature.  Longer
products are described by an :class:`OperatorWord` and evaluated by
``apply_word``: the test function is sampled on a lattice centred on the probe
point, every momentum factor becomes a Toeplitz matrix acting along one axis
(its integration line sits ``delta`` above or below the output line, so the
kernel never meets its poles), and multiplication factors act pointwise.  For
kernels analytic in a strip of width ``delta`` the lattice sums converge like
exp(-2 pi delta / h).

Functions passed to the operators are callables ``f(*xs)`` broadcasting over
complex arrays, one array per coordinate.  Objects with a ``sample(axes)``
method (``GaussianPacket``, ``PlaneWave``, ``WhittakerFunction``) may supply
faster lattice sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.signal import fftconvolve

from . import contour_quad as cq
from .errors import NonDecayingTail, PoleProximity, RankUnsupported, ShiftUnsupported
from .qdilog import ModularParameter, log_phi
from .whittaker import givental2_grid, whittaker

TWO_PI_I = 2j * math.pi


# ---------------------------------------------------------------------------
# test functions


def _mesh(axes):
    n = len(axes)
    out = []
    for j, a in enumerate(axes):
        shape = [1] * n
        shape[j] = -1
        out.append(np.asarray(a, dtype=complex).reshape(shape))
    return out


@dataclass(frozen=True)
class GaussianPacket:
    """scale * prod_j exp(-alpha_j x_j^2 + beta_j x_j) poly_j(x_j), with Re alpha_j > 0.

    ``polys[j]`` holds the coefficients of poly_j in increasing degree.
    """

    alpha: tuple
    beta: tuple
    polys: tuple = ()
    scale: complex = 1.0

    def __post_init__(self):
        alpha = tuple(complex(a) for a in np.atleast_1d(self.alpha))
        beta = tuple(complex(a) for a in np.atleast_1d(self.beta))
        if len(alpha) != len(beta):
            raise ValueError("alpha and beta must have the same length")
        polys = self.polys or tuple((1.0,) for _ in alpha)
        polys = tuple(tuple(complex(c) for c in np.atleast_1d(p)) for p in polys)
        if len(polys) != len(alpha):
            raise ValueError("one polynomial per coordinate is required")
        if any(a.real <= 0 for a in alpha):
            raise ValueError("GaussianPacket needs Re(alpha) > 0 in every coordinate")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "polys", polys)
        object.__setattr__(self, "scale", complex(self.scale))

    @property
    def rank(self):
        return len(self.alpha)

    @classmethod
    def random(cls, n, rng, degree=1):
        alpha = rng.uniform(0.6, 1.4, n) + 1j * rng.uniform(-0.5, 0.5, n)
        beta = rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(-0.5, 0.5, n)
        polys = tuple(tuple(rng.uniform(-1, 1, degree + 1) + 1j * rng.uniform(-1, 1, degree + 1)) for _ in range(n))
        return cls(tuple(alpha), tuple(beta), polys)

    def __call__(self, *xs):
        if len(xs) != self.rank:
            raise ValueError(f"packet of rank {self.rank} called with {len(xs)} coordinates")
        out = self.scale
        for a, b, p, x in zip(self.alpha, self.beta, self.polys, xs):
            x = np.asarray(x, dtype=complex)
            out = out * np.exp(-a * x * x + b * x) * npoly.polyval(x, p)
        return out

    def sample(self, axes):
        return np.asarray(self(*_mesh(axes)), dtype=complex) * np.ones(tuple(len(a) for a in axes))

    def _with(self, j, alpha=None, beta=None, poly=None, scale=1.0):
        al, be, po = list(self.alpha), list(self.beta), list(self.polys)
        if alpha is not None:
            al[j] = alpha
        if beta is not None:
            be[j] = beta
        if poly is not None:
            po[j] = tuple(poly)
        return GaussianPacket(tuple(al), tuple(be), tuple(po), self.scale * scale)

    def times_exp(self, j, gamma):
        """Multiply by exp(gamma x_j)."""
        return self._with(j, beta=self.beta[j] + gamma)

    def times_gauss(self, j, sign):
        """Multiply by exp(sign * pi i x_j^2)."""
        return self._with(j, alpha=self.alpha[j] - sign * 1j * math.pi)

    def shifted(self, j, w):
        """x_j -> x_j + w."""
        a, b = self.alpha[j], self.beta[j]
        poly = _compose_shift(self.polys[j], w)
        return self._with(j, beta=b - 2 * a * w, poly=poly, scale=np.exp(-a * w * w + b * w))

    def reflected(self, j):
        """x_j -> -x_j."""
        p = np.array(self.polys[j]) * (-1.0) ** np.arange(len(self.polys[j]))
        return self._with(j, beta=-self.beta[j], poly=p)

    def fourier(self, j, inverse=False):
        """Exact transform in x_j: integral of f(x) exp(-+2 pi i x xi) dx."""
        if inverse:
            return self.reflected(j).fourier(j)
        a, b = self.alpha[j], self.beta[j]
        # integral of x^k e^{-a x^2 + (b - 2 pi i xi) x} = d^k/db^k sqrt(pi/a) e^{w^2 / 4a}, w = b - 2 pi i xi
        r = np.array([1.0 + 0j])
        acc = np.zeros(1, dtype=complex)
        for k, c in enumerate(self.polys[j]):
            if k:
                r = npoly.polyadd(npoly.polyder(r), npoly.polymulx(r) / (2 * a))
            acc = npoly.polyadd(acc, c * r)
        poly_xi = _compose_linear(acc, b, -2j * math.pi)
        return self._with(
            j,
            alpha=math.pi**2 / a,
            beta=-1j * math.pi * b / a,
            poly=poly_xi,
            scale=np.sqrt(math.pi / a) * np.exp(b * b / (4 * a)),
        )


def _compose_linear(coef, c0, c1):
    """Coefficients of p(c0 + c1 x) given those of p."""
    out = np.zeros(1, dtype=complex)
    for c in np.asarray(coef)[::-1]:
        out = npoly.polyadd(npoly.polymul(out, [c0, c1]), [c])
    return out


def _compose_shift(coef, w):
    return _compose_linear(coef, w, 1.0)


@dataclass(frozen=True)
class PlaneWave:
    """exp(2 pi i lam . x)."""

    lam: tuple

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(complex(v) for v in np.atleast_1d(self.lam)))

    @property
    def rank(self):
        return len(self.lam)

    def __call__(self, *xs):
        out = 1.0 + 0j
        for l, x in zip(self.lam, xs):
            out = out * np.exp(TWO_PI_I * l * np.asarray(x, dtype=complex))
        return out

    def sample(self, axes):
        return np.asarray(self(*_mesh(axes))) * np.ones(tuple(len(a) for a in axes))


@dataclass(frozen=True)
class WhittakerFunction:
    """Psi^(n)_lam as a test function (n <= 2 for lattice sampling)."""

    lam: tuple
    P: ModularParameter

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(complex(v) for v in np.atleast_1d(self.lam)))

    @property
    def rank(self):
        return len(self.lam)

    def __call__(self, *xs):
        xs = np.broadcast_arrays(*[np.asarray(x, dtype=complex) for x in xs])
        out = np.empty(xs[0].shape, dtype=complex)
        for idx in np.ndindex(out.shape):
            out[idx] = whittaker(self.lam, tuple(x[idx] for x in xs), self.P)
        return out

    def sample(self, axes):
        if self.rank == 1:
            return PlaneWave(self.lam).sample(axes)
        if self.rank != 2:
            raise RankUnsupported("lattice sampling of Whittaker functions is implemented for n <= 2")
        a1, a2 = (np.asarray(a, dtype=complex) for a in axes)
        s1, s2 = a1[0].imag, a2[0].imag
        lo, hi = max(s1, s2), min(s1, s2) + self.P.im_cb
        if hi - lo < 1e-3:
            raise PoleProximity("grid lines too far apart for a separating Givental contour")
        h = float(a1[1].real - a1[0].real)
        return givental2_grid(self.lam, a1, a2, self.P, 0.5 * (lo + hi), h)


def _sample(f, axes):
    if hasattr(f, "sample"):
        return f.sample(axes)
    vals = np.asarray(f(*_mesh(axes)), dtype=complex)
    return vals * np.ones(tuple(len(a) for a in axes))


# ---------------------------------------------------------------------------
# operator words


def _form(coeffs, n):
    c = np.zeros(n)
    if isinstance(coeffs, (int, np.integer)):
        c[coeffs] = 1.0
        return c
    c[: len(coeffs)] = coeffs
    return c


@dataclass(frozen=True)
class MultiplyDilog:
    """phi(L.x + const)^sign, L a coefficient vector (or a coordinate index)."""

    sign: int
    form: tuple
    const: complex = 0.0


@dataclass(frozen=True)
class MultiplyExp:
    """exp(L.x + const) with complex coefficients."""

    form: tuple
    const: complex = 0.0


@dataclass(frozen=True)
class MultiplyGauss:
    """exp(sign * pi i (L.x)^2); an integer ``form`` means a single coordinate."""

    sign: int
    form: object


@dataclass(frozen=True)
class PhiMomentum:
    """phi(momentum * p_j + u)^sign."""

    sign: int
    coord: int
    u: complex = 0.0
    momentum: int = 1


@dataclass(frozen=True)
class GaussMomentum:
    """exp(sign * pi i p_j^2)."""

    sign: int
    coord: int


@dataclass(frozen=True)
class ShiftCoordinate:
    """f(x) -> f(x + amount e_j); exp(2 pi b p_j) is the shift by -ib."""

    coord: int
    amount: complex


_MOMENTUM = (PhiMomentum, GaussMomentum)


@dataclass(frozen=True)
class OperatorWord:
    """A product of primitives, written left to right as in the operator product.

    The rightmost primitive acts first.
    """

    rank: int
    ops: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            for j in _coords(op, self.rank):
                if not 0 <= j < self.rank:
                    raise ValueError(f"{op} refers to coordinate {j} outside rank {self.rank}")

    def __matmul__(self, other):
        if other.rank != self.rank:
            raise ValueError("cannot compose words of different rank")
        return OperatorWord(self.rank, self.ops + other.ops)

    def inverse(self):
        return OperatorWord(self.rank, tuple(_invert(op) for op in reversed(self.ops)))


def _coords(op, n):
    if isinstance(op, (PhiMomentum, GaussMomentum, ShiftCoordinate)):
        return [op.coord]
    form = op.form
    if isinstance(form, (int, np.integer)):
        return [int(form)]
    return [j for j, c in enumerate(form) if c != 0 or j >= n]


def _invert(op):
    if isinstance(op, MultiplyDilog):
        return replace(op, sign=-op.sign)
    if isinstance(op, MultiplyExp):
        return MultiplyExp(tuple(-complex(c) for c in op.form), -complex(op.const))
    if isinstance(op, (MultiplyGauss, GaussMomentum, PhiMomentum)):
        return replace(op, sign=-op.sign)
    if isinstance(op, ShiftCoordinate):
        return ShiftCoordinate(op.coord, -op.amount)
    raise TypeError(op)


def word(rank, *ops):
    return OperatorWord(rank, ops)


def conjugated_phi_momentum(j, form, u, rank, sign=1, momentum=1):
    """phi(momentum p_j + L.x + u)^sign through Gaussian conjugation.

    With [p, x] = 1/(2 pi i), exp(pi i L^2) (s p_j) exp(-pi i L^2) = s p_j - L
    whenever [s p_j, L] = 1/(2 pi i), hence
    phi(s p_j + L + u) = exp(-pi i L^2) phi(s p_j + u) exp(pi i L^2).
    """
    L = _form(form, rank)
    if abs(momentum * L[j] - 1.0) > 1e-12:
        raise ValueError("the linear form must pair with the momentum to 1/(2 pi i)")
    g = tuple(L)
    return OperatorWord(rank, (MultiplyGauss(-1, g), PhiMomentum(sign, j, u, momentum), MultiplyGauss(1, g)))


# ---------------------------------------------------------------------------
# lattice evaluation


@dataclass(frozen=True)
class GridSpec:
    """Lattice parameters: line displacement per momentum factor, step, half-width.

    On their growing side the momentum kernels behave like exp(2 pi delta |y - x|),
    which magnifies the exp(-2 pi delta / h) aliasing error across the lattice
    span, so the default displacement is kept small.
    """

    delta: float | None = None
    step: float | None = None
    half_width: float = 9.0

    def resolve(self, P):
        delta = self.delta if self.delta is not None else P.im_cb / 12.0
        step = self.step if self.step is not None else delta / 5.0
        return delta, step, int(math.ceil(self.half_width / step))


class _Grid:
    def __init__(self, values, centers, offsets, h, K):
        self.values = values
        self.centers = np.asarray(centers, dtype=float)
        self.offsets = np.asarray(offsets, dtype=float)
        self.h = h
        self.K = K

    def axis(self, j):
        return self.centers[j] + np.arange(-self.K, self.K + 1) * self.h + 1j * self.offsets[j]

    def mesh(self):
        return _mesh([self.axis(j) for j in range(len(self.centers))])


def _along(values, table, j):
    """out[o] = sum_i table[i - o + 2K] values[i] along axis j (a Toeplitz product)."""
    N = values.shape[j]
    shape = [1] * values.ndim
    shape[j] = -1
    conv = fftconvolve(values, table[::-1].reshape(shape), axes=j)
    K2 = (len(table) - 1) // 2
    return np.take(conv, np.arange(K2, K2 + N), axis=j)


def _phi_momentum_kernel(op, z, P, tol):
    s, u, cb = op.momentum, complex(op.u), P.c_b
    if op.sign > 0:
        return np.exp(TWO_PI_I * s * z * (u - cb) - log_phi(s * z - cb, P, tol)) / P.zeta
    return np.exp(TWO_PI_I * s * z * (u + cb) + log_phi(-s * z + cb, P, tol)) * P.zeta


def _line_shift(op, delta):
    if isinstance(op, PhiMomentum):
        return -op.momentum * delta
    return 0.0


def _grid_step(op, g, P, delta, tol):
    n = len(g.centers)
    h, K = g.h, g.K
    if isinstance(op, PhiMomentum):
        j = op.coord
        dz = 1j * op.momentum * delta
        d = np.arange(-2 * K, 2 * K + 1)
        table = _phi_momentum_kernel(op, d * h + dz, P, tol) * h
        g.values = _along(g.values, table, j)
        g.offsets = g.offsets.copy()
        g.offsets[j] -= op.momentum * delta
        return g
    if isinstance(op, GaussMomentum):
        j = op.coord
        d = np.arange(-2 * K, 2 * K + 1) * h
        table = np.exp(op.sign * 0.25j * math.pi - op.sign * 1j * math.pi * d * d) * h
        g.values = _along(g.values, table, j)
        return g
    if isinstance(op, MultiplyDilog):
        L = _form(op.form, n)
        base = complex(op.const) + complex(np.dot(L, g.centers + 1j * g.offsets))
        if np.allclose(L, np.round(L)):
            # the argument only depends on the integer combination sum L_j k_j
            Li = np.round(L).astype(int)
            ks = _mesh([np.arange(-K, K + 1)] * n)
            m = sum(Li[j] * ks[j] for j in range(n)).real.astype(int)
            span = int(np.abs(Li).sum()) * K
            table = log_phi(base + np.arange(-span, span + 1) * h, P, tol)
            g.values = g.values * np.exp(op.sign * table[m + span])
        else:
            mesh = g.mesh()
            z = complex(op.const) + sum(L[j] * mesh[j] for j in range(n))
            g.values = g.values * np.exp(op.sign * log_phi(z * np.ones(g.values.shape), P, tol))
        return g
    if isinstance(op, MultiplyExp):
        mesh = g.mesh()
        L = np.zeros(n, dtype=complex)
        L[: len(op.form)] = op.form
        g.values = g.values * np.exp(complex(op.const) + sum(L[j] * mesh[j] for j in range(n)))
        return g
    if isinstance(op, MultiplyGauss):
        mesh = g.mesh()
        L = _form(op.form, n)
        y = sum(L[j] * mesh[j] for j in range(n))
        g.values = g.values * np.exp(op.sign * 1j * math.pi * y * y)
        return g
    if isinstance(op, ShiftCoordinate):
        raise ShiftUnsupported("coordinate shifts cannot follow a momentum operator on lattice data")
    raise TypeError(op)


def _callable_step(op, f, n, P, tol):
    """Apply a multiplication or shift to a function before any momentum factor."""
    if isinstance(op, ShiftCoordinate):
        if isinstance(f, GaussianPacket):
            return f.shifted(op.coord, op.amount)
        return _Shifted(f, op.coord, complex(op.amount))
    if isinstance(f, GaussianPacket) and isinstance(op, MultiplyGauss) and isinstance(op.form, (int, np.integer)):
        return f.times_gauss(op.form, op.sign)
    return _Multiplied(f, op, n, P, tol)


class _Shifted:
    def __init__(self, inner, j, w):
        self.inner, self.j, self.w = inner, j, w

    def __call__(self, *xs):
        xs = list(xs)
        xs[self.j] = np.asarray(xs[self.j]) + self.w
        return self.inner(*xs)

    def sample(self, axes):
        axes = list(axes)
        axes[self.j] = np.asarray(axes[self.j]) + self.w
        return _sample(self.inner, axes)


class _Multiplied:
    def __init__(self, inner, op, n, P, tol):
        self.inner, self.op, self.n, self.P, self.tol = inner, op, n, P, tol

    def factor(self, xs):
        op, n = self.op, self.n
        if isinstance(op, MultiplyDilog):
            L = _form(op.form, n)
            z = complex(op.const) + sum(L[j] * np.asarray(xs[j]) for j in range(n))
            z = np.asarray(z, dtype=complex)
            return np.exp(op.sign * log_phi(z, self.P, self.tol))
        if isinstance(op, MultiplyExp):
            L = np.zeros(n, dtype=complex)
            L[: len(op.form)] = op.form
            return np.exp(complex(op.const) + sum(L[j] * np.asarray(xs[j]) for j in range(n)))
        if isinstance(op, MultiplyGauss):
            L = _form(op.form, n)
            y = sum(L[j] * np.asarray(xs[j]) for j in range(n))
            return np.exp(op.sign * 1j * math.pi * y * y)
        raise TypeError(op)

    def __call__(self, *xs):
        return self.factor(xs) * self.inner(*xs)

    def sample(self, axes):
        vals = _sample(self.inner, axes)
        mesh = _mesh(axes)
        return vals * self.factor([np.broadcast_to(m, vals.shape) for m in mesh])


def _point(x, n):
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    if x.size != n:
        raise ValueError(f"expected a point with {n} coordinates")
    return x


def apply_word(w, f, x, P, grid=None, tol=1e-12):
    """(W f)(x) for an OperatorWord W.

    Multiplications and shifts acting before the first momentum factor are
    applied to ``f`` directly; the rest runs on a lattice centred at Re(x).
    Exponentially growing multipliers such as exp(2 pi b x) swamp the lattice
    edges; use ``apply_word_fourier`` for those.
    """
    n = w.rank
    x = _point(x, n)
    grid = grid or GridSpec()
    ops = list(reversed(w.ops))
    i = 0
    fun = f
    while i < len(ops) and not isinstance(ops[i], _MOMENTUM):
        fun = _callable_step(ops[i], fun, n, P, tol)
        i += 1
    if i == len(ops):
        return complex(np.asarray(fun(*x)).reshape(()))
    if n > 2:
        raise RankUnsupported("momentum operators are evaluated for rank <= 2")
    delta, h, K = grid.resolve(P)
    shift = np.zeros(n)
    for op in ops[i:]:
        if isinstance(op, ShiftCoordinate):
            raise ShiftUnsupported("coordinate shifts cannot follow a momentum operator on lattice data")
        if isinstance(op, PhiMomentum):
            shift[op.coord] += _line_shift(op, delta)
    offsets = x.imag - shift
    g = _Grid(None, x.real, offsets, h, K)
    g.values = _sample(fun, [g.axis(j) for j in range(n)])
    for op in ops[i:]:
        g = _grid_step(op, g, P, delta, tol)
    if not np.all(np.isfinite(g.values)):
        raise NonDecayingTail("lattice evaluation produced non-finite values")
    return complex(g.values[(K,) * n])


def apply_word_fourier(w, f, x, P, tol=1e-10, offset=0.0):
    """(W f)(x) for a rank-1 word of momentum dilogs and exponentials, through Fourier space.

    With f^(xi) = integral f(x) exp(-2 pi i x xi) dx, phi(s p + u)^sign acts
    as multiplication by phi(s xi + u)^sign and exp(g x) as xi -> xi + i g / (2 pi).
    The result is one inverse transform along Im xi = offset.  Every dilog in
    the chain must be regular on that line and between it and the real axis.
    Placing the line so the packet transform is sampled near its real axis
    avoids cancellation when the frequency shifts are large.
    """
    if w.rank != 1 or not isinstance(f, GaussianPacket):
        raise RankUnsupported("the Fourier route handles rank-1 Gaussian packets")
    fh = f.fourier(0)
    x = complex(np.atleast_1d(x)[0])
    # walk from the output side: each exponential shifts the frequency seen by everything to its right
    factors = []
    shift = 0.0j
    for op in w.ops:
        if isinstance(op, PhiMomentum):
            factors.append((op, shift))
        elif isinstance(op, MultiplyExp):
            if complex(op.const) != 0:
                factors.append((complex(op.const), None))
            shift += 1j * complex(op.form[0]) / (2 * math.pi)
        else:
            raise TypeError(f"{op} is not supported by the Fourier route")

    def integrand(xi):
        acc = np.zeros(xi.shape, dtype=complex)
        for op, sh in factors:
            if sh is None:
                acc += op
                continue
            acc += op.sign * log_phi(op.momentum * (xi + sh) + complex(op.u), P, min(tol, 1e-12))
        return np.exp(acc + TWO_PI_I * xi * x) * fh(xi + shift)

    return cq.integrate(integrand, cq.ContourPath.line(offset), tol, noise=1e-12).value


def apply_word_many(w, f, points, P, grid=None, tol=1e-12):
    return np.array([apply_word(w, f, x, P, grid, tol) for x in points])


# ---------------------------------------------------------------------------
# named operators


def complexified(u, P, sign=1):
    """Give a real spectral shift the imaginary part +-Im(c_b)/2 (sign of the dilog power)."""
    u = complex(u)
    if u.imag == 0.0:
        return u + 0.5j * sign * P.im_cb
    return u


def apply_phi_momentum(j, u, sign, f, x, P, tol=1e-10, momentum=1, complexify="auto", budget=None):
    """(phi(momentum p_j + u)^sign f)(x) by one adaptive contour integral in coordinate j.

    The integration line sits a quarter of Im(c_b) (or half of |Im u| when
    that is smaller) above the point for momentum +1, below it for -1.
    Real ``u`` is complexified for functions without Gaussian decay.
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    n = x.size
    if complexify == "auto":
        complexify = not isinstance(f, GaussianPacket)
    if complexify:
        u = complexified(u, P, sign)
    u = complex(u)
    op = PhiMomentum(sign, j, u, momentum)
    delta = 0.25 * P.im_cb
    if u.imag != 0.0 and not isinstance(f, GaussianPacket):
        delta = min(delta, 0.5 * abs(u.imag))
    y0 = x[j] + 1j * momentum * delta
    path = cq.ContourPath.line(y0.imag, y0.real)

    def integrand(y):
        xs = [np.full(y.shape, x[k]) for k in range(n)]
        xs[j] = y
        return _phi_momentum_kernel(op, y - x[j], P, min(tol, 1e-12)) * f(*xs)

    # phi is evaluated to ~1e-12, which bounds the attainable cancellation
    res = cq.integrate(integrand, path, tol, budget, noise=1e-12)
    return res.value


def phi_momentum_word(j, u, rank, sign=1, momentum=1):
    return OperatorWord(rank, (PhiMomentum(sign, j, u, momentum),))


def _diff(rank, k):
    d = np.zeros(rank)
    d[k - 1], d[k - 2] = 1.0, -1.0
    return tuple(d)


def T_word(k, u, rank, kind="top", route="kernel"):
    """T_k(u) for 2 <= k <= rank (coordinates counted from 1).

    top: phi(p_k + x_k - x_{k-1} + u) phi(p_k + u).  The kernel route uses the
    single-integral form phi(x_k - x_{k-1})^-1 phi(p_k + u) phi(x_k - x_{k-1});
    the product route conjugates the first factor by Gaussians.
    bottom: phi(-p_k - v) phi(-p_{k-1} + x_k - x_{k-1} - v), always as a product.
    """
    if k < 2 or k > rank:
        raise ValueError("T_k needs 2 <= k <= rank")
    a, c = k - 1, k - 2  # zero-based x_k, x_{k-1}
    diff = _diff(rank, k)
    if kind == "top":
        if route == "kernel":
            return OperatorWord(rank, (MultiplyDilog(-1, diff), PhiMomentum(1, a, u), MultiplyDilog(1, diff)))
        return conjugated_phi_momentum(a, diff, u, rank) @ phi_momentum_word(a, u, rank)
    if kind == "bottom":
        v = complex(u)
        # -p_{k-1} pairs with -x_{k-1}, i.e. with the form x_k - x_{k-1}
        return phi_momentum_word(a, -v, rank, momentum=-1) @ conjugated_phi_momentum(c, diff, -v, rank, momentum=-1)
    raise ValueError(f"unknown T kind {kind!r}")


def Q_word(n, u, kind="top", route="kernel"):
    """Baxter operators: Q^t_n = Q^t_1 T^t_2 ... T^t_n, Q^b_n = T^b_n ... T^b_2 Q^b_1.

    With route="kernel" the n=2 bottom operator uses
    phi(-p_1 + x_2 - x_1 - v) phi(-p_1 - v) = phi(x_2 - x_1)^-1 phi(-p_1 - v) phi(x_2 - x_1).
    """
    if n > 2:
        raise RankUnsupported("Baxter operators are evaluated for n <= 2")
    if kind == "top":
        w = phi_momentum_word(0, u, n)
        for k in range(2, n + 1):
            w = w @ T_word(k, u, n, "top", route)
        return w
    if kind == "inverse_top":
        return Q_word(n, u, "top", route).inverse()
    if kind == "bottom":
        v = complex(u)
        w = phi_momentum_word(0, -v, n, momentum=-1)
        if n == 1:
            return w
        if route == "kernel":
            d = _diff(n, 2)
            return phi_momentum_word(1, -v, n, momentum=-1) @ OperatorWord(
                n, (MultiplyDilog(-1, d), PhiMomentum(1, 0, -v, -1), MultiplyDilog(1, d))
            )
        return T_word(2, v, n, "bottom") @ w
    if kind == "inverse_bottom":
        return Q_word(n, u, "bottom", route).inverse()
    raise ValueError(f"unknown Baxter kind {kind!r}")


def Q_swap_word(n, u, v, route="kernel"):
    return Q_word(n, v, "bottom", route) @ Q_word(n, u, "top", route)


def dehn_word(n):
    """D_n = prod phi(x_{j+1} - x_j)^-1 prod exp(-pi i p_j^2)."""
    ops = []
    for j in range(n - 1):
        L = np.zeros(n)
        L[j + 1], L[j] = 1.0, -1.0
        ops.append(MultiplyDilog(-1, tuple(L)))
    ops += [GaussMomentum(-1, j) for j in range(n)]
    return OperatorWord(n, tuple(ops))


def P_word(k, u, rank, P):
    """P_k(u) = exp(2 pi i (c_b - u) x_k) / phi(x_k - x_{k-1}) (no dilog factor for k = 1)."""
    L = np.zeros(rank, dtype=complex)
    L[k - 1] = TWO_PI_I * (P.c_b - complex(u))
    ops = [MultiplyExp(tuple(L))]
    if k >= 2:
        d = np.zeros(rank)
        d[k - 1], d[k - 2] = 1.0, -1.0
        ops.append(MultiplyDilog(-1, tuple(d)))
    return OperatorWord(rank, tuple(ops))


def apply_T(k, u, kind, f, x, P, tol=1e-10, route="kernel", grid=None):
    rank = np.atleast_1d(x).size
    return apply_word(T_word(k, u, rank, kind, route), f, x, P, grid)


def apply_Q(n, u, kind, f, x, P, tol=1e-10, route="kernel", grid=None):
    if n == 1 and kind in ("top", "inverse_top") and isinstance(f, (PlaneWave, WhittakerFunction)):
        return apply_phi_momentum(0, u, 1 if kind == "top" else -1, f, x, P, tol)
    return apply_word(Q_word(n, u, kind, route), f, x, P, grid)


def apply_dehn(n, f, x, P, tol=1e-10, inverse=False, grid=None):
    """(D_n f)(x), or D_n^-1 f; plane waves of rank 1 are handled as a Fourier multiplier."""
    if n > 2:
        raise RankUnsupported("the Dehn twist is evaluated for n <= 2")
    if n == 1 and isinstance(f, PlaneWave):
        lam = f.lam[0]
        sign = 1 if inverse else -1
        return complex(np.exp(sign * 1j * math.pi * lam * lam) * f(np.atleast_1d(x)[0]))
    w = dehn_word(n)
    return apply_word(w.inverse() if inverse else w, f, x, P, grid)


def apply_P(k, u, f, x, P):
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    return apply_word(P_word(k, u, x.size, P), f, x, P)


# ---------------------------------------------------------------------------
# Toda Hamiltonians


@dataclass(frozen=True)
class _ShiftTerm:
    coef: complex
    exponent: tuple  # L with the factor exp(2 pi b L.x)
    shifts: tuple  # s with the argument x - i b s


def toda_terms(k, n, P):
    """H_k^(n) expanded into terms coef * exp(2 pi b L.x) * f(x - i b s).

    Built from H_k^(m+1) = H_k^(m) + e^{2 pi b p_{m+1}} H_{k-1}^(m)
    + e^{2 pi b (p_{m+1} + x_{m+1} - x_m)} H_{k-1}^(m-1), where the last
    exponential acts as q^-1 e^{2 pi b (x_{m+1} - x_m)} followed by the shift.
    """
    if n > 3:
        raise RankUnsupported("Toda Hamiltonians are expanded for n <= 3")
    zero = (0,) * n
    ident = [_ShiftTerm(1.0 + 0j, zero, zero)]
    table = {(-1, 0): ident, (0, 0): ident}

    def H(m, j):
        if j < 0 or j > max(m, 0) or m < 0:
            return []
        if j == 0:
            return ident
        if (m, j) in table:
            return table[(m, j)]
        terms = list(H(m - 1, j))
        for t in H(m - 1, j - 1):
            s = list(t.shifts)
            s[m - 1] += 1
            terms.append(_ShiftTerm(t.coef, t.exponent, tuple(s)))
        if m >= 2:
            for t in H(m - 2, j - 1):
                s, L = list(t.shifts), list(t.exponent)
                s[m - 1] += 1
                L[m - 1] += 1
                L[m - 2] -= 1
                terms.append(_ShiftTerm(t.coef / P.q, tuple(L), tuple(s)))
        table[(m, j)] = terms
        return terms

    return H(n, k)


def apply_toda_H(k, n, f, x, P):
    """(H_k^(n) f)(x) for f evaluable at complex shifts of its arguments."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    if x.size != n:
        raise ValueError("point rank does not match n")
    b = P.b
    total = 0.0j
    for t in toda_terms(k, n, P):
        L = np.asarray(t.exponent, dtype=float)
        s = np.asarray(t.shifts, dtype=float)
        y = x - 1j * b * s
        try:
            val = f(*y)
        except (ValueError, TypeError) as exc:
            raise ShiftUnsupported(f"test function cannot be evaluated at {y}: {exc}") from exc
        total += t.coef * np.exp(2 * math.pi * b * np.dot(L, x)) * complex(np.asarray(val).reshape(()))
    return complex(total)


def eigenvalue_elementary_symmetric(k, lam, P):
    """k-th elementary symmetric polynomial in exp(2 pi b lam_j)."""
    e = np.exp(2 * math.pi * P.b * np.atleast_1d(np.asarray(lam, dtype=complex)))
    if k < 0 or k > e.size:
        raise ValueError("k must lie between 0 and n")
    poly = np.array([1.0 + 0j])
    for v in e:
        poly = np.convolve(poly, [1.0, v])
    return complex(poly[k])


# ---------------------------------------------------------------------------
# probe points


def probe_points(n, count=10, seed=0, box=1.5):
    rng = np.random.default_rng(seed)
    return rng.uniform(-box, box, size=(count, n))


__all__ = [
    "GaussianPacket",
    "PlaneWave",
    "WhittakerFunction",
    "OperatorWord",
    "MultiplyDilog",
    "MultiplyExp",
    "MultiplyGauss",
    "PhiMomentum",
    "GaussMomentum",
    "ShiftCoordinate",
    "GridSpec",
    "word",
    "conjugated_phi_momentum",
    "apply_word",
    "apply_word_many",
    "apply_word_fourier",
    "apply_phi_momentum",
    "complexified",
    "T_word",
    "Q_word",
    "Q_swap_word",
    "dehn_word",
    "P_word",
    "apply_T",
    "apply_Q",
    "apply_dehn",
    "apply_P",
    "toda_terms",
    "apply_toda_H",
    "eigenvalue_elementary_symmetric",
    "probe_points",
]
