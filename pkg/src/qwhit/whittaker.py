"""Sklyanin measure and b-Whittaker functions for gl_n, n <= 3.

Two independent evaluation routes are provided:

* ``givental``: the triangular-array integral.  Rank 2 is a single adaptive
  contour integral; rank 3 is a three-fold trapezoidal sum on a shared real
  lattice, so every dilogarithm factor depends only on a lattice difference
  and is tabulated once.
* ``mellin_barnes``: the rank recursion over spectral variables against the
  kernel built from c-functions.

Array shapes follow the usual convention: ``lam`` and ``x`` are length-n
sequences of (possibly complex) numbers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from . import contour_quad as cq
from .errors import PoleProximity, RankUnsupported
from .qdilog import ModularParameter, log_c_function, log_phi

TWO_PI_I = 2j * math.pi


def rho(s, x):
    """Half the sum of x_j - x_k over j < k <= s."""
    x = list(x)
    if s > len(x):
        raise ValueError(f"s={s} exceeds the length of x ({len(x)})")
    return 0.5 * sum(x[j] - x[k] for j in range(s) for k in range(j + 1, s))


def sklyanin_m(lam, P, tol=None):
    lam = np.asarray(lam, dtype=complex)
    n = lam.size
    out = 1.0 + 0.0j
    for j in range(n):
        for k in range(j + 1, n):
            d = lam[j] - lam[k]
            if d == 0:
                return 0.0j
            out *= 4.0 * np.sinh(math.pi * P.b * d) * np.sinh(math.pi * d / P.b)
    return complex(out / math.factorial(n))


def sklyanin_m_array(mu1, mu2, P):
    """Rank-2 measure on arrays of (mu1, mu2)."""
    d = mu1 - mu2
    return 2.0 * np.sinh(math.pi * P.b * d) * np.sinh(math.pi * d / P.b)


def sklyanin_mfrak(lam, P, tol=None):
    lam = np.asarray(lam, dtype=complex)
    n = lam.size
    out = 1.0 + 0.0j
    for j in range(n):
        out *= np.exp((2 * (j + 1) - n - 1) * math.pi * P.b * lam[j])
        for k in range(j + 1, n):
            out *= np.exp(math.pi * (lam[k] - lam[j]) / P.b) - np.exp(math.pi * (lam[j] - lam[k]) / P.b)
    return complex(out)


def mfrak_symmetrized(lam, P):
    lam = list(lam)
    tot = sum(sklyanin_mfrak(p, P) for p in itertools.permutations(lam))
    return tot / math.factorial(len(lam))


def mfrak_recursion(lam, P, tol=1e-12):
    """Right side of the rank recursion for the non-symmetric measure.

    With n+1 = len(lam) and last entry l = lam[-1]:
    exp(2 pi i c_b sum_k (lam_k - l)) prod_k phi(lam_k - l + delta_b) / phi(lam_k - l + c_b)
    times the measure of lam[:-1].
    """
    lam = np.asarray(lam, dtype=complex)
    head, last = lam[:-1], lam[-1]
    d = head - last
    logs = log_phi(d + P.delta_b, P, tol) - log_phi(d + P.c_b, P, tol)
    return complex(np.exp(TWO_PI_I * P.c_b * d.sum() + logs.sum()) * sklyanin_mfrak(head, P))


@dataclass(frozen=True)
class WhittakerOptions:
    epsilon: float | None = None
    tol: float = 1e-10
    method: str = "givental"
    budget: int | None = None
    kappa: float = 0.5
    lattice_step: float | None = None
    half_width: float = 12.0

    def __post_init__(self):
        if self.method not in ("givental", "mellin_barnes"):
            raise ValueError(f"unknown method {self.method!r}")

    def eps(self, P):
        e = 0.5 * P.im_cb if self.epsilon is None else float(self.epsilon)
        if not 0.0 < e < P.im_cb:
            raise ValueError(f"epsilon must lie in (0, Im c_b) = (0, {P.im_cb:g}), got {e}")
        return e


def _as_vec(v):
    return np.atleast_1d(np.asarray(v, dtype=complex))


def _check_rank(lam, x):
    if lam.size != x.size:
        raise ValueError(f"rank mismatch: len(lambda)={lam.size}, len(x)={x.size}")
    n = lam.size
    if n > 3:
        raise RankUnsupported(f"rank {n} is not supported (n <= 3)")
    if n < 1:
        raise ValueError("rank must be at least 1")
    return n


def whittaker(lam, x, P, opts=None, return_error=False):
    """Psi^(n)_lam(x)."""
    opts = opts or WhittakerOptions()
    lam, x = _as_vec(lam), _as_vec(x)
    n = _check_rank(lam, x)
    if n == 1:
        val, err = complex(np.exp(TWO_PI_I * lam[0] * x[0])), 0.0
    elif opts.method == "givental":
        val, err = (_givental2 if n == 2 else _givental3)(lam, x, P, opts)
    else:
        psi, err = (_mb2 if n == 2 else _mb3)(lam, x, P, opts)
        conv = np.exp(-0.5j * math.pi * (1 - n) * np.sum(lam * lam))
        val, err = complex(psi * conv), err * abs(conv)
    val = complex(val)
    return (val, err) if return_error else val


def whittaker_mb_normalized(lam, x, P, opts=None):
    lam = _as_vec(lam)
    n = lam.size
    return complex(np.exp(0.5j * math.pi * (1 - n) * np.sum(lam * lam)) * whittaker(lam, x, P, opts))


def mb_normalization(lam):
    lam = _as_vec(lam)
    return complex(np.exp(0.5j * math.pi * (1 - lam.size) * np.sum(lam * lam)))


# ---------------------------------------------------------------------------
# rank 2, adaptive


def givental2_contour(x, P, eps):
    x1, x2 = complex(x[0]), complex(x[1])
    # poles of 1/phi(t - x1 - c_b) hang below x1; those of 1/phi(x2 - t) rise from x2 + c_b.
    # The left tail decays above Im x2, the right one below Im x1 + Im c_b.
    left, right = x2.imag + eps, x1.imag + eps
    path = cq.separating_contour(
        below=[x2 + P.c_b], above=[x1], default_offset=0.5 * (left + right), margin=1e-3,
        left_offset=left, right_offset=right,
    )
    if len(path.vertices) == 1:
        path = cq.ContourPath.line(path.left_offset, 0.5 * (x1.real + x2.real))
    return path


def _givental2(lam, x, P, opts):
    l1, l2 = lam
    x1, x2 = x
    path = givental2_contour(x, P, opts.eps(P))
    cb = P.c_b

    def f(t):
        return np.exp(TWO_PI_I * (l2 * (x1 + x2 - t) + l1 * t) - log_phi(t - x1 - cb, P) - log_phi(x2 - t, P))

    res = cq.integrate(f, path, opts.tol, opts.budget)
    pref = np.exp(1j * math.pi * cb * (l2 - l1)) / P.zeta
    return complex(pref * res.value), abs(pref) * res.abs_error


def mb_kernel(mu, lam, x_next, P, tol=1e-12):
    """L_n(mu, lam; x_next) with len(lam) = len(mu) + 1."""
    mu, lam = _as_vec(mu), _as_vec(lam)
    if lam.size != mu.size + 1:
        raise ValueError("lam must have exactly one more entry than mu")
    n = mu.size
    diffs = (lam[:, None] - mu[None, :]).ravel()
    logc = log_c_function(diffs, P, tol).sum()
    ms, ls = mu.sum(), lam.sum()
    return complex(np.exp(1j * math.pi * (2 * x_next - ms) * (ls - ms) + logc) / P.zeta**n)


def _mb_contour(lam, P, eps):
    # c(lam_j - mu) has poles at mu = lam_j + i(bm + n/b): pass below every lam_j
    lo = min(l.imag for l in lam)
    center = float(np.mean([l.real for l in lam]))
    return cq.ContourPath.line(lo - eps, center)


def _mb2(lam, x, P, opts):
    l1, l2 = lam
    x1, x2 = x
    eps = 0.25 * P.im_cb if opts.epsilon is None else min(opts.epsilon, 0.45 * P.im_cb)
    L = l1 + l2

    def f(mu):
        return np.exp(1j * math.pi * (2 * x2 - mu) * (L - mu) + log_c_function(l1 - mu, P) + log_c_function(l2 - mu, P)
                      + TWO_PI_I * mu * x1)

    res = cq.integrate(f, _mb_contour(lam, P, eps), opts.tol, opts.budget)
    return res.value / P.zeta, res.abs_error / abs(P.zeta)


# ---------------------------------------------------------------------------
# lattice machinery


def _toeplitz(table, rows, cols, offset):
    """M[i, j] = table[cols[j] - rows[i] + offset] for integer index arrays."""
    return table[cols[None, :] - rows[:, None] + offset]


def _diff_table(fun, h, dmax, shift):
    d = np.arange(-dmax, dmax + 1)
    return fun(d * h + shift), dmax


def lattice_step(P, d):
    return d / 5.0


@dataclass
class LatticeResult:
    value: complex
    coarse: complex

    @property
    def abs_error(self):
        return abs(self.value - self.coarse)


def _givental3(lam, x, P, opts):
    res = givental3_lattice(lam, x, P, opts)
    return res.value, res.abs_error


def givental3_lattice(lam, x, P, opts=None):
    opts = opts or WhittakerOptions()
    if np.any(np.abs(np.imag(x)) > 1e-14):
        raise ValueError("the rank-3 lattice route needs real x")
    l1, l2, l3 = lam
    x1, x2, x3 = (complex(v) for v in x)
    ic = P.im_cb
    e2 = opts.kappa * ic
    e1 = 2.0 * opts.kappa * ic
    d = min(e2, ic - e2, e1 - e2, ic - (e1 - e2))
    h = opts.lattice_step or lattice_step(P, d)
    c0 = float(np.mean([x1.real, x2.real, x3.real]))
    K = int(math.ceil(opts.half_width / h))
    k = np.arange(-K, K + 1)
    u = c0 + k * h + 1j * e2
    v = c0 + k * h + 1j * e1
    cb = P.c_b
    a1 = -log_phi(u - x1 - cb, P) - log_phi(x2 - u, P)
    a2 = -log_phi(u - x2 - cb, P) - log_phi(x3 - u, P)
    dd = np.arange(-2 * K, 2 * K + 1)
    same_row = log_phi(dd * h + 0j, P)
    B = np.exp(-log_phi(dd * h + 1j * (e1 - e2) - cb, P))  # t11 - t21
    C = np.exp(-log_phi(dd * h + 1j * (e2 - e1), P))  # t22 - t11
    E1 = np.exp(TWO_PI_I * v * (l1 - l2))
    E2 = np.exp(TWO_PI_I * u * (l2 - l3))
    off = 2 * K
    pref = np.exp(TWO_PI_I * (l3 * (x1 + x2 + x3) - cb * rho(3, [l1, l2, l3]))) / P.zeta**3

    def total(stride):
        idx = np.arange(0, 2 * K + 1, stride) if K % stride == 0 else np.arange(K % stride, 2 * K + 1, stride)
        kk = k[idx]
        # inner[i, j] = sum_m B[m - i] E1[m] C[j - m] over the t11 index m
        Bm = B[kk[None, :] - kk[:, None] + off]  # [i, m]
        Cm = C[kk[None, :] - kk[:, None] + off]  # [m, j]
        inner = (Bm * E1[idx][None, :]) @ Cm
        logw = a1[idx][:, None] + a2[idx][None, :] + same_row[kk[None, :] - kk[:, None] + off]
        outer = np.exp(logw) * (E2[idx][:, None] * E2[idx][None, :])
        return complex(np.sum(outer * inner) * (stride * h) ** 3)

    fine = total(1)
    coarse = total(2)
    return LatticeResult(pref * fine, pref * coarse)


def givental2_grid(lam, y1, y2, P, t_offset, h, pad=12.0):
    """Psi^(2)_lam on the product grid y1 x y2.

    ``y1`` and ``y2`` must be horizontal lattice lines with the common real
    step ``h`` (``y = c + k h + i sigma``, the centres ``c`` may differ); the
    integration variable lives on the lattice of ``y1`` at imaginary part
    ``t_offset``.
    """
    l1, l2 = lam
    y1 = np.asarray(y1, dtype=complex)
    y2 = np.asarray(y2, dtype=complex)
    c1, c2 = y1[0].real, y2[0].real
    k1 = np.rint((y1.real - c1) / h).astype(int)
    k2 = np.rint((y2.real - c2) / h).astype(int)
    if np.max(np.abs(y1.real - c1 - k1 * h)) > 1e-9 * h or np.max(np.abs(y2.real - c2 - k2 * h)) > 1e-9 * h:
        raise ValueError("grid points must be equally spaced with step h")
    s1, s2 = float(np.mean(y1.imag)), float(np.mean(y2.imag))
    # t = c1 + kt h; on that lattice y2 - t = (c2 - c1) + (k2 - kt) h
    shift = int(np.rint((c2 - c1) / h))
    frac = (c2 - c1) - shift * h
    k2 = k2 + shift
    kp = int(math.ceil(pad / h))
    kt = np.arange(min(k1.min(), k2.min()) - kp, max(k1.max(), k2.max()) + kp + 1)
    t = c1 + kt * h + 1j * t_offset
    cb = P.c_b
    dmax = int(max(np.abs(kt[:, None] - k1[None, :]).max(), np.abs(k2[:, None] - kt[None, :]).max()))
    dd = np.arange(-dmax, dmax + 1)
    A = np.exp(-log_phi(dd * h + 1j * (t_offset - s1) - cb, P))  # t - y1
    Cc = np.exp(-log_phi(dd * h + frac + 1j * (s2 - t_offset), P))  # y2 - t
    E = np.exp(TWO_PI_I * (l1 - l2) * t)
    Am = A[kt[None, :] - k1[:, None] + dmax]  # [i, m]
    Cm = Cc[k2[None, :] - kt[:, None] + dmax]  # [m, j]
    inner = (Am * E[None, :]) @ Cm * h
    pref = np.exp(1j * math.pi * cb * (l2 - l1)) / P.zeta
    return pref * np.exp(TWO_PI_I * l2 * (y1[:, None] + y2[None, :])) * inner


def _mb3(lam, x, P, opts):
    res = mb3_lattice(lam, x, P, opts)
    return res.value, res.abs_error


def mb3_lattice(lam, x, P, opts=None):
    """psi^(3) via the spectral recursion, summed on a 2-D trapezoidal lattice."""
    opts = opts or WhittakerOptions(method="mellin_barnes")
    lam = _as_vec(lam)
    x1, x2, x3 = (complex(v) for v in x)
    ic = P.im_cb
    eps_mu = 0.25 * ic
    # the measure grows inside the strip, so the step is finer than lattice_step()
    h = opts.lattice_step or eps_mu / 8.0
    lo = min(l.imag for l in lam) - eps_mu
    c0 = float(np.mean(lam.real))
    K = int(math.ceil(opts.half_width / h))
    k = np.arange(-K, K + 1)
    mu = c0 + k * h + 1j * lo

    # inner rank-2 Whittaker values Psi^(2)_{mu1, mu2}(x1, x2) as a matrix
    e_t = 0.5 * ic
    d_t = min(e_t, ic - e_t)
    # e^{2 pi i (mu1 - mu2) t} grows inside the strip; resolve the largest frequency
    ht = min(lattice_step(P, d_t), 1.0 / (2.0 * opts.half_width + 6.0 / d_t))
    ct = 0.5 * (x1.real + x2.real)
    Kt = int(math.ceil(opts.half_width / ht))
    t = ct + np.arange(-Kt, Kt + 1) * ht + 1j * e_t
    cb = P.c_b
    g = np.exp(-log_phi(t - x1 - cb, P) - log_phi(x2 - t, P)) * ht
    E1 = np.exp(TWO_PI_I * mu[:, None] * t[None, :])
    E2 = np.exp(TWO_PI_I * mu[:, None] * (x1 + x2 - t)[None, :])
    M1, M2 = np.meshgrid(mu, mu, indexing="ij")
    psi2 = ((E1 * g[None, :]) @ E2.T) * np.exp(1j * math.pi * cb * (M2 - M1)) / P.zeta
    psi2 *= np.exp(-0.5j * math.pi * (M1**2 + M2**2))

    logc = np.zeros_like(mu)
    for l in lam:
        logc = logc + log_c_function(l - mu, P)
    Ls = lam.sum()
    S = M1 + M2
    logL = 1j * math.pi * (2 * x3 - S) * (Ls - S) + logc[:, None] + logc[None, :]
    integrand = np.exp(logL) / P.zeta**2 * psi2 * sklyanin_m_array(M1, M2, P)

    fine = complex(integrand.sum() * h * h)
    sub = integrand[K % 2::2, K % 2::2]
    coarse = complex(sub.sum() * (2 * h) ** 2)
    return LatticeResult(fine, coarse)


# ---------------------------------------------------------------------------
# asymptotics


def asymptotic_estimate(lam, x, P, tol=1e-12):
    lam, x = _as_vec(lam), _as_vec(x)
    n = _check_rank(lam, x)
    for j in range(n):
        for k in range(j + 1, n):
            if abs(lam[j] - lam[k]) < 1e-9:
                raise PoleProximity("asymptotic_estimate needs pairwise distinct spectral entries")
    base = 1.0 + 0.0j
    for j in range(n):
        for k in range(j + 1, n):
            base *= np.exp(0.5j * math.pi * (lam[j] - lam[k]) ** 2)
    total = 0.0j
    for w in itertools.permutations(range(n)):
        lw = lam[list(w)]
        term = np.exp(TWO_PI_I * np.sum(x * lw))
        for j in range(n):
            for k in range(j + 1, n):
                term *= np.exp(log_c_function(lw[k] - lw[j], P, tol))
        total += term
    # each Mellin-Barnes step contributes zeta^-k through the kernel, zeta^-n(n-1)/2 in all
    return complex(base * total * P.zeta ** (-(n * (n - 1) // 2)))


def with_method(opts, method):
    return replace(opts or WhittakerOptions(), method=method)


__all__ = [
    "ModularParameter",
    "WhittakerOptions",
    "rho",
    "sklyanin_m",
    "sklyanin_mfrak",
    "mfrak_symmetrized",
    "mfrak_recursion",
    "whittaker",
    "whittaker_mb_normalized",
    "mb_kernel",
    "asymptotic_estimate",
    "givental2_grid",
    "givental3_lattice",
    "mb3_lattice",
]
