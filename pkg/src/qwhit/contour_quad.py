"""Adaptive quadrature along piecewise-linear complex contours.

Integrands are vectorized callables ``f(t) -> array`` over complex nodes.  A
path is a polyline with two horizontal rays attached at its ends; finite
segments and ray panels are refined together by a global Gauss-Kronrod
(G10/K21) bisection loop, and each ray grows geometrically until its panels
stop contributing.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ._rules import WG, WK, XK
from .errors import BudgetExceeded, NonDecayingTail, NoSeparatingPath

DEFAULT_BUDGET = {1: 200_000, 2: 10_000_000, 3: 500_000_000}
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ContourPath:
    vertices: tuple = ()
    left_offset: float = 0.0
    right_offset: float = 0.0

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if not verts:
            if self.left_offset != self.right_offset:
                raise ValueError("a path without vertices must have equal ray offsets")
            return
        for a, c in zip(verts, verts[1:]):
            if a == c:
                raise ValueError("consecutive vertices must be distinct")
        if abs(verts[0].imag - self.left_offset) > 1e-12 or abs(verts[-1].imag - self.right_offset) > 1e-12:
            raise ValueError("rays must attach to the first and last vertex")

    @classmethod
    def line(cls, offset=0.0, center=0.0):
        """The horizontal line R + i*offset, split at ``center``."""
        return cls((complex(center, offset),), offset, offset)

    def anchors(self):
        if self.vertices:
            return self.vertices
        return (complex(0.0, self.left_offset),)

    def shifted(self, dz):
        dz = complex(dz)
        return ContourPath(tuple(v + dz for v in self.anchors()), self.left_offset + dz.imag, self.right_offset + dz.imag)

    def is_line(self):
        v = self.anchors()
        return all(abs(z.imag - self.left_offset) < 1e-15 for z in v) and self.left_offset == self.right_offset


@dataclass
class QuadratureResult:
    value: complex
    abs_error: float
    evaluations: int

    def __post_init__(self):
        if not math.isfinite(self.abs_error):
            raise ValueError("abs_error must be finite")


@dataclass(order=True)
class _Panel:
    neg_err: float
    a: complex = field(compare=False)
    c: complex = field(compare=False)
    value: complex = field(compare=False)
    err: float = field(compare=False)
    l1: float = field(compare=False)
    ray: int = field(compare=False, default=0)


class _Evaluator:
    def __init__(self, f, budget):
        self.f = f
        self.budget = budget
        self.count = 0

    def panels(self, a, c):
        """GK21 on straight panels a[k] -> c[k]; returns (K, |K-G|, L1)."""
        a = np.asarray(a, dtype=complex)
        c = np.asarray(c, dtype=complex)
        mid = 0.5 * (a + c)
        half = 0.5 * (c - a)
        nodes = mid[:, None] + half[:, None] * XK[None, :]
        self.count += nodes.size
        if self.count > self.budget:
            raise BudgetExceeded(f"quadrature budget of {self.budget} evaluations exhausted")
        vals = np.asarray(self.f(nodes.ravel()), dtype=complex).reshape(nodes.shape)
        if not np.all(np.isfinite(vals)):
            bad = nodes[~np.isfinite(vals)][0]
            raise NonDecayingTail(f"integrand not finite at t={bad}")
        k = half * (vals @ WK)
        g = half * (vals @ WG)
        l1 = np.abs(half) * (np.abs(vals) @ WK)
        return k, np.abs(k - g), l1


def _ray_panels(start, direction, first=1.0, growth=1.6):
    length = first
    a = start
    while True:
        c = a + direction * length
        yield a, c
        a = c
        length *= growth


def integrate(f, path, tol=1e-10, budget=None, atol=0.0, max_ray_length=4000.0, noise=None):
    """Integrate ``f`` along ``path``; ``tol`` is relative, ``atol`` an absolute floor.

    ``noise`` is the relative accuracy of the integrand values themselves; the
    error target never drops below ``noise`` times the L1 norm of the integrand
    (default 50 machine epsilons).
    """
    noise = 50 * _EPS if noise is None else max(float(noise), 50 * _EPS)
    budget = DEFAULT_BUDGET[1] if budget is None else int(budget)
    ev = _Evaluator(f, budget)
    verts = path.anchors()
    heap: list[_Panel] = []

    seg_a = [verts[i] for i in range(len(verts) - 1)]
    seg_c = [verts[i + 1] for i in range(len(verts) - 1)]
    # split finite segments so no initial panel is longer than 1
    a0, c0 = [], []
    for a, c in zip(seg_a, seg_c):
        n = max(1, int(math.ceil(abs(c - a))))
        pts = a + (c - a) * np.linspace(0.0, 1.0, n + 1)
        a0.extend(pts[:-1])
        c0.extend(pts[1:])
    if a0:
        k, e, l1 = ev.panels(a0, c0)
        for i in range(len(a0)):
            heapq.heappush(heap, _Panel(-e[i], a0[i], c0[i], k[i], e[i], l1[i]))

    # rays: left one runs from -inf to verts[0]; orientation handled by swapping ends
    ray_state = []
    for sign, start in ((-1, verts[0]), (1, verts[-1])):
        gen = _ray_panels(start, complex(sign, 0.0))
        ray_state.append({"gen": gen, "sign": sign, "history": [], "length": 0.0, "done": False})

    def grow(rs, n):
        pa, pc = [], []
        for _ in range(n):
            a, c = next(rs["gen"])
            rs["length"] = abs(c - a) + rs["length"]
            if rs["sign"] < 0:
                a, c = c, a
            pa.append(a)
            pc.append(c)
        k, e, l1 = ev.panels(pa, pc)
        for i in range(n):
            heapq.heappush(heap, _Panel(-e[i], pa[i], pc[i], k[i], e[i], l1[i], rs["sign"]))
            rs["history"].append(abs(k[i]) + e[i])

    for rs in ray_state:
        grow(rs, 6)

    def totals():
        val = sum(p.value for p in heap)
        err = sum(p.err for p in heap)
        l1 = sum(p.l1 for p in heap)
        return val, err, l1

    while True:
        val, err, l1 = totals()
        target = max(tol * abs(val), atol, noise * l1)
        # extend rays whose last panels still matter
        extended = False
        for rs in ray_state:
            if rs["done"]:
                continue
            h = rs["history"]
            last = h[-1] + h[-2]
            if last <= 1e-3 * target:
                rs["done"] = True
                continue
            if rs["length"] > max_ray_length:
                raise NonDecayingTail(
                    f"integrand does not decay along the {'right' if rs['sign'] > 0 else 'left'} ray "
                    f"(last panels contribute {last:.3g} after length {rs['length']:.0f})"
                )
            grow(rs, 2)
            extended = True
        if extended:
            continue
        if err <= target:
            return QuadratureResult(complex(val), float(err), ev.count)
        # bisect the worst panels in one vectorized batch
        worst = []
        cutoff = target / max(len(heap), 1)
        while heap and (not worst or -heap[0].neg_err > cutoff) and len(worst) < 64:
            worst.append(heapq.heappop(heap))
        pa, pc = [], []
        for p in worst:
            m = 0.5 * (p.a + p.c)
            pa.extend((p.a, m))
            pc.extend((m, p.c))
        k, e, l1v = ev.panels(pa, pc)
        for i in range(len(pa)):
            heapq.heappush(heap, _Panel(-e[i], pa[i], pc[i], k[i], e[i], l1v[i], worst[i // 2].ray))


def integrate_nested(f, paths, tol=1e-8, budget=None, atol=0.0):
    """Iterated integral of ``f(t1, ..., tn)`` over ``paths`` (outermost first).

    The innermost axis is integrated vectorized; tolerances tighten by a factor
    of 10 per level toward the inner axes.
    """
    dim = len(paths)
    if not 1 <= dim <= 3:
        raise ValueError("integrate_nested supports 1 to 3 dimensions")
    budget = DEFAULT_BUDGET[dim] if budget is None else int(budget)
    counter = [0]

    def level(depth, fixed, tol_here):
        path = paths[depth]
        if depth == dim - 1:

            def inner(t):
                return f(*fixed, t) if fixed else f(t)

            res = integrate(inner, path, tol_here, budget - counter[0], atol=atol * 10.0 ** -(dim - 1 - depth))
            counter[0] += res.evaluations
            return res

        errs = []

        def outer(t):
            out = np.empty(t.shape, dtype=complex)
            for i, ti in enumerate(t):
                r = level(depth + 1, fixed + (ti,), tol_here * 0.1)
                out[i] = r.value
                errs.append(r.abs_error)
            return out

        res = integrate(outer, path, tol_here, budget, atol=atol)
        # inner errors accumulate through the outer weights; bound them crudely
        return QuadratureResult(res.value, res.abs_error + (max(errs) if errs else 0.0), counter[0])

    if counter[0] > budget:
        raise BudgetExceeded("nested quadrature budget exhausted")
    return level(0, (), tol)


def separating_contour(
    below=(), above=(), default_offset=0.0, margin=1e-6, width=0.3, depth=0.25, left_offset=None, right_offset=None
):
    """A path passing below every anchor in ``below`` and above every anchor in ``above``.

    ``below`` anchors carry upward pole rays (a + i*[0, oo)); ``above`` anchors
    carry downward ones.  Returns the horizontal line at ``default_offset``
    when it already separates both families by ``margin``; otherwise inserts
    rectangular notches around the offending anchors.

    ``left_offset``/``right_offset`` let the two rays sit at other heights than
    the middle section (needed when the tails of the integrand decay on
    different horizontal lines); the path then steps vertically outside the
    span of all anchors, where no pole ray can be crossed.
    """
    below = [complex(a) for a in below]
    above = [complex(a) for a in above]
    y0 = float(default_offset)
    for a in below:
        for c in above:
            if abs(a.real - c.real) <= margin and a.imag <= c.imag + margin:
                raise NoSeparatingPath(f"upward pole ray at {a} meets downward ray at {c}")
    bad_up = [a for a in below if a.imag < y0 + margin]
    bad_down = [c for c in above if c.imag > y0 - margin]
    if not bad_up and not bad_down:
        return _with_tails(ContourPath.line(y0), below + above, y0, left_offset, right_offset)

    notches = []
    for anchor, kind, others in [(a, +1, above) for a in bad_up] + [(c, -1, below) for c in bad_down]:
        w = width
        d = depth
        for o in others:
            # anchors of the other family that the notch could swallow
            wrong_side = o.imag > anchor.imag - d if kind > 0 else o.imag < anchor.imag + d
            if wrong_side:
                dx = abs(o.real - anchor.real)
                if dx > margin:
                    w = min(w, 0.45 * dx)
                else:
                    d = min(d, 0.5 * abs(anchor.imag - o.imag))
        if w <= margin or d <= margin:
            raise NoSeparatingPath(f"no room for a detour around {anchor}")
        level = anchor.imag - d if kind > 0 else anchor.imag + d
        notches.append([anchor.real - w, anchor.real + w, level, kind])

    notches.sort()
    merged = []
    for n in notches:
        if merged and n[0] <= merged[-1][1] and n[3] == merged[-1][3]:
            m = merged[-1]
            m[1] = max(m[1], n[1])
            m[2] = min(m[2], n[2]) if n[3] > 0 else max(m[2], n[2])
        elif merged and n[0] < merged[-1][1]:
            raise NoSeparatingPath("detours of opposite direction overlap")
        else:
            merged.append(n)
    verts = []
    for lo, hi, lev, _ in merged:
        verts += [complex(lo, y0), complex(lo, lev), complex(hi, lev), complex(hi, y0)]
    return _with_tails(ContourPath(tuple(verts), y0, y0), below + above, y0, left_offset, right_offset)


def _with_tails(path, anchors, y0, left, right):
    left = y0 if left is None else float(left)
    right = y0 if right is None else float(right)
    if left == y0 and right == y0:
        return path
    xs = [a.real for a in anchors] + [v.real for v in path.vertices]
    lo, hi = min(xs) - 1.0, max(xs) + 1.0
    verts = [complex(lo, y0)] + [v for v in path.vertices if lo < v.real < hi] + [complex(hi, y0)]
    if left != y0:
        verts.insert(0, complex(lo, left))
    if right != y0:
        verts.append(complex(hi, right))
    return ContourPath(tuple(verts), left, right)
