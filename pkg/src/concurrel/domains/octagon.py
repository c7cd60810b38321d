"""Octagon relations as difference-bound matrices over ±x variables.

Encoding (Miné): variable k owns matrix indices 2k (+x_k) and 2k+1 (−x_k);
entry m[i][j] is an upper bound on v_j − v_i.  Matrices are kept *coherent*
(m[i][j] == m[j^1][i^1]); the canonical form is the tight closure for integer
octagons, computed by the compiled kernel when available.

Restriction, unlift, join, comparison and decomposition are performed on
closed matrices only; widened values are deliberately left unclosed so that
ascending chains terminate.
"""

from __future__ import annotations

import os

import numpy as np

from .values import BOT, INF, IntAbs

if os.environ.get("CONCURREL_PURE"):
    from ._closure_py import tight_close_inplace

    KERNEL = "python"
else:
    try:
        from ._closure import tight_close_inplace  # type: ignore[no-redef]

        KERNEL = "compiled"
    except ImportError:
        from ._closure_py import tight_close_inplace

        KERNEL = "python"


class OctRel:
    """Immutable octagon over n integer variables; None matrix means ⊥."""

    __slots__ = ("n", "m", "closed", "_closed_cache")

    def __init__(self, n: int, m: np.ndarray | None, closed: bool = False):
        self.n = n
        self.m = m
        self.closed = closed
        self._closed_cache: OctRel | None = self if closed else None
        if m is not None:
            m.setflags(write=False)

    @property
    def is_bot(self) -> bool:
        return self.m is None


class OctBackend:
    """Factory/operations for octagons over a fixed number of variables.

    ``intervalize=True`` degrades the domain to plain intervals by dropping
    every cross-variable bound during canonicalization (the interval
    configuration shares this one DBM engine).
    """

    def __init__(self, n: int, intervalize: bool = False):
        self.n = n
        self.intervalize = intervalize
        self._bot = OctRel(n, None, True)
        top = np.full((2 * n, 2 * n), INF)
        np.fill_diagonal(top, 0.0)
        self._top = OctRel(n, top, True)

    # -- basics --

    def top(self) -> OctRel:
        return self._top

    def bot(self) -> OctRel:
        return self._bot

    def _drop_relational(self, m: np.ndarray) -> None:
        if self.n <= 1:
            return
        keep = np.zeros((2 * self.n, 2 * self.n), dtype=bool)
        for k in range(self.n):
            keep[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = True
        m[~keep] = INF

    def close(self, r: OctRel) -> OctRel:
        if r.is_bot or r.closed:
            return r
        if r._closed_cache is not None:
            return r._closed_cache
        m = np.array(r.m)
        if tight_close_inplace(m) != 0:
            c = self._bot
        else:
            if self.intervalize:
                self._drop_relational(m)
            c = OctRel(self.n, m, True)
        r._closed_cache = c
        return c

    def is_bot(self, r: OctRel) -> bool:
        return self.close(r).is_bot

    def _norm(self, r: OctRel) -> OctRel:
        """Intervalized octagons must drop cross-variable bounds immediately,
        or raw matrices would transiently denote a smaller γ than their
        canonical form."""
        return self.close(r) if self.intervalize else r

    def eq(self, a: OctRel, b: OctRel) -> bool:
        ca, cb = self.close(a), self.close(b)
        if ca.is_bot or cb.is_bot:
            return ca.is_bot and cb.is_bot
        return bool(np.array_equal(ca.m, cb.m))

    def leq(self, a: OctRel, b: OctRel) -> bool:
        ca = self.close(a)
        if ca.is_bot:
            return True
        if b.is_bot:
            return False
        return bool((ca.m <= b.m).all())

    def meet(self, a: OctRel, b: OctRel) -> OctRel:
        if a.is_bot or b.is_bot:
            return self._bot
        return OctRel(self.n, np.minimum(a.m, b.m))

    def join(self, a: OctRel, b: OctRel) -> OctRel:
        ca, cb = self.close(a), self.close(b)
        if ca.is_bot:
            return cb
        if cb.is_bot:
            return ca
        return OctRel(self.n, np.maximum(ca.m, cb.m), True)

    def widen(self, a: OctRel, b: OctRel) -> OctRel:
        """Keep stable bounds, drop grown ones; result stays unclosed."""
        if a.is_bot:
            return b
        cb = self.close(b)
        if cb.is_bot:
            return a
        m = np.where(cb.m <= a.m, a.m, INF)
        return OctRel(self.n, m)

    # -- constraint plumbing --

    def _set(self, m: np.ndarray, i: int, j: int, c: float) -> None:
        v = min(m[i, j], c)
        m[i, j] = v
        m[j ^ 1, i ^ 1] = v

    def _add_oct_constraint(self, m, coeffs: dict[int, int], bound: float) -> bool:
        """Record sum(coeffs) ≤ bound when octagonal; False if unsupported."""
        items = sorted(coeffs.items())
        if len(items) == 1:
            (x, cx) = items[0]
            if cx == 1:  # x ≤ bound
                self._set(m, 2 * x + 1, 2 * x, 2 * bound)
            elif cx == -1:  # −x ≤ bound
                self._set(m, 2 * x, 2 * x + 1, 2 * bound)
            else:
                return False
            return True
        if len(items) == 2:
            (x, cx), (y, cy) = items
            if abs(cx) != 1 or abs(cy) != 1:
                return False
            # v_j − v_i ≤ bound with v_j the positive occurrence of x
            if cx == 1 and cy == -1:  # x − y
                self._set(m, 2 * y, 2 * x, bound)
            elif cx == -1 and cy == 1:  # y − x
                self._set(m, 2 * x, 2 * y, bound)
            elif cx == 1 and cy == 1:  # x + y
                self._set(m, 2 * y + 1, 2 * x, bound)
            else:  # −x − y
                self._set(m, 2 * y, 2 * x + 1, bound)
            return True
        return False

    def bounds(self, r: OctRel, x: int) -> tuple[float, float]:
        c = self.close(r)
        if c.is_bot:
            raise ValueError("bounds of ⊥")
        hi = c.m[2 * x + 1, 2 * x] / 2.0
        lo = -c.m[2 * x, 2 * x + 1] / 2.0
        return lo, hi

    def _eval_linear(self, r: OctRel, coeffs: dict[int, int], const: int) -> tuple[float, float]:
        lo, hi = float(const), float(const)
        for x, cx in coeffs.items():
            xlo, xhi = self.bounds(r, x)
            if cx >= 0:
                lo, hi = lo + cx * xlo, hi + cx * xhi
            else:
                lo, hi = lo + cx * xhi, hi + cx * xlo
        return lo, hi

    # -- transfer functions --

    def forget(self, r: OctRel, xs: list[int]) -> OctRel:
        c = self.close(r)
        if c.is_bot or not xs:
            return c
        m = np.array(c.m)
        for x in xs:
            m[2 * x : 2 * x + 2, :] = INF
            m[:, 2 * x : 2 * x + 2] = INF
            m[2 * x, 2 * x] = m[2 * x + 1, 2 * x + 1] = 0.0
        return OctRel(self.n, m, True)

    def restrict(self, r: OctRel, keep: set[int]) -> OctRel:
        return self.forget(r, [x for x in range(self.n) if x not in keep])

    def set_interval(self, r: OctRel, x: int, lo: float, hi: float) -> OctRel:
        """Assign the abstract value [lo, hi] to x (forget, then bound)."""
        if lo > hi:
            return self._bot
        f = self.forget(r, [x])
        if f.is_bot:
            return f
        m = np.array(f.m)
        if hi < INF:
            self._set(m, 2 * x + 1, 2 * x, 2 * hi)
        if lo > -INF:
            self._set(m, 2 * x, 2 * x + 1, -2 * lo)
        return OctRel(self.n, m)

    def assign_linear(self, r: OctRel, x: int, coeffs: dict[int, int], const: int) -> OctRel:
        c = self.close(r)
        if c.is_bot:
            return c
        if coeffs == {x: 1}:  # x := x + const, an exact shift
            m = np.array(c.m)
            m[:, 2 * x] += const
            m[2 * x, :] -= const
            m[:, 2 * x + 1] -= const
            m[2 * x + 1, :] += const
            m[2 * x, 2 * x] = m[2 * x + 1, 2 * x + 1] = 0.0
            return OctRel(self.n, m, True)
        if not coeffs:
            return self.set_interval(c, x, const, const)
        if len(coeffs) == 1:
            (y, cy) = next(iter(coeffs.items()))
            if y != x and cy in (1, -1):
                f = self.forget(c, [x])
                m = np.array(f.m)
                if cy == 1:  # x − y = const
                    self._set(m, 2 * y, 2 * x, const)
                    self._set(m, 2 * x, 2 * y, -const)
                else:  # x + y = const
                    self._set(m, 2 * y + 1, 2 * x, const)
                    self._set(m, 2 * y, 2 * x + 1, -const)
                return self._norm(OctRel(self.n, m))
            if y == x and cy == -1:  # x := −x + const
                m = np.array(c.m)
                m[[2 * x, 2 * x + 1], :] = m[[2 * x + 1, 2 * x], :]
                m[:, [2 * x, 2 * x + 1]] = m[:, [2 * x + 1, 2 * x]]
                return self.assign_linear(OctRel(self.n, m, True), x, {x: 1}, const)
        lo, hi = self._eval_linear(c, coeffs, const)
        return self.set_interval(c, x, lo, hi)

    def guard_leq0(self, r: OctRel, coeffs: dict[int, int], const: int) -> OctRel:
        """Refine by ``sum(coeffs·v) + const ≤ 0``; sound fallback otherwise."""
        c = self.close(r)
        if c.is_bot:
            return c
        work = {x: cf for x, cf in coeffs.items() if cf != 0}
        m = np.array(c.m)
        if self._add_oct_constraint(m, work, -const):
            return self._norm(OctRel(self.n, m))
        lo, _hi = self._eval_linear(c, work, const)
        return self._bot if lo > 0 else c

    def contains(self, r: OctRel, vals: list[int]) -> bool:
        if r.is_bot:
            return False
        v = np.empty(2 * self.n)
        v[0::2] = vals
        v[1::2] = [-x for x in vals]
        diff = v[None, :] - v[:, None]
        return bool((diff <= r.m).all())

    # -- rendering --

    def render(self, r: OctRel, names: list[str]) -> list[str]:
        c = self.close(r)
        if c.is_bot:
            return ["⊥"]
        out = []
        box = [self.bounds(c, k) for k in range(self.n)]
        for k, (lo, hi) in enumerate(box):
            if lo == hi:
                out.append(f"{names[k]}={int(lo)}")
            else:
                if hi < INF:
                    out.append(f"{names[k]}<={int(hi)}")
                if lo > -INF:
                    out.append(f"{names[k]}>={int(lo)}")
        for i in range(self.n):
            (ilo, ihi) = box[i]
            for j in range(i + 1, self.n):
                (jlo, jhi) = box[j]
                # bounds not already implied by the unary ones
                b = c.m[2 * i, 2 * j]  # x_j − x_i ≤ b
                if b < INF and not jhi - ilo <= b:
                    out.append(f"{names[j]}-{names[i]}<={int(b)}")
                b = c.m[2 * j, 2 * i]  # x_i − x_j ≤ b
                if b < INF and not ihi - jlo <= b:
                    out.append(f"{names[i]}-{names[j]}<={int(b)}")
                b = c.m[2 * i + 1, 2 * j]  # x_i + x_j ≤ b
                if b < INF and not ihi + jhi <= b:
                    out.append(f"{names[i]}+{names[j]}<={int(b)}")
                b = c.m[2 * i, 2 * j + 1]  # −x_i − x_j ≤ b
                if b < INF and not -(ilo + jlo) <= b:
                    out.append(f"{names[i]}+{names[j]}>={int(-b)}")
        return sorted(out) or ["⊤"]

    def unlift1(self, r: OctRel, x: int):
        c = self.close(r)
        if c.is_bot:
            return BOT
        lo, hi = self.bounds(c, x)
        if lo == -INF and hi == INF:
            return IntAbs.top()
        return IntAbs(lo, hi)
