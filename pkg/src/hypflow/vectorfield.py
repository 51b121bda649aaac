"""Polynomial vector fields over exact rationals.

A field component is a sparse polynomial {exponent tuple -> Fraction}.  All
structural operations (shift to an equilibrium, linear/nonlinear split,
derivative bounds) are exact; only point evaluation has a ball-valued
variant.  The nonlinear remainder F of a split carries the quadratic-decay
certificate: a bound L with ||DF(x)||_HS <= L|x| for |x| <= R0, from which
the Lipschitz modulus d(m) used by the manifold engine is derived —
|F(x) - F(y)| <= 2^-m |x - y| whenever |x|, |y| <= 2^-d(m).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .balls import Ball
from .errors import DimensionMismatch, NotAnEquilibrium, SchemaError
from .exactmath import ceil_log2, parse_rational, sqrt_upper

Monomial = tuple[int, ...]
Poly = dict[Monomial, Fraction]


def _poly_mul(a: Poly, b: Poly, dim: int) -> Poly:
    out: Poly = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            c = out.get(e, Fraction(0)) + ca * cb
            if c:
                out[e] = c
            elif e in out:
                del out[e]
    return out


def _poly_pow(p: Poly, k: int, dim: int) -> Poly:
    out: Poly = {(0,) * dim: Fraction(1)}
    for _ in range(k):
        out = _poly_mul(out, p, dim)
    return out


def _poly_eval_exact(p: Poly, x: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for e, c in p.items():
        term = c
        for xi, ei in zip(x, e):
            if ei:
                term *= xi ** ei
        total += term
    return total


def _poly_eval_ball(p: Poly, x: Sequence[Ball]) -> Ball:
    # cache powers per variable up to the needed degree
    maxdeg = [0] * len(x)
    for e in p:
        for i, ei in enumerate(e):
            maxdeg[i] = max(maxdeg[i], ei)
    pows = []
    for xi, d in zip(x, maxdeg):
        col = [Ball(1)]
        for _ in range(d):
            col.append(col[-1] * xi)
        pows.append(col)
    total = Ball(0)
    for e, c in p.items():
        term = Ball(c)
        for i, ei in enumerate(e):
            if ei:
                term = term * pows[i][ei]
        total = total + term
    return total


class PolyVectorField:
    """x' = f(x) with polynomial components over Q."""

    __slots__ = ("dim", "components")

    def __init__(self, dim: int, components: Sequence[Mapping[Monomial, Fraction]]):
        if len(components) != dim:
            raise DimensionMismatch(
                f"{len(components)} components for dimension {dim}")
        comps: list[Poly] = []
        for comp in components:
            poly: Poly = {}
            for e, c in comp.items():
                e = tuple(int(v) for v in e)
                if len(e) != dim or any(v < 0 for v in e):
                    raise SchemaError(f"bad exponent tuple {e}")
                c = Fraction(c)
                if c:
                    poly[e] = poly.get(e, Fraction(0)) + c
            comps.append({e: c for e, c in poly.items() if c})
        self.dim = dim
        self.components = comps

    # -- parsing ---------------------------------------------------------------

    @staticmethod
    def from_document(doc: Mapping) -> "PolyVectorField":
        """Build from the JSON system schema (components part)."""
        try:
            dim = int(doc["dim"])
            comps_doc = doc["components"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"system document missing dim/components: {exc}") from exc
        if dim < 1:
            raise SchemaError("dimension must be positive")
        if len(comps_doc) != dim:
            raise DimensionMismatch(
                f"{len(comps_doc)} components for dimension {dim}")
        comps = []
        for comp in comps_doc:
            poly: Poly = {}
            for mono in comp:
                try:
                    c = parse_rational(str(mono["coeff"]))
                    powers = tuple(int(p) for p in mono["powers"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise SchemaError(f"bad monomial {mono!r}: {exc}") from exc
                if len(powers) != dim or any(p < 0 for p in powers):
                    raise SchemaError(f"bad powers {powers!r} for dim {dim}")
                poly[powers] = poly.get(powers, Fraction(0)) + c
            comps.append(poly)
        return PolyVectorField(dim, comps)

    def to_document(self) -> dict:
        from .exactmath import format_rational
        comps = []
        for poly in self.components:
            comps.append([{"coeff": format_rational(c), "powers": list(e)}
                          for e, c in sorted(poly.items())])
        return {"dim": self.dim, "components": comps}

    # -- evaluation --------------------------------------------------------------

    def eval_exact(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        if len(x) != self.dim:
            raise DimensionMismatch("point dimension differs from field")
        x = [Fraction(v) for v in x]
        return tuple(_poly_eval_exact(p, x) for p in self.components)

    def eval_ball(self, x: Sequence[Ball]) -> list[Ball]:
        if len(x) != self.dim:
            raise DimensionMismatch("point dimension differs from field")
        return [_poly_eval_ball(p, x) for p in self.components]

    def eval_float(self, x):
        """Plain float evaluation for the reference integrator."""
        out = []
        for p in self.components:
            total = 0.0
            for e, c in p.items():
                term = float(c)
                for xi, ei in zip(x, e):
                    if ei:
                        term *= xi ** ei
                total += term
            out.append(total)
        return out

    # -- calculus ----------------------------------------------------------------

    def jacobian_exact(self, x: Sequence[Fraction]) -> list[list[Fraction]]:
        x = [Fraction(v) for v in x]
        jac = []
        for p in self.components:
            row = []
            for j in range(self.dim):
                d = Fraction(0)
                for e, c in p.items():
                    if e[j]:
                        e2 = list(e)
                        e2[j] -= 1
                        term = c * e[j]
                        for xi, ei in zip(x, e2):
                            if ei:
                                term *= xi ** ei
                        d += term
                row.append(d)
            jac.append(row)
        return jac

    def shift_to_origin(self, x0: Sequence[Fraction]) -> "PolyVectorField":
        """g with g(y) = f(y + x0); requires f(x0) = 0 exactly."""
        x0 = [Fraction(v) for v in x0]
        if len(x0) != self.dim:
            raise DimensionMismatch("equilibrium dimension differs from field")
        value = self.eval_exact(x0)
        if any(v != 0 for v in value):
            raise NotAnEquilibrium(f"f(x0) = {tuple(map(str, value))} != 0")
        dim = self.dim
        shifted_var: list[Poly] = []
        for i in range(dim):
            e = tuple(int(j == i) for j in range(dim))
            shifted_var.append({e: Fraction(1), (0,) * dim: x0[i]})
        comps = []
        for p in self.components:
            out: Poly = {}
            for e, c in p.items():
                term: Poly = {(0,) * dim: c}
                for i, ei in enumerate(e):
                    if ei:
                        term = _poly_mul(term, _poly_pow(shifted_var[i], ei, dim), dim)
                for ee, cc in term.items():
                    v = out.get(ee, Fraction(0)) + cc
                    if v:
                        out[ee] = v
                    elif ee in out:
                        del out[ee]
            comps.append(out)
        return PolyVectorField(dim, comps)

    def negated(self) -> "PolyVectorField":
        return PolyVectorField(self.dim, [{e: -c for e, c in p.items()}
                                          for p in self.components])

    def max_degree(self) -> int:
        deg = 0
        for p in self.components:
            for e in p:
                deg = max(deg, sum(e))
        return deg


class NonlinearRemainder:
    """F = g - Ax for an equilibrium-shifted field g: F(0) = 0, DF(0) = 0.

    Carries L = HS bound of the second-derivative tensor over |x| <= R0, so
    ||DF(x)||_HS <= L|x| there, hence |F(x)-F(y)| <= L max(|x|,|y|) |x-y|.
    """

    __slots__ = ("field", "L", "R0")

    def __init__(self, field: PolyVectorField, R0: Fraction = Fraction(1)):
        self.field = field
        self.R0 = Fraction(R0)
        if self.R0 <= 0:
            raise ValueError("R0 must be positive")
        self.L = self._second_derivative_bound()

    def _second_derivative_bound(self) -> Fraction:
        dim = self.field.dim
        acc = Fraction(0)
        for p in self.field.components:
            for j in range(dim):
                for k in range(dim):
                    bound = Fraction(0)
                    for e, c in p.items():
                        deg = sum(e)
                        if deg < 2:
                            continue
                        if j == k:
                            mult = e[j] * (e[j] - 1)
                        else:
                            mult = e[j] * e[k]
                        if mult == 0:
                            continue
                        factor = self.R0 ** (deg - 2)
                        bound += abs(c) * mult * factor
                    acc += bound * bound
        return sqrt_upper(acc)

    def eval_exact(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return self.field.eval_exact(x)

    def eval_ball(self, x: Sequence[Ball]) -> list[Ball]:
        return self.field.eval_ball(x)

    def eval_float(self, x):
        return self.field.eval_float(x)

    def contraction_depth(self, m: int) -> int:
        """Smallest certified d with |F(x)-F(y)| <= 2^-m |x-y| on |x|,|y| <= 2^-d.

        d(m) = m + ceil(log2 max(L, 1)), then clamped so 2^-d <= R0.
        """
        if m < 0:
            raise ValueError("precision index must be nonnegative")
        d = m + (ceil_log2(self.L) if self.L > 1 else 0)
        clamp = ceil_log2(1 / self.R0) if self.R0 < 1 else 0
        return max(d, clamp, 0)


def split_linear(g: PolyVectorField) -> tuple[list[list[Fraction]], NonlinearRemainder]:
    """Split an equilibrium-shifted field into (A, F) with g = Ax + F.

    Requires the constant terms to vanish (shifted field); A is dense
    rational, F keeps every monomial of total degree >= 2.
    """
    dim = g.dim
    zero = (0,) * dim
    A = [[Fraction(0)] * dim for _ in range(dim)]
    comps: list[Poly] = []
    for i, p in enumerate(g.components):
        if p.get(zero, Fraction(0)) != 0:
            raise NotAnEquilibrium("field is not shifted: constant term remains")
        rest: Poly = {}
        for e, c in p.items():
            deg = sum(e)
            if deg == 1:
                j = e.index(1)
                A[i][j] = c
            elif deg >= 2:
                rest[e] = c
        comps.append(rest)
    return A, NonlinearRemainder(PolyVectorField(dim, comps))
