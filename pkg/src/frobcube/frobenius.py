"""Frobenius extensions arranged on a hypercube of subrings.

A hypercube assigns a subring R^I of a fixed polynomial ring to every
subset I of a color set, contravariantly: bigger subsets mean smaller
rings.  Every covering pair I subset of I+{color} carries a trace map and a
pair of dual module bases.  This module provides:

  * the edge data structure and the generic dual-basis solver,
  * composite traces, bases and coproducts along chains,
  * the mu and Pi invariants,
  * the structural checks (non-degeneracy, compatibility of squares,
    the star basis condition, mu-regularity, triple divisibility),
  * a small tensor type for two-legged sums used by the coproduct
    identities.

Concrete hypercubes (the univariate sign-involution example and the
symmetric-group invariant towers) are built in the instances module.
"""

from __future__ import annotations

import random
from typing import Callable, Iterable, Optional, Sequence

from gmpy2 import mpq

from .polyring import (
    Polynomial,
    exact_divide,
)

Subset = frozenset[str]

EMPTY: Subset = frozenset()


class FrobeniusError(Exception):
    """Base class for structural errors in hypercube data."""


class MembershipError(FrobeniusError):
    """An element does not lie in the ring it was claimed to."""


class DegenerateBasis(FrobeniusError):
    """A Gram matrix was singular: the proposed basis is not a basis."""


class NonPolynomialDual(FrobeniusError):
    """Dual-basis entries fail to be polynomial; freeness is violated."""


# -- reports ---------------------------------------------------------------


class CheckItem:
    """One named pass/fail result with an optional witness string."""

    __slots__ = ("name", "passed", "witness")

    def __init__(self, name: str, passed: bool, witness: Optional[str] = None):
        self.name = name
        self.passed = passed
        self.witness = witness

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed}
        if self.witness is not None:
            out["witness"] = self.witness
        return out

    def __repr__(self) -> str:
        return f"CheckItem({self.name!r}, {self.passed}, {self.witness!r})"


class CheckReport:
    """An ordered collection of check items, grouped under a title."""

    def __init__(self, title: str):
        self.title = title
        self.items: list[CheckItem] = []

    def add(self, name: str, passed: bool, witness: Optional[str] = None) -> None:
        self.items.append(CheckItem(name, passed, witness))

    def extend(self, other: "CheckReport") -> None:
        self.items.extend(other.items)

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    @property
    def failures(self) -> list[CheckItem]:
        return [item for item in self.items if not item.passed]

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [item.to_dict() for item in self.items],
        }

    def format_text(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for item in self.items:
            mark = "ok" if item.passed else "FAIL"
            line = f"  [{mark}] {item.name}"
            if item.witness and not item.passed:
                line += f"  ({item.witness})"
            lines.append(line)
        return "\n".join(lines)


# -- linear algebra over the polynomial ring -------------------------------


def _bareiss_determinant(matrix: list[list[Polynomial]]) -> Polynomial:
    """Exact determinant by fraction-free Gaussian elimination.

    All intermediate divisions are exact by the Bareiss identity, so the
    computation stays inside the polynomial ring.
    """
    size = len(matrix)
    if size == 0:
        raise ValueError("empty matrix")
    nvars = matrix[0][0].nvars
    m = [row[:] for row in matrix]
    sign = 1
    prev = Polynomial.one(nvars)
    for k in range(size - 1):
        if m[k][k].is_zero():
            pivot_row = next(
                (r for r in range(k + 1, size) if not m[r][k].is_zero()), None
            )
            if pivot_row is None:
                return Polynomial.zero(nvars)
            m[k], m[pivot_row] = m[pivot_row], m[k]
            sign = -sign
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                num = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                quot = exact_divide(num, prev)
                if quot is None:
                    raise ArithmeticError("inexact division in determinant")
                m[i][j] = quot
        prev = m[k][k]
    det = m[size - 1][size - 1]
    return det if sign == 1 else -det


def _minor(matrix: list[list[Polynomial]], row: int, col: int) -> list[list[Polynomial]]:
    return [
        [entry for j, entry in enumerate(r) if j != col]
        for i, r in enumerate(matrix)
        if i != row
    ]


def solve_dual_basis(
    trace: Callable[[Polynomial], Polynomial],
    module_basis: Sequence[Polynomial],
) -> tuple[Polynomial, ...]:
    """Solve for the dual basis of a module basis under a trace pairing.

    Builds the Gram matrix G[a][b] = trace(basis[a]*basis[b]), inverts it
    by the adjugate, and returns duals y with trace(basis[a]*y[b]) equal
    to the Kronecker delta.  The verification is performed before
    returning.

    Raises DegenerateBasis when G is singular and NonPolynomialDual when
    an inverse entry is not polynomial (the proposed basis spans only
    after localization).
    """
    basis = list(module_basis)
    size = len(basis)
    if size == 0:
        raise DegenerateBasis("empty basis")
    nvars = basis[0].nvars
    gram = [[trace(basis[a] * basis[b]) for b in range(size)] for a in range(size)]
    if size == 1:
        det = gram[0][0]
        cof = [[Polynomial.one(nvars)]]
    else:
        det = _bareiss_determinant(gram)
        cof = [
            [
                _bareiss_determinant(_minor(gram, a, b)).scale((-1) ** (a + b))
                for b in range(size)
            ]
            for a in range(size)
        ]
    if det.is_zero():
        raise DegenerateBasis("singular Gram matrix")
    duals = []
    for b in range(size):
        # adj(G)[b][a] = cofactor[a][b]; dual_b = sum_a inv[b][a]*basis[a]
        numerator = Polynomial.zero(nvars)
        for a in range(size):
            numerator = numerator + cof[a][b] * basis[a]
        dual = exact_divide(numerator, det)
        if dual is None:
            raise NonPolynomialDual(f"dual of basis element {b} is not polynomial")
        duals.append(dual)
    for a in range(size):
        for b in range(size):
            value = trace(basis[a] * duals[b])
            expected = Polynomial.constant(nvars, 1 if a == b else 0)
            if value != expected:
                raise NonPolynomialDual(
                    f"duality check failed at pair ({a}, {b}): got {value}"
                )
    return tuple(duals)


# -- edges -----------------------------------------------------------------


class FrobeniusEdge:
    """One covering pair of the hypercube: lower subset, lower+color.

    Carries the trace (a map from the lower ring onto the upper ring),
    the stored module basis of the lower ring over the upper one, and the
    solved dual basis.  Trace values and basis expansions are memoized
    because diagram evaluation hits the same elements repeatedly.
    """

    def __init__(
        self,
        lower: Subset,
        color: str,
        trace_fn: Callable[[Polynomial], Polynomial],
        basis: Sequence[Polynomial],
        duals: Optional[Sequence[Polynomial]] = None,
    ):
        self.lower = lower
        self.color = color
        self.upper: Subset = lower | {color}
        self._trace_fn = trace_fn
        self.basis: tuple[Polynomial, ...] = tuple(basis)
        if duals is None:
            duals = solve_dual_basis(self._trace_fn, self.basis)
        self.duals: tuple[Polynomial, ...] = tuple(duals)
        if len(self.duals) != len(self.basis):
            raise FrobeniusError("basis and dual basis have different lengths")
        self._trace_cache: dict[Polynomial, Polynomial] = {}
        self._expand_cache: dict[Polynomial, tuple[Polynomial, ...]] = {}

    @property
    def rank(self) -> int:
        return len(self.basis)

    def trace(self, f: Polynomial) -> Polynomial:
        cached = self._trace_cache.get(f)
        if cached is None:
            cached = self._trace_fn(f)
            self._trace_cache[f] = cached
        return cached

    @property
    def mu(self) -> Polynomial:
        """The product of coproduct legs: sum of basis[a]*duals[a]."""
        total = Polynomial.zero(self.basis[0].nvars)
        for x, y in zip(self.basis, self.duals):
            total = total + x * y
        return total

    def expand(self, f: Polynomial) -> tuple[Polynomial, ...]:
        """Coefficients c with f = sum_a basis[a]*c[a], c[a] in the upper ring.

        Uses the projection formula c[a] = trace(duals[a]*f).
        """
        cached = self._expand_cache.get(f)
        if cached is None:
            cached = tuple(self.trace(y * f) for y in self.duals)
            self._expand_cache[f] = cached
        return cached

    def coproduct_pairs(self) -> tuple[tuple[Polynomial, Polynomial], ...]:
        return tuple(zip(self.basis, self.duals))


# -- two-legged tensors ----------------------------------------------------


class TensorInRings:
    """A sum of two-legged pure tensors with declared leg and base rings.

    Represents an element of R^left tensor R^right over R^base.  The
    normal form expands the left leg over the stored basis of R^left over
    R^base and slides the resulting coefficients into the right leg.
    """

    def __init__(
        self,
        cube: "FrobeniusHypercube",
        left: Subset,
        right: Subset,
        base: Subset,
        pairs: Iterable[tuple[Polynomial, Polynomial]],
    ):
        self.cube = cube
        self.left = left
        self.right = right
        self.base = base
        self.pairs: tuple[tuple[Polynomial, Polynomial], ...] = tuple(pairs)
        for a, b in self.pairs:
            if not cube.contains(a, left):
                raise MembershipError(f"left leg {a} is not in {cube.format_subset(left)}")
            if not cube.contains(b, right):
                raise MembershipError(f"right leg {b} is not in {cube.format_subset(right)}")

    def scale_left(self, f: Polynomial) -> "TensorInRings":
        return TensorInRings(
            self.cube, self.left, self.right, self.base,
            [(f * a, b) for a, b in self.pairs],
        )

    def scale_right(self, f: Polynomial) -> "TensorInRings":
        return TensorInRings(
            self.cube, self.left, self.right, self.base,
            [(a, b * f) for a, b in self.pairs],
        )

    def __add__(self, other: "TensorInRings") -> "TensorInRings":
        if (self.left, self.right, self.base) != (other.left, other.right, other.base):
            raise MembershipError("tensor ring labels differ")
        return TensorInRings(
            self.cube, self.left, self.right, self.base, self.pairs + other.pairs
        )

    def normal_form(self) -> dict[int, Polynomial]:
        """Map from left-basis index to the accumulated right leg."""
        basis, duals = self.cube.composite_pairs(self.left, self.base)
        out: dict[int, Polynomial] = {}
        for a, b in self.pairs:
            for idx, y in enumerate(duals):
                coeff = self.cube.trace_raw(self.left, self.base, y * a)
                if coeff.is_zero():
                    continue
                term = coeff * b
                acc = out.get(idx)
                total = term if acc is None else acc + term
                if total.is_zero():
                    out.pop(idx, None)
                else:
                    out[idx] = total
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorInRings):
            return NotImplemented
        if (self.left, self.right, self.base) != (other.left, other.right, other.base):
            return False
        return self.normal_form() == other.normal_form()

    def __repr__(self) -> str:
        cube = self.cube
        body = " + ".join(f"({a})(x)({b})" for a, b in self.pairs) or "0"
        return (
            f"{body} in {cube.format_subset(self.left)}(x){cube.format_subset(self.right)}"
            f" over {cube.format_subset(self.base)}"
        )


# -- the hypercube ---------------------------------------------------------


class FrobeniusHypercube:
    """Rings indexed by subsets of a color set with traces on every edge.

    Subclasses provide the concrete data through four hooks:

      contains(f, I)            membership of f in R^I
      build_trace(lower, color) the edge trace as a callable
      build_basis(lower, color) the stored module basis of the edge
      spanning_monomials(I, d)  a spanning set of the degree-d part of R^I
      symmetrize(f, I)          a projection of f into R^I (for sampling)

    Everything else (dual bases, composites, mu, Pi, checks) is generic.
    """

    def __init__(self, colors: Sequence[str], nvars: int, degree_bound: int):
        self.colors: tuple[str, ...] = tuple(colors)
        if len(set(self.colors)) != len(self.colors):
            raise FrobeniusError("duplicate colors")
        self.nvars = nvars
        self.degree_bound = degree_bound
        self._edges: dict[tuple[Subset, str], FrobeniusEdge] = {}
        self._mu_cache: dict[tuple[Subset, Subset], Polynomial] = {}
        self._pi_cache: dict[Subset, Optional[Polynomial]] = {}
        self._composite_cache: dict[
            tuple[Subset, Subset], tuple[tuple[Polynomial, ...], tuple[Polynomial, ...]]
        ] = {}

    # hooks ---------------------------------------------------------------

    def contains(self, f: Polynomial, I: Subset) -> bool:
        raise NotImplementedError

    def build_trace(self, lower: Subset, color: str) -> Callable[[Polynomial], Polynomial]:
        raise NotImplementedError

    def build_basis(self, lower: Subset, color: str) -> tuple[Polynomial, ...]:
        raise NotImplementedError

    def spanning_monomials(self, I: Subset, degree: int) -> list[Polynomial]:
        raise NotImplementedError

    def symmetrize(self, f: Polynomial, I: Subset) -> Polynomial:
        raise NotImplementedError

    def build_duals(self, lower: Subset, color: str) -> Optional[tuple[Polynomial, ...]]:
        """Optional hook: pre-specified duals for an edge (else solved)."""
        return None

    # subset utilities ----------------------------------------------------

    def color_index(self, color: str) -> int:
        try:
            return self.colors.index(color)
        except ValueError:
            raise FrobeniusError(f"unknown color {color!r}") from None

    def sort_colors(self, subset: Iterable[str]) -> list[str]:
        return sorted(subset, key=self.color_index)

    def format_subset(self, I: Subset) -> str:
        return "{" + ",".join(self.sort_colors(I)) + "}"

    def subsets(self) -> list[Subset]:
        """All subsets of the color set, smallest first, then by color order."""
        out: list[Subset] = []
        n = len(self.colors)
        for mask in range(1 << n):
            out.append(frozenset(self.colors[i] for i in range(n) if mask >> i & 1))
        out.sort(key=lambda s: (len(s), [self.color_index(c) for c in self.sort_colors(s)]))
        return out

    def validate_subset(self, I: Iterable[str]) -> Subset:
        sub = frozenset(I)
        for c in sub:
            self.color_index(c)
        return sub

    # edges and chains -----------------------------------------------------

    def edge(self, lower: Subset, color: str) -> FrobeniusEdge:
        if color in lower:
            raise FrobeniusError(f"color {color!r} already in {self.format_subset(lower)}")
        key = (lower, color)
        cached = self._edges.get(key)
        if cached is None:
            cached = FrobeniusEdge(
                lower,
                color,
                self.build_trace(lower, color),
                self.build_basis(lower, color),
                self.build_duals(lower, color),
            )
            self._edges[key] = cached
        return cached

    def chain(self, lower: Subset, upper: Subset) -> list[FrobeniusEdge]:
        """The canonical chain of edges from lower up to upper.

        Colors of the difference are added one at a time in canonical
        color order; compatibility makes the choice immaterial, and a
        fixed choice makes every derived quantity deterministic.
        """
        if not lower <= upper:
            raise FrobeniusError(
                f"{self.format_subset(lower)} is not a subset of {self.format_subset(upper)}"
            )
        edges = []
        current = lower
        for color in self.sort_colors(upper - lower):
            edges.append(self.edge(current, color))
            current = current | {color}
        return edges

    # traces and coproducts ------------------------------------------------

    def trace_raw(self, lower: Subset, upper: Subset, f: Polynomial) -> Polynomial:
        out = f
        for e in self.chain(lower, upper):
            out = e.trace(out)
        return out

    def trace(self, lower: Subset, upper: Subset, f: Polynomial) -> Polynomial:
        if not self.contains(f, lower):
            raise MembershipError(f"{f} is not in {self.format_subset(lower)}")
        return self.trace_raw(lower, upper, f)

    def composite_pairs(
        self, lower: Subset, upper: Subset
    ) -> tuple[tuple[Polynomial, ...], tuple[Polynomial, ...]]:
        """Basis and duals of R^lower over R^upper along the canonical chain.

        The product of dual pairs along a chain is again a dual pair, so
        no new solving is needed.
        """
        key = (lower, upper)
        cached = self._composite_cache.get(key)
        if cached is not None:
            return cached
        basis: list[Polynomial] = [Polynomial.one(self.nvars)]
        duals: list[Polynomial] = [Polynomial.one(self.nvars)]
        for e in self.chain(lower, upper):
            basis = [x * p for x in basis for p in e.basis]
            duals = [y * q for y in duals for q in e.duals]
        result = (tuple(basis), tuple(duals))
        self._composite_cache[key] = result
        return result

    def rank(self, lower: Subset, upper: Subset) -> int:
        rank = 1
        for e in self.chain(lower, upper):
            rank *= e.rank
        return rank

    def coproduct(self, lower: Subset, upper: Subset, f: Optional[Polynomial] = None) -> TensorInRings:
        """The element f*Delta(1) of R^lower tensor R^lower over R^upper."""
        basis, duals = self.composite_pairs(lower, upper)
        if f is None:
            f = Polynomial.one(self.nvars)
        elif not self.contains(f, lower):
            raise MembershipError(f"{f} is not in {self.format_subset(lower)}")
        pairs = [(f * x, y) for x, y in zip(basis, duals)]
        return TensorInRings(self, lower, lower, upper, pairs)

    def expand(self, lower: Subset, upper: Subset, f: Polynomial) -> tuple[Polynomial, ...]:
        """Coefficients of f over the composite basis of lower over upper."""
        _, duals = self.composite_pairs(lower, upper)
        return tuple(self.trace_raw(lower, upper, y * f) for y in duals)

    # mu and Pi ------------------------------------------------------------

    def mu(self, lower: Subset, upper: Subset) -> Polynomial:
        key = (lower, upper)
        cached = self._mu_cache.get(key)
        if cached is None:
            cached = Polynomial.one(self.nvars)
            for e in self.chain(lower, upper):
                cached = cached * e.mu
            self._mu_cache[key] = cached
        return cached

    def mu_total(self, I: Iterable[str]) -> Polynomial:
        """mu of R over R^I, the most common specialization."""
        return self.mu(EMPTY, self.validate_subset(I))

    def pi(self, I: Iterable[str]) -> Optional[Polynomial]:
        """The multiplicative factor with mu_I equal to the product of
        pi(J) over all subsets J of I.  None when a division fails (the
        factor then lives only in a localization).
        """
        sub = self.validate_subset(I)
        if sub in self._pi_cache:
            return self._pi_cache[sub]
        if not sub:
            result: Optional[Polynomial] = Polynomial.one(self.nvars)
        else:
            product = Polynomial.one(self.nvars)
            failed = False
            for other in self.subsets():
                if other < sub:
                    factor = self.pi(other)
                    if factor is None:
                        failed = True
                        break
                    product = product * factor
            if failed:
                result = None
            else:
                result = exact_divide(self.mu_total(sub), product)
        self._pi_cache[sub] = result
        return result

    # sampling -------------------------------------------------------------

    def random_invariant(self, rng: random.Random, I: Subset, max_degree: Optional[int] = None) -> Polynomial:
        """A random element of R^I, nonzero with high probability."""
        if max_degree is None:
            max_degree = max(2, self.degree_bound // 2)
        f = Polynomial.zero(self.nvars)
        for _ in range(3):
            exps = [0] * self.nvars
            for _ in range(rng.randint(0, max_degree)):
                exps[rng.randrange(self.nvars)] += 1
            f = f + Polynomial.monomial(exps, rng.randint(-4, 4))
        return self.symmetrize(f, I)

    # checks ---------------------------------------------------------------

    def squares(self) -> list[tuple[Subset, str, str]]:
        """All squares (root, color pair) in deterministic order."""
        out = []
        for root in self.subsets():
            rest = self.sort_colors(set(self.colors) - root)
            for i in range(len(rest)):
                for j in range(i + 1, len(rest)):
                    out.append((root, rest[i], rest[j]))
        return out

    def check_nondegeneracy(self) -> CheckReport:
        """Stored bases: membership, duality deltas, trace linearity."""
        report = CheckReport("non-degeneracy")
        rng = random.Random(2024)
        one = Polynomial.one(self.nvars)
        zero = Polynomial.zero(self.nvars)
        for root in self.subsets():
            for color in self.sort_colors(set(self.colors) - root):
                e = self.edge(root, color)
                label = f"edge {self.format_subset(root)} + {color}"
                member_ok = all(
                    self.contains(v, root) for v in e.basis + e.duals
                )
                report.add(f"{label}: bases lie in the lower ring", member_ok)
                delta_ok = True
                witness = None
                for a, x in enumerate(e.basis):
                    for b, y in enumerate(e.duals):
                        value = e.trace(x * y)
                        expected = one if a == b else zero
                        if value != expected:
                            delta_ok = False
                            witness = f"pair ({a},{b}) gave {value}"
                            break
                    if not delta_ok:
                        break
                report.add(f"{label}: duality deltas", delta_ok, witness)
                lin_ok = True
                witness = None
                for _ in range(3):
                    g = self.random_invariant(rng, e.upper)
                    f = self.random_invariant(rng, root)
                    if e.trace(g * f) != g * e.trace(f):
                        lin_ok = False
                        witness = f"g={g}, f={f}"
                        break
                    if not self.contains(e.trace(f), e.upper):
                        lin_ok = False
                        witness = f"trace({f}) left the upper ring"
                        break
                report.add(f"{label}: linearity over the upper ring", lin_ok, witness)
        return report

    def check_compatibility(self) -> CheckReport:
        """Both composite traces around every square agree.

        Checked on all spanning monomials of the root ring up to the
        degree bound, plus seeded random spot checks of higher degree.
        """
        report = CheckReport("compatibility")
        rng = random.Random(515)
        for root, c1, c2 in self.squares():
            e1 = self.edge(root, c1)
            e2 = self.edge(root, c2)
            f1 = self.edge(root | {c1}, c2)
            f2 = self.edge(root | {c2}, c1)
            label = (
                f"square {self.format_subset(root)} + {{{c1},{c2}}}"
            )
            ok = True
            witness = None
            for degree in range(self.degree_bound + 1):
                for mono in self.spanning_monomials(root, degree):
                    if f1.trace(e1.trace(mono)) != f2.trace(e2.trace(mono)):
                        ok = False
                        witness = f"disagree on {mono}"
                        break
                if not ok:
                    break
            if ok:
                for _ in range(4):
                    f = self.random_invariant(
                        rng, root, max_degree=self.degree_bound + 3
                    )
                    if f1.trace(e1.trace(f)) != f2.trace(e2.trace(f)):
                        ok = False
                        witness = f"spot check disagrees on {f}"
                        break
            report.add(label, ok, witness)
        return report

    def check_star(self) -> CheckReport:
        """Stored basis of each square edge lies in the other color's ring."""
        report = CheckReport("star")
        for root, c1, c2 in self.squares():
            for this, other in ((c1, c2), (c2, c1)):
                e = self.edge(root, this)
                bad = next(
                    (x for x in e.basis if not self.contains(x, root | {other})),
                    None,
                )
                report.add(
                    f"square {self.format_subset(root)}: basis over +{this} lies in +{other}",
                    bad is None,
                    None if bad is None else f"element {bad}",
                )
        return report

    def check_mu_regular(self) -> CheckReport:
        """mu over the full color set is nonzero (a domain has no other
        zero divisors)."""
        report = CheckReport("mu-regularity")
        total = self.mu_total(frozenset(self.colors))
        report.add(
            f"mu{self.format_subset(frozenset(self.colors))} is nonzero",
            not total.is_zero(),
        )
        return report

    def check_R3(self) -> CheckReport:
        """Divisibility of mu products for every color triple."""
        report = CheckReport("triple divisibility")
        triples = []
        cs = self.colors
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                for k in range(j + 1, len(cs)):
                    triples.append((cs[i], cs[j], cs[k]))
        if not triples:
            report.add("no color triples (vacuous)", True)
            return report
        for a, b, c in triples:
            top = (
                self.mu_total({a, b, c})
                * self.mu_total({a})
                * self.mu_total({b})
                * self.mu_total({c})
            )
            bottom = (
                self.mu_total({a, b})
                * self.mu_total({b, c})
                * self.mu_total({a, c})
            )
            quotient = exact_divide(top, bottom)
            report.add(
                f"triple {{{a},{b},{c}}}",
                quotient is not None,
                None if quotient is not None else "quotient is not polynomial",
            )
        return report

    def check_composite_duality(self, rank_cap: int = 24) -> CheckReport:
        """Composite bases stay dual under composite traces (up to a rank cap)."""
        report = CheckReport("composite duality")
        one = Polynomial.one(self.nvars)
        zero = Polynomial.zero(self.nvars)
        subs = self.subsets()
        for lower in subs:
            for upper in subs:
                if not (lower < upper) or len(upper - lower) < 2:
                    continue
                if self.rank(lower, upper) > rank_cap:
                    continue
                basis, duals = self.composite_pairs(lower, upper)
                ok = True
                witness = None
                for a, x in enumerate(basis):
                    for b, y in enumerate(duals):
                        value = self.trace_raw(lower, upper, x * y)
                        expected = one if a == b else zero
                        if value != expected:
                            ok = False
                            witness = f"pair ({a},{b}) gave {value}"
                            break
                    if not ok:
                        break
                report.add(
                    f"pair {self.format_subset(lower)} < {self.format_subset(upper)}"
                    f" (rank {self.rank(lower, upper)})",
                    ok,
                    witness,
                )
        return report

    def check_mu_multiplicative(self) -> CheckReport:
        """mu along any chain factors through every intermediate subset."""
        report = CheckReport("mu multiplicativity")
        subs = self.subsets()
        for lower in subs:
            for middle in subs:
                if not lower <= middle:
                    continue
                for upper in subs:
                    if not middle <= upper or (lower == middle and middle == upper):
                        continue
                    ok = self.mu(lower, upper) == self.mu(lower, middle) * self.mu(middle, upper)
                    report.add(
                        f"{self.format_subset(lower)} <= {self.format_subset(middle)}"
                        f" <= {self.format_subset(upper)}",
                        ok,
                    )
        return report

    def verify(self, composite_rank_cap: int = 24) -> CheckReport:
        """The full structural check suite, in a fixed order."""
        report = CheckReport("verification")
        report.extend(self.check_nondegeneracy())
        report.extend(self.check_compatibility())
        report.extend(self.check_star())
        report.extend(self.check_mu_regular())
        report.extend(self.check_R3())
        report.extend(self.check_composite_duality(composite_rank_cap))
        return report
