"""Builders for the shipped hypercube instances.

Two families are built in:

  * the univariate example: even polynomials inside all polynomials of
    one variable, with trace (f(x) - f(-x)) / x;
  * invariant towers of the symmetric group acting on x1..xn, where a
    color is a simple transposition, a subset of colors generates a
    parabolic subgroup, and edge traces are composites of divided
    differences.

A third kind can be loaded from a JSON description file, with traces
given as linear combinations of divided-difference words and bases given
as polynomial text.
"""

from __future__ import annotations

import itertools
import json
import os
import re
from typing import Callable, Iterable, Optional, Sequence

from gmpy2 import mpq

from .frobenius import (
    EMPTY,
    CheckReport,
    FrobeniusError,
    FrobeniusHypercube,
    Subset,
)
from .polyring import (
    Monomial,
    Permutation,
    Polynomial,
    demazure_word,
    is_invariant,
    longest_element,
    parabolic_elements,
    parse_polynomial,
    schubert,
)


class VerificationError(FrobeniusError):
    """A built or loaded instance failed its structural checks."""

    def __init__(self, report: CheckReport):
        self.report = report
        failures = "; ".join(
            f"{item.name}" + (f" ({item.witness})" if item.witness else "")
            for item in report.failures[:3]
        )
        super().__init__(f"verification failed: {failures}")


def _consecutive_blocks(indices: Iterable[int], n: int) -> list[list[int]]:
    """Variable-position blocks of the parabolic generated by the indices.

    A run of generator indices i..j moves positions i..j+1; positions
    outside every run form singleton blocks.
    """
    idx = set(indices)
    blocks = []
    start = 1
    while start <= n:
        end = start
        while end < n and end in idx:
            end += 1
        blocks.append(list(range(start, end + 1)))
        start = end + 1
    return blocks


def _positive_root_count(indices: Iterable[int], n: int) -> int:
    return sum(
        len(block) * (len(block) - 1) // 2
        for block in _consecutive_blocks(indices, n)
    )


def _orbit_monomials(blocks: Sequence[Sequence[int]], nvars: int, degree: int) -> list[Polynomial]:
    """Orbit sums spanning the degree-d part of the block-invariant ring.

    Representatives are exponent vectors that are non-increasing within
    each block; the orbit sum ranges over distinct per-block permutations
    of the exponents.
    """
    out = []
    for exps in _compositions(degree, nvars):
        ok = True
        for block in blocks:
            for a, b in zip(block, block[1:]):
                if exps[a - 1] < exps[b - 1]:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        coeffs: dict[Monomial, mpq] = {}
        per_block = [
            sorted(set(itertools.permutations(tuple(exps[p - 1] for p in block))))
            for block in blocks
        ]
        for choice in itertools.product(*per_block):
            full = list(exps)
            for block, sub in zip(blocks, choice):
                for pos, e in zip(block, sub):
                    full[pos - 1] = e
            coeffs[tuple(full)] = mpq(1)
        out.append(Polynomial(nvars, coeffs))
    return out


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# -- the univariate instance ----------------------------------------------


def _univariate_trace(f: Polynomial) -> Polynomial:
    """(f(x) - f(-x)) / x: doubles odd coefficients and shifts down."""
    out = {}
    for (k,), c in f.coeffs.items():
        if k % 2:
            out[(k - 1,)] = 2 * c
    return Polynomial(1, out)


class UnivariateHypercube(FrobeniusHypercube):
    """Even polynomials inside all polynomials of one variable.

    The single color is the sign involution x -> -x; the fixed subring
    plays the role of the upper vertex.
    """

    kind = "univariate"

    def __init__(self, degree_bound: int = 6):
        super().__init__(("c",), 1, degree_bound)

    def contains(self, f: Polynomial, I: Subset) -> bool:
        if not I:
            return True
        return f.flip_sign(1) == f

    def build_trace(self, lower: Subset, color: str) -> Callable[[Polynomial], Polynomial]:
        assert lower == EMPTY and color == "c"
        return _univariate_trace

    def build_basis(self, lower: Subset, color: str) -> tuple[Polynomial, ...]:
        return (Polynomial.one(1), Polynomial.variable(1, 1))

    def spanning_monomials(self, I: Subset, degree: int) -> list[Polynomial]:
        if I and degree % 2:
            return []
        return [Polynomial.monomial((degree,))]

    def symmetrize(self, f: Polynomial, I: Subset) -> Polynomial:
        if not I:
            return f
        return (f + f.flip_sign(1)).scale(mpq(1, 2))

    def describe(self) -> dict:
        return {"format": 1, "kind": "univariate", "degree_bound": self.degree_bound}


# -- symmetric-group invariant towers --------------------------------------


class SoergelHypercube(FrobeniusHypercube):
    """Invariant rings of parabolic subgroups of the symmetric group.

    Color s_i is the transposition of x_i and x_{i+1}.  The ring at a
    subset is the invariant ring of the parabolic its colors generate.
    Edge traces are divided-difference composites along the longest coset
    representative; edge bases are Schubert polynomials of the minimal
    coset representatives, which keeps every basis inside all the other
    colors' invariant rings.
    """

    kind = "soergel"

    def __init__(self, n: int, colors: Optional[Iterable[str]] = None, degree_bound: Optional[int] = None):
        if n < 2:
            raise FrobeniusError("need at least two variables")
        all_names = [f"s{i}" for i in range(1, n)]
        if colors is None:
            names = all_names
        else:
            names = sorted(set(colors), key=lambda c: int(c[1:]))
            for c in names:
                if c not in all_names:
                    raise FrobeniusError(f"color {c!r} is not one of {all_names}")
        if not names:
            raise FrobeniusError("empty color set")
        self.n = n
        if degree_bound is None:
            degree_bound = 2 * _positive_root_count(
                [int(c[1:]) for c in names], n
            )
        super().__init__(tuple(names), n, degree_bound)
        self._group_cache: dict[Subset, list[Permutation]] = {}

    def indices(self, I: Subset) -> list[int]:
        return sorted(int(c[1:]) for c in I)

    def group(self, I: Subset) -> list[Permutation]:
        cached = self._group_cache.get(I)
        if cached is None:
            cached = parabolic_elements(self.indices(I), self.n)
            self._group_cache[I] = cached
        return cached

    def contains(self, f: Polynomial, I: Subset) -> bool:
        return is_invariant(f, self.indices(I))

    def build_trace(self, lower: Subset, color: str) -> Callable[[Polynomial], Polynomial]:
        upper = lower | {color}
        w_upper = longest_element(self.indices(upper), self.n)
        w_lower = longest_element(self.indices(lower), self.n)
        rep = w_upper * w_lower
        if rep.length() != w_upper.length() - w_lower.length():
            raise FrobeniusError("coset representative length mismatch")
        word = rep.reduced_word()
        return lambda f: demazure_word(word, f)

    def build_basis(self, lower: Subset, color: str) -> tuple[Polynomial, ...]:
        upper = lower | {color}
        lower_idx = set(self.indices(lower))
        reps = [
            w
            for w in self.group(upper)
            if not (w.right_descents() & lower_idx)
        ]
        reps.sort(key=lambda w: (w.length(), w.images))
        return tuple(schubert(w, self.n) for w in reps)

    def spanning_monomials(self, I: Subset, degree: int) -> list[Polynomial]:
        blocks = _consecutive_blocks(self.indices(I), self.n)
        return _orbit_monomials(blocks, self.n, degree)

    def symmetrize(self, f: Polynomial, I: Subset) -> Polynomial:
        group = self.group(I)
        total = Polynomial.zero(self.nvars)
        for w in group:
            total = total + f.act(w)
        return total.scale(mpq(1, len(group)))

    def describe(self) -> dict:
        return {
            "format": 1,
            "kind": "soergel",
            "n": self.n,
            "colors": list(self.colors),
            "degree_bound": self.degree_bound,
        }


# -- custom instances from description files -------------------------------


class CustomHypercube(FrobeniusHypercube):
    """A hypercube described explicitly in a file.

    Colors name sets of simple-transposition indices; membership is
    invariance under all of them.  Each edge supplies its trace as a
    linear combination of divided-difference words and its module basis
    as polynomial text; dual bases may be given or left to the solver.
    """

    kind = "custom"

    def __init__(
        self,
        nvars: int,
        color_indices: dict[str, tuple[int, ...]],
        edges: dict[tuple[Subset, str], dict],
        degree_bound: int,
    ):
        super().__init__(tuple(color_indices), nvars, degree_bound)
        self.color_indices = color_indices
        self._edge_data = edges

    def indices(self, I: Subset) -> list[int]:
        out: set[int] = set()
        for c in I:
            out.update(self.color_indices[c])
        return sorted(out)

    def contains(self, f: Polynomial, I: Subset) -> bool:
        return is_invariant(f, self.indices(I))

    def _edge_entry(self, lower: Subset, color: str) -> dict:
        entry = self._edge_data.get((lower, color))
        if entry is None:
            raise FrobeniusError(
                f"instance file does not define edge {self.format_subset(lower)} + {color}"
            )
        return entry

    def build_trace(self, lower: Subset, color: str) -> Callable[[Polynomial], Polynomial]:
        combo = self._edge_entry(lower, color)["trace"]

        def trace(f: Polynomial) -> Polynomial:
            total = Polynomial.zero(self.nvars)
            for coeff, word in combo:
                total = total + demazure_word(word, f).scale(coeff)
            return total

        return trace

    def build_basis(self, lower: Subset, color: str) -> tuple[Polynomial, ...]:
        return self._edge_entry(lower, color)["basis"]

    def build_duals(self, lower: Subset, color: str) -> Optional[tuple[Polynomial, ...]]:
        return self._edge_entry(lower, color).get("duals")

    def spanning_monomials(self, I: Subset, degree: int) -> list[Polynomial]:
        blocks = _consecutive_blocks(self.indices(I), self.nvars)
        return _orbit_monomials(blocks, self.nvars, degree)

    def symmetrize(self, f: Polynomial, I: Subset) -> Polynomial:
        group = parabolic_elements(self.indices(I), self.nvars)
        total = Polynomial.zero(self.nvars)
        for w in group:
            total = total + f.act(w)
        return total.scale(mpq(1, len(group)))


# -- construction entry points ---------------------------------------------


def build_univariate(degree_bound: Optional[int] = None) -> UnivariateHypercube:
    if degree_bound is None:
        return UnivariateHypercube()
    return UnivariateHypercube(degree_bound)


def build_soergel(
    n: int,
    colors: Optional[Iterable[str]] = None,
    degree_bound: Optional[int] = None,
) -> SoergelHypercube:
    return SoergelHypercube(n, colors, degree_bound)


def _parse_scalar(value) -> mpq:
    if isinstance(value, bool):
        raise FrobeniusError("boolean is not a scalar")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, str):
        return mpq(value)
    raise FrobeniusError(f"bad scalar {value!r}")


def load_instance(path: str, verify: bool = True) -> FrobeniusHypercube:
    """Build a hypercube from a JSON description file.

    With verify enabled (the default) the full check suite runs and a
    VerificationError carrying the report is raised on any failure.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise FrobeniusError(f"cannot read instance file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FrobeniusError(f"instance file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "kind" not in data:
        raise FrobeniusError("instance file must be an object with a 'kind' field")
    if data.get("format", 1) != 1:
        raise FrobeniusError(f"unsupported format version {data.get('format')!r}")
    kind = data["kind"]
    if kind == "univariate":
        cube: FrobeniusHypercube = UnivariateHypercube(data.get("degree_bound", 6))
    elif kind == "soergel":
        cube = SoergelHypercube(
            int(data["n"]), data.get("colors"), data.get("degree_bound")
        )
    elif kind == "custom":
        cube = _load_custom(data)
    else:
        raise FrobeniusError(f"unknown instance kind {kind!r}")
    if verify:
        report = cube.verify()
        if not report.passed:
            raise VerificationError(report)
    return cube


def _load_custom(data: dict) -> CustomHypercube:
    try:
        nvars = int(data["nvars"])
        raw_colors = data["colors"]
        raw_edges = data["edges"]
    except KeyError as exc:
        raise FrobeniusError(f"instance file is missing field {exc}") from exc
    color_indices = {}
    for name, idxs in raw_colors.items():
        color_indices[str(name)] = tuple(int(i) for i in idxs)
    edges: dict[tuple[Subset, str], dict] = {}
    for entry in raw_edges:
        root = frozenset(str(c) for c in entry["root"])
        color = str(entry["color"])
        if color not in color_indices or not root <= set(color_indices):
            raise FrobeniusError(f"edge {entry!r} references unknown colors")
        parsed: dict = {
            "trace": [
                (_parse_scalar(coeff), tuple(int(i) for i in word))
                for coeff, word in entry["trace"]
            ],
            "basis": tuple(
                parse_polynomial(text, nvars) for text in entry["basis"]
            ),
        }
        if "duals" in entry:
            parsed["duals"] = tuple(
                parse_polynomial(text, nvars) for text in entry["duals"]
            )
        edges[(root, color)] = parsed
    degree_bound = int(
        data.get(
            "degree_bound",
            2 * _positive_root_count(
                sorted({i for idxs in color_indices.values() for i in idxs}), nvars
            ),
        )
    )
    return CustomHypercube(nvars, color_indices, edges, degree_bound)


# -- shorthand -------------------------------------------------------------

_SOERGEL_SPEC = re.compile(r"^soergel:(\d+)(?::\{([^{}]*)\})?$")


def parse_instance_spec(text: str, degree_bound: Optional[int] = None):
    """Resolve an instance shorthand or file path to a hypercube.

    Accepted forms: "univariate", "soergel:N", "soergel:N:{s1,s2}", or a
    path to an instance description file.
    """
    if text == "univariate":
        return build_univariate(degree_bound)
    match = _SOERGEL_SPEC.match(text)
    if match:
        n = int(match.group(1))
        colors = None
        if match.group(2) is not None:
            colors = [c.strip() for c in match.group(2).split(",") if c.strip()]
            if not colors:
                raise FrobeniusError("empty color list in instance spec")
        return build_soergel(n, colors, degree_bound)
    if os.path.exists(text):
        cube = load_instance(text, verify=False)
        if degree_bound is not None:
            cube.degree_bound = degree_bound
        return cube
    raise FrobeniusError(f"unrecognized instance spec {text!r}")
