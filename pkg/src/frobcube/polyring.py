"""Exact multivariate polynomial arithmetic over the rationals.

Everything downstream (traces, dual bases, diagram evaluation) runs on the
two classes defined here: sparse polynomials in a fixed number of variables
x1..xn with exact rational coefficients, and permutations of those variables.
Coefficients are gmpy2.mpq values, so all arithmetic is exact; no floats
appear anywhere in the package.

Monomials are exponent tuples.  The canonical term order is degree
lexicographic (total degree first, then exponent tuple), which also fixes
the printed form of a polynomial.
"""

from __future__ import annotations

import itertools
import re
from typing import Iterable, Iterator, Optional

from gmpy2 import mpq

Monomial = tuple[int, ...]

ZERO = mpq(0)
ONE = mpq(1)


def scalar(value) -> mpq:
    """Coerce an int, string ("1/2") or rational to an exact rational."""
    return mpq(value)


def deglex_key(mono: Monomial) -> tuple[int, Monomial]:
    return (sum(mono), mono)


class VariableMismatch(ValueError):
    """Two polynomials with different variable counts were combined."""


class Polynomial:
    """A sparse polynomial in nvars variables over the rationals.

    >>> x1, x2 = Polynomial.variables(2)
    >>> print((x1 + x2) * (x1 - x2))
    x1^2 - x2^2
    >>> print(Polynomial.constant(2, "1/2") * x1 ** 2)
    1/2*x1^2
    """

    __slots__ = ("nvars", "coeffs", "_hash")

    def __init__(self, nvars: int, coeffs: Optional[dict[Monomial, mpq]] = None):
        self.nvars = nvars
        self.coeffs: dict[Monomial, mpq] = coeffs if coeffs is not None else {}
        self._hash: Optional[int] = None

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value) -> "Polynomial":
        c = mpq(value)
        if c == 0:
            return cls(nvars)
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def one(cls, nvars: int) -> "Polynomial":
        return cls.constant(nvars, 1)

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        """The variable x_index, 1-based."""
        if not 1 <= index <= nvars:
            raise VariableMismatch(f"variable x{index} out of range for {nvars} variables")
        mono = tuple(1 if i == index - 1 else 0 for i in range(nvars))
        return cls(nvars, {mono: ONE})

    @classmethod
    def variables(cls, nvars: int) -> list["Polynomial"]:
        return [cls.variable(nvars, i + 1) for i in range(nvars)]

    @classmethod
    def monomial(cls, exponents: Iterable[int], coeff=1) -> "Polynomial":
        mono = tuple(exponents)
        c = mpq(coeff)
        if c == 0:
            return cls(len(mono))
        return cls(len(mono), {mono: c})

    # -- predicates and views ---------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self.coeffs)

    def constant_value(self) -> mpq:
        if not self.is_constant():
            raise ValueError(f"not a constant: {self}")
        return self.coeffs.get((0,) * self.nvars, ZERO)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.coeffs:
            return -1
        return max(sum(m) for m in self.coeffs)

    def is_homogeneous(self) -> bool:
        degs = {sum(m) for m in self.coeffs}
        return len(degs) <= 1

    def leading(self) -> tuple[Monomial, mpq]:
        """Leading (monomial, coefficient) in deglex order."""
        mono = max(self.coeffs, key=deglex_key)
        return mono, self.coeffs[mono]

    def terms(self) -> Iterator[tuple[Monomial, mpq]]:
        """Terms in decreasing deglex order."""
        for mono in sorted(self.coeffs, key=deglex_key, reverse=True):
            yield mono, self.coeffs[mono]

    def _check(self, other: "Polynomial") -> None:
        if self.nvars != other.nvars:
            raise VariableMismatch(f"{self.nvars} vs {other.nvars} variables")

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        out = dict(self.coeffs)
        for mono, c in other.coeffs.items():
            s = out.get(mono, ZERO) + c
            if s:
                out[mono] = s
            elif mono in out:
                del out[mono]
        return Polynomial(self.nvars, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        out = dict(self.coeffs)
        for mono, c in other.coeffs.items():
            s = out.get(mono, ZERO) - c
            if s:
                out[mono] = s
            elif mono in out:
                del out[mono]
        return Polynomial(self.nvars, out)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {m: -c for m, c in self.coeffs.items()})

    def scale(self, value) -> "Polynomial":
        c = mpq(value)
        if c == 0:
            return Polynomial(self.nvars)
        return Polynomial(self.nvars, {m: c * v for m, v in self.coeffs.items()})

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        out: dict[Monomial, mpq] = {}
        n = self.nvars
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                mono = tuple(m1[i] + m2[i] for i in range(n))
                s = out.get(mono, ZERO) + c1 * c2
                if s:
                    out[mono] = s
                elif mono in out:
                    del out[mono]
        return Polynomial(self.nvars, out)

    def __rmul__(self, other) -> "Polynomial":
        return self.scale(other)

    def __pow__(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise ValueError("negative power of a polynomial")
        result = Polynomial.one(self.nvars)
        base = self
        k = exponent
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- comparisons -------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        if self._hash is None:
            items = tuple(sorted(self.coeffs.items()))
            self._hash = hash((self.nvars, items))
        return self._hash

    # -- substitution and symmetry ----------------------------------------

    def act(self, perm: "Permutation") -> "Polynomial":
        """Apply the variable substitution x_i -> x_{perm(i)}."""
        if perm.size != self.nvars:
            raise VariableMismatch(f"permutation of size {perm.size} on {self.nvars} variables")
        out: dict[Monomial, mpq] = {}
        images = perm.images
        for mono, c in self.coeffs.items():
            new = [0] * self.nvars
            for i, e in enumerate(mono):
                if e:
                    new[images[i] - 1] = e
            out[tuple(new)] = c
        return Polynomial(self.nvars, out)

    def flip_sign(self, index: int) -> "Polynomial":
        """Apply the substitution x_index -> -x_index (1-based)."""
        i = index - 1
        return Polynomial(
            self.nvars,
            {m: (-c if m[i] % 2 else c) for m, c in self.coeffs.items()},
        )

    def evaluate(self, values: Iterable) -> mpq:
        vals = [mpq(v) for v in values]
        if len(vals) != self.nvars:
            raise VariableMismatch(f"{len(vals)} values for {self.nvars} variables")
        total = mpq(0)
        for mono, c in self.coeffs.items():
            term = c
            for v, e in zip(vals, mono):
                if e:
                    term = term * v**e
            total += term
        return total

    # -- printing ----------------------------------------------------------

    def __str__(self) -> str:
        return format_polynomial(self)

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {format_polynomial(self)!r})"


class Permutation:
    """A permutation of {1..n} in one-line notation.

    Composition is functional: (u * v)(i) == u(v(i)).

    >>> s1 = Permutation.transposition(3, 1)
    >>> s2 = Permutation.transposition(3, 2)
    >>> (s1 * s2).images
    (2, 3, 1)
    >>> (s1 * s2).length()
    2
    """

    __slots__ = ("images",)

    def __init__(self, images: Iterable[int]):
        self.images = tuple(images)
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"not a permutation: {self.images}")

    @property
    def size(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(1, n + 1))

    @classmethod
    def transposition(cls, n: int, i: int) -> "Permutation":
        """The simple transposition s_i swapping i and i+1."""
        if not 1 <= i < n:
            raise ValueError(f"s_{i} does not exist in S_{n}")
        images = list(range(1, n + 1))
        images[i - 1], images[i] = images[i], images[i - 1]
        return cls(images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if self.size != other.size:
            raise ValueError("size mismatch")
        return Permutation(self.images[j - 1] for j in other.images)

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.images):
            inv[j - 1] = i + 1
        return Permutation(inv)

    def is_identity(self) -> bool:
        return all(self.images[i] == i + 1 for i in range(self.size))

    def length(self) -> int:
        """Number of inversions, the Coxeter length."""
        n = self.size
        return sum(
            1
            for i in range(n)
            for j in range(i + 1, n)
            if self.images[i] > self.images[j]
        )

    def right_descents(self) -> set[int]:
        """Indices i with w(i) > w(i+1)."""
        return {
            i + 1
            for i in range(self.size - 1)
            if self.images[i] > self.images[i + 1]
        }

    def reduced_word(self) -> tuple[int, ...]:
        """The lexicographically smallest reduced word, peeled from the left.

        The first letter is the smallest i with length(s_i * w) < length(w).
        """
        word = []
        current = self
        n = self.size
        while not current.is_identity():
            inv = current.inverse()
            for i in range(1, n):
                if inv(i + 1) < inv(i):
                    word.append(i)
                    current = Permutation.transposition(n, i) * current
                    break
        return tuple(word)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.images == other.images

    def __hash__(self) -> int:
        return hash(self.images)

    def __repr__(self) -> str:
        return f"Permutation({list(self.images)})"


# -- divided differences ---------------------------------------------------


def demazure(index: int, f: Polynomial) -> Polynomial:
    """The divided difference (f - s_index f) / (x_index - x_{index+1}).

    Computed term by term: a monomial with exponents a, b in the two
    affected variables contributes the geometric sum
    (x^a y^b - x^b y^a)/(x - y), so no generic polynomial division is
    needed.

    >>> x1, x2 = Polynomial.variables(2)
    >>> print(demazure(1, x1 ** 2))
    x1 + x2
    >>> demazure(1, x1 * x2).is_zero()
    True
    """
    n = f.nvars
    if not 1 <= index < n:
        raise VariableMismatch(f"divided difference {index} needs at least {index + 1} variables")
    i = index - 1
    out: dict[Monomial, mpq] = {}
    for mono, coeff in f.coeffs.items():
        a, b = mono[i], mono[i + 1]
        if a == b:
            continue
        if a > b:
            low, gap, sign = b, a - b, coeff
        else:
            low, gap, sign = a, b - a, -coeff
        base = list(mono)
        for j in range(gap):
            base[i] = low + gap - 1 - j
            base[i + 1] = low + j
            key = tuple(base)
            s = out.get(key, ZERO) + sign
            if s:
                out[key] = s
            elif key in out:
                del out[key]
    return Polynomial(n, out)


def demazure_word(word: Iterable[int], f: Polynomial) -> Polynomial:
    """Compose divided differences along a word, rightmost letter first."""
    out = f
    for i in reversed(tuple(word)):
        out = demazure(i, out)
    return out


def is_invariant(f: Polynomial, indices: Iterable[int]) -> bool:
    """True iff f is fixed by every simple transposition s_i listed."""
    for i in indices:
        if f.act(Permutation.transposition(f.nvars, i)) != f:
            return False
    return True


# -- exact division --------------------------------------------------------


def exact_divide(f: Polynomial, g: Polynomial) -> Optional[Polynomial]:
    """Return f / g when g divides f exactly, else None.

    Long division by the single divisor g in deglex order: any step whose
    leading monomial is not divisible by the leading monomial of g proves
    the division inexact.

    >>> x1, x2 = Polynomial.variables(2)
    >>> print(exact_divide(x1 ** 2 - x2 ** 2, x1 - x2))
    x1 + x2
    >>> exact_divide(x1 ** 2 + x2, x1 - x2) is None
    True
    """
    f._check(g)
    if g.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    n = f.nvars
    quotient: dict[Monomial, mpq] = {}
    rem = Polynomial(n, dict(f.coeffs))
    g_mono, g_coeff = g.leading()
    while not rem.is_zero():
        mono, coeff = rem.leading()
        step = tuple(mono[i] - g_mono[i] for i in range(n))
        if any(e < 0 for e in step):
            return None
        c = coeff / g_coeff
        quotient[step] = quotient.get(step, ZERO) + c
        rem = rem - Polynomial(n, {step: c}) * g
    return Polynomial(n, {m: c for m, c in quotient.items() if c})


# -- Schubert polynomials --------------------------------------------------

_schubert_cache: dict[tuple[int, tuple[int, ...]], Polynomial] = {}


def schubert(perm: Permutation, nvars: Optional[int] = None) -> Polynomial:
    """The Schubert polynomial of a permutation.

    Defined by the staircase monomial on the longest element and descending
    divided-difference recursion.  Stable under embedding S_m into S_n, so
    nvars may exceed the permutation size.

    >>> print(schubert(Permutation([2, 3, 1])))
    x1*x2
    >>> print(schubert(Permutation([1, 3, 2])))
    x1 + x2
    """
    n = nvars if nvars is not None else perm.size
    m = perm.size
    if m > n:
        raise VariableMismatch(f"permutation of S_{m} in {n} variables")
    if m < n:
        perm = Permutation(tuple(perm.images) + tuple(range(m + 1, n + 1)))
    key = (n, perm.images)
    cached = _schubert_cache.get(key)
    if cached is not None:
        return cached
    support = [i for i in range(1, n + 1) if perm(i) != i]
    top = max(support) if support else 0
    if all(perm(i) == top + 1 - i for i in range(1, top + 1)):
        result = Polynomial.one(n)
        for i in range(1, top):
            result = result * Polynomial.variable(n, i) ** (top - i)
    else:
        ascent = next(i for i in range(1, top) if perm(i) < perm(i + 1))
        longer = perm * Permutation.transposition(n, ascent)
        result = demazure(ascent, schubert(longer, n))
    _schubert_cache[key] = result
    return result


# -- text form -------------------------------------------------------------


def format_polynomial(f: Polynomial) -> str:
    """Canonical text form: deglex-descending terms, explicit rationals."""
    if f.is_zero():
        return "0"
    pieces = []
    for mono, coeff in f.terms():
        factors = [
            f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}"
            for i, e in enumerate(mono)
            if e
        ]
        mag = abs(coeff)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([str(mag)] + factors)
        if not pieces:
            pieces.append(body if coeff > 0 else "-" + body)
        else:
            pieces.append(("+ " if coeff > 0 else "- ") + body)
    return " ".join(pieces)


_TOKEN = re.compile(r"\s*(x\d+|\d+/\d+|\d+|\^|\*|\+|-)")


class PolynomialParseError(ValueError):
    """Raised on malformed polynomial text."""


def parse_polynomial(text: str, nvars: int) -> Polynomial:
    """Parse the canonical text form back into a polynomial.

    Accepts sums of terms like "3*x1^2*x2", "-1/2*x3", "x1 x2" (the
    separating * may be omitted) and bare rational constants.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            if text[pos:].strip():
                raise PolynomialParseError(f"bad character at position {pos}: {text[pos:]!r}")
            break
        tokens.append(match.group(1))
        pos = match.end()
    if not tokens:
        raise PolynomialParseError("empty polynomial text")

    result = Polynomial.zero(nvars)
    i = 0

    def parse_term(start: int) -> tuple[Polynomial, int]:
        sign = ONE
        j = start
        while j < len(tokens) and tokens[j] in "+-":
            if tokens[j] == "-":
                sign = -sign
            j += 1
        coeff = sign
        exponents = [0] * nvars
        saw_factor = False
        expect_factor = True
        while j < len(tokens):
            tok = tokens[j]
            if tok in "+-" and not expect_factor:
                break
            if tok == "*":
                if expect_factor:
                    raise PolynomialParseError("misplaced *")
                expect_factor = True
                j += 1
                continue
            if tok.startswith("x"):
                idx = int(tok[1:])
                if not 1 <= idx <= nvars:
                    raise PolynomialParseError(f"variable {tok} out of range (nvars={nvars})")
                power = 1
                if j + 1 < len(tokens) and tokens[j + 1] == "^":
                    if j + 2 >= len(tokens) or not tokens[j + 2].isdigit():
                        raise PolynomialParseError("^ must be followed by a positive integer")
                    power = int(tokens[j + 2])
                    j += 2
                exponents[idx - 1] += power
                saw_factor = True
                expect_factor = False
                j += 1
            elif tok[0].isdigit():
                coeff = coeff * mpq(tok)
                saw_factor = True
                expect_factor = False
                j += 1
            else:
                raise PolynomialParseError(f"unexpected token {tok!r}")
        if not saw_factor:
            raise PolynomialParseError("empty term")
        return Polynomial.monomial(exponents, coeff), j

    while i < len(tokens):
        term, i = parse_term(i)
        result = result + term
    return result


# -- small combinatorial helpers -------------------------------------------


def symmetric_group(n: int) -> Iterator[Permutation]:
    for images in itertools.permutations(range(1, n + 1)):
        yield Permutation(images)


def longest_element(indices: Iterable[int], n: int) -> Permutation:
    """Longest element of the parabolic subgroup generated by the listed s_i.

    The parabolic is a product of symmetric groups on consecutive blocks;
    its longest element reverses each block.
    """
    idx = set(indices)
    images = list(range(1, n + 1))
    start = 1
    while start <= n:
        end = start
        while end < n and end in idx:
            end += 1
        if end > start:
            images[start - 1 : end] = list(range(end, start - 1, -1))
        start = end + 1
    return Permutation(images)


def parabolic_elements(indices: Iterable[int], n: int) -> list[Permutation]:
    """All elements of the parabolic subgroup, as permutations of S_n."""
    idx = set(indices)
    blocks = []
    start = 1
    while start <= n:
        end = start
        while end < n and end in idx:
            end += 1
        blocks.append(list(range(start, end + 1)))
        start = end + 1
    parts = []
    for block in blocks:
        parts.append([list(p) for p in itertools.permutations(block)])
    out = []
    for choice in itertools.product(*parts):
        images = [0] * n
        for block, perm in zip(blocks, choice):
            for pos, val in zip(block, perm):
                images[pos - 1] = val
        out.append(Permutation(images))
    return out
