"""Tensor products of hypercube rings along a zigzag path of subsets.

A path signature is a sequence of subsets where consecutive entries
differ by exactly one color.  Each step carries the ring of the smaller
subset (the bigger ring); neighbouring slots are glued over the ring of
the subset between them.  Elements are sums of pure tensors with one
factor per step and a trailing coefficient from the rightmost ring.

The normal form pushes everything to the right: each upward step is
expanded over its stored edge basis and the coefficients (which lie in
the gluing ring) move across the tensor sign.  Downward steps contribute
no basis choice because their slot ring equals the gluing ring.  Two
elements are equal exactly when their normal forms agree.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Optional, Sequence

from .frobenius import EMPTY, FrobeniusHypercube, MembershipError, Subset
from .polyring import Polynomial, parse_polynomial

Term = tuple[tuple[Polynomial, ...], Polynomial]
NormalForm = dict[tuple[int, ...], Polynomial]


class SignatureError(ValueError):
    """A region sequence is not a valid path of one-color steps."""


class PathSignature:
    """The region labels seen when crossing a horizontal section."""

    def __init__(self, cube: FrobeniusHypercube, regions: Sequence[Iterable[str]]):
        if not regions:
            raise SignatureError("a signature needs at least one region")
        self.cube = cube
        self.regions: tuple[Subset, ...] = tuple(
            cube.validate_subset(r) for r in regions
        )
        for a, b in zip(self.regions, self.regions[1:]):
            diff = (a - b) | (b - a)
            if len(diff) != 1:
                raise SignatureError(
                    f"regions {cube.format_subset(a)} and {cube.format_subset(b)}"
                    " do not differ by one color"
                )

    @property
    def slots(self) -> int:
        return len(self.regions) - 1

    @property
    def left(self) -> Subset:
        return self.regions[0]

    @property
    def right(self) -> Subset:
        return self.regions[-1]

    def step(self, i: int) -> tuple[Subset, str, bool]:
        """Edge data of slot i: (lower subset, color, goes upward)."""
        a, b = self.regions[i], self.regions[i + 1]
        if a < b:
            (color,) = b - a
            return a, color, True
        (color,) = a - b
        return b, color, False

    def slot_ring(self, i: int) -> Subset:
        return self.regions[i] & self.regions[i + 1]

    def slot_rank(self, i: int) -> int:
        lower, color, up = self.step(i)
        return self.cube.edge(lower, color).rank if up else 1

    def format(self) -> str:
        return "->".join(self.cube.format_subset(r) for r in self.regions)

    @classmethod
    def parse(cls, cube: FrobeniusHypercube, text: str) -> "PathSignature":
        regions = []
        for part in text.split("->"):
            part = part.strip()
            if not (part.startswith("{") and part.endswith("}")):
                raise SignatureError(f"bad region literal {part!r}")
            inner = part[1:-1].strip()
            names = [c.strip() for c in inner.split(",")] if inner else []
            if any(not c for c in names):
                raise SignatureError(f"bad region literal {part!r}")
            regions.append(names)
        return cls(cube, regions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PathSignature):
            return NotImplemented
        return self.cube is other.cube and self.regions == other.regions

    def __hash__(self) -> int:
        return hash((id(self.cube), self.regions))

    def __repr__(self) -> str:
        return f"PathSignature({self.format()})"


class TensorElement:
    """A sum of pure tensors along a fixed path signature.

    Each term is a tuple of step factors together with a tail from the
    rightmost ring; the tail keeps zero-step elements representable and
    gives box multiplication in the last region a place to land.
    """

    def __init__(
        self,
        signature: PathSignature,
        terms: Iterable[Term] = (),
        check: bool = True,
    ):
        self.signature = signature
        self.terms: tuple[Term, ...] = tuple(
            (tuple(factors), tail) for factors, tail in terms
        )
        if check:
            self._validate()
        self._normal: Optional[NormalForm] = None

    def _validate(self) -> None:
        cube = self.signature.cube
        k = self.signature.slots
        for factors, tail in self.terms:
            if len(factors) != k:
                raise MembershipError(
                    f"term has {len(factors)} factors for {k} steps"
                )
            for i, f in enumerate(factors):
                ring = self.signature.slot_ring(i)
                if not cube.contains(f, ring):
                    raise MembershipError(
                        f"factor {f} is not in {cube.format_subset(ring)}"
                    )
            if not cube.contains(tail, self.signature.right):
                raise MembershipError(
                    f"tail {tail} is not in {cube.format_subset(self.signature.right)}"
                )

    @classmethod
    def pure(
        cls,
        signature: PathSignature,
        factors: Sequence[Polynomial],
        tail: Optional[Polynomial] = None,
    ) -> "TensorElement":
        if tail is None:
            tail = Polynomial.one(signature.cube.nvars)
        return cls(signature, [(tuple(factors), tail)])

    @classmethod
    def zero(cls, signature: PathSignature) -> "TensorElement":
        return cls(signature, [])

    def __add__(self, other: "TensorElement") -> "TensorElement":
        if self.signature != other.signature:
            raise MembershipError("signatures differ")
        return TensorElement(
            self.signature, self.terms + other.terms, check=False
        )

    def scale(self, scalar) -> "TensorElement":
        return TensorElement(
            self.signature,
            [(factors, tail.scale(scalar)) for factors, tail in self.terms],
            check=False,
        )

    def __neg__(self) -> "TensorElement":
        return self.scale(-1)

    def __sub__(self, other: "TensorElement") -> "TensorElement":
        return self + (-other)

    def tensor(self, other: "TensorElement") -> "TensorElement":
        """Juxtapose horizontally; the right end of self must be the left
        region of other.  Tails merge into the junction."""
        sig = self.signature
        if sig.cube is not other.signature.cube:
            raise MembershipError("elements live over different hypercubes")
        if sig.right != other.signature.left:
            raise MembershipError(
                "signatures do not share the junction region"
            )
        joined = PathSignature(
            sig.cube, sig.regions + other.signature.regions[1:]
        )
        out: list[Term] = []
        for f1, t1 in self.terms:
            for f2, t2 in other.terms:
                if f2:
                    head = (t1 * f2[0],) + f2[1:]
                    out.append((f1 + head, t2))
                else:
                    out.append((f1, t1 * t2))
        return TensorElement(joined, out, check=False)

    def multiply_at(self, gap: int, f: Polynomial) -> "TensorElement":
        """Multiply by f lying in the region at the given gap.

        Gap g sits left of factor g; the last gap multiplies the tail.
        The element f must belong to the ring of region g.
        """
        sig = self.signature
        if not 0 <= gap <= sig.slots:
            raise MembershipError(f"gap {gap} out of range")
        if not sig.cube.contains(f, sig.regions[gap]):
            raise MembershipError(
                f"{f} is not in {sig.cube.format_subset(sig.regions[gap])}"
            )
        out = []
        for factors, tail in self.terms:
            if gap == sig.slots:
                out.append((factors, tail * f))
            else:
                updated = list(factors)
                updated[gap] = f * updated[gap]
                out.append((tuple(updated), tail))
        return TensorElement(sig, out, check=False)

    def normalize(self) -> NormalForm:
        """Indices over the step bases mapped to accumulated tails.

        Every upward step is expanded over its edge basis; expansion
        coefficients and downward factors move rightward until only the
        tail remains.
        """
        if self._normal is not None:
            return self._normal
        sig = self.signature
        cube = sig.cube
        total: NormalForm = {}
        for factors, tail in self.terms:
            partial: dict[tuple[int, ...], Polynomial] = {
                (): Polynomial.one(cube.nvars)
            }
            for i in range(sig.slots):
                lower, color, up = sig.step(i)
                nxt: dict[tuple[int, ...], Polynomial] = {}
                for prefix, carry in partial.items():
                    value = carry * factors[i]
                    if up:
                        coeffs = cube.edge(lower, color).expand(value)
                        for idx, c in enumerate(coeffs):
                            if c.is_zero():
                                continue
                            key = prefix + (idx,)
                            acc = nxt.get(key)
                            nxt[key] = c if acc is None else acc + c
                    else:
                        key = prefix + (0,)
                        acc = nxt.get(key)
                        nxt[key] = value if acc is None else acc + value
                partial = nxt
            for prefix, carry in partial.items():
                value = carry * tail
                if value.is_zero():
                    continue
                acc = total.get(prefix)
                merged = value if acc is None else acc + value
                if merged.is_zero():
                    total.pop(prefix, None)
                else:
                    total[prefix] = merged
        total = {k: v for k, v in total.items() if not v.is_zero()}
        self._normal = total
        return total

    def normalized(self) -> "TensorElement":
        """An equal element whose terms are basis pure tensors with tails."""
        sig = self.signature
        out = []
        for index, tail in sorted(self.normalize().items()):
            factors = []
            for i in range(sig.slots):
                lower, color, up = sig.step(i)
                if up:
                    factors.append(sig.cube.edge(lower, color).basis[index[i]])
                else:
                    factors.append(Polynomial.one(sig.cube.nvars))
            out.append((tuple(factors), tail))
        return TensorElement(sig, out, check=False)

    def is_zero(self) -> bool:
        return not self.normalize()

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorElement):
            return NotImplemented
        if self.signature != other.signature:
            return False
        return self.normalize() == other.normalize()

    def render(self) -> str:
        if not self.terms:
            return f"0 @ {self.signature.format()}"
        parts = []
        for factors, tail in self.terms:
            shown = list(factors)
            if shown:
                shown[-1] = shown[-1] * tail
            else:
                shown = [tail]
            parts.append(" (x) ".join(_wrap(f) for f in shown))
        return " + ".join(parts) + f" @ {self.signature.format()}"

    @classmethod
    def parse(cls, cube: FrobeniusHypercube, text: str) -> "TensorElement":
        if " @ " not in text:
            raise SignatureError("missing ' @ ' separator")
        body, _, path = text.rpartition(" @ ")
        sig = PathSignature.parse(cube, path)
        body = body.strip()
        if body == "0":
            return cls.zero(sig)
        terms = []
        for chunk in _split_terms(body):
            raw = [p.strip() for p in chunk.split(" (x) ")]
            if len(raw) != max(sig.slots, 1):
                raise SignatureError(
                    f"{len(raw)} factors for {sig.slots} steps in {chunk!r}"
                )
            polys = [_unwrap(cube, p) for p in raw]
            if sig.slots == 0:
                terms.append(((), polys[0]))
            else:
                terms.append((tuple(polys), Polynomial.one(cube.nvars)))
        return cls(sig, terms)

    def __repr__(self) -> str:
        return f"TensorElement({self.render()})"


def _wrap(f: Polynomial) -> str:
    text = str(f)
    if len(f.coeffs) > 1:
        return f"({text})"
    return text


def _unwrap(cube: FrobeniusHypercube, text: str) -> Polynomial:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    return parse_polynomial(text, cube.nvars)


def _split_terms(body: str) -> Iterator[str]:
    depth = 0
    start = 0
    i = 0
    while i < len(body):
        c = body[i]
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif depth == 0 and body.startswith(" + ", i):
            yield body[start:i]
            start = i + 3
            i += 2
        i += 1
    yield body[start:]


def basis_pure_tensors(signature: PathSignature) -> list[TensorElement]:
    """The standard module basis of the signature's tensor product.

    One pure tensor per choice of edge-basis element in each upward step;
    downward steps contribute the constant one.
    """
    cube = signature.cube
    choices: list[list[Polynomial]] = []
    for i in range(signature.slots):
        lower, color, up = signature.step(i)
        if up:
            choices.append(list(cube.edge(lower, color).basis))
        else:
            choices.append([Polynomial.one(cube.nvars)])
    return [
        TensorElement.pure(signature, combo)
        for combo in itertools.product(*choices)
    ]
