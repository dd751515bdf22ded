"""Command line interface for batch verification and exploration.

Subcommands: ``verify`` runs the structural check suite on an instance,
``invariants`` prints the connecting constants and interval products,
``eval`` evaluates a diagram file to a linear map (optionally applied
to one tensor element), ``simplify`` rewrites a diagram file to a
combination without closed components, ``check-relations`` replays the
shipped relation files, and ``render`` draws a diagram file as SVG.

Instances are addressed by shorthand ("univariate", "soergel:4",
"soergel:4:{s1,s2,s3}") or by a path to a JSON description file.  The
FROBCUBE_DEGREE_BOUND environment variable overrides the degree bound
used for randomized checks on every instance the process builds.

Exit codes: 0 all passed, 1 a check or simplification failed, 2 bad
usage, 3 a file could not be read or written, 4 an input file or
element failed to parse or validate.
"""

import argparse
import json
import os
import re
import sys
from typing import Optional

from .diagram import (
    DiagramParseError,
    InconsistentDiagram,
    check_consistency,
    format_diagram,
    parse_diagram,
    render_svg,
)
from .evaluator import evaluate
from .frobenius import FrobeniusError, MembershipError
from .instances import parse_instance_spec
from .polyring import format_polynomial
from .rewrite import RewriteError, check_relations, simplify_two_color
from .tensor import SignatureError, TensorElement

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_IO = 3
EXIT_PARSE = 4

DEGREE_ENV = "FROBCUBE_DEGREE_BOUND"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _degree_override() -> Optional[int]:
    raw = os.environ.get(DEGREE_ENV)
    if raw is None or not raw.strip():
        return None
    try:
        value = int(raw)
    except ValueError:
        raise CliError(EXIT_PARSE, f"{DEGREE_ENV} must be an integer, got {raw!r}")
    if value < 1:
        raise CliError(EXIT_PARSE, f"{DEGREE_ENV} must be positive, got {value}")
    return value


def _load_cube(spec: str):
    try:
        return parse_instance_spec(spec, _degree_override())
    except FrobeniusError as exc:
        raise CliError(EXIT_PARSE, f"instance {spec!r}: {exc}")


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}")


def _load_diagram(path: str, cube):
    text = _read_text(path)
    try:
        d = parse_diagram(text, cube.nvars, cube.colors)
    except DiagramParseError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}")
    try:
        check_consistency(d, cube)
    except InconsistentDiagram as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}")
    return d


def _emit(payload: dict, as_json: bool, text: str) -> None:
    if as_json:
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _cmd_verify(args) -> int:
    cube = _load_cube(args.instance)
    report = cube.verify()
    _emit(report.to_dict(), args.json, report.format_text())
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_invariants(args) -> int:
    cube = _load_cube(args.instance)
    empty = frozenset()
    rows = []
    for I in cube.subsets():
        mu = cube.mu(empty, I)
        pi = cube.pi(I)
        rows.append(
            {
                "subset": cube.format_subset(I),
                "mu": format_polynomial(mu),
                "pi": None if pi is None else format_polynomial(pi),
            }
        )
    header = f"{'subset':<16} {'mu':<40} pi"
    lines = [header, "-" * len(header)]
    for row in rows:
        pi_text = "-" if row["pi"] is None else row["pi"]
        lines.append(f"{row['subset']:<16} {row['mu']:<40} {pi_text}")
    _emit({"instance": args.instance, "rows": rows}, args.json, "\n".join(lines))
    return EXIT_OK


def _cmd_eval(args) -> int:
    cube = _load_cube(args.instance)
    d = _load_diagram(args.diagram, cube)
    morphism = evaluate(cube, d)
    if args.element is None:
        payload = {
            "domain": morphism.domain.format(),
            "codomain": morphism.codomain.format(),
            "map": morphism.format_text(),
        }
        _emit(payload, args.json, morphism.format_text())
        return EXIT_OK
    try:
        element = TensorElement.parse(cube, args.element)
        image = morphism.apply(element)
    except (SignatureError, MembershipError, FrobeniusError) as exc:
        raise CliError(EXIT_PARSE, f"element: {exc}")
    payload = {"element": element.render(), "image": image.render()}
    _emit(payload, args.json, image.render())
    return EXIT_OK


def _cmd_simplify(args) -> int:
    cube = _load_cube(args.instance)
    d = _load_diagram(args.diagram, cube)
    audit: list[str] = []
    try:
        combo = simplify_two_color(cube, d, audit)
    except RewriteError as exc:
        print(f"simplification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    terms = [
        {"coeff": str(coeff), "diagram": format_diagram(term)}
        for coeff, term in combo
    ]
    lines = []
    for i, entry in enumerate(terms):
        lines.append(f"term {i}: coefficient {entry['coeff']}")
        lines.extend("  " + line for line in entry["diagram"].splitlines())
    if not terms:
        lines.append("0")
    payload = {"terms": terms, "moves": audit}
    _emit(payload, args.json, "\n".join(lines))
    return EXIT_OK


def _cmd_check_relations(args) -> int:
    cube = _load_cube(args.instance)
    names = args.relation if args.relation else None
    try:
        report = check_relations(cube, seed=args.seed, names=names)
    except RewriteError as exc:
        raise CliError(EXIT_PARSE, str(exc))
    _emit(report.to_dict(), args.json, report.format_text())
    return EXIT_OK if report.passed else EXIT_FAIL


_VAR_PATTERN = re.compile(r"x(\d+)")


def _cmd_render(args) -> int:
    text = _read_text(args.diagram)
    nvars = max((int(m) for m in _VAR_PATTERN.findall(text)), default=1)
    try:
        d = parse_diagram(text, nvars)
        labeling = check_consistency(d)
    except (DiagramParseError, InconsistentDiagram) as exc:
        raise CliError(EXIT_PARSE, f"{args.diagram}: {exc}")
    svg = render_svg(d, labeling)
    try:
        with open(args.svg, "w", encoding="utf-8") as handle:
            handle.write(svg)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.svg}: {exc}")
    print(f"wrote {args.svg}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frobcube",
        description="Frobenius hypercube verification and diagram tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_json(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("verify", help="run the structural check suite")
    p.add_argument("instance")
    with_json(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("invariants", help="connecting constants and products")
    p.add_argument("instance")
    with_json(p)
    p.set_defaults(func=_cmd_invariants)

    p = sub.add_parser("eval", help="evaluate a diagram file")
    p.add_argument("instance")
    p.add_argument("diagram")
    p.add_argument("--element", help="tensor element to apply the map to")
    with_json(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("simplify", help="rewrite a diagram file")
    p.add_argument("instance")
    p.add_argument("diagram")
    with_json(p)
    p.set_defaults(func=_cmd_simplify)

    p = sub.add_parser("check-relations", help="replay the shipped relations")
    p.add_argument("instance")
    p.add_argument(
        "--relation",
        action="append",
        help="restrict to one relation (repeatable)",
    )
    p.add_argument("--seed", type=int, default=0)
    with_json(p)
    p.set_defaults(func=_cmd_check_relations)

    p = sub.add_parser("render", help="draw a diagram file as SVG")
    p.add_argument("diagram")
    p.add_argument("--svg", required=True, help="output file")
    p.set_defaults(func=_cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
