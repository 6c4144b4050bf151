"""Command-line front end.

Commands: ``check`` (saturate and report all queried bounds), ``query``
(one target), ``explain`` (derivation tree for one side of a target), and
``corpus`` (run the bundled scenarios against their golden files).

Exit codes: 0 fixpoint (and goldens match), 1 contradiction, 2 parse or
elaboration error, 3 budget exhausted, 4 golden mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Optional

from .elaborate import ElaborationError, elaborate
from .engine import (
    Limits,
    SaturationResult,
    explain,
    query,
    saturate,
)
from .extnat import extnat_to_json
from .model import InvariantKey, Side
from .parser import _Parser, _Cursor, _lex_line, try_parse_scene
from .scene import Scene

EXIT_OK = 0
EXIT_CONTRADICTION = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_GOLDEN = 4


def parse_target(text: str, scene: Scene) -> tuple[InvariantKey, Optional[Side]]:
    """Parse "kl(X)" or "kl(X):hi" against a scene's declarations."""
    side: Optional[Side] = None
    if ":" in text:
        text, _, side_text = text.rpartition(":")
        if side_text not in ("lo", "hi"):
            raise ValueError(f"side must be lo or hi, got {side_text!r}")
        side = Side.LO if side_text == "lo" else Side.HI
    helper = _Parser()
    helper.profile = scene.profile
    helper.spaces = list(scene.spaces)
    helper.map_sigs = {m.id: (m.dom, m.cod) for m in scene.maps}
    errors: list = []
    tokens = _lex_line(text.strip(), 1, errors)
    if errors:
        raise ValueError(f"cannot parse target {text!r}")
    cursor = _Cursor(tokens)
    try:
        key = helper.parse_invariant(cursor)
        cursor.expect_end()
    except Exception as exc:
        raise ValueError(f"cannot parse target {text!r}: {exc}") from exc
    return key, side


def result_payload(result: SaturationResult, targets: list[InvariantKey]) -> dict:
    payload: dict = {"status": result.status, "rounds": result.rounds}
    bounds: dict = {}
    # a contradiction poisons the whole store: no partial answers
    if result.status != "contradiction":
        for key in targets:
            answer = query(result, key)
            bounds[key.surface()] = {
                "lo": extnat_to_json(answer.interval.lo),
                "hi": extnat_to_json(answer.interval.hi),
                "lo_rule": answer.lo_rule,
                "hi_rule": answer.hi_rule,
            }
    payload["bounds"] = bounds
    if result.contradiction is not None:
        r = result.contradiction
        payload["contradiction"] = {
            "key": r.key.surface(),
            "lo": extnat_to_json(r.lo_value),
            "hi": extnat_to_json(r.hi_value),
            "lo_chain": r.lo_tree.to_json(),
            "hi_chain": r.hi_tree.to_json(),
        }
    if result.budget is not None:
        payload["budget"] = {
            "reason": result.budget.reason,
            "detail": result.budget.detail,
        }
    return payload


def render_text(result: SaturationResult, targets: list[InvariantKey]) -> str:
    lines = [f"status: {result.status}", f"rounds: {result.rounds}"]
    if result.status != "contradiction":
        for key in targets:
            answer = query(result, key)
            lines.append(
                f"{key.surface()} = {answer.interval}   "
                f"lo: {answer.lo_rule}   hi: {answer.hi_rule}"
            )
    if result.contradiction is not None:
        r = result.contradiction
        lines.append(f"contradiction: {r.describe()}")
        lines.append("lower chain:")
        lines.append(r.lo_tree.render(1))
        lines.append("upper chain:")
        lines.append(r.hi_tree.render(1))
    if result.budget is not None:
        lines.append(f"budget exhausted ({result.budget.reason}): {result.budget.detail}")
        if result.budget.tree is not None:
            lines.append(result.budget.tree.render(1))
    return "\n".join(lines) + "\n"


def exit_code_for(result: SaturationResult) -> int:
    if result.status == "contradiction":
        return EXIT_CONTRADICTION
    if result.status == "budget_exhausted":
        return EXIT_BUDGET
    return EXIT_OK


def load_scene(path: Path, out_err) -> Optional[Scene]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"{path}: {exc}", file=out_err)
        return None
    scene, errors = try_parse_scene(text)
    if errors:
        for err in errors:
            print(f"{path.name}: {err}", file=out_err)
        return None
    return scene


def run_scene(scene: Scene, args) -> SaturationResult:
    limits = Limits(max_rounds=args.max_rounds, max_finite=args.max_finite)
    elab = elaborate(scene)
    return saturate(elab, limits, rearrange=not args.no_rearrange)


def cmd_check(args, out, out_err) -> int:
    scene = load_scene(Path(args.scene), out_err)
    if scene is None:
        return EXIT_PARSE
    try:
        result = run_scene(scene, args)
    except ElaborationError as exc:
        for message in exc.messages:
            print(f"{Path(args.scene).name}: {message}", file=out_err)
        return EXIT_PARSE
    targets = [q.key for q in scene.queries]
    if args.format == "json":
        payload = result_payload(result, targets)
        if args.explain and result.status == "fixpoint":
            key, side = parse_target(args.explain, scene)
            tree = explain(result, key, side or Side.HI)
            payload["explain"] = tree.to_json()
        print(json.dumps(payload, indent=2), file=out)
    else:
        print(render_text(result, targets), end="", file=out)
        if args.explain and result.status == "fixpoint":
            key, side = parse_target(args.explain, scene)
            tree = explain(result, key, side or Side.HI)
            print(tree.render(), file=out)
    return exit_code_for(result)


def cmd_query(args, out, out_err) -> int:
    scene = load_scene(Path(args.scene), out_err)
    if scene is None:
        return EXIT_PARSE
    try:
        key, _ = parse_target(args.target, scene)
    except ValueError as exc:
        print(str(exc), file=out_err)
        return EXIT_PARSE
    try:
        result = run_scene(scene, args)
    except ElaborationError as exc:
        for message in exc.messages:
            print(f"{Path(args.scene).name}: {message}", file=out_err)
        return EXIT_PARSE
    if args.format == "json":
        print(json.dumps(result_payload(result, [key]), indent=2), file=out)
    else:
        print(render_text(result, [key]), end="", file=out)
    return exit_code_for(result)


def cmd_explain(args, out, out_err) -> int:
    scene = load_scene(Path(args.scene), out_err)
    if scene is None:
        return EXIT_PARSE
    try:
        key, side = parse_target(args.target, scene)
    except ValueError as exc:
        print(str(exc), file=out_err)
        return EXIT_PARSE
    try:
        result = run_scene(scene, args)
    except ElaborationError as exc:
        for message in exc.messages:
            print(f"{Path(args.scene).name}: {message}", file=out_err)
        return EXIT_PARSE
    if result.status == "contradiction":
        print(render_text(result, []), end="", file=out)
        return EXIT_CONTRADICTION
    if result.status == "budget_exhausted":
        print(render_text(result, []), end="", file=out)
        return EXIT_BUDGET
    sides = [side] if side is not None else [Side.LO, Side.HI]
    if args.format == "json":
        payload = {
            s.value: explain(result, key, s).to_json() for s in sides
        }
        print(json.dumps({"target": key.surface(), "explain": payload}, indent=2),
              file=out)
    else:
        for s in sides:
            print(explain(result, key, s).render(), file=out)
    return EXIT_OK


def corpus_dir() -> Path:
    return Path(str(resources.files("conebound").joinpath("corpus")))


def cmd_corpus(args, out, out_err) -> int:
    directory = Path(args.dir) if args.dir else corpus_dir()
    scene_paths = sorted(directory.glob("*.scene"))
    if not scene_paths:
        print(f"no scene files under {directory}", file=out_err)
        return EXIT_GOLDEN
    mismatches = 0
    for path in scene_paths:
        golden_path = path.with_suffix(".expected.json")
        scene = load_scene(path, out_err)
        if scene is None:
            return EXIT_PARSE
        try:
            result = run_scene(scene, args)
        except ElaborationError as exc:
            for message in exc.messages:
                print(f"{path.name}: {message}", file=out_err)
            return EXIT_PARSE
        got = json.dumps(result_payload(result, [q.key for q in scene.queries]),
                         indent=2) + "\n"
        if not golden_path.exists():
            print(f"{path.name}: MISSING GOLDEN {golden_path.name}", file=out)
            mismatches += 1
            continue
        expected = golden_path.read_text(encoding="utf-8")
        if got == expected:
            print(f"{path.name}: ok", file=out)
        else:
            print(f"{path.name}: MISMATCH", file=out)
            print("--- expected ---", file=out)
            print(expected, end="", file=out)
            print("--- got ---", file=out)
            print(got, end="", file=out)
            mismatches += 1
    return EXIT_GOLDEN if mismatches else EXIT_OK


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conebound",
        description="Derive interval bounds on cone length and category invariants",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--max-rounds", type=int, default=Limits.max_rounds)
        p.add_argument("--max-finite", type=int, default=Limits.max_finite)
        p.add_argument("--no-rearrange", action="store_true",
                       help="diagnostic: disable rearranged lower bounds")

    p_check = sub.add_parser("check", help="saturate a scene and report queried bounds")
    p_check.add_argument("scene")
    p_check.add_argument("--explain", metavar="TARGET[:lo|hi]",
                         help="also print a derivation tree")
    common(p_check)

    p_query = sub.add_parser("query", help="report a single invariant")
    p_query.add_argument("scene")
    p_query.add_argument("--target", required=True, metavar="INV")
    common(p_query)

    p_explain = sub.add_parser("explain", help="print a derivation tree")
    p_explain.add_argument("scene")
    p_explain.add_argument("--target", required=True, metavar="TARGET[:lo|hi]")
    common(p_explain)

    p_corpus = sub.add_parser("corpus", help="run bundled scenarios against goldens")
    p_corpus.add_argument("dir", nargs="?", default=None)
    common(p_corpus)

    return parser


def main(argv: Optional[list[str]] = None, out=None, out_err=None) -> int:
    out = out if out is not None else sys.stdout
    out_err = out_err if out_err is not None else sys.stderr
    args = build_arg_parser().parse_args(argv)
    handlers = {
        "check": cmd_check,
        "query": cmd_query,
        "explain": cmd_explain,
        "corpus": cmd_corpus,
    }
    return handlers[args.command](args, out, out_err)


if __name__ == "__main__":
    sys.exit(main())
