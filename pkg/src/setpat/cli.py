"""Command-line driver: ``setpat solve | analyze | translate``.

Exit codes: ``solve`` gives 0/1/2 for sat/unsat/unknown; ``analyze`` gives 0
when every definition is safe, 1 if any is unsafe, 2 if any is unknown; 3
means a usage, input or internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .constraints import (
    ConstraintError, eliminate_projections, format_constraint_file,
    parse_constraint_file,
)
from .monadic import formula_to_monadic, reduce_theory
from .oracle import Budget
from .smt import ENV_BACKEND, BackendConfig, SolverConfig, plan, render, solve

EXIT_ERROR = 3


@dataclass
class CliConfig:
    command: str
    input: Path
    backend: str | None = None              # "oracle", a solver path, or None for the default
    timeout_ms: int = 30_000
    max_n: int = 8
    max_checks: int = 10**7
    dump_constraints: Path | None = None
    dump_smtlib: Path | None = None
    no_simplify: bool = False
    approx_proj: bool = False
    image_axiom: bool = False
    literal_emptiness: bool = False
    get_model: bool = False
    to: str = "smtlib"
    full: bool = False

    def solver(self) -> SolverConfig:
        backend = self.backend or os.environ.get(ENV_BACKEND) or "oracle"
        mode = "oracle" if backend == "oracle" else "smt"
        return SolverConfig(
            mode=mode,
            backend=BackendConfig(path=None if mode == "oracle" else backend,
                                  timeout_ms=self.timeout_ms, get_model=self.get_model),
            budget=Budget(max_n=self.max_n, max_checks=self.max_checks),
            simplify=not self.no_simplify,
            image_axiom=self.image_axiom,
            literal_emptiness=self.literal_emptiness,
            dump_smtlib=self.dump_smtlib,
            label=self.input.stem,
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"setpat: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", help="'oracle' or the path of an SMT-LIB solver "
                   f"(default: ${ENV_BACKEND} if set, else oracle)")
    p.add_argument("--timeout", dest="timeout_ms", type=int, default=30_000, metavar="MS")
    p.add_argument("--max-n", "--oracle-max-n", dest="max_n", type=int, default=8, help="oracle limit on base predicates")
    p.add_argument("--max-checks", "--oracle-max-checks", dest="max_checks", type=int, default=10**7, help="oracle limit on candidate checks")
    p.add_argument("--no-simplify", action="store_true")
    p.add_argument("--image-axiom", action="store_true",
                   help="require every domain element to be a function image")
    p.add_argument("--literal-emptiness", action="store_true",
                   help="use E rather than E ∩ f(⊤..) in the projection emptiness condition")
    p.add_argument("--dump-smtlib", type=Path, metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="setpat", description="Set-constraint solving and pattern-match analysis.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="decide satisfiability of a constraint file")
    p.add_argument("input", type=Path)
    _solver_flags(p)
    p.add_argument("--get-model", action="store_true", help="print a model when sat")

    p = sub.add_parser("analyze", help="check the pattern matches of a program")
    p.add_argument("input", type=Path)
    _solver_flags(p)
    p.add_argument("--approx-proj", action="store_true",
                   help="replace projections by top instead of eliminating them")
    p.add_argument("--dump-constraints", type=Path, metavar="DIR",
                   help="write each definition's constraint as a constraint file")

    p = sub.add_parser("translate", help="print the monadic theory or SMT-LIB script")
    p.add_argument("input", type=Path)
    p.add_argument("--to", choices=("monadic", "smtlib"), required=True)
    p.add_argument("--full", action="store_true",
                   help="monadic: keep the axioms of composite predicates")
    p.add_argument("--no-simplify", action="store_true")
    p.add_argument("--image-axiom", action="store_true")
    p.add_argument("--literal-emptiness", action="store_true")
    p.add_argument("--timeout", dest="timeout_ms", type=int, default=30_000, metavar="MS")
    return parser


def _config(ns: argparse.Namespace) -> CliConfig:
    known = {f for f in CliConfig.__dataclass_fields__}
    return CliConfig(**{k: v for k, v in vars(ns).items() if k in known})


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _print_model(verdict) -> None:
    model = verdict.model
    if model is not None and hasattr(model, "domain"):
        print(f"; domain: {' '.join(model.show(b) for b in model.domain)}")
        for i, base in enumerate(model.bases):
            print(f";   bit {i}: {base}")
        return
    lines = verdict.raw.splitlines()[1:]
    if lines:
        print("\n".join(lines))


def cmd_solve(cfg: CliConfig) -> int:
    sig, c = parse_constraint_file(_read(cfg.input))
    verdict = solve(c, sig, cfg.solver())
    print(verdict.status)
    if verdict.status == "unknown":
        print(f"; {verdict.reason}: {verdict.detail}".rstrip(), file=sys.stderr)
    if cfg.get_model and verdict.is_sat:
        _print_model(verdict)
    return {"sat": 0, "unsat": 1}.get(verdict.status, 2)


def cmd_analyze(cfg: CliConfig) -> int:
    from .lang import analyze_program, parse_program

    program = parse_program(_read(cfg.input))
    report = analyze_program(program, cfg.solver(), approx_proj=cfg.approx_proj)
    for line in report.lines():
        print(line)
    print(f"; {report.backend_calls} solver call(s), {report.elided_checks} check(s) elided",
          file=sys.stderr)
    if cfg.dump_constraints is not None:
        cfg.dump_constraints.mkdir(parents=True, exist_ok=True)
        for d in report.definitions:
            name = f"{d.name}_{d.span.line}_{d.span.col}.sc"
            header = f"; {d.name} at {d.span}: {d.verdict}\n"
            text = format_constraint_file(report.signature, d.constraint)
            (cfg.dump_constraints / name).write_text(header + text, encoding="utf-8")
    return report.exit_code()


def cmd_translate(cfg: CliConfig) -> int:
    sig, c = parse_constraint_file(_read(cfg.input))
    if cfg.to == "monadic":
        theory = formula_to_monadic(eliminate_projections(c, sig), sig)
        if not cfg.full:
            theory = reduce_theory(theory)
        sys.stdout.write(theory.text())
        return 0
    solver = cfg.solver()
    solver.mode = "smt"
    p = plan(c, sig, solver)
    if p.script is None:
        verdict = "sat" if p.decided else "unsat"
        print(f"; no SMT problem: {p.reason} ({verdict})")
        return 0
    sys.stdout.write(render(p.script))
    return 0


COMMANDS = {"solve": cmd_solve, "analyze": cmd_analyze, "translate": cmd_translate}


def main(argv: list[str] | None = None) -> int:
    from .lang import LangSyntaxError, LangTypeError

    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    cfg = _config(ns)
    try:
        return COMMANDS[cfg.command](cfg)
    except OSError as exc:
        print(f"setpat: {exc}", file=sys.stderr)
    except (ConstraintError, LangSyntaxError, LangTypeError) as exc:
        print(f"setpat: {cfg.input}:{exc}", file=sys.stderr)
    except Exception as exc:  # report, never dump a trace on the user
        logging.getLogger(__name__).debug("internal error", exc_info=True)
        print(f"setpat: internal error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
