"""Reduced translation of set constraints to quantified bit-vector SMT.

Every element of a model is an ``N``-bit sequence with one bit per base
predicate (set variable or function application). Composite predicates are
computed from those bits, so the solver only guesses the domain
(``inDomain``), one witness per negative literal, and for every function
symbol and every variable the variable's bit in the symbol's outputs.
"""

from __future__ import annotations

import logging
import os
import re
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .constraints import (
    TRUE, FALSE, And, App, Atom, AtomNode, Bot, Formula, Inter, Neg, Not, Or,
    PredicateIndex, Proj, SetExpr, Signature, Top, Union, Var, atoms,
    conjuncts, eliminate_projections, index_base_predicates,
)

log = logging.getLogger(__name__)

__all__ = [
    "SeqVar", "SeqConst", "SeqApp", "BitOf", "BAnd", "BOr", "BNot", "BImplies",
    "BIff", "Lit", "UFApp", "BoolConst", "ForAll", "Exists", "SeqEq",
    "SmtScript", "Verdict", "BackendConfig", "SolverConfig", "compile_predicate",
    "encode_conjunction", "encode_formula", "render", "run_backend", "solve",
    "literals_of", "evaluate_script", "Plan", "plan",
]


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class SeqVar:
    name: str


@dataclass(frozen=True)
class SeqConst:
    name: str


@dataclass(frozen=True)
class SeqApp:
    fn: str
    args: tuple = ()


class BoolTerm:
    __slots__ = ()


@dataclass(frozen=True)
class BitOf(BoolTerm):
    seq: object
    pos: int


@dataclass(frozen=True)
class BAnd(BoolTerm):
    items: tuple


@dataclass(frozen=True)
class BOr(BoolTerm):
    items: tuple


@dataclass(frozen=True)
class BNot(BoolTerm):
    arg: BoolTerm


@dataclass(frozen=True)
class BImplies(BoolTerm):
    lhs: BoolTerm
    rhs: BoolTerm


@dataclass(frozen=True)
class BIff(BoolTerm):
    lhs: BoolTerm
    rhs: BoolTerm


@dataclass(frozen=True)
class Lit(BoolTerm):
    value: bool


@dataclass(frozen=True)
class UFApp(BoolTerm):
    """Application of a declared Bool-valued function (``inDomain`` or ``f_X``)."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class BoolConst(BoolTerm):
    name: str


@dataclass(frozen=True)
class ForAll(BoolTerm):
    vars: tuple
    body: BoolTerm


@dataclass(frozen=True)
class Exists(BoolTerm):
    vars: tuple
    body: BoolTerm


@dataclass(frozen=True)
class SeqEq(BoolTerm):
    lhs: object
    rhs: object


def band(*items: BoolTerm) -> BoolTerm:
    flat = []
    for t in items:
        if t == Lit(True):
            continue
        if t == Lit(False):
            return Lit(False)
        flat.extend(t.items if isinstance(t, BAnd) else (t,))
    if not flat:
        return Lit(True)
    return flat[0] if len(flat) == 1 else BAnd(tuple(flat))


def bnot(t: BoolTerm) -> BoolTerm:
    if isinstance(t, Lit):
        return Lit(not t.value)
    return BNot(t)


# ---------------------------------------------------------------------------
# Script


@dataclass(frozen=True)
class Decl:
    name: str
    arity: int          # number of N-bit arguments
    sort: str           # "Bool" or "BV"


@dataclass(frozen=True)
class Define:
    name: str
    params: tuple
    bits: tuple         # BoolTerm per base position, in index order


@dataclass
class SmtScript:
    n: int
    index: PredicateIndex
    declarations: list = field(default_factory=list)
    definitions: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    logic: str = "UFBV"
    get_model: bool = False
    options: tuple = ()             # (name, value) pairs emitted as set-option
    # bookkeeping for model replay
    unknown_of: dict = field(default_factory=dict)      # (sym, var) -> f_X name
    assembler_of: dict = field(default_factory=dict)    # sym -> assembler name
    witness_of: dict = field(default_factory=dict)      # (atom, occurrence) -> name
    literal_of: dict = field(default_factory=dict)      # atom -> l name

    def declared_names(self) -> list[str]:
        return [d.name for d in self.declarations] + [d.name for d in self.definitions]

    def text(self) -> str:
        return render(self)


SIMPLE_SYMBOL = re.compile(r"[A-Za-z~!@$%^&*_\-+=<>.?/][A-Za-z0-9~!@$%^&*_\-+=<>.?/]*\Z")


def smt_symbol(name: str) -> str:
    if SIMPLE_SYMBOL.match(name):
        return name
    return "|" + name.replace("|", "").replace("\\", "") + "|"


def compile_predicate(e: SetExpr, idx: PredicateIndex, b) -> BoolTerm:
    """Membership of sequence ``b`` in ``e``, reading base bits from ``idx``."""
    if isinstance(e, Top):
        return Lit(True)
    if isinstance(e, Bot):
        return Lit(False)
    if isinstance(e, (Var, App)):
        return BitOf(b, idx[e])
    if isinstance(e, Neg):
        return bnot(compile_predicate(e.arg, idx, b))
    if isinstance(e, Inter):
        return BAnd((compile_predicate(e.left, idx, b), compile_predicate(e.right, idx, b)))
    if isinstance(e, Union):
        return BOr((compile_predicate(e.left, idx, b), compile_predicate(e.right, idx, b)))
    if isinstance(e, Proj):
        raise ValueError(f"projection {e} must be eliminated before encoding")
    raise TypeError(f"not a set expression: {e!r}")


def literals_of(c: Formula) -> list[tuple[Atom, bool]] | None:
    """The literal list if ``c`` is a conjunction of literals, else ``None``."""
    out = []
    for part in conjuncts(c):
        if isinstance(part, AtomNode):
            out.append((part.atom, True))
        elif isinstance(part, Not) and isinstance(part.arg, AtomNode):
            out.append((part.arg.atom, False))
        else:
            return None
    return out


class _Names:
    def __init__(self):
        self.used: set[str] = {"inDomain"}

    def take(self, want: str) -> str:
        name, k = want, 1
        while name in self.used:
            k += 1
            name = f"{want}.{k}"
        self.used.add(name)
        return name


def _skeleton(sig: Signature, idx: PredicateIndex, image_axiom: bool) -> SmtScript:
    if idx.n < 1:
        raise ValueError("bit width 0: decide the formula directly instead of encoding it")
    script = SmtScript(n=idx.n, index=idx)
    names = _Names()
    script.declarations.append(Decl("inDomain", 1, "Bool"))
    variables = idx.variables
    for f in sig:
        for v in variables:
            uname = names.take(f"{f.name}_{v}")
            script.unknown_of[(f.name, v)] = uname
            script.declarations.append(Decl(uname, f.arity, "Bool"))
    for f in sig:
        params = tuple(f"b{j + 1}" for j in range(f.arity))
        seqs = [SeqVar(p) for p in params]
        bits = []
        for base in idx.bases:
            if isinstance(base, Var):
                bits.append(UFApp(script.unknown_of[(f.name, base.name)], tuple(seqs)))
            elif base.sym == f.name:
                bits.append(band(*(compile_predicate(e, idx, s) for e, s in zip(base.args, seqs))))
            else:
                bits.append(Lit(False))
        aname = names.take(f"{f.name}.SMT")
        script.assembler_of[f.name] = aname
        script.definitions.append(Define(aname, params, tuple(bits)))
    for f in sig:
        xs = tuple(f"x{j + 1}" for j in range(f.arity))
        image = UFApp("inDomain", (SeqApp(script.assembler_of[f.name], tuple(SeqVar(x) for x in xs)),))
        if f.arity == 0:
            script.assertions.append(image)
        else:
            guard = band(*(UFApp("inDomain", (SeqVar(x),)) for x in xs))
            script.assertions.append(ForAll(xs, BImplies(guard, image)))
    if image_axiom:
        cases = []
        for f in sig:
            xs = tuple(f"z{j + 1}" for j in range(f.arity))
            img = SeqEq(SeqVar("x"), SeqApp(script.assembler_of[f.name], tuple(SeqVar(z) for z in xs)))
            body = band(*(UFApp("inDomain", (SeqVar(z),)) for z in xs), img)
            cases.append(Exists(xs, body) if xs else body)
        script.assertions.append(
            ForAll(("x",), BImplies(UFApp("inDomain", (SeqVar("x"),)), BOr(tuple(cases)) if cases else Lit(False)))
        )
    script._names = names  # type: ignore[attr-defined]
    return script


def _positive(atom: Atom, idx: PredicateIndex) -> BoolTerm:
    x = SeqVar("x")
    return ForAll(("x",), BImplies(
        band(UFApp("inDomain", (x,)), compile_predicate(atom.lhs, idx, x)),
        compile_predicate(atom.rhs, idx, x)))


def _negative(atom: Atom, idx: PredicateIndex, witness: str) -> BoolTerm:
    y = SeqConst(witness)
    return band(UFApp("inDomain", (y,)), compile_predicate(atom.lhs, idx, y),
                bnot(compile_predicate(atom.rhs, idx, y)))


def encode_conjunction(
    literals: Sequence[tuple[Atom, bool]],
    sig: Signature,
    idx: PredicateIndex,
    image_axiom: bool = False,
) -> SmtScript:
    """Encode a conjunction of (atom, polarity) literals."""
    script = _skeleton(sig, idx, image_axiom)
    names: _Names = script._names  # type: ignore[attr-defined]
    k = 0
    for i, (atom, positive) in enumerate(literals):
        if positive:
            script.assertions.append(_positive(atom, idx))
        else:
            k += 1
            w = names.take(f"y.{k}")
            script.witness_of[(atom, i)] = w
            script.declarations.append(Decl(w, 0, "BV"))
            script.assertions.append(_negative(atom, idx, w))
    return script


def _skeleton_formula(c: Formula, lits: dict) -> BoolTerm:
    if isinstance(c, AtomNode):
        return BoolConst(lits[c.atom])
    if isinstance(c, Not):
        return bnot(_skeleton_formula(c.arg, lits))
    parts = (_skeleton_formula(c.left, lits), _skeleton_formula(c.right, lits))
    return BAnd(parts) if isinstance(c, And) else BOr(parts)


def encode_formula(
    c: Formula,
    sig: Signature,
    idx: PredicateIndex,
    image_axiom: bool = False,
) -> SmtScript:
    """Encode an arbitrary boolean combination, guessing one boolean per atom."""
    lits = literals_of(c)
    if lits is not None:
        return encode_conjunction(lits, sig, idx, image_axiom)
    script = _skeleton(sig, idx, image_axiom)
    names: _Names = script._names  # type: ignore[attr-defined]
    distinct = list(dict.fromkeys(atoms(c)))
    for i, atom in enumerate(distinct, 1):
        lname = names.take(f"l.{i}")
        w = names.take(f"y.{i}")
        script.literal_of[atom] = lname
        script.witness_of[(atom, 0)] = w
        script.declarations.append(Decl(lname, 0, "Bool"))
        script.declarations.append(Decl(w, 0, "BV"))
    for atom in distinct:
        lit = BoolConst(script.literal_of[atom])
        script.assertions.append(BImplies(lit, _positive(atom, idx)))
        script.assertions.append(BImplies(bnot(lit), _negative(atom, idx, script.witness_of[(atom, 0)])))
    script.assertions.append(_skeleton_formula(c, script.literal_of))
    return script


# ---------------------------------------------------------------------------
# SMT-LIB text


def _seq(t) -> str:
    if isinstance(t, (SeqVar, SeqConst)):
        return smt_symbol(t.name)
    if isinstance(t, SeqApp):
        if not t.args:
            return smt_symbol(t.fn)
        return "(" + " ".join([smt_symbol(t.fn)] + [_seq(a) for a in t.args]) + ")"
    raise TypeError(t)


def _bool(t: BoolTerm, bv: str) -> str:
    if isinstance(t, Lit):
        return "true" if t.value else "false"
    if isinstance(t, BitOf):
        return f"(= ((_ extract {t.pos} {t.pos}) {_seq(t.seq)}) #b1)"
    if isinstance(t, BAnd):
        if not t.items:
            return "true"
        return "(and " + " ".join(_bool(x, bv) for x in t.items) + ")" if len(t.items) > 1 else _bool(t.items[0], bv)
    if isinstance(t, BOr):
        if not t.items:
            return "false"
        return "(or " + " ".join(_bool(x, bv) for x in t.items) + ")" if len(t.items) > 1 else _bool(t.items[0], bv)
    if isinstance(t, BNot):
        return f"(not {_bool(t.arg, bv)})"
    if isinstance(t, BImplies):
        return f"(=> {_bool(t.lhs, bv)} {_bool(t.rhs, bv)})"
    if isinstance(t, BIff):
        return f"(= {_bool(t.lhs, bv)} {_bool(t.rhs, bv)})"
    if isinstance(t, UFApp):
        if not t.args:
            return smt_symbol(t.name)
        return "(" + " ".join([smt_symbol(t.name)] + [_seq(a) for a in t.args]) + ")"
    if isinstance(t, BoolConst):
        return smt_symbol(t.name)
    if isinstance(t, SeqEq):
        return f"(= {_seq(t.lhs)} {_seq(t.rhs)})"
    if isinstance(t, (ForAll, Exists)):
        q = "forall" if isinstance(t, ForAll) else "exists"
        binders = " ".join(f"({smt_symbol(v)} {bv})" for v in t.vars)
        return f"({q} ({binders}) {_bool(t.body, bv)})"
    raise TypeError(t)


def render(script: SmtScript) -> str:
    n = script.n
    bv = f"(_ BitVec {n})"
    out = [f"(set-option :{name} {value})" for name, value in script.options]
    out.append(f"(set-logic {script.logic})")
    for d in script.declarations:
        if d.sort == "Bool" and d.arity == 0:
            out.append(f"(declare-const {smt_symbol(d.name)} Bool)")
        elif d.sort == "BV":
            out.append(f"(declare-const {smt_symbol(d.name)} {bv})")
        else:
            args = " ".join([bv] * d.arity)
            out.append(f"(declare-fun {smt_symbol(d.name)} ({args}) Bool)")
    for df in script.definitions:
        params = " ".join(f"({p} {bv})" for p in df.params)
        bits = [f"(ite {_bool(b, bv)} #b1 #b0)" for b in reversed(df.bits)]
        body = bits[0] if len(bits) == 1 else "(concat " + " ".join(bits) + ")"
        out.append(f"(define-fun {smt_symbol(df.name)} ({params}) {bv} {body})")
    for a in script.assertions:
        out.append(f"(assert {_bool(a, bv)})")
    out.append("(check-sat)")
    if script.get_model:
        out.append("(get-model)")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Evaluation against an explicit model (used to replay oracle models)


def evaluate_script(script: SmtScript, model) -> list[bool]:
    """Truth value of every assertion under ``model``.

    ``model`` must provide ``in_domain(b)``, ``unknown(name, args)`` for the
    guessed ``f_X`` functions, and ``const(name)`` for witnesses and literal
    booleans. Quantifiers range over all ``2**n`` sequences.
    """
    defs = {d.name: d for d in script.definitions}
    universe = range(1 << script.n)

    def seq(t, env):
        if isinstance(t, SeqVar):
            return env[t.name]
        if isinstance(t, SeqConst):
            return model.const(t.name)
        d = defs[t.fn]
        args = [seq(a, env) for a in t.args]
        inner = dict(zip(d.params, args))
        value = 0
        for pos, bit in enumerate(d.bits):
            if ev(bit, inner):
                value |= 1 << pos
        return value

    def ev(t, env) -> bool:
        if isinstance(t, Lit):
            return t.value
        if isinstance(t, BitOf):
            return bool((seq(t.seq, env) >> t.pos) & 1)
        if isinstance(t, BAnd):
            return all(ev(x, env) for x in t.items)
        if isinstance(t, BOr):
            return any(ev(x, env) for x in t.items)
        if isinstance(t, BNot):
            return not ev(t.arg, env)
        if isinstance(t, BImplies):
            return (not ev(t.lhs, env)) or ev(t.rhs, env)
        if isinstance(t, BIff):
            return ev(t.lhs, env) == ev(t.rhs, env)
        if isinstance(t, UFApp):
            args = tuple(seq(a, env) for a in t.args)
            if t.name == "inDomain":
                return model.in_domain(args[0])
            return model.unknown(t.name, args)
        if isinstance(t, BoolConst):
            return bool(model.const(t.name))
        if isinstance(t, SeqEq):
            return seq(t.lhs, env) == seq(t.rhs, env)
        if isinstance(t, (ForAll, Exists)):
            quant = all if isinstance(t, ForAll) else any
            return quant(ev(t.body, {**env, **dict(zip(t.vars, combo))})
                         for combo in _tuples(universe, len(t.vars)))
        raise TypeError(t)

    return [ev(a, {}) for a in script.assertions]


def _tuples(universe, k):
    if k == 0:
        yield ()
        return
    for head in universe:
        for rest in _tuples(universe, k - 1):
            yield (head,) + rest


# ---------------------------------------------------------------------------
# Verdicts and backends


@dataclass
class Verdict:
    status: str                      # "sat" | "unsat" | "unknown"
    reason: str | None = None        # for unknown: timeout | solver-unknown | backend-error | budget
    detail: str = ""
    raw: str = ""
    model: object = None
    trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.status not in ("sat", "unsat", "unknown"):
            raise ValueError(f"bad verdict status {self.status!r}")
        if self.status == "unknown" and not self.reason:
            raise ValueError("an unknown verdict needs a reason")

    @classmethod
    def sat(cls, raw: str = "", **kw) -> "Verdict":
        return cls("sat", raw=raw, **kw)

    @classmethod
    def unsat(cls, **kw) -> "Verdict":
        return cls("unsat", **kw)

    @classmethod
    def unknown(cls, reason: str, detail: str = "", **kw) -> "Verdict":
        return cls("unknown", reason=reason, detail=detail, **kw)

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"

    @property
    def definite(self) -> bool:
        return self.status != "unknown"

    def __str__(self) -> str:
        return self.status


ENV_BACKEND = "SETPAT_SMT"


@dataclass
class BackendConfig:
    path: str | None = None
    args: tuple = ("-smt2", "-in")
    timeout_ms: int = 30_000
    get_model: bool = False
    logic: str = "UFBV"
    # z3's E-matching loops on the closure axioms of binary symbols; model-based
    # instantiation alone is complete over the finite bit-vector domain
    options: tuple = (("smt.ematching", "false"),)

    def apply(self, script: SmtScript) -> SmtScript:
        script.logic = self.logic
        script.get_model = self.get_model
        script.options = tuple(self.options)
        return script

    @classmethod
    def from_env(cls, **kw) -> "BackendConfig":
        return cls(path=kw.pop("path", None) or os.environ.get(ENV_BACKEND), **kw)

    def resolve(self) -> str | None:
        if not self.path:
            return shutil.which("z3")
        return shutil.which(self.path) or (self.path if Path(self.path).exists() else None)


def run_backend(script: SmtScript, cfg: BackendConfig) -> Verdict:
    """Run an external SMT-LIB 2 solver, feeding the script on standard input."""
    exe = cfg.resolve()
    if exe is None:
        return Verdict.unknown("backend-error", f"solver executable not found: {cfg.path or 'z3'}")
    text = render(cfg.apply(script))
    try:
        proc = subprocess.run(
            [exe, *cfg.args], input=text, capture_output=True, text=True,
            timeout=max(cfg.timeout_ms, 1) / 1000.0,
        )
    except subprocess.TimeoutExpired:
        return Verdict.unknown("timeout", f"no answer within {cfg.timeout_ms} ms")
    except OSError as exc:
        return Verdict.unknown("backend-error", str(exc))
    out = proc.stdout.strip()
    first = out.split(None, 1)[0] if out else ""
    if first == "sat":
        if proc.returncode != 0 and not cfg.get_model:
            return Verdict.unknown("backend-error", f"exit {proc.returncode}: {proc.stderr.strip()}")
        return Verdict.sat(raw=out)
    if first == "unsat":
        return Verdict.unsat(raw=out)
    if first == "unknown":
        return Verdict.unknown("solver-unknown", out)
    if first == "timeout":
        return Verdict.unknown("timeout", out)
    detail = (out or proc.stderr.strip())[:500]
    return Verdict.unknown("backend-error", f"exit {proc.returncode}: {detail}")


# ---------------------------------------------------------------------------
# Pipeline


@dataclass
class SolverConfig:
    mode: str = "oracle"                  # "oracle" | "smt"
    backend: BackendConfig = field(default_factory=BackendConfig)
    budget: object = None                 # oracle.Budget; None means the default
    simplify: bool = True
    image_axiom: bool = False
    literal_emptiness: bool = False
    dump_smtlib: Path | None = None
    label: str = "query"


def const_denotation(e: SetExpr) -> bool:
    """For base-free expressions: True if ``e`` denotes H, False if ∅."""
    if isinstance(e, Top):
        return True
    if isinstance(e, Bot):
        return False
    if isinstance(e, Neg):
        return not const_denotation(e.arg)
    if isinstance(e, Inter):
        return const_denotation(e.left) and const_denotation(e.right)
    if isinstance(e, Union):
        return const_denotation(e.left) or const_denotation(e.right)
    raise ValueError(f"{e} is not constant")


def evaluate_formula(c: Formula, atom_value: Callable[[Atom], bool]) -> bool:
    if isinstance(c, AtomNode):
        return atom_value(c.atom)
    if isinstance(c, Not):
        return not evaluate_formula(c.arg, atom_value)
    if isinstance(c, And):
        return evaluate_formula(c.left, atom_value) and evaluate_formula(c.right, atom_value)
    return evaluate_formula(c.left, atom_value) or evaluate_formula(c.right, atom_value)


def prepare(c: Formula, sig: Signature, cfg: SolverConfig, trace: list) -> Formula:
    """Projection elimination followed by the simplification passes."""
    from .simplify import simplify_constraint

    c = eliminate_projections(c, sig, literal_emptiness=cfg.literal_emptiness)
    trace.append(("eliminate-projections", str(c)))
    if cfg.simplify:
        c, uf = simplify_constraint(c)
        trace.append(("simplify", str(c)))
        if uf.classes():
            trace.append(("merged", repr(uf.classes())))
    return c


@dataclass
class Plan:
    """What :func:`solve` will do with a formula, before any solver runs."""

    formula: Formula
    trace: list
    decided: bool | None = None         # set when no solver is needed
    reason: str = ""
    script: SmtScript | None = None     # only for mode "smt"


def plan(c: Formula, sig: Signature, cfg: SolverConfig | None = None) -> Plan:
    """Prepare ``c`` and, if a solver is needed in SMT mode, build its script."""
    cfg = cfg or SolverConfig()
    trace: list = [("input", str(c))]
    if not sig.has_ground_term:
        # H is empty: every expression denotes ∅, so every atom holds
        return Plan(c, trace, evaluate_formula(c, lambda a: True), "empty Herbrand universe")
    c = prepare(c, sig, cfg, trace)
    if c == TRUE or c == FALSE:
        return Plan(c, trace, c == TRUE, "constant formula")
    idx = index_base_predicates(c)
    trace.append(("bases", ", ".join(map(str, idx.bases))))
    if idx.n == 0:
        value = evaluate_formula(
            c, lambda a: (not const_denotation(a.lhs)) or const_denotation(a.rhs))
        return Plan(c, trace, value, "no base predicates")
    out = Plan(c, trace)
    if cfg.mode == "smt":
        out.script = cfg.backend.apply(encode_formula(c, sig, idx, image_axiom=cfg.image_axiom))
    return out


def solve(c: Formula, sig: Signature, cfg: SolverConfig | None = None) -> Verdict:
    """Decide satisfiability of ``c`` over the Herbrand universe of ``sig``."""
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    p = plan(c, sig, cfg)
    trace = p.trace
    if p.decided is not None:
        trace.append(("short-circuit", p.reason))
        return (Verdict.sat if p.decided else Verdict.unsat)(trace=trace)
    if cfg.mode == "oracle":
        from .oracle import Budget, oracle_solve

        verdict = oracle_solve(p.formula, sig, cfg.budget or Budget(), image_axiom=cfg.image_axiom)
    elif cfg.mode == "smt":
        if cfg.dump_smtlib is not None:
            Path(cfg.dump_smtlib).mkdir(parents=True, exist_ok=True)
            (Path(cfg.dump_smtlib) / f"{cfg.label}.smt2").write_text(render(p.script))
        verdict = run_backend(p.script, cfg.backend)
    else:
        raise ValueError(f"unknown solver mode {cfg.mode!r}")
    trace.append(("verdict", f"{verdict.status} in {time.perf_counter() - start:.3f}s"))
    verdict.trace = trace + verdict.trace
    log.debug("solve %s -> %s", cfg.label, verdict.status)
    return verdict
