"""Command-line front end: ``lmd check|eval|normalize|natural|test|repl``.

Exit status is 0 on success, 1 for errors in the user's program or
arguments, and 2 when an internal invariant fails (a checked term gets
stuck, or a property suite finds a counterexample).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from .kernel import Signature
from .natural import StlcTypeError, nat_signature, nat_term, nat_type, stlc_check
from .prelude import prelude_signature
from .reduction import StepBudgetExceeded, Stuck, eval_staged, normalize
from .surface import (
    Diagnostic, ParseError, inline_defs, load_source, parse_signature, parse_term,
    pretty, pretty_stage,
)
from .typesystem import Checker, LmdTypeError

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class InternalError(Exception):
    pass


@dataclass
class Checked:
    name: str
    term: object
    type: object
    derivation: object


@dataclass
class Session:
    signature: Signature = field(default_factory=Signature)
    prelude: bool = False
    max_steps: int = 100_000
    defs: dict = field(default_factory=dict)

    @classmethod
    def create(cls, prelude=False, signature_file=None, max_steps=100_000):
        sig = prelude_signature() if prelude else Signature()
        if signature_file:
            with open(signature_file, encoding="utf-8") as fh:
                extra = parse_signature(fh.read())
            sig = Signature(sig.decls + extra.decls)
        session = cls(sig, prelude, max_steps)
        session.checker.wf_signature()
        return session

    @property
    def checker(self) -> Checker:
        return Checker(self.signature, delta=self.prelude, max_steps=self.max_steps)

    def load(self, text: str, path: str = "<input>") -> list:
        """Check every declaration of a source text; returns the checked definitions in order."""
        sig, sf = load_source(text, path, self.signature)
        self.signature = sig
        ck = self.checker
        ck.wf_signature()
        out = []
        for d in sf.decls:
            if d.kind not in ("def", "main"):
                continue
            term = inline_defs(d.value, {k: v.term for k, v in self.defs.items()})
            annot = d.annot and inline_defs(d.annot, {k: v.term for k, v in self.defs.items()})
            try:
                if annot is not None:
                    ck.expect_star((), annot, ())
                    ty, deriv = annot, ck.check_type((), term, annot, ())
                else:
                    ty, deriv = ck.infer_type((), term, ())
            except LmdTypeError as err:
                err.span = d.span
                raise
            checked = Checked(d.name, term, ty, deriv)
            self.defs[d.name] = checked
            out.append(checked)
        return out

    def parse(self, text: str):
        term = parse_term(text, set(self.signature.const_names()))
        return inline_defs(term, {k: v.term for k, v in self.defs.items()})

    def main(self):
        if "main" not in self.defs:
            raise ValueError("no main declaration")
        return self.defs["main"]

    def evaluate(self, term):
        try:
            return eval_staged(term, self.max_steps, self.prelude)
        except Stuck as err:
            raise InternalError(f"well-typed term got stuck: {err}") from err

    def normalize(self, term, strategy="leftmost-outermost"):
        return normalize(term, strategy, self.max_steps, self.prelude)

    def natural(self, term, ty):
        env = nat_signature(self.signature)
        image = nat_term(term)
        try:
            got = stlc_check(env, image)
        except StlcTypeError as err:
            raise InternalError(f"translation does not type in STLC: {err}") from err
        if got != nat_type(ty):
            raise InternalError(f"translated type {got} differs from {nat_type(ty)}")
        return image, got


def trace_line(step) -> str:
    return json.dumps({"rule": step.rule.value, "path": list(step.path),
                       "before": pretty(step.before), "after": pretty(step.after)})


def _diagnostic(err, path) -> Diagnostic:
    if isinstance(err, ParseError):
        return Diagnostic("error", err.span, err.message)
    if isinstance(err, LmdTypeError):
        return Diagnostic("error", err.span, str(err), err.stack)
    return Diagnostic("error", None, str(err))


def _error_json(err) -> dict:
    out = {"status": "error", "message": str(err)}
    if isinstance(err, LmdTypeError):
        out["rule"] = err.rule
        out["stack"] = list(err.stack)
    span = getattr(err, "span", None)
    if span is not None:
        out["span"] = {"line": span.line, "col": span.col, "length": span.length}
    return out


# ---------------------------------------------------------------- commands


def _load(args) -> tuple:
    session = Session.create(args.prelude, args.signature, args.max_steps)
    with open(args.file, encoding="utf-8") as fh:
        text = fh.read()
    return session, session.load(text, args.file)


def cmd_check(args, out) -> int:
    session, checked = _load(args)
    if args.json:
        decls = [{"name": c.name, "type": pretty(c.type), "stage": pretty_stage(())} for c in checked]
        print(json.dumps({"status": "ok", "decls": decls}), file=out)
    else:
        for c in checked:
            print(f"{c.name} : {pretty(c.type)} @ {pretty_stage(())}", file=out)
    if args.dump_derivation:
        target = session.defs.get("main") or (checked[-1] if checked else None)
        if target is not None:
            print(json.dumps(target.derivation.to_json()), file=out)
    return EXIT_OK


def cmd_eval(args, out) -> int:
    session, _ = _load(args)
    value, steps = session.evaluate(session.main().term)
    _emit_run(args, out, steps, "value", value)
    return EXIT_OK


def cmd_normalize(args, out) -> int:
    session, _ = _load(args)
    strategy = args.strategy
    if strategy.isdigit():
        strategy = int(strategy)
    nf, steps = session.normalize(session.main().term, strategy)
    _emit_run(args, out, steps, "normal_form", nf)
    return EXIT_OK


def _emit_run(args, out, steps, key, result):
    if args.trace:
        for s in steps:
            print(trace_line(s), file=out)
    if args.json:
        print(json.dumps({key: pretty(result), "steps": len(steps)}), file=out)
    else:
        print(pretty(result), file=out)


def cmd_natural(args, out) -> int:
    session, _ = _load(args)
    main = session.main()
    image, ty = session.natural(main.term, main.type)
    if args.json:
        print(json.dumps({"term": str(image), "type": str(ty)}), file=out)
    else:
        print(f"{image} : {ty}", file=out)
    return EXIT_OK


def cmd_test(args, out) -> int:
    from .testkit import SUITES

    report = SUITES[args.suite](args.n, seed=args.seed)
    print(report.summary(), file=out)
    if report.counterexamples:
        os.makedirs(args.out, exist_ok=True)
        for i, cx in enumerate(report.counterexamples):
            path = os.path.join(args.out, f"{args.suite}-{args.seed}-{i}.txt")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(cx.render())
            print(f"counterexample written to {path}", file=out)
    return EXIT_OK if report.ok else EXIT_INTERNAL


# ---------------------------------------------------------------- REPL


class Repl:
    HELP = ":check M | :eval M | :norm M | :quit | def/type/const declarations | bare term"

    def __init__(self, session: Session):
        self.session = session

    def handle(self, line: str):
        """Process one input line; returns the text to print, or ``None`` to quit."""
        line = line.strip()
        if not line or line.startswith("--"):
            return ""
        cmd, _, rest = line.partition(" ")
        try:
            match cmd:
                case ":quit" | ":q":
                    return None
                case ":help":
                    return self.HELP
                case ":check":
                    term = self.session.parse(rest)
                    ty, _ = self.session.checker.infer_type((), term, ())
                    return f"{pretty(ty)} @ {pretty_stage(())}"
                case ":eval":
                    term = self._checked(rest)
                    return pretty(self.session.evaluate(term)[0])
                case ":norm":
                    term = self._checked(rest)
                    return pretty(self.session.normalize(term)[0])
                case "def" | "type" | "const" | "main":
                    text = line if line.endswith(";") else line + ";"
                    checked = self.session.load(text, "<repl>")
                    return "\n".join(f"{c.name} : {pretty(c.type)} @ {pretty_stage(())}" for c in checked)
            if cmd.startswith(":"):
                return f"unknown command {cmd}; {self.HELP}"
            term = self._checked(line)
            ty, _ = self.session.checker.infer_type((), term, ())
            value, _ = self.session.evaluate(term)
            return f"{pretty(value)} : {pretty(ty)}"
        except (ParseError, LmdTypeError, StepBudgetExceeded, ValueError) as err:
            return _diagnostic(err, "<repl>").render("<repl>")
        except InternalError as err:
            return f"internal error: {err}"

    def _checked(self, text):
        term = self.session.parse(text)
        self.session.checker.infer_type((), term, ())
        return term

    def run(self, stdin=None, out=None):
        stdin, out = stdin or sys.stdin, out or sys.stdout
        interactive = stdin.isatty()
        while True:
            if interactive:
                print("lmd> ", end="", file=out, flush=True)
            line = stdin.readline()
            if not line:
                return EXIT_OK
            reply = self.handle(line)
            if reply is None:
                return EXIT_OK
            if reply:
                print(reply, file=out)


def cmd_repl(args, out) -> int:
    session = Session.create(args.prelude, args.signature, args.max_steps)
    return Repl(session).run(out=out)


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prelude", action="store_true",
                        help="load the Int/Bool/Vector prelude and enable arithmetic and vector delta rules")
    common.add_argument("--signature", metavar="FILE", help="extra type and constant declarations")
    common.add_argument("--max-steps", type=int, default=100_000, metavar="N")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = argparse.ArgumentParser(prog="lmd", description="Dependently typed multi-stage calculus toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="type-check a source file")
    p.add_argument("file")
    p.add_argument("--dump-derivation", action="store_true", help="print the derivation of main as JSON")
    p.set_defaults(func=cmd_check)

    for name, func, help_ in (("eval", cmd_eval, "staged evaluation of main"),
                              ("normalize", cmd_normalize, "full normalization of main")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("file")
        p.add_argument("--trace", action="store_true", help="print each step as a JSON line")
        if name == "normalize":
            p.add_argument("--strategy", default="leftmost-outermost",
                           help="leftmost-outermost, staged, random, or an integer seed")
        p.set_defaults(func=func)

    p = sub.add_parser("natural", parents=[common], help="print the simply typed image of main")
    p.add_argument("file")
    p.set_defaults(func=cmd_natural)

    p = sub.add_parser("test", help="run a metatheory property suite")
    p.add_argument("--suite", required=True,
                   choices=["preservation", "confluence", "sn", "natural", "decomposition", "staged-subset"])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="counterexamples", help="directory for counterexample files")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("repl", parents=[common], help="interactive session")
    p.set_defaults(func=cmd_repl)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (ParseError, LmdTypeError, StepBudgetExceeded, ValueError, OSError) as err:
        if getattr(args, "json", False):
            print(json.dumps(_error_json(err)), file=out)
        else:
            print(_diagnostic(err, getattr(args, "file", "")).render(getattr(args, "file", "<input>")),
                  file=sys.stderr)
        return EXIT_USER
    except InternalError as err:
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
