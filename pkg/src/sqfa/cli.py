"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 ill-formed machine or failed
construction, 3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis, constructions, montecarlo, spec_io
from .errors import ConstructionFailed, IllFormedMachine, InvalidArgument
from .model import AcceptanceMode

EXIT_USAGE, EXIT_MACHINE, EXIT_VERIFY = 1, 2, 3
FAMILIES = ("dfa-mod", "dfa-len", "eq-1qcfa", "mod-2qcfa", "len-2qcfa", "moqfa-mod",
            "tradeoff-1qcfa")

SWEEP_COLUMNS = ("word", "length", "p_accept", "p_reject", "expected_steps", "representation")
SIMULATE_COLUMNS = ("word", "n_runs", "p_accept_hat", "p_reject_hat", "ci_halfwidth",
                    "mean_steps", "censored_count", "usable")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_range(text: str) -> list:
    """``"5"`` or ``"1..25"`` (inclusive)."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if lo > hi:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; expected N or A..B") from None


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad number {text!r}") from None


def _default_seed() -> int:
    try:
        return int(os.environ.get("SQFA_SEED", "0"))
    except ValueError:
        return 0


def _machine_args(p):
    src = p.add_argument_group("machine source (exactly one of --family / --spec)")
    src.add_argument("--family", choices=FAMILIES)
    src.add_argument("--spec", help="machine document to load")
    src.add_argument("--p", type=int)
    src.add_argument("--q1", type=int, help="quantum-side modulus for tradeoff-1qcfa")
    src.add_argument("--m", type=int)
    src.add_argument("--n", type=int)
    src.add_argument("--eps", type=_fraction)
    src.add_argument("--alphabet", default="ab", help="symbols for dfa-len / len-2qcfa")
    src.add_argument("--seed", type=int, default=None,
                     help="random seed (default: $SQFA_SEED or 0)")


def _word_args(p):
    g = p.add_argument_group("words")
    g.add_argument("--word", action="append", help="input word (repeatable; '' for empty)")
    g.add_argument("--lengths", type=_int_range, help="lengths A..B, one word per length")
    g.add_argument("--exhaustive", action="store_true", help="all promise pairs (eq-1qcfa)")
    g.add_argument("--samples", type=int, help="random promise pairs (eq-1qcfa)")


def _output_args(p, default_format):
    p.add_argument("--format", choices=("csv", "structured", "human"), default=default_format)
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqfa", description="Semi-quantum finite automata toolkit.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="write a machine document")
    _machine_args(p)
    p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("eval", help="exact acceptance of single words",
                       epilog="csv columns: " + ",".join(SWEEP_COLUMNS))
    _machine_args(p)
    _word_args(p)
    _output_args(p, "human")

    p = sub.add_parser("sweep", help="exact acceptance over a word range",
                       epilog="csv columns: " + ",".join(SWEEP_COLUMNS))
    _machine_args(p)
    _word_args(p)
    _output_args(p, "csv")

    p = sub.add_parser("simulate", help="Monte Carlo estimates",
                       epilog="csv columns: " + ",".join(SIMULATE_COLUMNS))
    _machine_args(p)
    _word_args(p)
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--step-cap", type=int, help="default: 100 x analytic expected steps")
    _output_args(p, "csv")

    p = sub.add_parser("verify", help="check an acceptance mode; exit 3 on failure",
                       epilog="csv columns: " + ",".join(analysis.VerificationReport.COLUMNS))
    _machine_args(p)
    _word_args(p)
    p.add_argument("--mode", choices=("one-sided", "error", "cut-point", "exact"),
                   default="one-sided")
    p.add_argument("--mode-eps", type=float, help="error bound (default: the machine's eps)")
    p.add_argument("--cut", type=float)
    p.add_argument("--gap", type=float)
    _output_args(p, "human")

    p = sub.add_parser("report", help="state-count table",
                       epilog="csv columns: L: " + ",".join(analysis.REPORT_COLUMNS["L"])
                       + "; C: " + ",".join(analysis.REPORT_COLUMNS["C"])
                       + "; EQ: " + ",".join(analysis.REPORT_COLUMNS["EQ"])
                       + "; tradeoff: " + ",".join(analysis.REPORT_COLUMNS["tradeoff"]))
    p.add_argument("--family", choices=("L", "C", "EQ", "tradeoff"), required=True)
    p.add_argument("--p", type=_int_range)
    p.add_argument("--m", type=_int_range)
    p.add_argument("--n", type=_int_range)
    p.add_argument("--b", type=float, default=1.0, help="2PFA bound constant")
    p.add_argument("--eps", type=_fraction, default=Fraction(1, 4))
    _output_args(p, "csv")
    return parser


def parse_args(argv) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    if args.verb != "report":
        if (args.family is None) == (args.spec is None):
            raise UsageError("give exactly one of --family or --spec")
        if args.seed is None:
            args.seed = _default_seed()
    return args


# ---------------------------------------------------------------- machine and words

def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--family {args.family} requires --{n.replace('_', '-')}")


def load_machine(args):
    if args.spec is not None:
        path = Path(args.spec)
        if not path.is_file():
            raise UsageError(f"machine file not found: {path}")
        return spec_io.load_file(path)
    f = args.family
    if f == "dfa-mod":
        _need(args, "p")
        return constructions.dfa_mod(args.p)
    if f == "dfa-len":
        _need(args, "m")
        return constructions.dfa_len(args.m, tuple(args.alphabet))
    if f == "eq-1qcfa":
        _need(args, "n")
        return constructions.eq_1qcfa(args.n)
    if f == "mod-2qcfa":
        _need(args, "p", "eps")
        return constructions.mod_2qcfa(args.p, args.eps)
    if f == "len-2qcfa":
        _need(args, "m", "eps")
        return constructions.len_2qcfa(args.m, args.eps, tuple(args.alphabet))
    if f == "moqfa-mod":
        _need(args, "p", "eps")
        return constructions.moqfa_mod(args.p, args.eps, seed=args.seed)
    _need(args, "p", "q1", "eps")
    part = constructions.TradeoffPartition.from_moduli(args.p, args.q1)
    return constructions.tradeoff_1qcfa(part, args.eps, seed=args.seed)


def _family_of(m) -> str:
    params = getattr(m, "params", {}) or {}
    if "family" in params:
        return params["family"]
    name = getattr(m, "name", "")
    if name.startswith("dfa_mod("):
        return "dfa-mod"
    if name.startswith("dfa_len("):
        return "dfa-len"
    return ""


def _param(m, key):
    params = getattr(m, "params", {}) or {}
    if key in params:
        return int(params[key])
    # DFA baselines record their parameter in the name only
    return int(m.name.split("(")[1].rstrip(")"))


def classifier_for(m):
    fam = _family_of(m)
    if fam in ("mod-2qcfa", "moqfa-mod", "tradeoff-1qcfa", "dfa-mod"):
        return constructions.mod_classifier(_param(m, "p"))
    if fam in ("len-2qcfa", "dfa-len"):
        return constructions.len_classifier(_param(m, "m"))
    if fam == "eq-1qcfa":
        return constructions.eq_classifier(_param(m, "n"))
    raise UsageError("cannot infer the language of this machine; it has no family annotation")


def words_for(args, m) -> list:
    if args.word:
        return list(args.word)
    if args.lengths is not None:
        sym = m.alphabet[0]
        return [sym * k for k in args.lengths]
    if _family_of(m) == "eq-1qcfa":
        n = _param(m, "n")
        if args.exhaustive:
            return [inst.word for inst in constructions.promise_instances(n)]
        if args.samples:
            return sample_promise_words(n, args.samples, args.seed)
    raise UsageError("no words given; use --word, --lengths, --exhaustive or --samples")


def sample_promise_words(n: int, k: int, seed: int) -> list:
    """``k`` random promise pairs, alternating yes and no (no only for even n)."""
    rng = random.Random(seed)
    out = []
    for i in range(k):
        x = "".join(rng.choice("01") for _ in range(n))
        if i % 2 and n % 2 == 0:
            flip = set(rng.sample(range(n), n // 2))
            y = "".join(("1" if c == "0" else "0") if j in flip else c for j, c in enumerate(x))
        else:
            y = x
        out.append(f"{x}#{y}")
    return out


# ---------------------------------------------------------------- output

def fmt_prob(x, exact=None) -> str:
    s = f"{x:.6g}"
    if exact is not None:
        s += f" ({exact})"
    return s


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    wr.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=1, default=str) + "\n"


def _acceptance_rows(m, words):
    out = []
    for w in words:
        a = analysis.acceptance(m, w)
        out.append((w, a))
    return out


def _render_acceptance(args, results) -> str:
    if args.format == "csv":
        return _csv(SWEEP_COLUMNS, [(w, len(w), repr(a.p_accept), repr(a.p_reject),
                                     repr(a.expected_steps), a.representation)
                                    for w, a in results])
    if args.format == "structured":
        recs = []
        for w, a in results:
            rec = {"word": w, "p_accept": a.p_accept, "p_reject": a.p_reject,
                   "expected_steps": a.expected_steps, "representation": a.representation}
            if a.exact is not None:
                rec["exact"] = {k: str(v) for k, v in a.exact.items()}
            recs.append(rec)
        return _json(recs)
    lines = []
    for w, a in results:
        ex = a.exact or {}
        lines.append(f"word {w!r}: p_accept = {fmt_prob(a.p_accept, ex.get('p_accept'))}, "
                     f"p_reject = {fmt_prob(a.p_reject, ex.get('p_reject'))}, "
                     f"expected_steps = {fmt_prob(a.expected_steps, ex.get('expected_steps'))}")
    return "\n".join(lines) + "\n"


def _mode_from(args, m) -> AcceptanceMode:
    eps = args.mode_eps
    if eps is None and args.mode in ("one-sided", "error"):
        raw = (getattr(m, "params", {}) or {}).get("eps")
        if raw is None:
            raise UsageError(f"--mode {args.mode} needs --mode-eps for this machine")
        eps = float(Fraction(raw))
    if args.mode == "one-sided":
        return AcceptanceMode.one_sided(eps)
    if args.mode == "error":
        return AcceptanceMode.error_probability(eps)
    if args.mode == "cut-point":
        if args.cut is None or args.gap is None:
            raise UsageError("--mode cut-point requires --cut and --gap")
        return AcceptanceMode.cut_point(args.cut, args.gap)
    return AcceptanceMode.exact()


def _render_report(args, rep) -> str:
    if args.format == "csv":
        return rep.to_csv()
    if args.format == "structured":
        return _json(rep.to_dict())
    s = rep.summary()
    lines = [f"machine {s['machine']}  mode {s['mode']}  words {s['words']}  "
             f"failures {s['failures']}  min margin {s['min_margin']:.6g}  "
             f"max steps {s['max_steps']:.6g}  {'PASS' if s['pass'] else 'FAIL'}"]
    for r in rep.failures:
        lines.append(f"  violated: {r.word!r} ({r.classification}) p_accept={r.p_accept:.6g} "
                     f"p_reject={r.p_reject:.6g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- verbs

def execute(args) -> int:
    if args.verb == "report":
        return _cmd_report(args)
    m = load_machine(args)
    if args.verb == "build":
        _emit(args, spec_io.dumps(m))
        return 0
    words = words_for(args, m)
    if args.verb in ("eval", "sweep"):
        _emit(args, _render_acceptance(args, _acceptance_rows(m, words)))
        return 0
    if args.verb == "simulate":
        if args.runs < 1:
            raise UsageError("--runs must be at least 1")
        ests = [(w, montecarlo.estimate(m, w, args.runs, args.seed, args.step_cap)) for w in words]
        if args.format == "structured":
            _emit(args, _json([{"word": w, **e.to_dict()} for w, e in ests]))
        elif args.format == "csv":
            _emit(args, _csv(SIMULATE_COLUMNS, [
                (w, e.n_runs, repr(e.p_accept_hat), repr(e.p_reject_hat), repr(e.ci_halfwidth),
                 repr(e.mean_steps), e.censored_count, int(e.usable)) for w, e in ests]))
        else:
            _emit(args, "".join(
                f"word {w!r}: p_accept_hat = {fmt_prob(e.p_accept_hat)} +/- "
                f"{fmt_prob(e.ci_halfwidth)}, mean_steps = {fmt_prob(e.mean_steps)}, "
                f"censored = {e.censored_count}/{e.n_runs}\n" for w, e in ests))
        return 0
    rep = analysis.verify_mode(m, _mode_from(args, m), classifier_for(m), words)
    _emit(args, _render_report(args, rep))
    return 0 if rep.passed else EXIT_VERIFY


def _cmd_report(args) -> int:
    key = {"L": "p", "C": "m", "EQ": "n", "tradeoff": "p"}[args.family]
    values = getattr(args, key)
    if values is None:
        raise UsageError(f"--family {args.family} requires --{key}")
    rows = analysis.complexity_report(args.family, values, b=args.b, eps=args.eps)
    if args.format == "csv":
        _emit(args, analysis.report_csv(args.family, rows))
    elif args.format == "structured":
        _emit(args, _json({"columns": analysis.REPORT_COLUMNS[args.family],
                           "rows": analysis.report_table(args.family, rows),
                           "long": [r.__dict__ for r in rows]}))
    else:
        cols = analysis.REPORT_COLUMNS[args.family]
        table = analysis.report_table(args.family, rows)
        lines = ["  ".join(f"{c:>16}" for c in cols)]
        for rec in table:
            lines.append("  ".join(f"{analysis.fmt_cell(rec.get(c)):>16}" for c in cols))
        _emit(args, "\n".join(lines) + "\n")
    return 0


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        return execute(args)
    except UsageError as exc:
        print(f"sqfa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IllFormedMachine, ConstructionFailed) as exc:
        print(f"sqfa: ill-formed machine: {exc}", file=sys.stderr)
        return EXIT_MACHINE
    except InvalidArgument as exc:
        print(f"sqfa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sqfa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
