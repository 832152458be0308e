"""Command-line front end.

Exit code 0 means success (Unknown verdicts included) and 1 means falsified or
rejected.  Input errors exit with 2; a failed internal self-check exits with 3.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from fractions import Fraction

import click

from . import analysis, oracle
from .checker import check_proof
from .encode import format_state_formula, parse_state_formula
from .logic import Partition, to_rational
from .mdp import MdpError, read_mdp
from .sdimacs import SdimacsError, read_sdimacs
from .solver import InternalCheckFailure, SolveOptions, solve
from .sresolution import TraceFormatError, parse_trace, to_sexpr, write_trace

EXIT_OK, EXIT_NO, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


def fmt(p: Fraction) -> str:
    """Exact rational first, then 20 significant digits."""
    p = Fraction(p)
    if p.denominator == 1:
        return str(p.numerator)
    return "%s = %s" % (p, analysis.decimal_str(p))


def fmt_set(states) -> str:
    return "{" + ",".join(states) + "}"


def _ordered(m, states) -> list[str]:
    return [s for s in m.states if s in states]


class _Abort(Exception):
    def __init__(self, code: int, msg: str):
        self.code, self.msg = code, msg


def _fail(code: int, msg: str):
    raise _Abort(code, msg)


def _guard(fn):
    """Map library exceptions onto exit codes."""
    @functools.wraps(fn)
    def wrapper(*args, **kw):
        try:
            code = fn(*args, **kw)
        except _Abort as exc:
            click.echo("error: " + exc.msg, err=True)
            sys.exit(exc.code)
        except InternalCheckFailure as exc:
            click.echo("internal check failed: %s" % exc, err=True)
            sys.exit(EXIT_INTERNAL)
        except (SdimacsError, MdpError, TraceFormatError, OSError, ValueError) as exc:
            click.echo("error: %s" % exc, err=True)
            sys.exit(EXIT_INPUT)
        sys.exit(code or EXIT_OK)
    return wrapper


def _theta(text: str) -> Fraction:
    try:
        th = to_rational(text)
    except (ValueError, ZeroDivisionError):
        _fail(EXIT_INPUT, "bad threshold %r" % text)
    if not 0 <= th <= 1:
        _fail(EXIT_INPUT, "threshold must lie in [0, 1]")
    return th


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Exact SSAT solving with certified proofs, plus MDP bound computation."""


# ---------------------------------------------------------------------------


@main.command("solve")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--proof", "proof_out", type=click.Path(dir_okay=False), help="Write the derivation trace here.")
@click.option("--partition", "a_part", help="Comma-separated 0-based matrix indices of the A part; enables interpolation.")
@click.option("--dc", type=click.Choice(["true", "false"]), default="true", show_default=True,
              help="Interpolant chosen at satisfying leaves.")
@click.option("--certify/--no-certify", default=True, show_default=True,
              help="Re-check the proof with the independent checker before printing.")
@_guard
def cmd_solve(path, proof_out, a_part, dc, certify):
    """Compute Pr of an SDIMACS formula."""
    phi = read_sdimacs(path)
    part = None
    if a_part is not None:
        try:
            idx = [int(x) for x in a_part.split(",") if x.strip()]
        except ValueError:
            _fail(EXIT_INPUT, "bad --partition list")
        if any(not 0 <= i < len(phi.matrix) for i in idx):
            _fail(EXIT_INPUT, "--partition index outside the matrix")
        part = Partition.from_indices(phi.matrix, idx)
    want_proof = certify or proof_out is not None or part is not None
    res = solve(phi, SolveOptions(emit_proof=want_proof, emit_interpolant=part is not None,
                                  dc_policy=dc), part)
    if want_proof and certify:
        rep = check_proof(res.trace)
        if not rep.accepted or rep.certified != res.prob:
            _fail(EXIT_INTERNAL, "emitted proof was not certified")
    click.echo("Pr = %s" % fmt(res.prob))
    if res.interpolant is not None:
        click.echo("interpolant = %s" % res.interpolant)
        click.echo("interpolant-sexpr = %s" % to_sexpr(res.interpolant))
    if proof_out is not None:
        with open(proof_out, "w") as fh:
            fh.write(write_trace(res.trace))
    return EXIT_OK


@main.command("check-proof")
@click.argument("path", type=click.Path(dir_okay=False))
@_guard
def cmd_check_proof(path):
    """Check a derivation trace independently of the solver."""
    with open(path) as fh:
        trace = parse_trace(fh.read())
    rep = check_proof(trace)
    if not rep.accepted:
        bad = rep.first_failure
        click.echo("REJECTED at step %d: %s" % (bad.id, bad.reason))
        return EXIT_NO
    if rep.certified is None:
        _fail(EXIT_INPUT, "trace is incomplete: it does not derive the empty clause")
    click.echo("certified %s" % fmt(rep.certified))
    if rep.interpolant is not None:
        click.echo("interpolant = %s" % rep.interpolant)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _emit_bounds(seqs, csv_dir, jsonl):
    if csv_dir:
        os.makedirs(csv_dir, exist_ok=True)
        for name, seq in seqs:
            with open(os.path.join(csv_dir, name + ".csv"), "w") as fh:
                fh.write(analysis.bounds_to_csv(seq))
    for name, seq in seqs:
        for e in seq.entries:
            if jsonl:
                click.echo(json.dumps({"sequence": name, "k": e.k, "value_exact": str(e.value),
                                       "value_decimal": analysis.decimal_str(e.value),
                                       "solve_ms": round(e.solve_ms, 3)}))
            else:
                click.echo("  %s_%d = %s" % ("lb" if name == "lower" else "ub", e.k, fmt(e.value)))


def _load_mdp(path):
    return read_mdp(path)


@main.command("reach")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--theta", required=True, help="Threshold for MaxReach <= theta.")
@click.option("--j", "j", type=click.IntRange(min=1), default=analysis.DEFAULT_J, show_default=True)
@click.option("--kmax", type=click.IntRange(min=0), default=20, show_default=True)
@click.option("--csv", "csv_dir", type=click.Path(file_okay=False), help="Directory for lower.csv / upper.csv.")
@click.option("--jsonl", is_flag=True, help="Emit bound entries as JSON lines.")
@_guard
def cmd_reach(path, theta, j, kmax, csv_dir, jsonl):
    """Falsify or verify MaxReach(M, target) <= theta."""
    th = _theta(theta)
    m = _load_mdp(path)
    if m.target is None:
        _fail(EXIT_INPUT, "MissingTarget: the model declares no target states")
    rep = analysis.verify_safety(m, th, j=j, k_max=kmax)
    for lb in rep.lower.entries:
        for ub in rep.upper.entries:
            if lb.value > ub.value:
                raise InternalCheckFailure("lb_%d exceeds ub_%d" % (lb.k, ub.k))
    click.echo("BReach = %s  %s" % (format_state_formula(m, rep.breach),
                                    fmt_set(_ordered(m, rep.fixpoint.result_set))))
    click.echo("bounds:")
    _emit_bounds([("lower", rep.lower), ("upper", rep.upper)], csv_dir, jsonl)
    v = rep.verdict
    if v.outcome == analysis.FALSIFIED:
        click.echo("FALSIFIED at k=%d (lb=%s)" % (v.witness_k, v.witness_value))
        return EXIT_NO
    if v.outcome == analysis.VERIFIED:
        click.echo("VERIFIED at k=%d (ub=%s)" % (v.witness_k, v.witness_value))
        return EXIT_OK
    click.echo("UNKNOWN (%s)" % v.note)
    return EXIT_OK


@main.command("stability")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--theta", required=True, help="Threshold for MinStable >= theta.")
@click.option("--j", "j", type=click.IntRange(min=1), default=analysis.DEFAULT_J, show_default=True)
@click.option("--kmax", type=click.IntRange(min=0), default=20, show_default=True)
@click.option("--kernel", "kernel_text", help="Kernel predicate over state names, e.g. \"s\" or \"~f & s\".")
@click.option("--csv", "csv_dir", type=click.Path(file_okay=False), help="Directory for lower.csv.")
@click.option("--jsonl", is_flag=True, help="Emit bound entries as JSON lines.")
@_guard
def cmd_stability(path, theta, j, kmax, kernel_text, csv_dir, jsonl):
    """Verify MinStable(M, region) >= theta."""
    th = _theta(theta)
    m = _load_mdp(path)
    if m.region is None:
        _fail(EXIT_INPUT, "MissingRegion: the model declares no region")
    kernel = parse_state_formula(m, kernel_text) if kernel_text is not None else None
    rep = analysis.verify_stability(m, th, j=j, k_max=kmax, kernel=kernel)
    click.echo("Kernel = %s  %s" % (format_state_formula(m, rep.kernel),
                                    fmt_set(_ordered(m, rep.kernel_states))))
    click.echo("kernel invariant: %s" % ("yes" if rep.kernel_invariant else "no"))
    if not rep.kernel_invariant:
        if kernel is None:
            raise InternalCheckFailure("computed kernel is not invariant")
        _fail(EXIT_INPUT, "the supplied kernel is not an invariance kernel")
    click.echo("bounds:")
    _emit_bounds([("lower", rep.lower)], csv_dir, jsonl)
    v = rep.verdict
    prefix = "kernel empty; " if not rep.kernel_states else ""
    if v.outcome == analysis.VERIFIED:
        click.echo("%sVERIFIED at k=%d (lb=%s)" % (prefix, v.witness_k, v.witness_value))
    else:
        click.echo("%sUNKNOWN (this pipeline only verifies; %s)" % (prefix, v.note))
    return EXIT_OK


# ---------------------------------------------------------------------------


@main.group("oracle")
def cmd_oracle():
    """Ground-truth computations by direct expansion (small inputs only)."""


@cmd_oracle.command("pr")
@click.argument("path", type=click.Path(dir_okay=False))
@_guard
def oracle_pr(path):
    phi = read_sdimacs(path)
    try:
        p = oracle.exact_pr(phi)
    except oracle.TooLarge as exc:
        _fail(EXIT_INPUT, str(exc))
    click.echo("Pr = %s" % fmt(p))


@cmd_oracle.command("maxreach")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--k", "k", type=click.IntRange(min=0), required=True)
@_guard
def oracle_maxreach(path, k):
    m = _load_mdp(path)
    if m.target is None:
        _fail(EXIT_INPUT, "MissingTarget: the model declares no target states")
    click.echo("MaxReach^%d = %s" % (k, fmt(oracle.mdp_max_reach_bounded(m, m.target, k))))


@cmd_oracle.command("minstable")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--k", "k", type=click.IntRange(min=0), required=True)
@_guard
def oracle_minstable(path, k):
    m = _load_mdp(path)
    if m.region is None:
        _fail(EXIT_INPUT, "MissingRegion: the model declares no region")
    kern = oracle.mdp_max_kernel(m, m.region)
    click.echo("Kernel* = %s" % fmt_set(_ordered(m, kern)))
    click.echo("MinReach^%d = %s" % (k, fmt(oracle.mdp_min_reach_bounded(m, kern, k))))


@cmd_oracle.command("backward")
@click.argument("path", type=click.Path(dir_okay=False))
@_guard
def oracle_backward(path):
    m = _load_mdp(path)
    if m.target is None:
        _fail(EXIT_INPUT, "MissingTarget: the model declares no target states")
    click.echo(fmt_set(_ordered(m, oracle.mdp_backward_set(m, m.target))))


if __name__ == "__main__":
    main()
