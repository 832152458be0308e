"""Reading and writing SSAT formulas in SDIMACS text form."""

from __future__ import annotations

from fractions import Fraction

from .logic import EXISTS, LogicError, Prefix, Quantifier, SsatFormula, sorted_lits


class SdimacsError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(msg if line is None else "line %d: %s" % (line, msg))


def parse_prob(text: str) -> Fraction:
    """Exact rational from ``0.9``, ``9/10`` or ``1e-1``."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError("not a probability: %r" % text) from None


def format_prob(p: Fraction) -> str:
    return str(Fraction(p))


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        vals = [int(t) for t in tokens]
    except ValueError:
        raise SdimacsError("expected integers", lineno) from None
    if not vals or vals[-1] != 0:
        raise SdimacsError("missing terminating 0", lineno)
    if 0 in vals[:-1]:
        raise SdimacsError("0 inside a list", lineno)
    return vals[:-1]


def parse_sdimacs(text: str) -> SsatFormula:
    bindings: list[tuple[int, Quantifier]] = []
    clauses: list[list[int]] = []
    header: tuple[int, int] | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tok = line.split()
        if tok[0] == "p":
            if len(tok) != 4 or tok[1] != "cnf" or header is not None:
                raise SdimacsError("bad problem line", lineno)
            try:
                header = (int(tok[2]), int(tok[3]))
            except ValueError:
                raise SdimacsError("bad problem line", lineno) from None
            continue
        if header is None:
            raise SdimacsError("content before problem line", lineno)
        if tok[0] == "e":
            q = EXISTS
            vs = _ints(tok[1:], lineno)
        elif tok[0] == "r":
            if len(tok) < 2:
                raise SdimacsError("missing probability", lineno)
            try:
                q = Quantifier("R", parse_prob(tok[1]))
            except (ValueError, LogicError) as exc:
                raise SdimacsError(str(exc), lineno) from None
            vs = _ints(tok[2:], lineno)
        else:
            clauses.append(_ints(tok, lineno))
            continue
        for v in vs:
            if v <= 0 or v > header[0]:
                raise SdimacsError("bad variable %d in quantifier block" % v, lineno)
            bindings.append((v, q))
    if header is None:
        raise SdimacsError("missing problem line")
    if len(clauses) != header[1]:
        raise SdimacsError("header announces %d clauses, found %d" % (header[1], len(clauses)))
    try:
        return SsatFormula(Prefix(bindings), clauses)
    except LogicError as exc:
        raise SdimacsError(str(exc)) from None


def write_sdimacs(phi: SsatFormula, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend("c " + c for c in comment.splitlines())
    nvars = max([phi.num_vars] + [abs(l) for c in phi.matrix for l in c])
    lines.append("p cnf %d %d" % (nvars, len(phi.matrix)))
    block: list[int] = []
    current: Quantifier | None = None

    def flush():
        if block:
            if current.is_random:
                lines.append("r %s %s 0" % (format_prob(current.prob), " ".join(map(str, block))))
            else:
                lines.append("e %s 0" % " ".join(map(str, block)))

    for v, q in phi.prefix:
        if q != current:
            flush()
            block = []
            current = q
        block.append(v)
    flush()
    for c in phi.matrix:
        lines.append(" ".join(str(l) for l in sorted_lits(c) + [0]))
    return "\n".join(lines) + "\n"


def read_sdimacs(path) -> SsatFormula:
    with open(path) as fh:
        return parse_sdimacs(fh.read())
