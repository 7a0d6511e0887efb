"""Verifier abstraction and its three adapters.

* :class:`ExecVerifier` shells out to an external checker command and parses
  its diagnostics with a configurable, ordered rule list.
* :class:`TraceVerifier` checks clauses against recorded execution traces —
  sound up to trace coverage, so its verdicts carry a coverage caveat.
* :class:`MockVerifier` replays scripted verdicts or accepts a fixed truth
  set of clause texts; it records every call for test assertions.
"""
from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

from .clauses import AnnotatedProgram, ClauseKind, instrument_with_lines
from .errors import CommandNotFound, ConfigError, EvalError, ScriptExhausted
from .evaluate import Phase, TraceRecord, eval_expr
from .expr import render_expr


class Outcome(Enum):
    PASS = "pass"
    FAIL = "fail"
    TIMEOUT = "timeout"
    CRASH = "crash"


class FailureCategory(Enum):
    SYNTAX_ERROR = "syntax-error"
    UNPROVABLE_POSTCONDITION = "unprovable-postcondition"
    UNPROVABLE_INVARIANT = "unprovable-invariant"
    UNPROVABLE_PRECONDITION = "unprovable-precondition"
    NONTERMINATION_DECREASES = "nontermination-decreases"
    TYPE_ERROR = "type-error"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class FailureReport:
    raw_message: str
    category: FailureCategory
    clause_id: str | None = None
    source_line: int | None = None


@dataclass(frozen=True)
class VerifierVerdict:
    outcome: Outcome
    failures: tuple[FailureReport, ...] = ()
    wall_time: float = 0.0
    detail: str = ""  # context for crash/timeout outcomes
    coverage_caveat: bool = False  # True when the check only covers the traces seen

    def __post_init__(self):
        if self.outcome is Outcome.PASS and self.failures:
            raise ValueError("a passing verdict cannot carry failures")
        if self.outcome is Outcome.FAIL and not self.failures:
            raise ValueError("a failing verdict needs at least one failure")


class Verifier(Protocol):
    def verify(self, program: AnnotatedProgram) -> VerifierVerdict: ...


@dataclass(frozen=True)
class Rule:
    pattern: re.Pattern
    category: FailureCategory


def make_rules(entries: Sequence[tuple[str, FailureCategory]]) -> tuple[Rule, ...]:
    return tuple(Rule(re.compile(p, re.IGNORECASE), c) for p, c in entries)


# Ordered: first match wins. Patterns follow the diagnostic vocabulary of
# javac-style checkers; override via configuration when yours differs.
DEFAULT_RULES = make_rules(
    [
        (r"syntax|parse", FailureCategory.SYNTAX_ERROR),
        (r"type", FailureCategory.TYPE_ERROR),
        (r"postcondition", FailureCategory.UNPROVABLE_POSTCONDITION),
        (r"loop\s*invariant", FailureCategory.UNPROVABLE_INVARIANT),
        (r"precondition", FailureCategory.UNPROVABLE_PRECONDITION),
        (r"decreases|loop\s*variant|termination", FailureCategory.NONTERMINATION_DECREASES),
        (r"invariant", FailureCategory.UNPROVABLE_INVARIANT),
    ]
)


def classify_failure(raw_message: str, rules: Sequence[Rule] = DEFAULT_RULES) -> FailureCategory:
    """First matching rule wins; UNKNOWN when nothing matches."""
    for rule in rules:
        if rule.pattern.search(raw_message):
            return rule.category
    return FailureCategory.UNKNOWN


# --- External-command adapter ----------------------------------------------

_LINE_NO_RE = re.compile(r":(\d+):")


@dataclass(frozen=True)
class ExecConfig:
    command: str  # template containing a {file} placeholder
    timeout_seconds: float = 1800.0
    failures_per_call: str = "one"  # "one" | "all"
    rules: tuple[Rule, ...] = DEFAULT_RULES


def verify_exec(
    program_text: str,
    cfg: ExecConfig,
    clause_lines: Sequence[tuple[int, str]] = (),
) -> VerifierVerdict:
    """Write the program to a temp file, run the command, parse diagnostics.

    ``clause_lines`` maps instrumented line numbers to clause ids; a
    diagnostic is attributed to the clause instrumented nearest above its
    reported source line.
    """
    if "{file}" not in cfg.command:
        raise ConfigError("verifier command template needs a {file} placeholder")
    started = time.monotonic()
    tmp = tempfile.NamedTemporaryFile(
        mode="w", suffix=".java", prefix="specsmith_", delete=False, encoding="utf-8"
    )
    try:
        tmp.write(program_text)
        tmp.close()
        argv = [part.replace("{file}", tmp.name) for part in shlex.split(cfg.command)]
        try:
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=cfg.timeout_seconds
            )
        except subprocess.TimeoutExpired:
            return VerifierVerdict(
                Outcome.TIMEOUT,
                wall_time=time.monotonic() - started,
                detail=f"command exceeded {cfg.timeout_seconds:.0f}s",
            )
        except FileNotFoundError as exc:
            raise CommandNotFound(f"verifier command not found: {argv[0]}") from exc
    finally:
        Path(tmp.name).unlink(missing_ok=True)

    wall = time.monotonic() - started
    failures = _parse_diagnostics(proc.stdout + "\n" + proc.stderr, cfg.rules, clause_lines)
    if cfg.failures_per_call == "one" and len(failures) > 1:
        failures = failures[:1]
    if failures:
        return VerifierVerdict(Outcome.FAIL, tuple(failures), wall_time=wall)
    if proc.returncode != 0:
        tail = (proc.stderr or proc.stdout).strip().splitlines()[-5:]
        return VerifierVerdict(
            Outcome.CRASH,
            wall_time=wall,
            detail=f"exit status {proc.returncode}: " + " | ".join(tail),
        )
    return VerifierVerdict(Outcome.PASS, wall_time=wall)


def _parse_diagnostics(
    output: str,
    rules: Sequence[Rule],
    clause_lines: Sequence[tuple[int, str]],
) -> list[FailureReport]:
    by_line = sorted(clause_lines)
    failures: list[FailureReport] = []
    for line in output.splitlines():
        if not line.strip():
            continue
        category = classify_failure(line, rules)
        if category is FailureCategory.UNKNOWN:
            continue  # not a diagnostic we recognize
        line_match = _LINE_NO_RE.search(line)
        source_line = int(line_match.group(1)) if line_match else None
        clause_id = None
        if source_line is not None:
            candidates = [cid for lineno, cid in by_line if lineno <= source_line]
            if candidates:
                clause_id = candidates[-1]
        failures.append(
            FailureReport(
                raw_message=line.strip(),
                category=category,
                clause_id=clause_id,
                source_line=source_line,
            )
        )
    return failures


class ExecVerifier:
    """Adapter object wrapping :func:`verify_exec` for annotated programs."""

    def __init__(self, cfg: ExecConfig):
        self.cfg = cfg

    def verify(self, program: AnnotatedProgram) -> VerifierVerdict:
        text, clause_lines = instrument_with_lines(program)
        return verify_exec(text, self.cfg, clause_lines)


# --- Trace-based adapter ----------------------------------------------------

_CATEGORY_FOR_KIND = {
    ClauseKind.REQUIRES: FailureCategory.UNPROVABLE_PRECONDITION,
    ClauseKind.ENSURES: FailureCategory.UNPROVABLE_POSTCONDITION,
    ClauseKind.MAINTAINING: FailureCategory.UNPROVABLE_INVARIANT,
    ClauseKind.DECREASES: FailureCategory.NONTERMINATION_DECREASES,
}

_PHASE_FOR_KIND = {
    ClauseKind.REQUIRES: Phase.PRE,
    ClauseKind.ENSURES: Phase.POST,
    ClauseKind.MAINTAINING: Phase.ITER,
    ClauseKind.DECREASES: Phase.ITER,
}


def verify_trace(
    program: AnnotatedProgram,
    traces: Sequence[TraceRecord],
    failures_per_call: str = "all",
) -> VerifierVerdict:
    """Check every clause against every matching trace record.

    A clause fails iff some record falsifies it; the first falsifying record
    index is cited in the failure message. Decreases clauses must be
    non-negative at every loop iteration and strictly decrease across
    consecutive iterations of one loop activation (activations are delimited
    by pre/post records of the enclosing method). Evaluation errors surface
    as type-error failures. A pass only means no counterexample appears in
    the given traces, hence the coverage caveat on every verdict.
    """
    started = time.monotonic()
    failures: list[FailureReport] = []
    for clause in program.clauses:
        report = (
            _check_decreases(clause, traces)
            if clause.kind is ClauseKind.DECREASES
            else _check_pointwise(clause, traces)
        )
        if report is not None:
            failures.append(report)
    if failures_per_call == "one" and len(failures) > 1:
        failures = failures[:1]
    wall = time.monotonic() - started
    if failures:
        return VerifierVerdict(
            Outcome.FAIL, tuple(failures), wall_time=wall, coverage_caveat=True
        )
    return VerifierVerdict(Outcome.PASS, wall_time=wall, coverage_caveat=True)


def _clause_label(clause) -> str:
    return f"{clause.kind.value} {render_expr(clause.expr)}"


def _check_pointwise(clause, traces: Sequence[TraceRecord]) -> FailureReport | None:
    phase = _PHASE_FOR_KIND[clause.kind]
    for index, record in enumerate(traces):
        if record.phase is not phase or record.anchor != clause.anchor:
            continue
        try:
            value = eval_expr(clause.expr, record)
        except EvalError as exc:
            return FailureReport(
                raw_message=(
                    f"cannot evaluate {_clause_label(clause)} "
                    f"at trace record {index}: {exc}"
                ),
                category=FailureCategory.TYPE_ERROR,
                clause_id=clause.id,
            )
        if value is not True:
            return FailureReport(
                raw_message=(
                    f"{_clause_label(clause)} is falsified by trace record {index}"
                ),
                category=_CATEGORY_FOR_KIND[clause.kind],
                clause_id=clause.id,
            )
    return None


def _check_decreases(clause, traces: Sequence[TraceRecord]) -> FailureReport | None:
    method = clause.anchor.method if clause.anchor is not None else None
    activation: list[tuple[int, int]] = []  # (record index, measure value)

    def check_activation() -> FailureReport | None:
        for position, (index, value) in enumerate(activation):
            if value < 0:
                return FailureReport(
                    raw_message=(
                        f"{_clause_label(clause)} is negative ({value}) "
                        f"at trace record {index}"
                    ),
                    category=FailureCategory.NONTERMINATION_DECREASES,
                    clause_id=clause.id,
                )
            if position > 0 and value >= activation[position - 1][1]:
                return FailureReport(
                    raw_message=(
                        f"{_clause_label(clause)} fails to strictly decrease "
                        f"({activation[position - 1][1]} then {value}) "
                        f"at trace record {index}"
                    ),
                    category=FailureCategory.NONTERMINATION_DECREASES,
                    clause_id=clause.id,
                )
        return None

    for index, record in enumerate(traces):
        boundary = (
            record.phase in (Phase.PRE, Phase.POST)
            and record.anchor.loop is None
            and record.anchor.method == method
        )
        if boundary:
            report = check_activation()
            if report is not None:
                return report
            activation = []
            continue
        if record.phase is Phase.ITER and record.anchor == clause.anchor:
            try:
                value = eval_expr(clause.expr, record)
            except EvalError as exc:
                return FailureReport(
                    raw_message=(
                        f"cannot evaluate {_clause_label(clause)} "
                        f"at trace record {index}: {exc}"
                    ),
                    category=FailureCategory.TYPE_ERROR,
                    clause_id=clause.id,
                )
            if isinstance(value, bool) or not isinstance(value, int):
                return FailureReport(
                    raw_message=(
                        f"{_clause_label(clause)} must be integer-valued, "
                        f"got {value!r} at trace record {index}"
                    ),
                    category=FailureCategory.TYPE_ERROR,
                    clause_id=clause.id,
                )
            activation.append((index, value))
    return check_activation()


class TraceVerifier:
    def __init__(self, traces: Sequence[TraceRecord], failures_per_call: str = "all"):
        self.traces = list(traces)
        self.failures_per_call = failures_per_call

    def verify(self, program: AnnotatedProgram) -> VerifierVerdict:
        return verify_trace(program, self.traces, self.failures_per_call)


# --- Scripted mock ----------------------------------------------------------


@dataclass
class MockVerifier:
    """Truth-set mode accepts exactly the clause texts in ``truth``;
    verdict-list mode replays ``verdicts`` one call at a time."""

    truth: frozenset[str] | None = None
    verdicts: list[VerifierVerdict] | None = None
    calls: list[tuple[str, ...]] = field(default_factory=list)

    def __post_init__(self):
        if (self.truth is None) == (self.verdicts is None):
            raise ValueError("configure exactly one of truth or verdicts")
        if self.truth is not None:
            self.truth = frozenset(self.truth)

    def verify(self, program: AnnotatedProgram) -> VerifierVerdict:
        from .clauses import render_clause

        texts = tuple(render_clause(c) for c in program.clauses)
        self.calls.append(texts)
        if self.verdicts is not None:
            if not self.verdicts:
                raise ScriptExhausted("mock verifier has no verdicts left")
            return self.verdicts.pop(0)
        failures = tuple(
            FailureReport(
                raw_message=f"clause not in the accepted set: {text}",
                category=FailureCategory.UNKNOWN,
                clause_id=clause.id,
            )
            for clause, text in zip(program.clauses, texts)
            if text not in self.truth
        )
        if failures:
            return VerifierVerdict(Outcome.FAIL, failures)
        return VerifierVerdict(Outcome.PASS)
