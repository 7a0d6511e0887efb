"""Shared generators, independent oracles, and the acceptance summary hook."""
from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import strategies as st

from specsmith.errors import (
    DivisionByZero,
    EvalError,
    EvalTypeError,
    IndexOutOfRange,
    MissingOldSnapshot,
    UnboundVariable,
    UnboundedQuantifier,
)
from specsmith.evaluate import NULL, Phase, TraceRecord
from specsmith.expr import (
    ArrayIndex,
    Binary,
    BoolLit,
    Expr,
    FieldAccess,
    IntLit,
    NullLit,
    OldRef,
    Quantifier,
    ResultRef,
    Unary,
    Var,
    render_expr,
)

# ---------------------------------------------------------------------------
# Seeded random expression generators (plain `random`, no hypothesis).

INT_VARS = ("a", "b", "c", "n", "x", "y")
REL_OPS = ("<", "<=", ">", ">=", "==", "!=")


def gen_int_expr(rng: random.Random, depth: int, vars_=INT_VARS) -> Expr:
    if depth <= 0 or rng.random() < 0.45:
        if rng.random() < 0.4:
            return IntLit(rng.randrange(-9, 10))
        return Var(rng.choice(vars_))
    op = rng.choice(("+", "+", "-", "-", "*"))
    return Binary(op, gen_int_expr(rng, depth - 1, vars_), gen_int_expr(rng, depth - 1, vars_))


def gen_relation(rng: random.Random, depth: int = 1, vars_=INT_VARS) -> Expr:
    return Binary(
        rng.choice(REL_OPS), gen_int_expr(rng, depth, vars_), gen_int_expr(rng, depth, vars_)
    )


def gen_bool_expr(rng: random.Random, depth: int, vars_=INT_VARS, quant_depth: int = 1) -> Expr:
    if depth <= 0:
        return gen_relation(rng, 1, vars_)
    roll = rng.random()
    if roll < 0.40:
        return gen_relation(rng, rng.randrange(0, 2), vars_)
    if roll < 0.75:
        op = rng.choice(("&&", "&&", "||", "||", "==>", "<==", "<==>"))
        return Binary(
            op,
            gen_bool_expr(rng, depth - 1, vars_, quant_depth),
            gen_bool_expr(rng, depth - 1, vars_, quant_depth),
        )
    if roll < 0.85 or quant_depth <= 0:
        return Unary("!", gen_bool_expr(rng, depth - 1, vars_, quant_depth))
    qv = f"q{quant_depth}"
    lo = rng.randrange(-8, 2)
    hi = lo + rng.randrange(0, 6)
    range_expr = Binary(
        "&&", Binary("<=", IntLit(lo), Var(qv)), Binary("<=", Var(qv), IntLit(hi))
    )
    body_vars = tuple(vars_) + (qv,)
    return Quantifier(
        kind=rng.choice(("forall", "exists")),
        var=qv,
        range=range_expr,
        body=gen_bool_expr(rng, depth - 1, body_vars, quant_depth - 1),
    )


def gen_mutation_clause(rng: random.Random, max_sites: int = 4) -> Expr:
    """Boolean expression with at most ``max_sites`` mutation sites."""
    from specsmith.mutation import enumerate_sites

    while True:
        expr = gen_bool_expr(rng, rng.randrange(1, 4))
        if 1 <= len(enumerate_sites(expr)) <= max_sites:
            return expr


# ---------------------------------------------------------------------------
# Independent mutation-family oracle: its own operator table, its own
# combination strategy (cartesian product applied deepest-path-first).

DEC = "dec-lhs"  # l <= r  ->  l - 1 <= r
INC = "inc-lhs"  # l >= r  ->  l + 1 >= r

ORACLE_TABLE: dict[str, tuple[str, list[str]]] = {
    "forall": ("predicative", ["exists"]),
    "exists": ("predicative", ["forall"]),
    "&&": ("logical", ["||"]),
    "||": ("logical", ["&&"]),
    "<==>": ("logical", ["<==", "==>"]),
    "==>": ("logical", ["<=="]),
    "<==": ("logical", ["==>"]),
    "<=": ("comparative", ["<", DEC]),
    ">=": ("comparative", [">", INC]),
    "<": ("comparative", ["<="]),
    ">": ("comparative", [">="]),
    "==": ("comparative", ["!="]),
    "!=": ("comparative", ["=="]),
    "+": ("arithmetic", ["-"]),
    "-": ("arithmetic", ["+"]),
}

ORACLE_WEIGHTS = {"comparative": -1, "logical": -2, "arithmetic": -4, "predicative": -4}


def _oracle_op(node: Expr) -> str | None:
    if isinstance(node, Quantifier):
        return node.kind
    if isinstance(node, Binary) and node.op in ORACLE_TABLE:
        return node.op
    return None


def oracle_sites(expr: Expr) -> list[tuple[tuple[int, ...], str]]:
    found: list[tuple[tuple[int, ...], str]] = []

    def visit(node: Expr, path: tuple[int, ...]) -> None:
        op = _oracle_op(node)
        if op is not None:
            found.append((path, op))
        for i, child in enumerate(node.children()):
            visit(child, path + (i,))

    visit(expr, ())
    return found


def _oracle_apply_one(node: Expr, replacement: str) -> Expr:
    if isinstance(node, Quantifier):
        return Quantifier(replacement, node.var, node.range, node.body)
    assert isinstance(node, Binary)
    if replacement == DEC:
        return Binary("<=", Binary("-", node.lhs, IntLit(1)), node.rhs)
    if replacement == INC:
        return Binary(">=", Binary("+", node.lhs, IntLit(1)), node.rhs)
    return Binary(replacement, node.lhs, node.rhs)


def _oracle_apply(expr: Expr, path: tuple[int, ...], replacement: str) -> Expr:
    if not path:
        return _oracle_apply_one(expr, replacement)
    children = list(expr.children())
    children[path[0]] = _oracle_apply(children[path[0]], path[1:], replacement)
    return expr.replace_child(path[0], children[path[0]])


def oracle_family(expr: Expr) -> dict[str, int]:
    """Every distinct variant text mapped to its best (maximum) score."""
    sites = oracle_sites(expr)
    per_site: list[list[tuple[str | None, int]]] = []
    for _, op in sites:
        kind, repls = ORACLE_TABLE[op]
        per_site.append([(None, 0)] + [(r, ORACLE_WEIGHTS[kind]) for r in repls])

    best: dict[str, int] = {}
    for combo in itertools.product(*per_site):
        mutated = expr
        score = 0
        # Deepest paths first so an enclosing structural rewrite wraps the
        # already-mutated subtree, and shallower paths stay valid.
        order = sorted(range(len(sites)), key=lambda i: -len(sites[i][0]))
        for i in order:
            replacement, delta = combo[i]
            if replacement is None:
                continue
            mutated = _oracle_apply(mutated, sites[i][0], replacement)
            score += delta
        text = render_expr(mutated)
        if text not in best or score > best[text]:
            best[text] = score
    return best


# ---------------------------------------------------------------------------
# Independent evaluator oracle: recursive interpreter with window-scan
# quantifiers instead of bound extraction. Errors collapse to short tags.


def _oracle_java_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _oracle_java_rem(a: int, b: int) -> int:
    return a - _oracle_java_div(a, b) * b


class OracleError(Exception):
    def __init__(self, tag: str):
        super().__init__(tag)
        self.tag = tag


QUANT_WINDOW = range(-100, 101)


def oracle_eval(expr: Expr, record: TraceRecord, env: dict | None = None, in_old: bool = False):
    bind = dict(record.bindings) if env is None else env

    def ev(node: Expr, scope: dict, old_mode: bool):
        if isinstance(node, IntLit):
            return node.value
        if isinstance(node, BoolLit):
            return node.value
        if isinstance(node, NullLit):
            return NULL
        if isinstance(node, Var):
            if node.name in scope:
                return scope[node.name]
            raise OracleError("unbound")
        if isinstance(node, ResultRef):
            if record.result is None:
                raise OracleError("unbound")
            return record.result
        if isinstance(node, OldRef):
            if record.old is None:
                raise OracleError("old")
            merged = dict(record.old)
            # Quantifier bindings stay visible inside \old.
            for name, value in scope.items():
                if name not in record.bindings and name not in merged:
                    merged[name] = value
            return ev(node.inner, merged, True)
        if isinstance(node, FieldAccess):
            base = ev(node.base, scope, old_mode)
            if node.field == "length" and isinstance(base, list):
                return len(base)
            raise OracleError("type")
        if isinstance(node, ArrayIndex):
            base = ev(node.base, scope, old_mode)
            index = ev(node.index, scope, old_mode)
            if not isinstance(base, list) or not isinstance(index, int) or isinstance(index, bool):
                raise OracleError("type")
            if index < 0 or index >= len(base):
                raise OracleError("index")
            return base[index]
        if isinstance(node, Unary):
            value = ev(node.operand, scope, old_mode)
            if node.op == "!":
                if not isinstance(value, bool):
                    raise OracleError("type")
                return not value
            if not isinstance(value, int) or isinstance(value, bool):
                raise OracleError("type")
            return -value
        if isinstance(node, Quantifier):
            for candidate in QUANT_WINDOW:
                inner = dict(scope)
                inner[node.var] = candidate
                guard = ev(node.range, inner, old_mode)
                if not isinstance(guard, bool):
                    raise OracleError("type")
                if not guard:
                    continue
                body = ev(node.body, inner, old_mode)
                if not isinstance(body, bool):
                    raise OracleError("type")
                if node.kind == "forall" and not body:
                    return False
                if node.kind == "exists" and body:
                    return True
            return node.kind == "forall"
        assert isinstance(node, Binary)
        if node.op in ("&&", "||", "==>"):
            lhs = ev(node.lhs, scope, old_mode)
            if not isinstance(lhs, bool):
                raise OracleError("type")
            if node.op == "&&" and not lhs:
                return False
            if node.op == "||" and lhs:
                return True
            if node.op == "==>" and not lhs:
                return True
            rhs = ev(node.rhs, scope, old_mode)
            if not isinstance(rhs, bool):
                raise OracleError("type")
            return rhs
        if node.op == "<==":
            # Mirrors the subject's declared order: consequent side first.
            rhs = ev(node.rhs, scope, old_mode)
            if not isinstance(rhs, bool):
                raise OracleError("type")
            lhs = ev(node.lhs, scope, old_mode)
            if not isinstance(lhs, bool):
                raise OracleError("type")
            return lhs or not rhs
        if node.op == "<==>":
            lhs = ev(node.lhs, scope, old_mode)
            if not isinstance(lhs, bool):
                raise OracleError("type")
            rhs = ev(node.rhs, scope, old_mode)
            if not isinstance(rhs, bool):
                raise OracleError("type")
            return lhs == rhs
        if node.op in ("==", "!="):
            equal = _oracle_equal(
                ev(node.lhs, scope, old_mode), ev(node.rhs, scope, old_mode)
            )
            return equal if node.op == "==" else not equal
        lhs = ev(node.lhs, scope, old_mode)
        if not isinstance(lhs, int) or isinstance(lhs, bool):
            raise OracleError("type")
        rhs = ev(node.rhs, scope, old_mode)
        if not isinstance(rhs, int) or isinstance(rhs, bool):
            raise OracleError("type")
        if node.op == "<":
            return lhs < rhs
        if node.op == "<=":
            return lhs <= rhs
        if node.op == ">":
            return lhs > rhs
        if node.op == ">=":
            return lhs >= rhs
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            return lhs * rhs
        try:
            if node.op == "/":
                return _oracle_java_div(lhs, rhs)
            if node.op == "%":
                return _oracle_java_rem(lhs, rhs)
        except ZeroDivisionError:
            raise OracleError("div0") from None
        raise AssertionError(f"oracle: unexpected operator {node.op}")

    return ev(expr, bind, in_old)


def _oracle_equal(lhs, rhs) -> bool:
    if lhs is NULL or rhs is NULL:
        return lhs is rhs
    if isinstance(lhs, bool) != isinstance(rhs, bool):
        raise OracleError("type")
    if isinstance(lhs, list) != isinstance(rhs, list):
        raise OracleError("type")
    if isinstance(lhs, list):
        return lhs == rhs
    return lhs == rhs


ERROR_TAGS = {
    UnboundVariable: "unbound",
    IndexOutOfRange: "index",
    DivisionByZero: "div0",
    EvalTypeError: "type",
    MissingOldSnapshot: "old",
    UnboundedQuantifier: "width",
}


def eval_outcome(fn, *args):
    """Normalize a value-or-error result for oracle comparison."""
    try:
        return ("ok", fn(*args))
    except OracleError as exc:
        return ("error", exc.tag)
    except EvalError as exc:
        for klass, tag in ERROR_TAGS.items():
            if isinstance(exc, klass):
                return ("error", tag)
        return ("error", "eval")


def gen_eval_case(rng: random.Random) -> tuple[Expr, TraceRecord]:
    """Closed boolean expression plus a record that mostly binds it."""
    bindings = {name: rng.randrange(-20, 21) for name in INT_VARS}
    bindings["arr"] = [rng.randrange(-20, 21) for _ in range(rng.randrange(1, 7))]
    old = {name: rng.randrange(-20, 21) for name in INT_VARS}
    old["arr"] = list(bindings["arr"])
    result = rng.randrange(-20, 21)
    record = TraceRecord(
        anchor=None,
        phase=Phase.POST,
        bindings=bindings,
        result=result if rng.random() < 0.8 else None,
        old=old if rng.random() < 0.8 else None,
    )

    def int_leaf(depth: int) -> Expr:
        roll = rng.random()
        if roll < 0.30:
            return IntLit(rng.randrange(-9, 10))
        if roll < 0.62:
            return Var(rng.choice(INT_VARS))
        if roll < 0.70:
            return ResultRef()
        if roll < 0.80:
            return FieldAccess(Var("arr"), "length")
        if roll < 0.90:
            return ArrayIndex(Var("arr"), int_expr(depth - 1))
        return OldRef(Var(rng.choice(INT_VARS)))

    def int_expr(depth: int) -> Expr:
        if depth <= 0 or rng.random() < 0.5:
            return int_leaf(depth)
        op = rng.choice(("+", "+", "-", "-", "*", "/", "%"))
        return Binary(op, int_expr(depth - 1), int_expr(depth - 1))

    def relation(depth: int) -> Expr:
        if rng.random() < 0.08:
            return Binary(rng.choice(("==", "!=")), Var("arr"), NullLit())
        return Binary(rng.choice(REL_OPS), int_expr(depth), int_expr(depth))

    def bool_expr(depth: int, quant_budget: int) -> Expr:
        if depth <= 0:
            return relation(0)
        roll = rng.random()
        if roll < 0.40:
            return relation(rng.randrange(0, 2))
        if roll < 0.72:
            op = rng.choice(("&&", "&&", "||", "||", "==>", "<==", "<==>"))
            return Binary(op, bool_expr(depth - 1, quant_budget), bool_expr(depth - 1, quant_budget))
        if roll < 0.82 or quant_budget <= 0:
            return Unary("!", bool_expr(depth - 1, quant_budget))
        qv = f"q{quant_budget}"
        lo = rng.randrange(-25, 5)
        span = rng.randrange(0, 51)
        range_expr = Binary(
            "&&",
            Binary("<=", IntLit(lo), Var(qv)),
            Binary("<", Var(qv), IntLit(lo + span)),
        )
        body = bool_expr(depth - 1, quant_budget - 1)
        body = _substitute_some_vars(rng, body, qv)
        return Quantifier(rng.choice(("forall", "exists")), qv, range_expr, body)

    return bool_expr(rng.randrange(1, 4), 2), record


def _substitute_some_vars(rng: random.Random, expr: Expr, qv: str) -> Expr:
    """Rewrite some leaf variables to the quantified variable.

    Quantifier ranges are left untouched so nested domains stay bounded
    by literals.
    """
    if isinstance(expr, Var) and rng.random() < 0.4:
        return Var(qv)
    out = expr
    for i, child in enumerate(expr.children()):
        if isinstance(expr, Quantifier) and i == 0:
            continue
        out = out.replace_child(i, _substitute_some_vars(rng, child, qv))
    return out


# ---------------------------------------------------------------------------
# Hypothesis strategies for parser round-trip properties.

_names = st.sampled_from(["a", "b", "c", "n", "x", "y", "idx", "total"])

_int_leaves = st.one_of(
    st.integers(min_value=-999, max_value=999).map(IntLit),
    _names.map(Var),
    st.just(ResultRef()),
    st.builds(FieldAccess, _names.map(Var), st.just("length")),
)


def _extend_int(children):
    return st.one_of(
        st.builds(
            Binary, st.sampled_from(["+", "-", "*", "/", "%"]), children, children
        ),
        st.builds(ArrayIndex, _names.map(Var), children),
        st.builds(OldRef, children),
        # Negating an integer literal canonicalizes to the literal itself,
        # so the identity property generates negation over variables only.
        st.builds(Unary, st.just("neg"), _names.map(Var)),
    )


int_exprs = st.recursive(_int_leaves, _extend_int, max_leaves=8)

_bool_leaves = st.one_of(
    st.booleans().map(BoolLit),
    st.builds(Binary, st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), int_exprs, int_exprs),
    st.builds(Binary, st.sampled_from(["==", "!="]), _names.map(Var), st.just(NullLit())),
)


def _extend_bool(children):
    return st.one_of(
        st.builds(
            Binary, st.sampled_from(["&&", "||", "==>", "<==", "<==>"]), children, children
        ),
        st.builds(Unary, st.just("!"), children),
        st.builds(
            Quantifier,
            st.sampled_from(["forall", "exists"]),
            st.sampled_from(["k", "m"]),
            children,
            children,
        ),
    )


bool_exprs = st.recursive(_bool_leaves, _extend_bool, max_leaves=8)


# ---------------------------------------------------------------------------
# Acceptance summary: one line per criterion at the end of the run.

ACCEPTANCE_CRITERIA = [
    ("test_criterion_1_golden_mutation_families", "golden operator mutation families"),
    ("test_criterion_2_family_enumeration_matches_brute_force", "family enumeration vs brute force"),
    ("test_criterion_3_scoring_and_scale_invariance", "weighted scoring and argmax scale invariance"),
    ("test_criterion_4_repair_loop_invariants", "repair loop call bound and no refuted revisits"),
    ("test_criterion_5_heuristic_beats_random", "heuristic selection beats random by at least 5%"),
    ("test_criterion_6_conversation_exhaustion_and_feedback", "conversation exhaustion and single-failure feedback"),
    ("test_criterion_7_twosum_end_to_end", "recorded two-sum run reproduces the hand simulation"),
    ("test_criterion_8_evaluator_matches_brute_force", "trace evaluation vs brute-force interpreter"),
    ("test_criterion_9_deterministic_reports", "fixture batch reports are byte-identical"),
]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, str] = {}
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            name = getattr(report, "nodeid", "").rsplit("::", 1)[-1]
            if getattr(report, "when", "call") == "call" or status == "error":
                outcomes[name] = status
    if not any(name in outcomes for name, _ in ACCEPTANCE_CRITERIA):
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number, (name, description) in enumerate(ACCEPTANCE_CRITERIA, start=1):
        status = outcomes.get(name)
        if status == "passed":
            verdict = "PASS"
        elif status is None:
            verdict = "NOT RUN"
        else:
            verdict = "FAIL"
        terminalreporter.write_line(f"acceptance {number} {description}: {verdict}")
