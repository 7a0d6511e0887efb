"""Mutation operators, exhaustive variant enumeration, and weighted selection.

Each clause yields a fixed list of mutation sites (one per mutable operator
occurrence). A variant is the clause with some subset of sites rewritten,
carrying the per-kind count vector used for scoring. The family of a template
is every such variant, deduplicated by canonical text and ordered by score
(descending), then text (ascending).
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .clauses import Clause, render_clause
from .errors import SitePathInvalid
from .expr import Binary, Expr, IntLit, Quantifier, node_at, walk


class MutationKind(Enum):
    PREDICATIVE = "predicative"
    LOGICAL = "logical"
    COMPARATIVE = "comparative"
    ARITHMETIC = "arithmetic"


ALL_KINDS = frozenset(MutationKind)

# Structural rewrites: the replacement keeps the comparison operator but
# shifts the left operand by one.
DEC_LHS = "- 1 <="
INC_LHS = "+ 1 >="

# operator token -> (kind, replacement options in fixed order)
REPLACEMENTS: dict[str, tuple[MutationKind, tuple[str, ...]]] = {
    "\\forall": (MutationKind.PREDICATIVE, ("\\exists",)),
    "\\exists": (MutationKind.PREDICATIVE, ("\\forall",)),
    "&&": (MutationKind.LOGICAL, ("||",)),
    "||": (MutationKind.LOGICAL, ("&&",)),
    "<==>": (MutationKind.LOGICAL, ("<==", "==>")),
    "==>": (MutationKind.LOGICAL, ("<==",)),
    "<==": (MutationKind.LOGICAL, ("==>",)),
    "<=": (MutationKind.COMPARATIVE, ("<", DEC_LHS)),
    ">=": (MutationKind.COMPARATIVE, (">", INC_LHS)),
    "<": (MutationKind.COMPARATIVE, ("<=",)),
    ">": (MutationKind.COMPARATIVE, (">=",)),
    "==": (MutationKind.COMPARATIVE, ("!=",)),
    "!=": (MutationKind.COMPARATIVE, ("==",)),
    "+": (MutationKind.ARITHMETIC, ("-",)),
    "-": (MutationKind.ARITHMETIC, ("+",)),
}


@dataclass(frozen=True)
class WeightTable:
    """Per-kind mutation weights for the selection score."""

    comparative: int = -1
    logical: int = -2
    arithmetic: int = -4
    predicative: int = -4

    def __getitem__(self, kind: MutationKind) -> int:
        return getattr(self, kind.value)

    def scaled(self, factor: int) -> WeightTable:
        return WeightTable(
            comparative=self.comparative * factor,
            logical=self.logical * factor,
            arithmetic=self.arithmetic * factor,
            predicative=self.predicative * factor,
        )


DEFAULT_WEIGHTS = WeightTable()


@dataclass(frozen=True)
class MutationSite:
    path: tuple[int, ...]
    kind: MutationKind
    original_op: str


@dataclass(frozen=True)
class MutationChoice:
    site: MutationSite
    replacement: str


@dataclass(frozen=True)
class Variant:
    expr: Expr
    template_id: str
    counts: tuple[tuple[MutationKind, int], ...]  # all four kinds, fixed order
    choices: tuple[MutationChoice, ...]
    text: str  # canonical rendered clause line

    def count(self, kind: MutationKind) -> int:
        return dict(self.counts)[kind]

    @property
    def total_mutations(self) -> int:
        return sum(n for _, n in self.counts)


@dataclass
class Family:
    """All variants of one template clause, scored and ordered."""

    template: Clause
    template_id: str
    variants: list[Variant] = field(default_factory=list)
    truncated: bool = False
    raw_count: int = 1

    def __len__(self) -> int:
        return len(self.variants)


def _site_for(node: Expr) -> tuple[MutationKind, str] | None:
    if isinstance(node, Quantifier):
        return REPLACEMENTS[f"\\{node.kind}"][0], f"\\{node.kind}"
    if isinstance(node, Binary) and node.op in REPLACEMENTS:
        return REPLACEMENTS[node.op][0], node.op
    return None


def enumerate_sites(expr: Expr) -> list[MutationSite]:
    """All mutable operator occurrences, in deterministic pre-order."""
    sites: list[MutationSite] = []
    for path, node in walk(expr):
        hit = _site_for(node)
        if hit is not None:
            kind, op = hit
            sites.append(MutationSite(path=path, kind=kind, original_op=op))
    return sites


def apply_choice(expr: Expr, choice: MutationChoice) -> Expr:
    """Rewrite exactly the one operator named by the choice."""
    site = choice.site
    try:
        node = node_at(expr, site.path)
    except IndexError as exc:
        raise SitePathInvalid(f"path {site.path} does not resolve") from exc
    rewritten = _rewrite(node, site, choice.replacement)
    return _replace_at(expr, site.path, rewritten)


def _rewrite(node: Expr, site: MutationSite, replacement: str) -> Expr:
    if isinstance(node, Quantifier):
        if f"\\{node.kind}" != site.original_op:
            raise SitePathInvalid(
                f"expected {site.original_op} at {site.path}, found \\{node.kind}"
            )
        return Quantifier(replacement[1:], node.var, node.range, node.body)
    if not isinstance(node, Binary) or node.op != site.original_op:
        found = node.op if isinstance(node, Binary) else type(node).__name__
        raise SitePathInvalid(f"expected {site.original_op} at {site.path}, found {found}")
    if replacement == DEC_LHS:
        return Binary("<=", Binary("-", node.lhs, IntLit(1)), node.rhs)
    if replacement == INC_LHS:
        return Binary(">=", Binary("+", node.lhs, IntLit(1)), node.rhs)
    return Binary(replacement, node.lhs, node.rhs)


def _replace_at(expr: Expr, path: tuple[int, ...], new_node: Expr) -> Expr:
    if not path:
        return new_node
    child = _replace_at(expr.children()[path[0]], path[1:], new_node)
    return expr.replace_child(path[0], child)


def _apply_combination(
    expr: Expr, chosen: dict[tuple[int, ...], tuple[MutationSite, str]]
) -> Expr:
    """Apply many choices in one bottom-up rebuild.

    Children are rebuilt before the node itself is rewritten, so a structural
    rewrite wraps the already-mutated left operand and deeper site paths stay
    valid regardless of combination order.
    """

    def build(node: Expr, path: tuple[int, ...]) -> Expr:
        rebuilt = node
        for index, child in enumerate(node.children()):
            new_child = build(child, path + (index,))
            if new_child is not child:
                rebuilt = rebuilt.replace_child(index, new_child)
        if path in chosen:
            site, replacement = chosen[path]
            rebuilt = _rewrite(rebuilt, site, replacement)
        return rebuilt

    return build(expr, ())


def score_variant(variant: Variant, weights: WeightTable) -> int:
    """Sum over kinds of (mutation count) x (kind weight)."""
    return sum(weights[kind] * count for kind, count in variant.counts)


def _make_counts(choices: Sequence[MutationChoice]) -> tuple[tuple[MutationKind, int], ...]:
    tally = {kind: 0 for kind in MutationKind}
    for choice in choices:
        tally[choice.site.kind] += 1
    return tuple((kind, tally[kind]) for kind in MutationKind)


def _build_variant(template: Clause, template_id: str, choices: tuple[MutationChoice, ...]) -> Variant:
    chosen = {c.site.path: (c.site, c.replacement) for c in choices}
    expr = _apply_combination(template.expr, chosen) if chosen else template.expr
    clause = template.with_expr(expr)
    return Variant(
        expr=expr,
        template_id=template_id,
        counts=_make_counts(choices),
        choices=choices,
        text=render_clause(clause),
    )


def enumerate_variants(
    template: Clause,
    kinds: Iterable[MutationKind] = ALL_KINDS,
    cap: int = 4096,
    weights: WeightTable | None = None,
) -> Family:
    """Exhaust every combination of per-site replacements into a family.

    The zero-mutation template variant is always a member. Duplicates by
    canonical text are merged keeping the first (maximum-score) occurrence.
    When the raw combination count exceeds ``cap``, variants are produced in
    descending score order (ties by text, ascending) and the family is
    truncated at ``cap`` with its flag set.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    weights = weights or DEFAULT_WEIGHTS
    enabled = set(kinds)
    template_id = template.id or f"unanchored/{template.kind.value}/0"
    sites = [s for s in enumerate_sites(template.expr) if s.kind in enabled]

    # Per-site options ordered best score first: (score delta, replacement).
    # Index 0 is always the best, so the all-zeros assignment is the argmax
    # and bumping any index can only lower the score.
    options: list[list[tuple[int, str | None]]] = []
    raw_count = 1
    for site in sites:
        site_options: list[tuple[int, str | None]] = [(0, None)]
        site_options.extend((weights[site.kind], repl) for repl in REPLACEMENTS[site.original_op][1])
        site_options.sort(key=lambda pair: -pair[0])
        options.append(site_options)
        raw_count *= len(site_options)

    family = Family(template=template, template_id=template_id, raw_count=raw_count)
    seen: set[str] = set()

    def assignment_variant(assignment: tuple[int, ...]) -> Variant:
        choices = tuple(
            MutationChoice(site=sites[i], replacement=options[i][idx][1])
            for i, idx in enumerate(assignment)
            if options[i][idx][1] is not None
        )
        return _build_variant(template, template_id, choices)

    # Best-first walk over assignments: pop everything at one score, order
    # that batch by text, emit, then descend to the next score. A neighbor
    # (one site bumped to its next option) never scores higher than its
    # parent, so the heap yields scores in non-increasing order.
    start = tuple(0 for _ in sites)
    heap: list[tuple[int, tuple[int, ...]]] = [(-_assignment_score(options, start), start)]
    visited = {start}
    batch_limit = max(4 * cap, 16384)
    stopped_early = False
    while heap and not stopped_early:
        batch_score = heap[0][0]
        batch: list[tuple[int, ...]] = []
        while heap and heap[0][0] == batch_score:
            _, assignment = heapq.heappop(heap)
            batch.append(assignment)
            if len(batch) >= batch_limit:
                # Pathologically wide score level; the family is about to be
                # truncated anyway, so give up on full-level text ordering
                # (the partial order is still deterministic).
                stopped_early = True
                break
            for i in range(len(sites)):
                if assignment[i] + 1 < len(options[i]):
                    neighbor = assignment[:i] + (assignment[i] + 1,) + assignment[i + 1 :]
                    if neighbor not in visited:
                        visited.add(neighbor)
                        heapq.heappush(
                            heap, (-_assignment_score(options, neighbor), neighbor)
                        )
        for variant in sorted((assignment_variant(a) for a in batch), key=lambda v: v.text):
            if variant.text in seen:
                continue
            if len(family.variants) >= cap:
                stopped_early = True
                break
            seen.add(variant.text)
            family.variants.append(variant)
    family.truncated = stopped_early

    template_variant = _build_variant(template, template_id, ())
    if template_variant.text not in seen:
        # Only reachable under exotic weight tables where positive weights
        # push the template below the cap; the template is a family member
        # by definition, so evict the worst variant to make room.
        if len(family.variants) >= cap:
            family.variants.pop()
        family.variants.append(template_variant)
        seen.add(template_variant.text)

    family.variants.sort(key=lambda v: (-score_variant(v, weights), v.text))
    return family


def _assignment_score(options: list[list[tuple[int, str | None]]], assignment: tuple[int, ...]) -> int:
    return sum(options[i][idx][0] for i, idx in enumerate(assignment))


def select_by_heuristic(variants: Sequence[Variant], weights: WeightTable) -> Variant | None:
    """Argmax by score; ties broken by ascending canonical text."""
    if not variants:
        return None
    return min(variants, key=lambda v: (-score_variant(v, weights), v.text))


def select_random(variants: Sequence[Variant], rng: random.Random | int) -> Variant | None:
    """Uniform choice among the remaining variants; None when exhausted."""
    if not variants:
        return None
    if isinstance(rng, int):
        rng = random.Random(rng)
    return rng.choice(list(variants))
