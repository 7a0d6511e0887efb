"""Iterative verify-and-replace repair over mutated clause families.

Templates start out selected verbatim. Each iteration verifies the currently
selected clause set with one verifier call; refuted variants are permanently
removed from their family and replaced by the strategy's next pick. A family
that runs dry drops its slot. The multiset of live variants shrinks on every
refutation, so the loop performs at most 1 + sum(family sizes) calls.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .clauses import AnnotatedProgram, Clause
from .errors import TimeoutBudgetExceeded, UnknownClause
from .mutation import (
    ALL_KINDS,
    DEFAULT_WEIGHTS,
    Family,
    MutationKind,
    Variant,
    WeightTable,
    enumerate_variants,
    select_by_heuristic,
)
from .verifier import Outcome, Verifier, VerifierVerdict


class SelectionStrategy(Protocol):
    def pick(self, variants: Sequence[Variant]) -> Variant | None: ...


@dataclass
class HeuristicStrategy:
    """Argmax of the weighted mutation-count score, ties by text."""

    weights: WeightTable = DEFAULT_WEIGHTS

    def pick(self, variants: Sequence[Variant]) -> Variant | None:
        return select_by_heuristic(variants, self.weights)


class RandomStrategy:
    """Uniform choice with a private deterministic generator."""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = random.Random(seed)

    def pick(self, variants: Sequence[Variant]) -> Variant | None:
        if not variants:
            return None
        return self._rng.choice(list(variants))


@dataclass
class FamilySlot:
    family: Family
    live: list[Variant]  # not yet refuted; includes the selected variant
    selected: Variant | None
    dropped: bool = False
    replacements: int = 0
    warned: bool = False


@dataclass
class RefutationEvent:
    iteration: int
    clause_id: str
    text: str


@dataclass
class SelectionState:
    slots: dict[str, FamilySlot]  # template id -> slot, in template order
    refuted_history: list[RefutationEvent] = field(default_factory=list)
    verifier_calls: int = 0
    thrash_warnings: list[str] = field(default_factory=list)

    def selected_clauses(self) -> tuple[Clause, ...]:
        clauses = []
        for slot in self.slots.values():
            if slot.selected is not None:
                template = slot.family.template
                clauses.append(
                    Clause(
                        kind=template.kind,
                        expr=slot.selected.expr,
                        anchor=template.anchor,
                        id=template.id,
                    )
                )
        return tuple(clauses)


@dataclass
class RepairResult:
    program: AnnotatedProgram
    state: SelectionState
    final_verdict: VerifierVerdict | None

    @property
    def passed(self) -> bool:
        # An empty clause set is vacuously verified: nothing was claimed.
        if not self.program.clauses:
            return True
        return self.final_verdict is not None and self.final_verdict.outcome is Outcome.PASS


def spec_mutation(
    templates: Sequence[Clause],
    kinds: Iterable[MutationKind] = ALL_KINDS,
    cap: int = 4096,
    weights: WeightTable | None = None,
) -> dict[str, Family]:
    """Enumerate one family per template, keyed by template id."""
    families: dict[str, Family] = {}
    for template in templates:
        family = enumerate_variants(template, kinds=kinds, cap=cap, weights=weights)
        families[family.template_id] = family
    return families


def init_state(families: dict[str, Family]) -> SelectionState:
    """Start with every template's zero-mutation variant selected."""
    slots: dict[str, FamilySlot] = {}
    for template_id, family in families.items():
        template_variant = next(
            v for v in family.variants if v.total_mutations == 0
        )
        slots[template_id] = FamilySlot(
            family=family,
            live=list(family.variants),
            selected=template_variant,
        )
    return SelectionState(slots=slots)


def get_family_of(state: SelectionState, clause_id: str) -> list[Variant]:
    """Live (not yet refuted) members of the clause's family."""
    if clause_id not in state.slots:
        raise UnknownClause(f"no family for clause id {clause_id!r}")
    return list(state.slots[clause_id].live)


def re_select(
    state: SelectionState,
    refuted_ids: Iterable[str],
    strategy: SelectionStrategy,
    iteration: int,
) -> None:
    """Remove each refuted selected variant and pick replacements.

    The refuted variant leaves its family permanently. When nothing is left,
    the slot drops: that template contributes no clause from now on.
    """
    for clause_id in refuted_ids:
        if clause_id not in state.slots:
            raise UnknownClause(f"no family for clause id {clause_id!r}")
        slot = state.slots[clause_id]
        if slot.selected is None:
            raise UnknownClause(f"clause id {clause_id!r} has no selected variant")
        refuted = slot.selected
        state.refuted_history.append(
            RefutationEvent(iteration=iteration, clause_id=clause_id, text=refuted.text)
        )
        slot.live.remove(refuted)
        slot.replacements += 1
        if slot.replacements > len(slot.family.variants) / 2 and not slot.warned:
            slot.warned = True
            state.thrash_warnings.append(
                f"template {clause_id} replaced {slot.replacements} times "
                f"(family size {len(slot.family.variants)}); "
                "verifier attribution may be thrashing"
            )
        replacement = strategy.pick(slot.live)
        if replacement is None:
            slot.selected = None
            slot.dropped = True
        else:
            slot.selected = replacement


def spec_selection(
    state: SelectionState,
    source: str,
    verifier: Verifier,
    strategy: SelectionStrategy,
    budget_seconds: float | None = None,
) -> RepairResult:
    """Verify-and-replace until the verifier accepts the selected set.

    Exactly one verifier call per iteration. A failure that cannot be
    attributed to any currently selected clause refutes the whole selection —
    progress is guaranteed either way. An empty selection is verified once
    for the record and then accepted vacuously.
    """
    started = time.monotonic()
    while True:
        if budget_seconds is not None and time.monotonic() - started > budget_seconds:
            raise TimeoutBudgetExceeded(
                f"repair loop exceeded its {budget_seconds:.0f}s budget"
            )
        program = AnnotatedProgram(source, state.selected_clauses())
        verdict = verifier.verify(program)
        state.verifier_calls += 1
        if not program.clauses or verdict.outcome is Outcome.PASS:
            return RepairResult(program=program, state=state, final_verdict=verdict)
        selected_ids = {clause.id for clause in program.clauses}
        refuted = []
        for failure in verdict.failures:
            if failure.clause_id in selected_ids and failure.clause_id not in refuted:
                refuted.append(failure.clause_id)
        if not refuted:
            # Unattributable failure (or timeout/crash): refute everything
            # currently selected rather than loop forever on the same set.
            refuted = [clause.id for clause in program.clauses]
        re_select(state, refuted, strategy, iteration=state.verifier_calls)


def mutation_based_gen(
    templates: AnnotatedProgram,
    verifier: Verifier,
    strategy: SelectionStrategy,
    kinds: Iterable[MutationKind] = ALL_KINDS,
    weights: WeightTable | None = None,
    cap: int = 4096,
    budget_seconds: float | None = None,
) -> RepairResult:
    """Full mutation phase: build families, then select-and-verify to a pass."""
    families = spec_mutation(templates.clauses, kinds=kinds, cap=cap, weights=weights)
    state = init_state(families)
    return spec_selection(
        state, templates.source, verifier, strategy, budget_seconds=budget_seconds
    )
