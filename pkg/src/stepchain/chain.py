"""Reasoning-chain data model: step identity, ordering, dependencies, edits.

A chain is an ordered tuple of immutable steps plus a dependency graph whose
edges read "the `to` step logically depends on the `from` step".  Nothing
mutates in place: every operation returns a fresh chain.  Step ids are
allocated monotonically per chain and never reused, so a surviving step keeps
its identity while its display ordinal gets renumbered.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace as _dc_replace
from enum import Enum
from typing import Iterable, Sequence

from .commands import Delete, EditCommand, Insert, Merge, Replace, Scope
from .errors import (
    CyclicDependencyError,
    DuplicateOrdinalError,
    EmptyReplacementTextError,
    EmptyStepTextError,
    MergeNonAdjacentError,
    NonIncreasingOrdinalsError,
    UnknownStepError,
)

StepId = int  # opaque outside this module; monotonic within a chain


class StepStatus(Enum):
    FRESH = "Fresh"
    STALE = "Stale"  # scheduled for regeneration before finalization
    USER_EDITED = "UserEdited"


class Provenance(Enum):
    MODEL_GENERATED = "ModelGenerated"
    USER_AUTHORED = "UserAuthored"


@dataclass(frozen=True)
class ReasoningStep:
    id: StepId
    ordinal: int  # display number; may change, id never does
    text: str
    status: StepStatus = StepStatus.FRESH
    provenance: Provenance = Provenance.MODEL_GENERATED


@dataclass(frozen=True)
class DependencyGraph:
    """Acyclic "depends on" edges over live step ids."""

    nodes: frozenset[StepId]
    edges: frozenset[tuple[StepId, StepId]]

    def out_edges(self, step_id: StepId) -> set[StepId]:
        return {t for f, t in self.edges if f == step_id}


@dataclass(frozen=True)
class ReasoningChain:
    steps: tuple[ReasoningStep, ...]
    graph: DependencyGraph
    next_id: StepId = 0

    def step_by_ordinal(self, ordinal: int) -> ReasoningStep:
        for step in self.steps:
            if step.ordinal == ordinal:
                return step
        raise UnknownStepError(ordinal)

    def step_by_id(self, step_id: StepId) -> ReasoningStep:
        for step in self.steps:
            if step.id == step_id:
                return step
        raise UnknownStepError(message=f"no step with id {step_id}")

    def ordinals(self) -> list[int]:
        return [step.ordinal for step in self.steps]

    def stale_steps(self) -> list[ReasoningStep]:
        return [step for step in self.steps if step.status is StepStatus.STALE]

    def is_empty(self) -> bool:
        return not self.steps


EMPTY_CHAIN = ReasoningChain(steps=(), graph=DependencyGraph(frozenset(), frozenset()))


def new_chain(
    items: Sequence[tuple[int, str]],
    edges: Iterable[tuple[int, int]] | None = None,
) -> ReasoningChain:
    """Build a chain from (ordinal, text) pairs.

    Ordinals must strictly increase (gaps are fine) and texts must be
    non-empty after trimming.  With ``edges`` omitted, the default linear
    dependency policy applies: every step depends on every earlier step.
    Passing explicit ordinal pairs builds that graph instead (used by tests
    and callers that know the real dependency structure).
    """
    _check_ordinals([ordinal for ordinal, _ in items])
    steps = []
    for step_id, (ordinal, text) in enumerate(items):
        trimmed = text.strip()
        if not trimmed:
            raise EmptyStepTextError(f"step {ordinal} has empty text")
        steps.append(ReasoningStep(id=step_id, ordinal=ordinal, text=trimmed))

    ids = [step.id for step in steps]
    if edges is None:
        edge_set = {(ids[i], ids[j]) for i in range(len(ids)) for j in range(i + 1, len(ids))}
    else:
        by_ordinal = {step.ordinal: step.id for step in steps}
        edge_set = set()
        for from_ordinal, to_ordinal in edges:
            if from_ordinal not in by_ordinal:
                raise UnknownStepError(from_ordinal)
            if to_ordinal not in by_ordinal:
                raise UnknownStepError(to_ordinal)
            edge_set.add((by_ordinal[from_ordinal], by_ordinal[to_ordinal]))
        _check_acyclic(ids, edge_set)

    graph = DependencyGraph(nodes=frozenset(ids), edges=frozenset(edge_set))
    return ReasoningChain(steps=tuple(steps), graph=graph, next_id=len(steps))


def descendants(graph: DependencyGraph, step_id: StepId) -> set[StepId]:
    """Transitive closure of out-edges from ``step_id`` (never includes it)."""
    if step_id not in graph.nodes:
        raise UnknownStepError(message=f"step id {step_id} is not in the graph")
    seen: set[StepId] = set()
    queue = deque(graph.out_edges(step_id))
    while queue:
        node = queue.popleft()
        if node in seen:
            continue
        seen.add(node)
        queue.extend(graph.out_edges(node))
    seen.discard(step_id)
    return seen


def apply_edit(
    chain: ReasoningChain, command: EditCommand
) -> tuple[ReasoningChain, frozenset[StepId]]:
    """Apply one structural command; returns the new chain and the stale set."""
    return apply_edit_sequence(chain, [command])


def apply_edit_sequence(
    chain: ReasoningChain, commands: Sequence[EditCommand]
) -> tuple[ReasoningChain, frozenset[StepId]]:
    """Apply a batch of structural commands from a single utterance.

    Every ordinal target is resolved against the chain as it stood when the
    utterance arrived, so "remove step 1 and merge steps 2 and 3" keeps
    addressing the numbers the user saw.  Renumbering to 1..n happens once at
    the end, and only if some command restructured the list (a pure Replace
    preserves ordinals, gaps included).

    Returns the new chain plus the ids of live steps left Stale by this batch
    (the invalidated set: graph descendants under Cascade scope, nothing
    under Local).
    """
    targets = _resolve_targets(chain, commands)

    steps: list[ReasoningStep] = list(chain.steps)
    edges: set[tuple[StepId, StepId]] = set(chain.graph.edges)
    next_id = chain.next_id
    marked: set[StepId] = set()
    structural = False

    def position(step_id: StepId) -> int:
        for index, step in enumerate(steps):
            if step.id == step_id:
                return index
        raise UnknownStepError(message=f"step id {step_id} no longer exists")

    def current_descendants(step_id: StepId) -> set[StepId]:
        live = frozenset(step.id for step in steps)
        graph = DependencyGraph(nodes=live, edges=frozenset(edges))
        return descendants(graph, step_id)

    def mark(ids: set[StepId]) -> None:
        for index, step in enumerate(steps):
            if step.id in ids:
                steps[index] = _dc_replace(step, status=StepStatus.STALE)
        marked.update(ids)

    for command, target in zip(commands, targets):
        if isinstance(command, Replace):
            index = position(target)
            trimmed = command.text.strip()
            if not trimmed:
                raise EmptyReplacementTextError("replacement text is empty")
            stale = current_descendants(target) if command.scope is Scope.CASCADE else set()
            steps[index] = _dc_replace(
                steps[index],
                text=trimmed,
                status=StepStatus.USER_EDITED,
                provenance=Provenance.USER_AUTHORED,
            )
            mark(stale)

        elif isinstance(command, Delete):
            index = position(target)
            stale = current_descendants(target) if command.scope is Scope.CASCADE else set()
            del steps[index]
            edges = {(f, t) for f, t in edges if f != target and t != target}
            marked.discard(target)
            mark(stale)
            structural = True

        elif isinstance(command, Merge):
            id_a, id_b = target
            pos_a, pos_b = position(id_a), position(id_b)
            if abs(pos_a - pos_b) != 1:
                raise MergeNonAdjacentError(command.first, command.second)
            earlier, later = (id_a, id_b) if pos_a < pos_b else (id_b, id_a)
            stale: set[StepId] = set()
            if command.scope is Scope.CASCADE:
                stale = (current_descendants(earlier) | current_descendants(later)) - {
                    earlier,
                    later,
                }
            first_step = steps[position(earlier)]
            second_step = steps[position(later)]
            merged = ReasoningStep(
                id=next_id,
                ordinal=first_step.ordinal,
                text=first_step.text + "\n\n" + second_step.text,
                status=StepStatus.USER_EDITED,
                provenance=Provenance.USER_AUTHORED,
            )
            next_id += 1
            insert_at = min(position(earlier), position(later))
            steps = [step for step in steps if step.id not in (earlier, later)]
            steps.insert(insert_at, merged)
            rewired = set()
            for f, t in edges:
                f2 = merged.id if f in (earlier, later) else f
                t2 = merged.id if t in (earlier, later) else t
                if f2 != t2:
                    rewired.add((f2, t2))
            edges = rewired
            marked.discard(earlier)
            marked.discard(later)
            mark(stale)
            structural = True

        elif isinstance(command, Insert):
            trimmed = command.text.strip()
            if not trimmed:
                raise EmptyReplacementTextError("inserted text is empty")
            insert_at = 0 if target is None else position(target) + 1
            new_step = ReasoningStep(
                id=next_id,
                ordinal=0,  # placeholder; insertion always renumbers
                text=trimmed,
                status=StepStatus.USER_EDITED,
                provenance=Provenance.USER_AUTHORED,
            )
            next_id += 1
            steps.insert(insert_at, new_step)
            for step in steps[:insert_at]:
                edges.add((step.id, new_step.id))
            later_ids = set()
            for step in steps[insert_at + 1 :]:
                edges.add((new_step.id, step.id))
                later_ids.add(step.id)
            if command.scope is Scope.CASCADE:
                mark(later_ids)
            structural = True

        else:
            raise TypeError(f"apply_edit only accepts structural commands, got {command!r}")

    if structural:
        steps = [_dc_replace(step, ordinal=index + 1) for index, step in enumerate(steps)]

    live = frozenset(step.id for step in steps)
    _check_acyclic(sorted(live), edges)
    graph = DependencyGraph(nodes=live, edges=frozenset(edges))
    new = ReasoningChain(steps=tuple(steps), graph=graph, next_id=next_id)
    invalidated = frozenset(
        step.id for step in steps if step.status is StepStatus.STALE and step.id in marked
    )
    return new, invalidated


def mark_stale(chain: ReasoningChain, step_ids: Iterable[StepId]) -> ReasoningChain:
    """Flag the given live steps for regeneration, touching nothing else."""
    wanted = set(step_ids)
    unknown = wanted - set(chain.graph.nodes)
    if unknown:
        raise UnknownStepError(message=f"unknown step ids {sorted(unknown)}")
    steps = tuple(
        _dc_replace(step, status=StepStatus.STALE) if step.id in wanted else step
        for step in chain.steps
    )
    return _dc_replace(chain, steps=steps)


def set_step_text(
    chain: ReasoningChain,
    step_id: StepId,
    text: str,
    status: StepStatus,
    provenance: Provenance,
) -> ReasoningChain:
    """Rewrite one step in place (same id, same ordinal)."""
    trimmed = text.strip()
    if not trimmed:
        raise EmptyStepTextError(f"step id {step_id} would become empty")
    steps = []
    found = False
    for step in chain.steps:
        if step.id == step_id:
            steps.append(_dc_replace(step, text=trimmed, status=status, provenance=provenance))
            found = True
        else:
            steps.append(step)
    if not found:
        raise UnknownStepError(message=f"no step with id {step_id}")
    return _dc_replace(chain, steps=tuple(steps))


def _resolve_targets(chain: ReasoningChain, commands: Sequence[EditCommand]) -> list:
    targets: list = []
    for command in commands:
        if isinstance(command, Replace) or isinstance(command, Delete):
            targets.append(chain.step_by_ordinal(command.ordinal).id)
        elif isinstance(command, Merge):
            targets.append(
                (
                    chain.step_by_ordinal(command.first).id,
                    chain.step_by_ordinal(command.second).id,
                )
            )
        elif isinstance(command, Insert):
            targets.append(None if command.after == 0 else chain.step_by_ordinal(command.after).id)
        else:
            raise TypeError(f"apply_edit only accepts structural commands, got {command!r}")
    return targets


def _check_ordinals(ordinals: Sequence[int]) -> None:
    for previous, current in zip(ordinals, ordinals[1:]):
        if current == previous:
            raise DuplicateOrdinalError(f"ordinal {current} repeats")
        if current < previous:
            raise NonIncreasingOrdinalsError(f"ordinal {current} follows {previous}")


def _check_acyclic(nodes: Iterable[StepId], edges: set[tuple[StepId, StepId]]) -> None:
    # Kahn's algorithm; leftovers mean a cycle.
    nodes = list(nodes)
    indegree = {node: 0 for node in nodes}
    outgoing: dict[StepId, list[StepId]] = {node: [] for node in nodes}
    for f, t in edges:
        indegree[t] += 1
        outgoing[f].append(t)
    queue = deque(node for node, degree in indegree.items() if degree == 0)
    visited = 0
    while queue:
        node = queue.popleft()
        visited += 1
        for nxt in outgoing[node]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                queue.append(nxt)
    if visited != len(nodes):
        raise CyclicDependencyError("dependency edges form a cycle")
