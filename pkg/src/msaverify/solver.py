"""Built-in decision procedures: constraint verification and the
topological-order witness.

`verify` evaluates every constraint with all variables pinned to the
model's actual state and reports every violation with a re-checkable
witness. `topo_witness` produces the integer labeling that realizes the
acyclicity constraint, or a concrete cycle when none exists.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional, Union

from .constraints import Concern, Constraint, ConstraintKind, ConstraintModel
from .errors import ConstraintModelMismatch
from .model import OPERATION_ORDER, CanonicalModel, Operation, SystemModel


@dataclass(frozen=True)
class NircWitness:
    edge: tuple[int, int]
    parent: int


@dataclass(frozen=True)
class HubWitness:
    service: int
    degree_sum: int
    tau: int


@dataclass(frozen=True)
class CycleWitness:
    #: endpoint indices along the cycle, first repeated last, e.g. (0, 1, 0)
    path: tuple[int, ...]


@dataclass(frozen=True)
class ChainWitness:
    edge: tuple[int, int]
    role: str


@dataclass(frozen=True)
class EntityWitness:
    entity: str
    operation: Operation
    role: str
    endpoint_with: int
    endpoint_without: int


Witness = Union[NircWitness, HubWitness, CycleWitness, ChainWitness, EntityWitness]


@dataclass(frozen=True)
class Violation:
    constraint_id: str
    kind: ConstraintKind
    concern: Concern
    witness: Witness


@dataclass(frozen=True)
class Verdict:
    overall: str  # "SAT" | "UNSAT"
    violations: tuple[Violation, ...]

    @classmethod
    def from_violations(cls, violations: tuple[Violation, ...]) -> "Verdict":
        return cls(overall="SAT" if not violations else "UNSAT", violations=violations)

    @property
    def sat(self) -> bool:
        return self.overall == "SAT"

    def by_concern(self, concern: Concern) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.concern == concern)


@dataclass(frozen=True)
class TopoWitness:
    labels: tuple[int, ...]


@dataclass(frozen=True)
class TopoResult:
    """Either a labeling satisfying every edge inequality, or a cycle."""

    witness: Optional[TopoWitness]
    cycle: Optional[tuple[int, ...]]

    @property
    def acyclic(self) -> bool:
        return self.witness is not None


def topo_witness(canon: CanonicalModel) -> TopoResult:
    """Order the endpoints so every edge goes label-upward, if possible.

    Uses Kahn's algorithm with an index min-heap, so the labeling is
    deterministic. On failure the reported cycle is the first one found by
    a depth-first traversal in index order.
    """
    labels = _kahn_labels(canon.m, canon.out_edges)
    if labels is not None:
        return TopoResult(witness=TopoWitness(labels=labels), cycle=None)
    cycle = find_cycle(canon)
    assert cycle is not None
    return TopoResult(witness=None, cycle=cycle)


def _kahn_labels(m: int, out_edges: tuple[tuple[int, ...], ...]) -> Optional[tuple[int, ...]]:
    indegree = [0] * m
    for succs in out_edges:
        for j in succs:
            indegree[j] += 1
    ready = [i for i in range(m) if indegree[i] == 0]
    heapq.heapify(ready)
    labels = [0] * m
    seen = 0
    while ready:
        node = heapq.heappop(ready)
        labels[node] = seen
        seen += 1
        for j in out_edges[node]:
            indegree[j] -= 1
            if indegree[j] == 0:
                heapq.heappush(ready, j)
    if seen != m:
        return None
    return tuple(labels)


def find_cycle(canon: CanonicalModel) -> Optional[tuple[int, ...]]:
    """First cycle reached by iterative DFS from endpoint 0 upward,
    returned as a path whose first and last entries coincide."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = [WHITE] * canon.m
    out_edges = canon.out_edges
    for root in range(canon.m):
        if color[root] != WHITE:
            continue
        stack: list[tuple[int, int]] = [(root, 0)]
        path = [root]
        color[root] = GRAY
        while stack:
            node, edge_idx = stack[-1]
            if edge_idx < len(out_edges[node]):
                stack[-1] = (node, edge_idx + 1)
                succ = out_edges[node][edge_idx]
                if color[succ] == GRAY:
                    start = path.index(succ)
                    return tuple(path[start:]) + (succ,)
                if color[succ] == WHITE:
                    color[succ] = GRAY
                    stack.append((succ, 0))
                    path.append(succ)
            else:
                color[node] = BLACK
                stack.pop()
                path.pop()
    return None


def _roles_of(model: SystemModel, endpoint: int) -> frozenset[str]:
    roles = model.endpoints[endpoint].permitted_roles
    return roles if roles is not None else frozenset()


def _check_atoms(canon: CanonicalModel, model: SystemModel, cm: ConstraintModel) -> None:
    edge_set = frozenset(canon.edges)
    for c in cm.constraints:
        if c.kind in (ConstraintKind.NIRC, ConstraintKind.CYCLE, ConstraintKind.AUTH_CHAIN):
            for atom in c.atoms:
                if atom not in edge_set:
                    raise ConstraintModelMismatch(f"constraint {c.id} references absent edge {atom}")
        elif c.kind == ConstraintKind.HUB:
            service = c.params["service"]
            if not (0 <= service < canon.n):
                raise ConstraintModelMismatch(f"constraint {c.id} references nonexistent service {service}")
            for atom in c.atoms:
                if atom not in edge_set:
                    raise ConstraintModelMismatch(f"constraint {c.id} references absent edge {atom}")
        elif c.kind == ConstraintKind.AUTH_ENTITY_CONSISTENCY:
            if model.auth is None or c.params["entity"] not in model.auth.entities:
                raise ConstraintModelMismatch(f"constraint {c.id} references undeclared entity")
            for endpoint, _op in c.atoms:
                if not (0 <= endpoint < canon.m):
                    raise ConstraintModelMismatch(f"constraint {c.id} references nonexistent endpoint {endpoint}")


def _eval_constraint(
    c: Constraint, canon: CanonicalModel, model: SystemModel
) -> list[Violation]:
    violations: list[Violation] = []

    def add(witness: Witness) -> None:
        violations.append(Violation(constraint_id=c.id, kind=c.kind, concern=c.concern, witness=witness))

    if c.kind == ConstraintKind.NIRC:
        for i, j in c.atoms:
            if canon.e_parents[i] == canon.e_parents[j]:
                add(NircWitness(edge=(i, j), parent=canon.e_parents[i]))

    elif c.kind == ConstraintKind.HUB:
        service = c.params["service"]
        tau = c.params["tau"]
        strict = c.params.get("strict", False)
        total = 0
        for i, j in c.atoms:
            total += (canon.e_parents[i] == service) + (canon.e_parents[j] == service)
        if total > tau or (strict and total == tau):
            add(HubWitness(service=service, degree_sum=total, tau=tau))

    elif c.kind == ConstraintKind.CYCLE:
        sub = CanonicalModel(m=c.params["m"], n=canon.n, e_parents=canon.e_parents, edges=tuple(sorted(c.atoms)))
        result = topo_witness(sub)
        if not result.acyclic:
            add(CycleWitness(path=result.cycle))

    elif c.kind == ConstraintKind.AUTH_CHAIN:
        for i, j in c.atoms:
            for role in sorted(_roles_of(model, i) - _roles_of(model, j)):
                add(ChainWitness(edge=(i, j), role=role))

    elif c.kind == ConstraintKind.AUTH_ENTITY_CONSISTENCY:
        entity = c.params["entity"]
        for op in OPERATION_ORDER:
            accessors = sorted(endpoint for endpoint, o in c.atoms if o == op)
            if len(accessors) < 2:
                continue
            baseline = accessors[0]
            base_roles = _roles_of(model, baseline)
            for other in accessors[1:]:
                other_roles = _roles_of(model, other)
                for role in sorted(other_roles - base_roles):
                    add(EntityWitness(entity, op, role, endpoint_with=other, endpoint_without=baseline))
                for role in sorted(base_roles - other_roles):
                    add(EntityWitness(entity, op, role, endpoint_with=baseline, endpoint_without=other))

    return violations


def verify(canon: CanonicalModel, model: SystemModel, cm: ConstraintModel) -> Verdict:
    """Evaluate every constraint against the concrete system.

    Returns all violations in constraint order with deterministic
    per-constraint witness order. Raises `ConstraintModelMismatch` if any
    atom references an element the model does not have.
    """
    _check_atoms(canon, model, cm)
    violations: list[Violation] = []
    for c in cm.constraints:
        violations.extend(_eval_constraint(c, canon, model))
    return Verdict.from_violations(tuple(violations))


def strongly_connected_components(m: int, out_edges: tuple[tuple[int, ...], ...]) -> list[int]:
    """Tarjan's algorithm, iterative; returns a component id per node."""
    index_of = [-1] * m
    lowlink = [0] * m
    on_stack = [False] * m
    comp = [-1] * m
    stack: list[int] = []
    next_index = 0
    next_comp = 0
    for root in range(m):
        if index_of[root] != -1:
            continue
        work: list[tuple[int, int]] = [(root, 0)]
        while work:
            node, edge_idx = work[-1]
            if edge_idx == 0:
                index_of[node] = lowlink[node] = next_index
                next_index += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            succs = out_edges[node]
            while edge_idx < len(succs):
                succ = succs[edge_idx]
                edge_idx += 1
                if index_of[succ] == -1:
                    work[-1] = (node, edge_idx)
                    work.append((succ, 0))
                    advanced = True
                    break
                if on_stack[succ]:
                    lowlink[node] = min(lowlink[node], index_of[succ])
            if advanced:
                continue
            work.pop()
            if lowlink[node] == index_of[node]:
                while True:
                    member = stack.pop()
                    on_stack[member] = False
                    comp[member] = next_comp
                    if member == node:
                        break
                next_comp += 1
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    return comp


def violated_atom_counts(
    canon: CanonicalModel, tau: int, strict: bool = False
) -> dict[str, int]:
    """Per-family counts of violated architecture atoms.

    nirc: edges whose endpoints share a parent. hub: services whose degree
    sum breaks the bound. cycle: edges lying on some cycle (both endpoints
    in one strongly connected component, or a self-loop).
    """
    nirc = sum(1 for i, j in canon.edges if canon.e_parents[i] == canon.e_parents[j])

    sums = [0] * canon.n
    for i, j in canon.edges:
        sums[canon.e_parents[i]] += 1
        sums[canon.e_parents[j]] += 1
    hub = sum(1 for total in sums if total > tau or (strict and total == tau))

    comp = strongly_connected_components(canon.m, canon.out_edges)
    cycle = sum(1 for i, j in canon.edges if i == j or comp[i] == comp[j])

    return {"nirc": nirc, "hub": hub, "cycle": cycle}
