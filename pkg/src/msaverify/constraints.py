"""Constraint generation over the canonical model.

Three architecture rules (no intraservice remote calls, bounded per-service
connection sums, acyclic call graph) and two authorization rules (role
containment along every call edge, per-entity-and-operation role-set
consistency across accessing endpoints) are generated into one unified,
concern-tagged constraint set. Generation is total and deterministic and
only ever ranges over edges that actually exist; edge variables may only be
switched off downstream, never invented.

The hub bound defaults to ``sum <= tau``; ``strict=True`` switches the
comparison to ``<``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from .errors import ConstraintConfigError
from .model import OPERATION_ORDER, CanonicalModel, Operation, SystemModel


class Concern(Enum):
    ARCHITECTURE = "architecture"
    AUTHORIZATION = "authorization"


class ConstraintKind(Enum):
    NIRC = "nirc"
    HUB = "hub"
    CYCLE = "cycle"
    AUTH_ENTITY_CONSISTENCY = "auth_entity_consistency"
    AUTH_CHAIN = "auth_chain"


#: Atom payloads per kind:
#:   NIRC / CYCLE / AUTH_CHAIN  -> (i, j) edge pairs
#:   HUB                        -> (i, j) edges touching the service
#:   AUTH_ENTITY_CONSISTENCY    -> (endpoint, Operation) access facts
@dataclass(frozen=True)
class Constraint:
    id: str
    concern: Concern
    kind: ConstraintKind
    params: Mapping[str, object]
    atoms: tuple


@dataclass(frozen=True)
class VariableProfile:
    """Which variable families the optimizer may change.

    The default frees exactly the call edges (removal only) and the
    endpoint permitted-role sets; everything else is held constant.
    """

    edges_mutable: bool = True
    roles_mutable: bool = True

    def describe(self) -> str:
        free = [name for name, flag in (("edges", self.edges_mutable), ("roles", self.roles_mutable)) if flag]
        return "+".join(free) if free else "none"


DEFAULT_PROFILE = VariableProfile()


@dataclass(frozen=True)
class ConstraintModel:
    constraints: tuple[Constraint, ...]
    profile: VariableProfile = DEFAULT_PROFILE

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", tuple(self.constraints))

    def kinds(self) -> frozenset[ConstraintKind]:
        return frozenset(c.kind for c in self.constraints)

    def concerns(self) -> frozenset[Concern]:
        return frozenset(c.concern for c in self.constraints)

    def by_kind(self, kind: ConstraintKind) -> tuple[Constraint, ...]:
        return tuple(c for c in self.constraints if c.kind == kind)


def gen_nirc(canon: CanonicalModel) -> list[Constraint]:
    """One constraint requiring every present edge to cross service boundaries.

    Self-calls are covered as the degenerate case of a shared parent.
    """
    return [
        Constraint(
            id="arch/nirc",
            concern=Concern.ARCHITECTURE,
            kind=ConstraintKind.NIRC,
            params={},
            atoms=canon.edges,
        )
    ]


def gen_hub(canon: CanonicalModel, tau: int, strict: bool = False) -> list[Constraint]:
    """One per-service bound on the inbound+outbound connection sum."""
    if tau < 0:
        raise ConstraintConfigError("hub threshold tau must be non-negative")
    touching: list[list[tuple[int, int]]] = [[] for _ in range(canon.n)]
    for edge in canon.edges:
        i, j = edge
        touching[canon.e_parents[i]].append(edge)
        if canon.e_parents[j] != canon.e_parents[i]:
            touching[canon.e_parents[j]].append(edge)
    return [
        Constraint(
            id=f"arch/hub/{s}",
            concern=Concern.ARCHITECTURE,
            kind=ConstraintKind.HUB,
            params={"service": s, "tau": tau, "strict": strict},
            atoms=tuple(touching[s]),
        )
        for s in range(canon.n)
    ]


def gen_cycle(canon: CanonicalModel) -> list[Constraint]:
    """One constraint introducing an integer order label per endpoint and a
    strict inequality per present edge; satisfiable iff the graph is acyclic."""
    return [
        Constraint(
            id="arch/cycle",
            concern=Concern.ARCHITECTURE,
            kind=ConstraintKind.CYCLE,
            params={"m": canon.m},
            atoms=canon.edges,
        )
    ]


def gen_auth(model: SystemModel) -> list[Constraint]:
    """Authorization constraints under this artifact's documented reading.

    Entity consistency: for a given entity and operation, every endpoint
    performing that access must permit exactly the same role set. Chain
    completion: along every call edge the caller's permitted roles must be
    contained in the callee's, which composes transitively over paths.
    """
    if model.auth is None:
        raise ConstraintConfigError("authorization constraints need a model with an auth extension")

    constraints: list[Constraint] = []
    per_entity: dict[str, list[tuple[int, Operation]]] = {name: [] for name in sorted(model.auth.entities)}
    for acc in model.auth.accesses:
        for op in OPERATION_ORDER:
            if op in acc.operations:
                per_entity[acc.entity].append((acc.endpoint, op))
    for entity in sorted(per_entity):
        atoms = tuple(sorted(per_entity[entity], key=lambda a: (a[0], OPERATION_ORDER.index(a[1]))))
        constraints.append(
            Constraint(
                id=f"auth/entity/{entity}",
                concern=Concern.AUTHORIZATION,
                kind=ConstraintKind.AUTH_ENTITY_CONSISTENCY,
                params={"entity": entity},
                atoms=atoms,
            )
        )
    constraints.append(
        Constraint(
            id="auth/chain",
            concern=Concern.AUTHORIZATION,
            kind=ConstraintKind.AUTH_CHAIN,
            params={},
            atoms=tuple(sorted(model.edges)),
        )
    )
    return constraints


def assemble(
    canon: CanonicalModel,
    model: SystemModel,
    concerns: Iterable[Concern],
    tau: Optional[int] = None,
    hub_strict: bool = False,
    profile: VariableProfile = DEFAULT_PROFILE,
) -> ConstraintModel:
    """Concatenate the requested generators into one constraint model.

    Ordering is deterministic: architecture before authorization, kinds in
    declaration order, services/entities by index/name.
    """
    requested = set(concerns)
    constraints: list[Constraint] = []
    if Concern.ARCHITECTURE in requested:
        if tau is None:
            raise ConstraintConfigError("architecture concern needs an explicit hub threshold tau")
        constraints.extend(gen_nirc(canon))
        constraints.extend(gen_hub(canon, tau, strict=hub_strict))
        constraints.extend(gen_cycle(canon))
    if Concern.AUTHORIZATION in requested:
        constraints.extend(gen_auth(model))
    return ConstraintModel(constraints=tuple(constraints), profile=profile)
