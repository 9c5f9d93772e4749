"""Deterministic synthetic system generation for scalability experiments.

Randomness comes from Python's ``random.Random`` (the Mersenne Twister
MT19937 algorithm) seeded with the caller's 64-bit seed, and the generation
procedure draws in a fixed documented order, so a parameter set always
produces the same model. Edges are sampled per candidate cross-service pair
(never intraservice); with ``acyclic`` only pairs respecting a random
endpoint permutation's order are candidates, which makes the result a DAG
by construction. Role assignment follows a Zipf-like skew (role k kept with
probability ``0.8 / (k + 1)``) so rare admin-style roles occur naturally.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import (
    HTTP_METHODS,
    AuthExtension,
    Endpoint,
    EntityAccess,
    Microservice,
    Operation,
    SystemModel,
)


@dataclass(frozen=True)
class GeneratorParams:
    n_services: int
    endpoints_per_service: tuple[int, int] = (1, 1)
    edge_density: float = 0.0
    acyclic: bool = False
    with_auth: bool = False
    n_roles: int = 3
    n_entities: int = 3
    seed: int = 0

    def check(self) -> None:
        lo, hi = self.endpoints_per_service
        if self.n_services < 1:
            raise ValueError("n_services must be positive")
        if lo < 1 or hi < lo:
            raise ValueError("endpoints_per_service must satisfy 1 <= min <= max")
        if not 0.0 <= self.edge_density <= 1.0:
            raise ValueError("edge_density must lie in [0, 1]")
        if self.with_auth and (self.n_roles < 1 or self.n_entities < 1):
            raise ValueError("n_roles and n_entities must be positive when with_auth is set")


def generate_synthetic(params: GeneratorParams) -> SystemModel:
    """Generate a valid model from *params*; same params, same model."""
    params.check()
    rng = random.Random(params.seed)

    parents: list[int] = []
    services = []
    endpoints = []
    lo, hi = params.endpoints_per_service
    for s in range(params.n_services):
        count = rng.randint(lo, hi)
        first = len(parents)
        for k in range(count):
            idx = first + k
            method = HTTP_METHODS[rng.randrange(len(HTTP_METHODS))]
            endpoints.append((method, f"/svc{s}/op{k}", s))
            parents.append(s)
        services.append(Microservice(f"svc{s}", frozenset(range(first, first + count))))
    m = len(parents)

    rank = list(range(m))
    if params.acyclic:
        rng.shuffle(rank)
        position = [0] * m
        for pos, endpoint in enumerate(rank):
            position[endpoint] = pos
    else:
        position = rank

    edges = set()
    if params.edge_density > 0:
        for a in range(m):
            pa = parents[a]
            for b in range(m):
                if parents[b] == pa:
                    continue
                if params.acyclic and position[a] >= position[b]:
                    continue
                if rng.random() < params.edge_density:
                    edges.add((a, b))

    auth = None
    roles_per_endpoint: list[frozenset[str] | None] = [None] * m
    if params.with_auth:
        role_names = [f"role{k}" for k in range(params.n_roles)]
        entity_names = [f"entity{k}" for k in range(params.n_entities)]
        weights = [1.0 / (k + 1) for k in range(params.n_roles)]
        for e in range(m):
            kept = [r for k, r in enumerate(role_names) if rng.random() < 0.8 / (k + 1)]
            if not kept:
                kept = rng.choices(role_names, weights=weights, k=1)
            roles_per_endpoint[e] = frozenset(kept)
        accesses = []
        for e in range(m):
            if rng.random() < 0.5:
                entity = entity_names[rng.randrange(params.n_entities)]
                ops = frozenset(op for op in Operation if rng.random() < 0.5)
                if not ops:
                    ops = frozenset({Operation.READ})
                accesses.append(EntityAccess(endpoint=e, entity=entity, operations=ops))
        auth = AuthExtension(
            roles=frozenset(role_names),
            entities=frozenset(entity_names),
            accesses=tuple(accesses),
        )

    return SystemModel(
        microservices=tuple(services),
        endpoints=tuple(
            Endpoint(index=i, method=method, path=path, parent=parent, permitted_roles=roles_per_endpoint[i])
            for i, (method, path, parent) in enumerate(endpoints)
        ),
        edges=frozenset(edges),
        auth=auth,
    )
