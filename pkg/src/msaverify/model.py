"""Intermediate model of a microservice system.

The system is described by immutable value types: microservices, endpoints
(indexed positionally), a directed call graph over endpoint indices, and an
optional authorization extension (roles, data entities, entity accesses).
`validate_model` checks every structural invariant; `canonicalize` lowers a
valid model to the integer encoding consumed by constraint generation and
the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

from .errors import ModelInvariantError

HTTP_METHODS = ("GET", "POST", "PUT", "DELETE", "PATCH")

#: Edge-set size above which the dense adjacency matrix is built lazily
#: instead of eagerly at canonicalization time.
DENSE_ADJACENCY_LIMIT = 512

MODEL_VERSION = 1


class Operation(Enum):
    """Operations an endpoint may perform on a data entity."""

    CREATE = "CREATE"
    READ = "READ"
    UPDATE = "UPDATE"
    DELETE = "DELETE"


#: Fixed evaluation/serialization order for operations.
OPERATION_ORDER = (Operation.CREATE, Operation.READ, Operation.UPDATE, Operation.DELETE)


@dataclass(frozen=True)
class Microservice:
    """A named service owning a set of endpoint indices."""

    name: str
    endpoint_indices: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "endpoint_indices", frozenset(self.endpoint_indices))


@dataclass(frozen=True)
class Endpoint:
    """A single remotely invokable route.

    Identity is the positional ``index``; ``method``/``path`` are reporting
    metadata. ``permitted_roles`` is None exactly when the model has no
    authorization extension.
    """

    index: int
    method: str
    path: str
    parent: int
    permitted_roles: Optional[frozenset[str]] = None

    def __post_init__(self) -> None:
        if self.permitted_roles is not None:
            object.__setattr__(self, "permitted_roles", frozenset(self.permitted_roles))


@dataclass(frozen=True)
class EntityAccess:
    """One endpoint's access to one data entity with a set of operations."""

    endpoint: int
    entity: str
    operations: frozenset[Operation]

    def __post_init__(self) -> None:
        object.__setattr__(self, "operations", frozenset(self.operations))


@dataclass(frozen=True)
class AuthExtension:
    """Authorization data: declared roles, data entities, and accesses."""

    roles: frozenset[str]
    entities: frozenset[str]
    accesses: tuple[EntityAccess, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "roles", frozenset(self.roles))
        object.__setattr__(self, "entities", frozenset(self.entities))
        object.__setattr__(self, "accesses", tuple(self.accesses))


@dataclass(frozen=True)
class SystemModel:
    """A complete system description.

    Invariants (checked by `validate_model`, not the constructor):

    * endpoint list positions equal endpoint ``index`` fields;
    * every endpoint's ``parent`` is a valid microservice index and the
      microservice endpoint sets partition the endpoint range;
    * edges reference valid endpoint indices;
    * microservice names and (method, path) pairs are unique;
    * `permitted_roles` present on every endpoint iff ``auth`` is present.

    Intraservice edges and self-loops are representable on purpose: the
    model layer is descriptive, the constraint layer is normative.
    """

    microservices: tuple[Microservice, ...]
    endpoints: tuple[Endpoint, ...]
    edges: frozenset[tuple[int, int]]
    auth: Optional[AuthExtension] = None
    version: int = MODEL_VERSION

    def __post_init__(self) -> None:
        object.__setattr__(self, "microservices", tuple(self.microservices))
        object.__setattr__(self, "endpoints", tuple(self.endpoints))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))

    @property
    def n_services(self) -> int:
        return len(self.microservices)

    @property
    def n_endpoints(self) -> int:
        return len(self.endpoints)

    def endpoint_label(self, index: int) -> str:
        """Human-readable name for witness rendering, e.g. ``GET /x (E3)``."""
        ep = self.endpoints[index]
        return f"{ep.method} {ep.path} (E{index})"


@dataclass(frozen=True)
class ValidationIssue:
    """A single broken invariant with the offending element."""

    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return "\n".join(str(i) for i in self.issues)


def validate_model(model: SystemModel) -> ValidationReport:
    """Check every structural invariant of *model*.

    Accepts arbitrary decoded model data and never raises; all problems are
    reported as issues. An empty issue list means the model is valid input
    for `canonicalize` and everything downstream.
    """
    issues: list[ValidationIssue] = []

    def bad(code: str, message: str) -> None:
        issues.append(ValidationIssue(code, message))

    n = len(model.microservices)
    m = len(model.endpoints)

    if model.version != MODEL_VERSION:
        bad("version", f"unsupported model version {model.version!r} (expected {MODEL_VERSION})")

    seen_names: set[str] = set()
    for s_idx, svc in enumerate(model.microservices):
        if svc.name in seen_names:
            bad("service-name-duplicate", f"microservice name {svc.name!r} declared twice")
        seen_names.add(svc.name)
        for e_idx in svc.endpoint_indices:
            if not (0 <= e_idx < m):
                bad(
                    "service-endpoint-out-of-range",
                    f"microservice {svc.name!r} lists endpoint {e_idx}, valid range is 0..{m - 1}",
                )

    seen_routes: set[tuple[str, str]] = set()
    for pos, ep in enumerate(model.endpoints):
        if ep.index != pos:
            bad("endpoint-index", f"endpoint at position {pos} carries index {ep.index}")
        if ep.method not in HTTP_METHODS:
            bad("endpoint-method", f"endpoint {pos} has unknown method {ep.method!r}")
        route = (ep.method, ep.path)
        if route in seen_routes:
            bad("route-duplicate", f"duplicate route {ep.method} {ep.path}")
        seen_routes.add(route)
        if not (0 <= ep.parent < n):
            bad("parent-out-of-range", f"endpoint {pos} has parent index {ep.parent}, valid range is 0..{n - 1}")
        elif pos not in model.microservices[ep.parent].endpoint_indices:
            bad(
                "parent-mismatch",
                f"endpoint {pos} names parent {ep.parent} but "
                f"{model.microservices[ep.parent].name!r} does not list it",
            )

    # Parent must be a total function onto the partition of 0..m-1.
    claimed: dict[int, int] = {}
    for s_idx, svc in enumerate(model.microservices):
        for e_idx in svc.endpoint_indices:
            if e_idx in claimed:
                bad(
                    "endpoint-multiply-owned",
                    f"endpoint {e_idx} listed by both microservice {claimed[e_idx]} and {s_idx}",
                )
            claimed[e_idx] = s_idx
    for pos in range(m):
        if pos not in claimed:
            bad("endpoint-unowned", f"endpoint {pos} is not listed by any microservice")

    for i, j in sorted(model.edges):
        if not (0 <= i < m) or not (0 <= j < m):
            bad("edge-out-of-range", f"edge ({i}, {j}) references a nonexistent endpoint")

    has_roles = [ep.permitted_roles is not None for ep in model.endpoints]
    if model.auth is None:
        if any(has_roles):
            first = has_roles.index(True)
            bad(
                "roles-without-auth",
                f"endpoint {first} declares permitted roles but the model has no auth extension",
            )
    else:
        for pos, present in enumerate(has_roles):
            if not present:
                bad("roles-missing", f"auth extension present but endpoint {pos} has no permitted roles")
        declared = model.auth.roles
        for pos, ep in enumerate(model.endpoints):
            for role in sorted(ep.permitted_roles or ()):
                if role not in declared:
                    bad("role-undeclared", f"endpoint {pos} permits undeclared role {role!r}")
        seen_access: set[tuple[int, str]] = set()
        for acc in model.auth.accesses:
            if not (0 <= acc.endpoint < m):
                bad("access-endpoint-out-of-range", f"access references nonexistent endpoint {acc.endpoint}")
            if acc.entity not in model.auth.entities:
                bad("access-entity-undeclared", f"access references undeclared entity {acc.entity!r}")
            if not acc.operations:
                bad("access-empty", f"access ({acc.endpoint}, {acc.entity!r}) declares no operations")
            key = (acc.endpoint, acc.entity)
            if key in seen_access:
                bad("access-duplicate", f"more than one access for endpoint {acc.endpoint} and entity {acc.entity!r}")
            seen_access.add(key)

    return ValidationReport(tuple(issues))


@dataclass(frozen=True)
class CanonicalModel:
    """Solver-facing integer encoding of a valid `SystemModel`.

    ``e_parents[i]`` is the parent microservice of endpoint ``i``; ``edges``
    is the sorted edge list. The dense boolean ``adjacency`` matrix is built
    eagerly for small systems and on demand above `DENSE_ADJACENCY_LIMIT`
    endpoints; `has_edge` always goes through a set and is O(1) either way.
    """

    m: int
    n: int
    e_parents: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    _edge_set: frozenset[tuple[int, int]] = field(repr=False, default=frozenset())

    def __post_init__(self) -> None:
        object.__setattr__(self, "_edge_set", frozenset(self.edges))

    @cached_property
    def adjacency(self) -> np.ndarray:
        matrix = np.zeros((self.m, self.m), dtype=bool)
        for i, j in self.edges:
            matrix[i, j] = True
        return matrix

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self._edge_set

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        """Successor lists per endpoint, each sorted ascending."""
        succ: list[list[int]] = [[] for _ in range(self.m)]
        for i, j in self.edges:
            succ[i].append(j)
        return tuple(tuple(s) for s in succ)

    def service_endpoints(self, service: int) -> tuple[int, ...]:
        return tuple(i for i in range(self.m) if self.e_parents[i] == service)


def canonicalize(model: SystemModel) -> CanonicalModel:
    """Lower a valid model to its canonical integer encoding.

    Deterministic: the same model always yields an identical encoding.
    Raises `ModelInvariantError` if the model fails `validate_model`.
    """
    report = validate_model(model)
    if not report.ok:
        raise ModelInvariantError(report)
    canon = CanonicalModel(
        m=len(model.endpoints),
        n=len(model.microservices),
        e_parents=tuple(ep.parent for ep in model.endpoints),
        edges=tuple(sorted(model.edges)),
    )
    if canon.m <= DENSE_ADJACENCY_LIMIT:
        canon.adjacency  # build the dense view eagerly for small systems
    return canon


def service_degree_sum(canon: CanonicalModel, service: int) -> int:
    """Total inbound plus outbound edge count touching a service's endpoints.

    An edge with both ends inside the service contributes 2 (once outbound,
    once inbound), as does a self-loop.
    """
    if not (0 <= service < canon.n):
        raise IndexError(f"service index {service} out of range 0..{canon.n - 1}")
    total = 0
    parents = canon.e_parents
    for i, j in canon.edges:
        if parents[i] == service:
            total += 1
        if parents[j] == service:
            total += 1
    return total


def all_service_degree_sums(canon: CanonicalModel) -> tuple[int, ...]:
    """Degree sums for every service in one pass over the edge list."""
    sums = [0] * canon.n
    for i, j in canon.edges:
        sums[canon.e_parents[i]] += 1
        sums[canon.e_parents[j]] += 1
    return tuple(sums)


def decode_adjacency(canon: CanonicalModel) -> frozenset[tuple[int, int]]:
    """Recover the edge set from the dense adjacency view."""
    rows, cols = np.nonzero(canon.adjacency)
    return frozenset((int(i), int(j)) for i, j in zip(rows, cols))


def build_model(
    services: Iterable[tuple[str, int]],
    endpoints: Iterable[tuple[str, str, int]],
    edges: Iterable[tuple[int, int]],
    roles: Optional[Iterable[Optional[Iterable[str]]]] = None,
    auth: Optional[AuthExtension] = None,
) -> SystemModel:
    """Assemble a `SystemModel` from plain tuples.

    ``services`` pairs names with endpoint counts in index order;
    ``endpoints`` is (method, path, parent) per endpoint; ``roles``, when
    given, supplies one permitted-role set per endpoint.
    """
    endpoint_list = list(endpoints)
    role_list = list(roles) if roles is not None else [None] * len(endpoint_list)
    svc_objs = []
    cursor = 0
    for name, count in services:
        svc_objs.append(Microservice(name, frozenset(range(cursor, cursor + count))))
        cursor += count
    ep_objs = tuple(
        Endpoint(
            index=idx,
            method=method,
            path=path,
            parent=parent,
            permitted_roles=frozenset(role_list[idx]) if role_list[idx] is not None else None,
        )
        for idx, (method, path, parent) in enumerate(endpoint_list)
    )
    return SystemModel(
        microservices=tuple(svc_objs),
        endpoints=ep_objs,
        edges=frozenset(edges),
        auth=auth,
    )
