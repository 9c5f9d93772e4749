"""Portable model file format: strict JSON, schema version 1.

The canonical form (fixed key order, index-ordered lists, lexicographically
sorted edges, sorted role/entity/operation lists, 2-space indent, trailing
newline) is documented in docs/schema.md. Parsing is strict: unknown fields
anywhere and any version other than 1 are rejected so that schema drift can
never silently corrupt a verification run.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from .errors import ModelSchemaError, ModelSemanticError, ModelSyntaxError
from .model import (
    HTTP_METHODS,
    MODEL_VERSION,
    OPERATION_ORDER,
    AuthExtension,
    Endpoint,
    EntityAccess,
    Microservice,
    Operation,
    SystemModel,
    validate_model,
)

_TOP_KEYS = {"version", "microservices", "endpoints", "edges", "auth"}
_SERVICE_KEYS = {"name", "endpoints"}
_ENDPOINT_KEYS = {"method", "path", "parent", "roles"}
_AUTH_KEYS = {"roles", "entities", "accesses"}
_ACCESS_KEYS = {"endpoint", "entity", "operations"}


def _require(obj: dict, key: str, kind: type, where: str) -> Any:
    if key not in obj:
        raise ModelSchemaError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is int and isinstance(value, bool):
        raise ModelSchemaError(f"{where}: field {key!r} must be {kind.__name__}, got bool")
    if not isinstance(value, kind):
        raise ModelSchemaError(f"{where}: field {key!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ModelSchemaError(f"{where}: unknown field {unknown[0]!r}")


def _string_list(value: Any, where: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ModelSchemaError(f"{where}: expected a list of strings")
    return value


def parse_model_file(data: bytes | str) -> SystemModel:
    """Decode and validate a model document.

    Raises `ModelSyntaxError` (position-annotated) for malformed JSON,
    `ModelSchemaError` for field/type/version mismatches, and
    `ModelSemanticError` when the decoded model fails validation.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelSyntaxError(f"not valid UTF-8: {exc}") from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from exc

    if not isinstance(doc, dict):
        raise ModelSchemaError("top level must be an object")
    _reject_unknown(doc, _TOP_KEYS, "top level")
    version = _require(doc, "version", int, "top level")
    if version != MODEL_VERSION:
        raise ModelSchemaError(f"unsupported version {version} (expected {MODEL_VERSION})")

    raw_services = _require(doc, "microservices", list, "top level")
    services = []
    for s_idx, svc in enumerate(raw_services):
        where = f"microservices[{s_idx}]"
        if not isinstance(svc, dict):
            raise ModelSchemaError(f"{where}: expected an object")
        _reject_unknown(svc, _SERVICE_KEYS, where)
        name = _require(svc, "name", str, where)
        eps = _require(svc, "endpoints", list, where)
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in eps):
            raise ModelSchemaError(f"{where}: endpoints must be a list of integers")
        services.append(Microservice(name=name, endpoint_indices=frozenset(eps)))

    raw_endpoints = _require(doc, "endpoints", list, "top level")
    endpoints = []
    for e_idx, ep in enumerate(raw_endpoints):
        where = f"endpoints[{e_idx}]"
        if not isinstance(ep, dict):
            raise ModelSchemaError(f"{where}: expected an object")
        _reject_unknown(ep, _ENDPOINT_KEYS, where)
        method = _require(ep, "method", str, where)
        if method not in HTTP_METHODS:
            raise ModelSchemaError(f"{where}: unknown method {method!r}")
        path = _require(ep, "path", str, where)
        parent = _require(ep, "parent", int, where)
        roles: Optional[frozenset[str]] = None
        if "roles" in ep:
            roles = frozenset(_string_list(ep["roles"], f"{where}.roles"))
        endpoints.append(Endpoint(index=e_idx, method=method, path=path, parent=parent, permitted_roles=roles))

    raw_edges = _require(doc, "edges", list, "top level")
    edges = []
    for k, pair in enumerate(raw_edges):
        where = f"edges[{k}]"
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in pair)
        ):
            raise ModelSchemaError(f"{where}: expected a pair of integers")
        edges.append((pair[0], pair[1]))
    if len(set(edges)) != len(edges):
        dup = next(e for e in edges if edges.count(e) > 1)
        raise ModelSchemaError(f"edges: duplicate edge {list(dup)}")

    auth = None
    if "auth" in doc:
        raw_auth = doc["auth"]
        if not isinstance(raw_auth, dict):
            raise ModelSchemaError("auth: expected an object")
        _reject_unknown(raw_auth, _AUTH_KEYS, "auth")
        role_names = _string_list(_require(raw_auth, "roles", list, "auth"), "auth.roles")
        entity_names = _string_list(_require(raw_auth, "entities", list, "auth"), "auth.entities")
        raw_accesses = _require(raw_auth, "accesses", list, "auth")
        accesses = []
        for a_idx, acc in enumerate(raw_accesses):
            where = f"auth.accesses[{a_idx}]"
            if not isinstance(acc, dict):
                raise ModelSchemaError(f"{where}: expected an object")
            _reject_unknown(acc, _ACCESS_KEYS, where)
            endpoint = _require(acc, "endpoint", int, where)
            entity = _require(acc, "entity", str, where)
            ops = []
            for op_name in _string_list(_require(acc, "operations", list, where), f"{where}.operations"):
                try:
                    ops.append(Operation(op_name))
                except ValueError:
                    raise ModelSchemaError(f"{where}: unknown operation {op_name!r}") from None
            accesses.append(EntityAccess(endpoint=endpoint, entity=entity, operations=frozenset(ops)))
        auth = AuthExtension(
            roles=frozenset(role_names),
            entities=frozenset(entity_names),
            accesses=tuple(accesses),
        )

    model = SystemModel(
        microservices=tuple(services),
        endpoints=tuple(endpoints),
        edges=frozenset(edges),
        auth=auth,
        version=version,
    )
    report = validate_model(model)
    if not report.ok:
        raise ModelSemanticError(report)
    return model


def serialize_model(model: SystemModel) -> bytes:
    """Emit the canonical UTF-8 document for a valid model.

    Canonical means byte-identical output for structurally equal models;
    `parse_model_file` of the result reproduces the model exactly.
    """
    report = validate_model(model)
    if not report.ok:
        raise ModelSemanticError(report)

    doc: dict[str, Any] = {"version": model.version}
    doc["microservices"] = [
        {"name": svc.name, "endpoints": sorted(svc.endpoint_indices)} for svc in model.microservices
    ]
    endpoint_docs = []
    for ep in model.endpoints:
        entry: dict[str, Any] = {"method": ep.method, "path": ep.path, "parent": ep.parent}
        if ep.permitted_roles is not None:
            entry["roles"] = sorted(ep.permitted_roles)
        endpoint_docs.append(entry)
    doc["endpoints"] = endpoint_docs
    doc["edges"] = [list(e) for e in sorted(model.edges)]
    if model.auth is not None:
        doc["auth"] = {
            "roles": sorted(model.auth.roles),
            "entities": sorted(model.auth.entities),
            "accesses": [
                {
                    "endpoint": acc.endpoint,
                    "entity": acc.entity,
                    "operations": [op.value for op in OPERATION_ORDER if op in acc.operations],
                }
                for acc in sorted(model.auth.accesses, key=lambda a: (a.endpoint, a.entity))
            ],
        }
    return (json.dumps(doc, indent=2, ensure_ascii=True) + "\n").encode("utf-8")
