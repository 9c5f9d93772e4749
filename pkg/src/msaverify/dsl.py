"""Parser for the line-oriented system-description DSL (``.msa`` files).

Grammar::

    service <name> { endpoint <METHOD> <path> [roles: r1,r2] ... }
    call <METHOD> <path> -> <METHOD> <path>
    entity <name>
    access <METHOD> <path> <ops> <entity>     # ops from creates,reads,updates,deletes

``#`` starts a comment running to end of line. Endpoint indices are assigned
in declaration order. Calls and accesses may reference endpoints declared
later in the file; resolution happens after the whole document is read.
Duplicate ``call`` statements collapse into the single edge they denote.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import DslReferenceError, DslSyntaxError, ModelSemanticError
from .model import (
    HTTP_METHODS,
    AuthExtension,
    Endpoint,
    EntityAccess,
    Microservice,
    Operation,
    SystemModel,
    validate_model,
)

_OP_WORDS = {
    "creates": Operation.CREATE,
    "reads": Operation.READ,
    "updates": Operation.UPDATE,
    "deletes": Operation.DELETE,
}

_PUNCT = {"{", "}", ",", ":"}


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        col = 0
        length = len(line)
        while col < length:
            ch = line[col]
            if ch == "#":
                break
            if ch.isspace():
                col += 1
                continue
            if ch in _PUNCT:
                tokens.append(_Token(ch, line_no, col + 1))
                col += 1
                continue
            start = col
            while col < length and not line[col].isspace() and line[col] not in _PUNCT and line[col] != "#":
                col += 1
            tokens.append(_Token(line[start:col], line_no, start + 1))
    return tokens


@dataclass
class _EndpointDecl:
    method: str
    path: str
    service: int
    roles: Optional[tuple[str, ...]]


@dataclass
class _CallDecl:
    src: tuple[str, str]
    dst: tuple[str, str]
    token: _Token  # position of the source path, for diagnostics


@dataclass
class _AccessDecl:
    route: tuple[str, str]
    operations: frozenset[Operation]
    entity: str
    route_token: _Token
    entity_token: _Token


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.services: list[str] = []
        self.endpoints: list[_EndpointDecl] = []
        self.calls: list[_CallDecl] = []
        self.entities: list[str] = []
        self.accesses: list[_AccessDecl] = []

    def _error(self, message: str, token: Optional[_Token] = None) -> DslSyntaxError:
        if token is None:
            last = self.tokens[-1] if self.tokens else _Token("", 1, 1)
            return DslSyntaxError(f"{message}, found end of input", last.line, last.column + len(last.text))
        return DslSyntaxError(f"{message}, found {token.text!r}", token.line, token.column)

    def _peek(self, offset: int = 0) -> Optional[_Token]:
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else None

    def _next(self, expect: str) -> _Token:
        token = self._peek()
        if token is None:
            raise self._error(f"expected {expect}")
        self.pos += 1
        return token

    def _expect(self, literal: str) -> _Token:
        token = self._next(f"{literal!r}")
        if token.text != literal:
            raise self._error(f"expected {literal!r}", token)
        return token

    def _method(self) -> str:
        token = self._next("an HTTP method")
        if token.text not in HTTP_METHODS:
            raise self._error("expected an HTTP method (GET/POST/PUT/DELETE/PATCH)", token)
        return token.text

    def _path(self) -> _Token:
        token = self._next("a route path")
        if not token.text.startswith("/"):
            raise self._error("expected a route path starting with '/'", token)
        return token

    def _name(self, what: str) -> _Token:
        token = self._next(what)
        if token.text in _PUNCT or token.text == "->":
            raise self._error(f"expected {what}", token)
        return token

    def _name_list(self, what: str) -> list[_Token]:
        names = [self._name(what)]
        while (t := self._peek()) is not None and t.text == ",":
            self.pos += 1
            names.append(self._name(what))
        return names

    def parse(self) -> None:
        while (token := self._peek()) is not None:
            if token.text == "service":
                self.pos += 1
                self._service()
            elif token.text == "call":
                self.pos += 1
                self._call()
            elif token.text == "entity":
                self.pos += 1
                self.entities.append(self._name("an entity name").text)
            elif token.text == "access":
                self.pos += 1
                self._access()
            else:
                raise self._error("expected 'service', 'call', 'entity' or 'access'", token)

    def _service(self) -> None:
        name = self._name("a service name").text
        service_index = len(self.services)
        self.services.append(name)
        self._expect("{")
        while True:
            token = self._peek()
            if token is None:
                raise self._error("expected 'endpoint' or '}'")
            if token.text == "}":
                self.pos += 1
                return
            if token.text != "endpoint":
                raise self._error("expected 'endpoint' or '}'", token)
            self.pos += 1
            method = self._method()
            path = self._path().text
            roles: Optional[tuple[str, ...]] = None
            nxt, after = self._peek(), self._peek(1)
            if nxt is not None and nxt.text == "roles" and after is not None and after.text == ":":
                self.pos += 2
                roles = tuple(t.text for t in self._name_list("a role name"))
            self.endpoints.append(_EndpointDecl(method, path, service_index, roles))

    def _call(self) -> None:
        src_method = self._method()
        src_path = self._path()
        self._expect("->")
        dst_method = self._method()
        dst_path = self._path()
        self.calls.append(
            _CallDecl(
                src=(src_method, src_path.text),
                dst=(dst_method, dst_path.text),
                token=src_path,
            )
        )

    def _access(self) -> None:
        method = self._method()
        path = self._path()
        ops = []
        for token in self._name_list("an operation (creates/reads/updates/deletes)"):
            op = _OP_WORDS.get(token.text)
            if op is None:
                raise self._error("expected an operation (creates/reads/updates/deletes)", token)
            ops.append(op)
        entity = self._name("an entity name")
        self.accesses.append(
            _AccessDecl(
                route=(method, path.text),
                operations=frozenset(ops),
                entity=entity.text,
                route_token=path,
                entity_token=entity,
            )
        )


def parse_dsl(data: bytes | str) -> SystemModel:
    """Parse DSL text into a validated `SystemModel`.

    Raises `DslSyntaxError` / `DslReferenceError` with 1-based line and
    column positions, or `ModelSemanticError` if the declared system
    violates a model invariant (duplicate route, missing roles, ...).
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    parser = _Parser(_tokenize(data))
    parser.parse()

    routes: dict[tuple[str, str], int] = {}
    for idx, decl in enumerate(parser.endpoints):
        routes.setdefault((decl.method, decl.path), idx)

    def resolve(route: tuple[str, str], token: _Token) -> int:
        index = routes.get(route)
        if index is None:
            raise DslReferenceError(
                f"call or access references undeclared endpoint {route[0]} {route[1]}",
                token.line,
                token.column,
            )
        return index

    edges = set()
    for call in parser.calls:
        edges.add((resolve(call.src, call.token), resolve(call.dst, call.token)))

    entity_names = set(parser.entities)
    auth_present = (
        bool(entity_names) or bool(parser.accesses) or any(d.roles is not None for d in parser.endpoints)
    )

    auth = None
    if auth_present:
        accesses = []
        for acc in parser.accesses:
            endpoint = resolve(acc.route, acc.route_token)
            if acc.entity not in entity_names:
                raise DslReferenceError(
                    f"access references undeclared entity {acc.entity!r}",
                    acc.entity_token.line,
                    acc.entity_token.column,
                )
            accesses.append(EntityAccess(endpoint=endpoint, entity=acc.entity, operations=acc.operations))
        all_roles = frozenset(r for d in parser.endpoints if d.roles for r in d.roles)
        auth = AuthExtension(roles=all_roles, entities=frozenset(entity_names), accesses=tuple(accesses))

    per_service: list[set[int]] = [set() for _ in parser.services]
    for idx, decl in enumerate(parser.endpoints):
        per_service[decl.service].add(idx)

    model = SystemModel(
        microservices=tuple(
            Microservice(name, frozenset(eps)) for name, eps in zip(parser.services, per_service)
        ),
        endpoints=tuple(
            Endpoint(
                index=idx,
                method=decl.method,
                path=decl.path,
                parent=decl.service,
                permitted_roles=frozenset(decl.roles) if decl.roles is not None else None,
            )
            for idx, decl in enumerate(parser.endpoints)
        ),
        edges=frozenset(edges),
        auth=auth,
    )
    report = validate_model(model)
    if not report.ok:
        raise ModelSemanticError(report)
    return model
