"""Network and evidence document formats.

Both documents are UTF-8 JSON. A network document holds ``variables``
(ordered; declaration order fixes the node ids) and ``cpts`` (one per
variable, rows over parent configurations with the last parent varying
fastest), plus an optional ``comment``. An evidence document is a flat
``{node-name: state-name}`` object. Unknown fields are rejected. The
full grammar lives in ``docs/file-format.md``.
"""

from __future__ import annotations

import json

from .network import BeliefNetwork, Cpt, Evidence, NetworkError, Variable


class FormatError(NetworkError):
    """Document does not conform to the file format."""


_NETWORK_FIELDS = {"variables", "cpts", "comment"}
_VARIABLE_FIELDS = {"name", "states"}
_CPT_FIELDS = {"node", "parents", "rows"}


def _parse_json(text: str, what: str) -> object:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"{what}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise FormatError(f"{where}: unknown field(s) {sorted(unknown)}")


def load_network(text: str) -> BeliefNetwork:
    """Parse and fully validate a network document."""
    doc = _parse_json(text, "network document")
    if not isinstance(doc, dict):
        raise FormatError("network document: top level must be an object")
    _reject_unknown(doc, _NETWORK_FIELDS, "network document")
    for key in ("variables", "cpts"):
        if key not in doc:
            raise FormatError(f"network document: missing field {key!r}")
        if not isinstance(doc[key], list):
            raise FormatError(f"network document: {key!r} must be a list")

    variables: list[Variable] = []
    for i, entry in enumerate(doc["variables"]):
        if not isinstance(entry, dict):
            raise FormatError(f"variables[{i}]: must be an object")
        _reject_unknown(entry, _VARIABLE_FIELDS, f"variables[{i}]")
        try:
            name = entry["name"]
            states = entry["states"]
        except KeyError as exc:
            raise FormatError(f"variables[{i}]: missing field {exc.args[0]!r}") from None
        if not isinstance(name, str) or not name:
            raise FormatError(f"variables[{i}]: name must be a non-empty string")
        if (
            not isinstance(states, list)
            or len(states) < 2
            or not all(isinstance(s, str) for s in states)
        ):
            raise FormatError(f"variables[{i}] ({name!r}): states must list >= 2 names")
        if len(set(states)) != len(states):
            raise FormatError(f"variables[{i}] ({name!r}): duplicate state names")
        variables.append(Variable(i, name, tuple(states)))

    id_of = {v.name: v.id for v in variables}
    if len(id_of) != len(variables):
        raise FormatError("duplicate variable names")

    cpts: list[Cpt] = []
    for i, entry in enumerate(doc["cpts"]):
        if not isinstance(entry, dict):
            raise FormatError(f"cpts[{i}]: must be an object")
        _reject_unknown(entry, _CPT_FIELDS, f"cpts[{i}]")
        try:
            node = entry["node"]
            parents = entry["parents"]
            rows = entry["rows"]
        except KeyError as exc:
            raise FormatError(f"cpts[{i}]: missing field {exc.args[0]!r}") from None
        if node not in id_of:
            raise FormatError(f"cpts[{i}]: unknown node {node!r}")
        if not isinstance(parents, list) or not all(p in id_of for p in parents):
            bad = [p for p in parents if p not in id_of] if isinstance(parents, list) else parents
            raise FormatError(f"cpts[{i}] ({node!r}): unknown parent(s) {bad!r}")
        if not isinstance(rows, list) or not rows or not all(
            isinstance(r, list) and all(isinstance(p, (int, float)) for p in r)
            for r in rows
        ):
            raise FormatError(f"cpts[{i}] ({node!r}): rows must be lists of numbers")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise FormatError(f"cpts[{i}] ({node!r}): ragged rows")
        cpts.append(
            Cpt(
                owner=id_of[node],
                parents=tuple(id_of[p] for p in parents),
                table=[[float(p) for p in r] for r in rows],
            )
        )

    return BeliefNetwork(variables, cpts)


def dump_network(net: BeliefNetwork, comment: str | None = None) -> str:
    """Canonical document for ``net``; ``load_network`` round-trips it."""
    doc: dict = {}
    if comment is not None:
        doc["comment"] = comment
    doc["variables"] = [
        {"name": v.name, "states": list(v.state_names)} for v in net.variables
    ]
    doc["cpts"] = [
        {
            "node": net.variables[c.owner].name,
            "parents": [net.variables[p].name for p in c.parents],
            "rows": [[float(p) for p in row] for row in c.table],
        }
        for c in net.cpts
    ]
    return json.dumps(doc, indent=2) + "\n"


def load_evidence(text: str, net: BeliefNetwork) -> Evidence:
    """Parse an evidence document against ``net``."""
    doc = _parse_json(text, "evidence document")
    if not isinstance(doc, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in doc.items()
    ):
        raise FormatError(
            "evidence document: must be a {node-name: state-name} object"
        )
    return Evidence.from_names(net, doc)


def dump_evidence(ev: Evidence, net: BeliefNetwork) -> str:
    named = {
        net.variables[j].name: net.variables[j].state_names[s]
        for j, s in sorted(ev.assignments.items())
    }
    return json.dumps(named, indent=2) + "\n"
