"""Versioned JSON round-trips for geometry, functions, and reports.

Every artifact is wrapped in an envelope {"schema", "kind", "payload"} and
written with sorted keys, so equal objects produce byte-identical files.
Numbers travel as exact strings ("num/den" for rationals, decimal or hex
for integers); floats never appear.  Loading re-runs the construction
invariants: a corrupted stride layout or overlapping supports is rejected
with SchemaError rather than deserialized into a lying object.
"""

from __future__ import annotations

import json

from gmpy2 import mpz

from .intervals import (
    Family,
    FamilyInvariantError,
    GridCompatibilityError,
    GridInterval,
    PeriodicIntervalSet,
)
from .scalars import q_parse, q_str
from .stepfn import StepFunction

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Envelope, version, or invariant failure while loading an artifact."""


def _int_parse(s):
    if isinstance(s, int):
        return mpz(s)
    if isinstance(s, str):
        return mpz(int(s, 0))
    raise SchemaError("integer fields must be strings, got %r" % type(s))


# ---------------------------------------------------------------------------
# geometry codecs
# ---------------------------------------------------------------------------


def family_to_dict(fam: Family) -> dict:
    return {
        "lo": q_str(fam.lo),
        "length": q_str(fam.length),
        "strides": [[q_str(p), str(c)] for p, c in fam.strides],
    }


def family_from_dict(d: dict) -> Family:
    try:
        return Family(q_parse(d["lo"]), q_parse(d["length"]),
                      [(q_parse(p), _int_parse(c)) for p, c in d["strides"]])
    except (FamilyInvariantError, GridCompatibilityError, KeyError,
            TypeError) as e:
        raise SchemaError("corrupted family: %s" % e) from e


def set_to_dict(s: PeriodicIntervalSet) -> dict:
    return {"families": [family_to_dict(f) for f in s.families]}


def set_from_dict(d: dict) -> PeriodicIntervalSet:
    return PeriodicIntervalSet([family_from_dict(f) for f in d["families"]])


def grid_interval_to_dict(g: GridInterval) -> dict:
    return {"j": str(g.j), "R": int(g.R)}


def grid_interval_from_dict(d: dict) -> GridInterval:
    return GridInterval(_int_parse(d["j"]), int(d["R"]))


def stepfn_to_dict(f: StepFunction) -> dict:
    return {"pieces": [[q_str(v), set_to_dict(s)] for v, s in f.pieces]}


def stepfn_from_dict(d: dict, check_disjoint=True) -> StepFunction:
    try:
        f = StepFunction([(q_parse(v), set_from_dict(s))
                          for v, s in d["pieces"]])
    except (ValueError, KeyError, TypeError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError("corrupted step function: %s" % e) from e
    if check_disjoint and not f.verify_disjoint_supports():
        raise SchemaError("step function supports overlap")
    return f


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


def dumps_payload(kind: str, payload) -> str:
    """Canonical envelope text: sorted keys, two-space indent, newline."""
    doc = {"schema": SCHEMA_VERSION, "kind": kind, "payload": payload}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def loads_payload(text: str, expect_kind=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("not valid JSON: %s" % e) from e
    if not isinstance(doc, dict) or set(doc) != {"schema", "kind", "payload"}:
        raise SchemaError("missing envelope fields")
    if doc["schema"] != SCHEMA_VERSION:
        raise SchemaError("schema version %r, this build reads %d"
                          % (doc["schema"], SCHEMA_VERSION))
    if expect_kind is not None and doc["kind"] != expect_kind:
        raise SchemaError("artifact kind %r, expected %r"
                          % (doc["kind"], expect_kind))
    return doc["payload"]


def dump_report(report) -> str:
    """Envelope for a VerificationReport (or its dict image)."""
    payload = report if isinstance(report, dict) else report.to_dict()
    return dumps_payload("report", payload)


def load_report(text: str) -> dict:
    payload = loads_payload(text, expect_kind="report")
    for key in ("system", "passed", "claims"):
        if key not in payload:
            raise SchemaError("report payload missing %r" % key)
    return payload


def dump_step_function(f: StepFunction) -> str:
    return dumps_payload("step-function", stepfn_to_dict(f))


def load_step_function(text: str) -> StepFunction:
    return stepfn_from_dict(loads_payload(text, expect_kind="step-function"))
