"""Structured verification reports.

Every check a verifier runs becomes a Claim: an anchor from a controlled
vocabulary (so downstream tooling can rely on spelling), a unique name, a
kind ("exact" for arithmetic identities, "sampled" for spot-checked
pointwise statements), a pass flag, and a JSON-able detail dict.  Reports
aggregate claims and serialize deterministically: no timestamps, no
environment captures, rationals as "num/den" strings, integers as decimal
strings.
"""

from __future__ import annotations

from gmpy2 import mpq, mpz

from .scalars import q_str

ANCHORS = frozenset({
    # construction geometry
    "measure-identity",
    "partition",
    "gamma-bound",
    "integral-f",
    "support-geometry",
    "support-congruence",
    "grid-exactness",
    "schedule-min-J0",
    "j-independence",
    "equidistribution",
    "window-density",
    # counting certificates
    "counting-lower-bound",
    "witness-window",
    "oracle-agreement",
    # randomness layer
    "distribution-match",
    "independence-product",
    "moment-u",
    "moment-v",
    "chebyshev-tail",
    "tail-measure",
    # blow-up assembly
    "blowup-margin",
    "chain-step",
    "smallness-threshold",
    "m-p-formula",
    # continuous analog
    "analog-identity",
    "weak-type-grid",
    # harness
    "negative-control",
    "determinism",
})

KINDS = ("exact", "sampled")


HEX_FALLBACK_BITS = 1 << 13


def _int_str(n):
    # decimal for anything a human might read; hex above ~2400 digits,
    # where decimal conversion itself is the bottleneck
    n = int(n)
    if abs(n).bit_length() > HEX_FALLBACK_BITS:
        return hex(n)
    return str(n)


def jsonable(v):
    """Exact, deterministic JSON image: rationals 'num/den', integers as
    decimal strings (hex beyond 2^13 bits), containers recursively.
    Floats are refused."""
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, float):
        raise TypeError("floats are banned from reports")
    if isinstance(v, mpq):
        if (v.numerator.bit_length() > HEX_FALLBACK_BITS
                or v.denominator.bit_length() > HEX_FALLBACK_BITS):
            return _int_str(v.numerator) + "/" + _int_str(v.denominator)
        return q_str(v)
    if isinstance(v, (int, mpz)):
        return _int_str(v)
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    raise TypeError("cannot serialize %r" % type(v))


class Claim:

    __slots__ = ("anchor", "name", "kind", "passed", "detail")

    def __init__(self, anchor, name, kind, passed, detail=None):
        if anchor not in ANCHORS:
            raise ValueError("unknown claim anchor %r" % anchor)
        if kind not in KINDS:
            raise ValueError("claim kind must be one of %s" % (KINDS,))
        self.anchor = anchor
        self.name = name
        self.kind = kind
        self.passed = bool(passed)
        self.detail = jsonable(detail or {})

    def to_dict(self):
        return {
            "anchor": self.anchor,
            "name": self.name,
            "kind": self.kind,
            "passed": self.passed,
            "detail": self.detail,
        }

    def __repr__(self):
        return "Claim(%s %s %s %s)" % (
            self.anchor, self.name, self.kind,
            "pass" if self.passed else "FAIL")


class VerificationReport:

    def __init__(self, system, params=None):
        self.system = system
        self.params = jsonable(params or {})
        self.claims = []

    def add(self, anchor, name, kind, passed, **detail):
        claim = Claim(anchor, name, kind, passed, detail)
        self.claims.append(claim)
        return claim

    def extend(self, other: "VerificationReport"):
        self.claims.extend(other.claims)

    @property
    def passed(self):
        return all(c.passed for c in self.claims)

    def failures(self):
        return [c for c in self.claims if not c.passed]

    def count(self, kind=None):
        return sum(1 for c in self.claims if kind is None or c.kind == kind)

    def to_dict(self):
        return {
            "system": self.system,
            "params": self.params,
            "passed": self.passed,
            "n_claims": len(self.claims),
            "n_exact": self.count("exact"),
            "n_sampled": self.count("sampled"),
            "claims": [c.to_dict() for c in self.claims],
        }

    def summary_lines(self):
        lines = ["%s: %s (%d exact, %d sampled claims)" % (
            self.system,
            "PASS" if self.passed else "FAIL",
            self.count("exact"), self.count("sampled"))]
        for c in self.claims:
            if not c.passed:
                lines.append("  FAIL %s/%s [%s]" % (c.anchor, c.name, c.kind))
        return lines
