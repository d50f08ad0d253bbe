import json

import pytest
from gmpy2 import mpq

from ergocount.base_system import BaseParams, LifeFunction, build_base
from ergocount.intervals import Family, GridInterval, PeriodicIntervalSet
from ergocount.maximal import verify_maximal
from ergocount.scalars import q_parse
from ergocount.serialize import (
    SCHEMA_VERSION,
    SchemaError,
    dump_report,
    dump_step_function,
    dumps_payload,
    family_from_dict,
    family_to_dict,
    grid_interval_from_dict,
    grid_interval_to_dict,
    load_report,
    load_step_function,
    loads_payload,
    set_from_dict,
    set_to_dict,
)
from ergocount.stepfn import StepFunction

Q = mpq


@pytest.fixture(scope="module")
def base_sys():
    return build_base(BaseParams(M=4, nu=LifeFunction.affine(3), N1=11,
                                 S=0, I=GridInterval(0, 0)))


def test_stepfn_roundtrip_bit_exact(base_sys):
    text = dump_step_function(base_sys.f)
    f2 = load_step_function(text)
    assert f2 == base_sys.f
    assert dump_step_function(f2) == text  # canonical form is a fixpoint


def test_family_and_set_roundtrip():
    fam = Family(Q(1, 3), Q(1, 48), strides=((Q(1, 4), 3), (Q(1, 16), 2)))
    assert family_from_dict(family_to_dict(fam)) == fam
    s = PeriodicIntervalSet([fam, fam.translate(Q(3, 4))])
    assert set_from_dict(set_to_dict(s)) == s
    g = GridInterval(5, 3)
    assert grid_interval_from_dict(grid_interval_to_dict(g)) == g


def test_corrupted_stride_nesting_rejected():
    d = family_to_dict(Family(0, Q(1, 16), strides=((Q(1, 4), 3),)))
    d["length"] = "1/2"  # extent would overrun the stride period
    with pytest.raises(SchemaError):
        family_from_dict(d)


def test_overlapping_supports_rejected(base_sys):
    doc = json.loads(dump_step_function(base_sys.f))
    pieces = doc["payload"]["pieces"]
    pieces.append(["1/2", pieces[0][1]])  # reuse a support for a new value
    with pytest.raises(SchemaError):
        load_step_function(json.dumps(doc))


def test_envelope_validation():
    text = dumps_payload("report", {"x": "1"})
    doc = json.loads(text)
    doc["schema"] = SCHEMA_VERSION + 1
    with pytest.raises(SchemaError):
        loads_payload(json.dumps(doc))
    with pytest.raises(SchemaError):
        loads_payload(text, expect_kind="step-function")
    with pytest.raises(SchemaError):
        loads_payload("{not json")
    with pytest.raises(SchemaError):
        loads_payload(json.dumps({"schema": SCHEMA_VERSION}))
    with pytest.raises(SchemaError):
        load_report(dumps_payload("report", {"system": "x"}))


def test_q_parse_accepts_hex():
    assert q_parse("0x1a/0x4") == Q(13, 2)
    assert q_parse("-0x10/0x3") == Q(-16, 3)
    assert q_parse("0xff") == 255
    assert q_parse("355/113") == Q(355, 113)
    with pytest.raises(TypeError):
        q_parse(355)


def test_report_roundtrip_structurally_exact():
    rep = verify_maximal(n_sets=3, n_points=3, n_seqs=5, grid_sets=1,
                         grid_exp=6)
    assert load_report(dump_report(rep)) == rep.to_dict()
    # same object, same bytes
    assert dump_report(rep) == dump_report(rep.to_dict())


def test_zero_function_roundtrip():
    f = StepFunction.zero()
    assert load_step_function(dump_step_function(f)) == f
