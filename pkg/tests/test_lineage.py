import pytest
from gmpy2 import mpq

from ergocount.intervals import GridInterval
from ergocount.level_systems import build_level_k, level_value
from ergocount.lineage import (
    build_path,
    gamma_labels,
    lineage_chain,
    off_labels,
)

# leaf grid exponents of the constant-seed path at scale p=3, one entry
# per mother going down; derived once from the schedule recursion
DEEP_CHAIN = [8203142, 9843784, 10171926, 10237568,
              10250710, 10253352, 10253894, 10254016]


def test_deep_chain_frozen():
    steps, leaf = lineage_chain(5, 8, 11, gamma_labels(8))
    assert [s["J0"] for s in steps] == DEEP_CHAIN
    assert leaf == 10254016
    # all-off path keeps seed 11 at every depth, so the chain is identical
    steps_off, leaf_off = lineage_chain(5, 8, 11, off_labels(8))
    assert [s["J0"] for s in steps_off] == DEEP_CHAIN
    assert leaf_off == leaf
    # windows shrink with depth but always start at the seed
    assert steps[0]["window"] == (11, 1640616)
    assert steps[-1]["window"] == (11, 12)


def test_label_validation():
    with pytest.raises(ValueError):
        lineage_chain(5, 8, 11, gamma_labels(7))  # wrong length
    with pytest.raises(ValueError):
        lineage_chain(5, 2, 11, ("gamma-0", "gamma-1"))
    with pytest.raises(ValueError):
        lineage_chain(5, 2, 11, ("gamma-1", "off"))  # off is not a leaf label
    with pytest.raises(ValueError):
        lineage_chain(5, 2, 11, ("rest", "gamma-1"))  # rest only at the leaf
    with pytest.raises(ValueError):
        build_path(4, 2, 11, gamma_labels(2), J=100)  # below the leaf J0


@pytest.fixture(scope="module")
def eager2():
    return build_level_k(GridInterval(0, 0), 2, 11, 4)


def test_gamma_path_matches_eager(eager2):
    lin = build_path(4, 2, 11, gamma_labels(2), J=eager2.J)
    assert lin.J == eager2.J == 704
    assert [s.J0 for s in lin.steps] == [352, 452]
    assert lin.values == (level_value(1), level_value(1))
    assert lin.sum_value == mpq(198, 100)
    # the witness lands in the doubly-kept part of the eager system
    total, part = eager2.sum_at(lin.x)
    assert total == lin.sum_value
    assert part.path == ("gamma-1", "gamma-1")
    # same grid, same mother: the top piece must agree exactly
    lv, ls = lin.pieces[0]
    ev, es = eager2.mother.f.pieces[0]
    assert lv == ev and ls.measure == es.measure
    assert lin.top_window == (11, 75)
    assert (lin.x * 2 ** 704).denominator == 1


def test_mixed_path_matches_eager(eager2):
    lin = build_path(4, 2, 11, ("gamma-1", "gamma-2"), J=eager2.J)
    assert lin.values == (level_value(2), level_value(1))
    total, part = eager2.sum_at(lin.x)
    assert part.path == ("gamma-1", "gamma-2")
    assert total == lin.sum_value == level_value(1) + level_value(2)


def test_off_path_vanishes(eager2):
    lin = build_path(4, 2, 11, off_labels(2), J=eager2.J)
    assert lin.values == (0, 0)
    assert lin.sum_value == 0
    total, part = eager2.sum_at(lin.x)
    assert total == 0
    assert part.path[0] == "off"
    # bounds survive untrimmed on the off path
    a, b = lin.bounds
    assert a <= lin.x < b


def test_bounds_nest_and_certify(eager2):
    lin = build_path(4, 2, 11, gamma_labels(2), J=eager2.J)
    a, b = lin.bounds
    assert a <= lin.x < b
    # the kept component shows up verbatim as a component of the eager part
    part = next(p for p in eager2.parts if p.path == ("gamma-1", "gamma-1"))
    assert any(fam.lo == a and fam.length == b - a
               for fam in part.sets.families)
