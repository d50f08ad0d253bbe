"""Tower systems: frozen exponents for the two-variable build, exact
independence, and witness-window nesting.

The two-variable system on [0,1) with M=4 and startup 11 is the workhorse
here; its grid data were computed by hand from the schedule recurrences
before the implementation existed and are asserted verbatim.
"""

import pytest
from gmpy2 import mpq, mpz

from ergocount.base_system import SamplingPolicy
from ergocount.intervals import (
    CapacityError,
    GridInterval,
    measure_intersection,
)
from ergocount.level_systems import (
    DistributedRV,
    LifeTower,
    build_level1,
    build_level_k,
    estimate_level_k,
    exit_exponent,
    level_mass,
    level_value,
    min_system_J,
    run_level_negative_controls,
    verify_level_k,
)
from ergocount.scalars import ipow2, pow2

UNIT = GridInterval(0, 0)
FAST = SamplingPolicy(endpoint_cap=1, random_count=1, seed=7)


@pytest.fixture(scope="module")
def lvl2():
    return build_level_k(UNIT, 2, 11, 4)


def test_life_tower_frozen():
    assert LifeTower.build(4, 3).c == (1, 64, 316)
    assert LifeTower.build(5, 8).c == (
        1, 85, 505, 2605, 13105, 65605, 328105, 1640605)
    # closed form vs composition, spelled out once for k = 2, M = 4:
    # nu_2(N) should be nu_1 applied at the end of the nu_1 schedule from N
    tower = LifeTower.build(4, 2)
    nu1, nu2 = tower.nu(1), tower.nu(2)
    for n in (11, 19, 30):
        end = n + 3 * 21  # schedule steps add 20 + c_1
        assert nu2(n) == nu1(end) == n + 64


def test_life_tower_rejects_small_M():
    with pytest.raises(ValueError):
        LifeTower.build(3, 2)


def test_canonical_law_frozen():
    rv = DistributedRV.canonical(4, 1)
    assert dict(rv.masses) == {
        mpq(99, 100): mpq(99, 1600),
        mpq(99, 200): mpq(99, 800),
        mpq(99, 400): mpq(99, 400),
        mpq(99, 800): mpq(99, 200),
    }
    assert rv.zero_mass == mpq(23, 320)
    assert rv.integral == mpq(9801, 40000)
    # second moment matches (99/100)^3 * 2^(1-M) * (1 - 2^-M)
    assert rv.second_moment == mpq(99, 100) ** 3 * mpq(15, 128)
    assert rv.mass_of(0) == mpq(23, 320)
    assert rv.mass_of(mpq(99, 400)) == mpq(99, 400)
    assert rv.mass_of(5) == 0


def test_level1_structure():
    sys = build_level1(UNIT, 11, 4)
    assert (sys.k, sys.J0, sys.J, sys.K_S, sys.K_e) == (1, 100, 100, 11, 75)
    assert len(sys.parts) == 5
    assert sys.X_marginal(1).is_exactly_distributed()
    assert sum(p.sets.measure for p in sys.parts) == 1
    # each trimmed set sits inside its retention set, with the exact mass
    for l in range(1, 5):
        part = sys.parts[l - 1]
        assert part.values == (level_value(l),)
        gamma = sys.mother.Gamma_l(l)
        assert part.sets.measure == level_mass(4, l)
        assert measure_intersection(part.sets, gamma) == part.sets.measure
        assert part.witness == (sys.mother.schedule[l - 1],
                                sys.mother.schedule[l - 1] + 1)
    assert sys.parts[-1].witness == (11, 75)


def test_level1_verify():
    rep = verify_level_k(build_level1(UNIT, 11, 4), FAST)
    assert rep.passed, rep.failures()


def test_level2_frozen_exponents(lvl2):
    assert (lvl2.J0, lvl2.J, lvl2.K_S, lvl2.K_e) == (352, 704, 11, 327)
    assert lvl2.mother.schedule == (11, 95, 179, 263)
    assert lvl2.mother.h == ipow2(366)
    labels = [(s.label, s.seed, s.system.J0, s.system.J)
              for s in lvl2.children]
    assert labels == [
        ("gamma-1", 11, 452, 704),
        ("gamma-2", 95, 536, 704),
        ("gamma-3", 179, 620, 704),
        ("gamma-4", 263, 704, 704),
        ("off", 11, 452, 704),
    ]
    # the two seed-11 slots share one child object
    assert lvl2.children[0].system is lvl2.children[4].system
    values = [v for v, _ in lvl2.f.pieces]
    assert values == [ipow2(e) for e in (366, 266, 182, 98, 14)]
    assert [len(s.families) for _, s in lvl2.f.pieces] == [1, 5, 1, 1, 1]


def test_level2_partition_and_integral(lvl2):
    assert len(lvl2.parts) == 45
    assert lvl2.f.integral == mpq(1, 4)
    assert sum(p.sets.measure for p in lvl2.parts) == 1
    atoms = lvl2.atom_measures()
    assert len(atoms) == 25


def test_level2_exact_independence(lvl2):
    atoms = lvl2.atom_measures()
    v = level_value
    m = lambda l: level_mass(4, l)
    assert atoms[(v(1), v(4))] == m(1) * m(4)
    assert atoms[(v(3), v(1))] == m(3) * m(1)
    assert atoms[(mpq(0), mpq(0))] == mpq(23, 320) ** 2
    assert atoms[(mpq(0), v(2))] == mpq(23, 320) * m(2)
    for h in (1, 2):
        assert lvl2.X_marginal(h).is_exactly_distributed()


def test_level2_witness_nesting(lvl2):
    mother_window = {l: lvl2.mother.window_exponents(l) for l in range(1, 5)}
    assert mother_window == {1: (11, 75), 2: (95, 159),
                             3: (179, 243), 4: (263, 327)}
    for part in lvl2.parts:
        lo, hi = part.witness
        assert 11 <= lo <= hi <= 327
        if part.values[1] != 0:
            l = [l for l in range(1, 5) if level_value(l) == part.values[1]][0]
            wlo, whi = mother_window[l]
            assert wlo <= lo <= hi <= whi
    # spot check: deepest nested part
    deep = [p for p in lvl2.parts
            if p.path == ("gamma-4", "gamma-1")][0]
    assert deep.values == (level_value(1), level_value(4))
    assert deep.witness == (263, 264)


def test_level2_verify(lvl2):
    rep = verify_level_k(lvl2, FAST)
    assert rep.passed, rep.failures()
    assert rep.count("exact") >= 9
    assert rep.count("sampled") >= 2


def test_level2_negative_control(lvl2):
    rep = run_level_negative_controls(lvl2)
    assert rep.passed, rep.failures()


def test_level3_structure():
    sys = build_level_k(UNIT, 3, 11, 4)
    assert (sys.J0, sys.J) == (1360, 4080)
    assert sys.J == min_system_J(4, 3, 11, 0)
    assert len(sys.parts) == 405
    assert sys.f.integral == mpq(3, 8)
    assert sum(p.sets.measure for p in sys.parts) == 1
    for h in (1, 2, 3):
        assert sys.X_marginal(h).is_exactly_distributed()
    # triple product rule, one spot per shape of tuple
    atoms = sys.atom_measures()
    v, m = level_value, lambda l: level_mass(4, l)
    z = mpq(23, 320)
    assert atoms[(v(2), v(3), v(4))] == m(2) * m(3) * m(4)
    assert atoms[(mpq(0), v(1), mpq(0))] == z * m(1) * z
    assert atoms[(mpq(0), mpq(0), mpq(0))] == z ** 3


def test_estimates_and_caps():
    est = estimate_level_k(5, 8, 11)
    assert est["exit_exponent"] == 8203116
    assert est["grid_exponent"] == 8 * 8203142
    assert est["atom_parts"] == 6 * 11 ** 7
    assert est["atom_tuples"] == 6 ** 8
    assert exit_exponent(5, 8, 11) == 8203116
    with pytest.raises(CapacityError):
        build_level_k(UNIT, 4, 11, 4)
    with pytest.raises(ValueError):
        build_level_k(UNIT, 16, 11, 4)
    with pytest.raises(ValueError):
        build_level_k(UNIT, 0, 11, 4)
