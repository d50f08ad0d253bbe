import pytest
from gmpy2 import mpq

from ergocount.intervals import CapacityError, GridInterval
from ergocount.level_systems import (
    build_level_k,
    exit_exponent,
    min_system_J,
)
from ergocount.lineage import gamma_labels, lineage_chain
from ergocount.pblock import (
    build_pblock,
    chebyshev_bound,
    estimate_pblock,
    exact_stats,
    exit_exponent_closed,
    honest_grid_exponent,
    least_honest_p,
    lineage_grid_exponent,
    m_p,
    smallness_holds,
    sum_distribution,
    tail_measure,
    threshold_bracket,
    verify_pblock,
    witness_records,
)
from ergocount.scalars import ZERO, ONE, C_099, pow2

Q = mpq


def test_m_p_frozen():
    assert {p: m_p(p) for p in (3, 4, 5, 6, 8, 16)} == \
        {3: 5, 4: 8, 5: 9, 6: 11, 8: 14, 16: 24}
    for p in (3, 4, 5, 6, 8, 16, 100):
        assert m_p(p) > p
    for bad in (2, 1, 0, -1):
        with pytest.raises(ValueError):
            m_p(bad)


def test_exact_stats_closed_forms():
    for M in range(1, 9):
        u, v0, v = exact_stats(M)
        assert u == M * C_099 * C_099 * pow2(-M)
        assert v == v0 - u * u
        assert 0 < v <= v0
    assert exact_stats(1)[0] == Q(9801, 20000)
    assert exact_stats(5)[0] == Q(9801, 64000)
    assert exact_stats(5)[1] == Q(30079269, 512000000)


def test_closed_forms_match_recursion():
    for M, k in ((4, 1), (4, 2), (4, 3), (5, 3), (6, 2)):
        K_S = max(11, k)
        assert exit_exponent_closed(M, k, K_S) == exit_exponent(M, k, K_S)
        assert honest_grid_exponent(M, k, K_S) == min_system_J(M, k, K_S, 0)
        _, leaf = lineage_chain(M, k, K_S, gamma_labels(k))
        assert lineage_grid_exponent(M, k, K_S) == leaf


def test_scale3_exponents_frozen():
    # M=5, k=8, K_S=11: the numbers the relaxed tier lives and dies by
    assert exit_exponent_closed(5, 8, 11) == 8203116
    assert honest_grid_exponent(5, 8, 11) == 65625136
    assert lineage_grid_exponent(5, 8, 11) == 10254016


def test_sum_distribution_against_geometry():
    # the convolved law must agree with the measure-weighted sums read off
    # the eagerly built geometry, which knows nothing about independence
    for M, k in ((4, 2), (5, 2), (4, 3)):
        sys = build_level_k(GridInterval(0, 0), k, 11, M)
        geo = {}
        for part in sys.parts:
            s = sum(part.values, ZERO)
            geo[s] = geo.get(s, ZERO) + part.sets.measure
        conv = sum_distribution(M, k)
        assert geo == conv
        assert sum(conv.values(), ZERO) == ONE
        # the lattice span bounds the state count; gaps are unreachable sums
        assert len(conv) <= k * (1 << (M - 1)) + 1


def test_tail_measure_closed_form():
    # p=3: zero mass q=131/3200, only the all-zero and single-smallest-level
    # atoms fall at or below the conservative threshold
    q = Q(131, 3200)
    t = threshold_bracket(3)[1]
    expect = 1 - q ** 8 - 8 * q ** 7 * Q(99, 200)
    assert tail_measure(5, 8, t) == expect
    assert expect > Q(99, 100)


def test_chebyshev_vs_exact_tails():
    for M, k in ((5, 2), (5, 4), (4, 8)):
        u, _, v = exact_stats(M)
        dist = sum_distribution(M, k)
        for j in range(1, 11):
            eps = Q(j, 20)
            exact = sum((m for s, m in dist.items()
                         if abs(s - k * u) > k * eps), ZERO)
            assert exact <= chebyshev_bound(k, v, eps)
    with pytest.raises(ValueError):
        chebyshev_bound(4, Q(1, 4), 0)


def test_bracket_directions():
    for p in (3, 4, 17, 1000):
        t_lo, t_hi = threshold_bracket(p)
        # zero width at exact powers of two, strict everywhere else
        assert 0 < t_lo <= t_hi
        assert (t_lo == t_hi) == (p & (p - 1) == 0)
    # thresholds shrink as the scale grows
    assert threshold_bracket(4)[1] < threshold_bracket(3)[0]


def test_smallness_and_least_scale():
    assert least_honest_p() == 4194304
    assert smallness_holds(4194304)
    assert not smallness_holds(2097152)
    assert not smallness_holds(3)
    with pytest.raises(ValueError):
        smallness_holds(1)


def test_estimate_tier():
    est = estimate_pblock(3)
    assert est["M"] == 5 and est["k"] == 8 and est["K_S"] == 11
    assert est["exit_exponent"] == 8203116
    assert est["J_honest"] == 65625136
    assert est["J_lineage"] == 10254016
    # log2(11^7 * 6) is a little under 27 bits of eager atom parts
    assert est["atom_parts_bits_lo"] == 26
    assert est["atom_parts_bits_hi"] == 28
    assert est["atom_tuples_bits"] == 22


def test_honest_tier_refused():
    with pytest.raises(CapacityError):
        build_pblock(3)
    with pytest.raises(CapacityError):
        build_pblock(3, relaxed=True, budget_bits=1000)
    # p=4 needs a ~6.7e15-bit grid; no budget bump makes that sane
    with pytest.raises(CapacityError):
        build_pblock(4, relaxed=True)
    blk = build_pblock(4, estimate_only=True)
    assert not blk.relaxed
    assert blk.tail is not None  # 16 * 2^7 states fits the default cap
    assert blk.tail > Q(99, 100)
    capped = build_pblock(4, estimate_only=True, tail_state_cap=100)
    assert capped.tail is None


@pytest.fixture(scope="module")
def block3():
    return build_pblock(3, relaxed=True)


def test_relaxed_block_shape(block3):
    assert block3.relaxed
    assert block3.J_materialized == 10254016
    assert len(block3.X) == 8
    assert all(x.integral == block3.law.integral for x in block3.X)
    assert block3.gamma_path.sum_value == Q(198, 25)
    assert block3.off_path.sum_value == 0
    assert block3.tail > Q(99, 100)
    d = block3.params_dict()
    assert d["tier"] == "relaxed" and d["p"] == 3


def test_witness_counts_exact(block3):
    recs = witness_records(block3, n_exponents=[11])
    (r,) = recs
    # at n'=2^11 the orbit sweep hits the support on every index, so the
    # count lands exactly on n'; the normalized function doubles the
    # k-range (integral 1/2) and its count lands on ceil(n/F) = 2n
    assert r["count_f"] == r["n_prime"] == 2048
    assert r["n"] == 1025
    assert r["count_phi"] == 2050
    assert r["count_wrapped"] == r["count_f"]
    assert r["small_index_hits"] == 0
    assert r["ratio_f"] == 1
    assert r["ratio_phi"] == 2
    with pytest.raises(ValueError):
        witness_records(block3, n_exponents=[10])


def test_relaxed_certificate(block3):
    report = verify_pblock(block3)
    assert report.passed
    assert report.count("exact") == 11
    assert report.count("sampled") == 8
    d = report.to_dict()
    assert d["passed"] is True
    import json
    blob = json.dumps(d)
    assert len(blob) < 100_000


def test_estimate_certificate():
    blk = build_pblock(3, estimate_only=True)
    report = verify_pblock(blk)
    assert report.passed
    assert report.count("exact") == 8
    assert report.count("sampled") == 0
