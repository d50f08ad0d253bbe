"""Measure-one blow-up assembly at scale p.

A scale-p block stacks k = 2^p exactly independent tower variables with
gain constant M = m_p(p) and startup seed K_S = max(2^p, 11).  The sum of
the variables exceeds a threshold t comparable to 1/(4 log^2 p) outside a
set of measure O(log^2 p / p)-small, and on that large set the counting
ratio of the normalized function is at least lambda_p ~ p/32.

The honest object is astronomically large: already at p = 3 the shared
grid exponent is 65,625,136 and the atom-part count is 6 * 11^7.  The
module therefore has three tiers:

  estimate  -- exponent-level forecast, no construction at all;
  relaxed   -- materialize two region lineages (deepest-retention and
               all-off) on the lineage's own grid and certify counting,
               membership, and moment claims there;
  honest    -- refused with a CapacityError carrying the estimate.

Every inequality involving log2 is decided through rational brackets,
always rounded toward the harder side of the claim, and refined until the
comparison is pinned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from gmpy2 import mpq, mpz

from .counting import CountQuery, OrbitSpec, count_N
from .intervals import CapacityError, PeriodicIntervalSet, count_orbit_hits
from .level_systems import DistributedRV, level_value
from .lineage import Lineage, build_path, gamma_labels, off_labels
from .report import VerificationReport
from .scalars import (
    C_099,
    ONE,
    ZERO,
    ipow2,
    log2_bracket_rational,
    pow2,
    qceil,
    qfloor,
)
from .stepfn import StepFunction

__all__ = [
    "m_p",
    "exact_stats",
    "chebyshev_bound",
    "sum_distribution",
    "tail_measure",
    "tower_coefficient",
    "exit_exponent_closed",
    "honest_grid_exponent",
    "lineage_grid_exponent",
    "threshold_bracket",
    "lambda_bracket",
    "smallness_holds",
    "least_honest_p",
    "PBlockParams",
    "PBlock",
    "estimate_pblock",
    "build_pblock",
    "witness_records",
    "verify_pblock",
]


# ---------------------------------------------------------------------------
# parameter derivations
# ---------------------------------------------------------------------------


def _gain_bracket(p, bits):
    """Bracket of log2(p) + 2*log2(log2(p)), both ends conservative."""
    lo, hi = log2_bracket_rational(p, bits)
    tlo = log2_bracket_rational(lo, bits)[0]
    thi = log2_bracket_rational(hi, bits)[1]
    return lo + 2 * tlo, hi + 2 * thi


def m_p(p: int) -> int:
    """floor(p + log2 p + 2 log2 log2 p), the gain constant at scale p.

    Defined for p >= 3 only: below that the nested log term is too small
    for the moment calibration to mean anything, so the function refuses
    rather than extrapolating.
    """
    if not isinstance(p, int) or p < 3:
        raise ValueError("scale p must be an integer >= 3")
    from .scalars import bracketed_floor
    return bracketed_floor(p, [lambda b: _gain_bracket(p, b)])


def exact_stats(M: int):
    """(mean, second moment, variance) of the canonical law on measure 1."""
    rv = DistributedRV.canonical(M, ONE)
    u = rv.integral
    v0 = rv.second_moment
    return u, v0, v0 - u * u


def chebyshev_bound(count, v, eps):
    """Chebyshev tail bound v/(count*eps^2) for the mean of `count` copies."""
    eps = mpq(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return mpq(v) / (mpq(count) * eps * eps)


def sum_distribution(M: int, k: int) -> dict:
    """Exact law of the sum of k independent canonical(M) variables.

    The values live on the lattice (99/100)*2^(1-M) * Z, so the state
    count stays k*2^(M-1)+1 no matter how the convolution is ordered.
    """
    if k < 1:
        raise ValueError("need at least one variable")
    rv = DistributedRV.canonical(M, ONE)
    law = [(ZERO, rv.zero_mass)] + [(v, m) for v, m in rv.masses]
    dist = {ZERO: ONE}
    for _ in range(k):
        nxt = {}
        for s, ms in dist.items():
            for v, mv in law:
                key = s + v
                nxt[key] = nxt.get(key, ZERO) + ms * mv
        dist = nxt
    return dist


def tail_measure(M: int, k: int, t) -> mpq:
    """mu{ X_1 + ... + X_k > t } for independent canonical(M) variables."""
    t = mpq(t)
    return sum((m for s, m in sum_distribution(M, k).items() if s > t), ZERO)


# ---------------------------------------------------------------------------
# closed forms for the honest size (checked against the recursive
# estimators on small towers by the tests)
# ---------------------------------------------------------------------------


def tower_coefficient(M: int, k: int) -> mpz:
    """c_k of the life tower: c_1 = 1, c_{j+1} = M c_j + 20(M-1)."""
    return 21 * mpz(M) ** (k - 1) - 20


def exit_exponent_closed(M: int, k: int, K_S: int) -> mpz:
    """nu_k at the end of the mother schedule, without building the tower."""
    return K_S + 20 * (M - 1) + M * tower_coefficient(M, k)


def honest_grid_exponent(M: int, k: int, K_S: int) -> mpz:
    """Least shared grid exponent of the full level-k system on [0, 1).

    Each mother along the all-top-level lineage contributes E + M + 21
    where E is the (depth-invariant) exit exponent.
    """
    return k * (exit_exponent_closed(M, k, K_S) + M + 21)


def lineage_grid_exponent(M: int, k: int, K_S: int) -> mpz:
    """Leaf grid exponent of the constant-seed lineage (gamma-1 and all-off
    paths both keep seed K_S, so they share this value)."""
    sum_c = 21 * (mpz(M) ** k - 1) // (M - 1) - 20 * k
    return k * (K_S + 20 * (M - 1) + M + 21) + M * sum_c


# ---------------------------------------------------------------------------
# bracketed inequalities
# ---------------------------------------------------------------------------


def threshold_bracket(p: int, bits=16):
    """Bracket of 1/(4 log^2 p).  The upper end is the conservative
    threshold: requiring the sum to exceed it is the harder membership
    test, and the tail set it defines is the smaller one."""
    lo, hi = log2_bracket_rational(p, bits)
    return 1 / (4 * hi * hi), 1 / (4 * lo * lo)


def lambda_bracket(p: int, M: int, bits=16):
    """Bracket of lambda_p = 1/(8 log^2 p * integral), integral = 2^(p+1-M)."""
    F = pow2(p + 1 - M)
    lo, hi = log2_bracket_rational(p, bits)
    return 1 / (8 * hi * hi * F), 1 / (8 * lo * lo * F)


def smallness_holds(p: int, bits=16, max_bits=4096) -> bool:
    """Decide 64 log^2 p / p < 1/100 with certainty, refining as needed."""
    if p < 2:
        raise ValueError("smallness is about scales p >= 2")
    while bits <= max_bits:
        lo, hi = log2_bracket_rational(p, bits)
        if 6400 * hi * hi < p:
            return True
        if 6400 * lo * lo >= p:
            return False
        bits *= 2
    raise ArithmeticError("smallness not pinned at %d bracket bits" % max_bits)


def least_honest_p(max_exp=64) -> int:
    """First power-of-two scale where the smallness inequality holds.

    Powers of two have exact logs, so the scan is bracket-free; the
    answer is 2^22 = 4194304."""
    for e in range(2, max_exp + 1):
        if 6400 * e * e < (1 << e):
            return 1 << e
    raise ArithmeticError("no admissible scale below 2^%d" % max_exp)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PBlockParams:
    p: int
    M: int
    k: int
    K_S: int
    integral: mpq          # k * 2^(1-M), the closed-form integral of f
    threshold: mpq         # conservative (upper) end of the t bracket
    t_bracket: tuple
    lam_bracket: tuple
    exit_exponent: mpz
    J_honest: mpz

    def as_dict(self):
        return {
            "p": self.p, "M": self.M, "k": self.k, "K_S": self.K_S,
            "integral": self.integral, "threshold": self.threshold,
            "t_bracket": list(self.t_bracket),
            "lam_bracket": list(self.lam_bracket),
            "exit_exponent": self.exit_exponent,
            "J_honest": self.J_honest,
        }


@dataclass(frozen=True, eq=False)
class PBlock:
    """A scale-p block in one of the two buildable tiers.

    estimate-only blocks carry sizes and laws but no geometry; relaxed
    blocks add the two materialized lineages and the reduced grid they
    live on.  The level set Lambda_p is never materialized as a set (its
    atom count is the part of the object that explodes); its measure is
    exact through the convolved sum law, and membership is certified
    pointwise at the lineage witnesses.
    """
    params: PBlockParams
    estimate: dict
    law: DistributedRV
    X: tuple                       # one marginal per variable when k is small
    tail: Optional[mpq]            # mu{sum > threshold}, None when skipped
    J_materialized: Optional[int] = None
    gamma_path: Optional[Lineage] = None
    off_path: Optional[Lineage] = None

    @property
    def relaxed(self):
        return self.gamma_path is not None

    def params_dict(self):
        d = self.params.as_dict()
        d["tier"] = "relaxed" if self.relaxed else "estimate"
        if self.J_materialized is not None:
            d["J_materialized"] = self.J_materialized
        return d


def _block_params(p: int) -> PBlockParams:
    M = m_p(p)
    k = 1 << p
    K_S = max(k, 11)
    t_lo, t_hi = threshold_bracket(p)
    return PBlockParams(
        p=p, M=M, k=k, K_S=K_S,
        integral=k * pow2(1 - M),
        threshold=t_hi,
        t_bracket=(t_lo, t_hi),
        lam_bracket=lambda_bracket(p, M),
        exit_exponent=exit_exponent_closed(M, k, K_S),
        J_honest=honest_grid_exponent(M, k, K_S),
    )


def estimate_pblock(p: int) -> dict:
    """Exponent-level size forecast; never builds geometry."""
    pr = _block_params(p)
    M, k = pr.M, pr.k
    # bit counts of the eager-part explosion, bracketed without giant pows
    lo, hi = log2_bracket_rational(2 * M + 1, 32)
    lo2, hi2 = log2_bracket_rational(M + 1, 32)
    return {
        "p": p, "M": M, "k": k, "K_S": pr.K_S,
        "exit_exponent": pr.exit_exponent,
        "J_honest": pr.J_honest,
        "J_lineage": lineage_grid_exponent(M, k, pr.K_S),
        "atom_parts_bits_lo": int(qfloor((k - 1) * lo + lo2)),
        "atom_parts_bits_hi": int(qceil((k - 1) * hi + hi2)) + 1,
        "atom_tuples_bits": int(qceil(k * hi2)) + 1,
    }


def build_pblock(p: int, relaxed=False, estimate_only=False,
                 budget_bits=1 << 24, tail_state_cap=1 << 16) -> PBlock:
    """Build a scale-p block in the requested tier.

    estimate_only skips all geometry.  relaxed materializes the two
    lineages when the leaf grid exponent fits budget_bits.  Asking for the
    honest tier (neither flag) raises CapacityError with the estimate
    payload: the full object is out of reach for every p >= 3.
    """
    pr = _block_params(p)
    est = estimate_pblock(p)
    if not (relaxed or estimate_only):
        raise CapacityError(
            "honest scale-%d block is out of reach; estimate: %r" % (p, est))

    law = DistributedRV.canonical(pr.M, ONE)
    X = tuple(DistributedRV.canonical(pr.M, ONE) for _ in range(pr.k)) \
        if pr.k <= 64 else ()
    # convolved states stay k*2^(M-1)+1; cap keeps absurd requests out
    tail = tail_measure(pr.M, pr.k, pr.threshold) \
        if pr.k * (1 << (pr.M - 1)) <= tail_state_cap else None

    if estimate_only:
        return PBlock(params=pr, estimate=est, law=law, X=X, tail=tail)

    J_rel = int(est["J_lineage"])
    if J_rel > budget_bits:
        raise CapacityError(
            "lineage grid exponent %d exceeds budget %d bits; estimate: %r"
            % (J_rel, budget_bits, est))
    gamma = build_path(pr.M, pr.k, pr.K_S, gamma_labels(pr.k), J=J_rel)
    off = build_path(pr.M, pr.k, pr.K_S, off_labels(pr.k), J=J_rel)
    return PBlock(params=pr, estimate=est, law=law, X=X, tail=tail,
                  J_materialized=J_rel, gamma_path=gamma, off_path=off)


# ---------------------------------------------------------------------------
# counting certificate
# ---------------------------------------------------------------------------


def _sparsify(piece):
    """Drop the second half of the support blocks: the negative control."""
    value, supp = piece
    fam = supp.families[0]
    half = fam.strides[-1].count // 2
    return (value, PeriodicIntervalSet(
        [fam.with_count(len(fam.strides) - 1, half)]))


def witness_records(block: PBlock, n_exponents=None) -> list:
    """Exact counting data at the lineage witness for each tested n.

    Counts are taken on the materialized grid against the outermost
    mother's piece alone, which minorizes the full function; the records
    carry everything the verifier re-checks, including the small-index
    scan that makes the counts transfer verbatim to any finer legal grid.
    """
    if not block.relaxed:
        raise ValueError("witness records need a relaxed block")
    lin = block.gamma_path
    pr = block.params
    lo_e, hi_e = lin.top_window
    if n_exponents is None:
        n_exponents = (lo_e, (lo_e + hi_e) // 2, hi_e)
    value, supp = lin.pieces[0]
    F = pr.integral
    f_top = StepFunction([(value, supp)])
    phi_top = StepFunction([(mpq(value) / F, supp)])
    orbit = OrbitSpec(lin.J, wrap=False)
    worbit = OrbitSpec(lin.J, wrap=True)
    S = pr.k - 1  # support offset of the outermost mother

    records = []
    for e in n_exponents:
        if not lo_e <= e <= hi_e:
            raise ValueError("n exponent %d outside the witness window" % e)
        n1 = ipow2(e)
        n2 = qfloor(n1 * F) + 1
        cnt_f = count_N(CountQuery(f_top, orbit, lin.x, n1))
        cnt_phi = count_N(CountQuery(phi_top, orbit, lin.x, n2))
        cnt_wrap = count_N(CountQuery(f_top, worbit, lin.x, n1))
        small = count_orbit_hits(supp, lin.J, lin.x, 1, S + 1)
        records.append({
            "n_exponent": e,
            "n_prime": n1,
            "n": n2,
            "count_f": cnt_f,
            "count_phi": cnt_phi,
            "count_wrapped": cnt_wrap,
            "small_index_hits": small,
            "ratio_f": mpq(cnt_f, n1),
            "ratio_phi": mpq(cnt_phi) / n2,
        })
    return records


def _q_digest(q):
    """Compact commitment to a huge exact rational.

    Lineage witnesses have ~10M-bit denominators; their digits carry no
    insight and would dominate the report.  The point is reproducible from
    the block parameters alone, so the report stores sizes and a hash."""
    import hashlib
    q = mpq(q)
    blob = b"%d:%d" % (q.numerator, q.denominator) \
        if q.numerator.bit_length() < 64 else \
        q.numerator.to_bytes((q.numerator.bit_length() + 7) // 8, "big") \
        + b"/" + q.denominator.to_bytes(
            (q.denominator.bit_length() + 7) // 8, "big")
    return {
        "num_bits": q.numerator.bit_length(),
        "den_bits": q.denominator.bit_length(),
        "sha256": hashlib.sha256(blob).hexdigest(),
    }


def _witness_summary(r, F):
    """Report-sized image of one witness record: exponents and excesses.

    count_f sits within a whisker of n' and count_phi within a whisker of
    n/F for every system in this family, so the excesses stay tiny; the
    full integers are recomputed on demand, never stored."""
    return {
        "n_exponent": r["n_exponent"],
        "count_f_excess": r["count_f"] - r["n_prime"],
        "count_phi_excess": r["count_phi"] - qceil(mpq(r["n"]) / F),
        "count_wrap_excess": r["count_wrapped"] - r["count_f"],
        "small_index_hits": r["small_index_hits"],
    }


def verify_pblock(block: PBlock, cheb_max_k=16,
                  eps_points=10) -> VerificationReport:
    """Check every claim the built tier can support."""
    pr = block.params
    p, M, k = pr.p, pr.M, pr.k
    rep = VerificationReport("scale-block", block.params_dict())
    Llo, Lhi = log2_bracket_rational(p, 32)

    rep.add("m-p-formula", "gain-constant", "exact",
            m_p(p) == M and M > p, M=M, p=p)

    F = pr.integral
    rep.add("integral-f", "closed-form-bounds", "exact",
            F == k * pow2(1 - M)
            and F >= 1 / (p * Llo * Llo)
            and F <= 4 / (p * Lhi * Lhi),
            integral=F, lower=1 / (p * Llo * Llo), upper=4 / (p * Lhi * Lhi))

    u, v0, v = exact_stats(M)
    rep.add("moment-u", "mean-identity-and-floor", "exact",
            u == block.law.integral
            and u == M * C_099 * C_099 * pow2(-M)
            and u > 1 / (pow2(p + 1) * Llo * Llo),
            u=u, floor=1 / (pow2(p + 1) * Llo * Llo))
    rep.add("moment-v", "variance-cap", "exact",
            v > 0 and v == v0 - u * u
            and v <= 4 / (pow2(p) * p * Lhi * Lhi),
            v=v, v0=v0, cap=4 / (pow2(p) * p * Lhi * Lhi))

    if k <= cheb_max_k:
        ok = True
        worst = None
        dist = sum_distribution(M, k)
        for j in range(1, eps_points + 1):
            eps = mpq(j, 2 * eps_points)
            lhs = sum((m for s, m in dist.items()
                       if abs(s / k - u) > eps), ZERO)
            rhs = chebyshev_bound(k, v, eps)
            ok = ok and lhs <= rhs
            if worst is None or lhs - rhs > worst[0]:
                worst = (lhs - rhs, eps, lhs, rhs)
        rep.add("chebyshev-tail", "mean-concentration", "exact", ok,
                eps=worst[1], lhs=worst[2], rhs=worst[3])

    if block.tail is not None:
        rep.add("tail-measure", "level-set-lower-bound", "exact",
                block.tail > mpq(99, 100),
                achieved=block.tail, threshold=pr.threshold,
                shortfall=1 - block.tail)

    lam_lo, lam_hi = pr.lam_bracket
    rep.add("blowup-margin", "lambda-floor", "exact",
            lam_lo >= mpq(p, 32) and lam_lo < lam_hi,
            lam_lo=lam_lo, lam_hi=lam_hi, floor=mpq(p, 32))

    pstar = least_honest_p()
    rep.add("smallness-threshold", "first-admissible-scale", "exact",
            smallness_holds(pstar) and not smallness_holds(pstar // 2),
            first=pstar, holds_here=smallness_holds(p) if p >= 2 else False)

    if not block.relaxed:
        return rep

    lin = block.gamma_path
    rep.add("j-independence", "grid-exponents", "exact",
            block.J_materialized == lineage_grid_exponent(M, k, pr.K_S)
            and pr.J_honest == honest_grid_exponent(M, k, pr.K_S)
            and block.J_materialized <= pr.J_honest,
            J_materialized=block.J_materialized, J_honest=pr.J_honest)
    rep.add("grid-exactness", "witness-on-grid", "exact",
            (lin.x * ipow2(lin.J)).denominator == 1
            and 0 <= lin.x < 1 and 0 <= block.off_path.x < 1,
            x=_q_digest(lin.x))
    lo_e, hi_e = lin.top_window
    rep.add("witness-window", "top-window-inside-exit", "exact",
            lo_e == pr.K_S
            and hi_e == pr.K_S + tower_coefficient(M, k)
            and hi_e <= pr.exit_exponent,
            window=[lo_e, hi_e], exit=pr.exit_exponent)

    rep.add("tail-measure", "membership-positive", "sampled",
            lin.sum_value > pr.threshold
            and all(val == level_value(1) for val in lin.values),
            x=_q_digest(lin.x), total=lin.sum_value, threshold=pr.threshold)
    off = block.off_path
    rep.add("tail-measure", "membership-negative", "sampled",
            off.sum_value == 0 and off.sum_value <= pr.t_bracket[0],
            x=_q_digest(off.x), total=off.sum_value)

    records = witness_records(block)
    summaries = [_witness_summary(r, F) for r in records]
    floor_1 = C_099  # the top label is gamma-1, so the Eq floor is 99/100
    ok_count = all(r["ratio_f"] > floor_1 for r in records)
    ok_margin = all(r["ratio_phi"] > lam_hi for r in records)
    ok_chain = all(
        r["count_f"] * r["n"]
        < r["count_phi"] * r["n_prime"] * (F + mpq(1, r["n_prime"]))
        for r in records)
    ok_wrap = all(r["count_wrapped"] >= r["count_f"] for r in records)
    ok_small = all(r["small_index_hits"] == 0 for r in records)
    rep.add("counting-lower-bound", "witness-floor", "sampled",
            ok_count, floor=floor_1, x=_q_digest(lin.x),
            witnesses=summaries)
    rep.add("blowup-margin", "normalized-ratio", "sampled",
            ok_margin, lam_hi=lam_hi, witnesses=summaries)
    rep.add("chain-step", "strict-transfer", "sampled",
            ok_chain, integral=F, witnesses=summaries)
    rep.add("oracle-agreement", "wrap-monotone", "sampled", ok_wrap)
    rep.add("j-independence", "reduced-grid-transfer", "sampled", ok_small,
            max_small_index=pr.k - 1)

    # negative control: halving the support blocks must sink the floor at
    # a point that faces the deleted half (the lineage witness faces the
    # kept half, where the corruption is invisible)
    value, supp = lin.pieces[0]
    bad = StepFunction([_sparsify(lin.pieces[0])])
    fam = supp.families[0]
    block, nblocks = fam.strides[-1]
    x_bad = fam.lo + (nblocks // 2) * block
    n1 = records[0]["n_prime"]
    orbit = OrbitSpec(lin.J, wrap=False)
    good_count = count_N(CountQuery(StepFunction([(value, supp)]),
                                    orbit, x_bad, n1))
    bad_count = count_N(CountQuery(bad, orbit, x_bad, n1))
    rep.add("negative-control", "sparsified-support-caught", "sampled",
            mpq(bad_count, n1) <= floor_1 < mpq(good_count, n1),
            bad_count=bad_count, good_excess=good_count - n1,
            n_prime_exponent=records[0]["n_exponent"])
    return rep
