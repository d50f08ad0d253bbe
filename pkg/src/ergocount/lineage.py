"""One materialized region path through a deep replicated tower.

A full tower of depth k multiplies its atom-part count by 2M+1 per level
and its grid exponent by roughly M per mother, so deep instances cannot be
built eagerly.  A single region path costs one mother per level.  This
module materializes such a path in absolute coordinates and returns

  * every mother's counting piece (value and support) at full precision,
  * an explicit grid point x together with the certified value of every
    tower variable at x, and
  * the component bounds needed to check each trim membership exactly.

The trims mirror the eager construction: at each depth the kept part of a
child component [a, b) is the left piece [a, a + rho*(b - a)), with rho the
depth's retention fraction.  Because x is always the left endpoint of the
component it lives in, membership survives every trim, but the code checks
the inequality rather than assuming it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from gmpy2 import mpq, mpz

from .base_system import BaseParams, build_base, build_gamma_complements, min_J0, schedule
from .intervals import GridInterval, PeriodicIntervalSet
from .level_systems import LifeTower, level_mass, level_value
from .scalars import ZERO, ipow2

__all__ = [
    "PathStep",
    "Lineage",
    "gamma_labels",
    "off_labels",
    "lineage_chain",
    "build_path",
]


def gamma_labels(k, l=1):
    """The all-gamma-l path: the deepest-retention lineage."""
    return ("gamma-%d" % l,) * k


def off_labels(k):
    """The path that exits retention at every depth: all values vanish."""
    return ("off",) * (k - 1) + ("rest",)


def _parse_label(label, M, leaf):
    if label == "off" and not leaf:
        return None
    if label == "rest" and leaf:
        return None
    if label.startswith("gamma-"):
        l = int(label[len("gamma-"):])
        if 1 <= l <= M:
            return l
    raise ValueError("bad path label %r" % (label,))


@dataclass(frozen=True)
class PathStep:
    """Everything retained about one depth's mother after it is discarded."""
    depth: int            # 1 is the outermost mother
    level: int            # tower level of this mother; 1 at the leaf
    label: str            # region chosen here
    seed: int             # this mother's startup time N_1
    R: int                # grid exponent of the host interval
    J0: int               # this mother's minimal legal grid exponent
    schedule: tuple
    window: Optional[tuple]   # (N_l, nu(N_l)) when the label picks gamma-l
    h_exponent: int       # log2 of the mother's piece value on the shared grid
    rho: Optional[mpq]    # trim fraction applied to the child part, None off-path


@dataclass(frozen=True, eq=False)
class Lineage:
    M: int
    k: int
    K_S: int
    J: int
    labels: tuple
    steps: tuple          # PathStep per depth, outermost first
    pieces: tuple         # (value: mpz, support: PeriodicIntervalSet) per depth
    x: mpq                # witness grid point, denominator divides 2^J
    values: tuple         # certified (X_1, ..., X_k) at x; X_k from depth 1
    bounds: tuple         # (a, b) of the innermost kept component holding x

    @property
    def sum_value(self):
        return sum(self.values, ZERO)

    @property
    def top_window(self):
        return self.steps[0].window

    def params_dict(self):
        return {
            "M": self.M,
            "k": self.k,
            "K_S": self.K_S,
            "J": self.J,
            "labels": list(self.labels),
            "chain_J0": [s.J0 for s in self.steps],
            "piece_exponents": [s.h_exponent for s in self.steps],
        }


def _tower_nu(M, level):
    return LifeTower.build(M, level).nu(level)


def lineage_chain(M, k, K_S, labels):
    """Exponent-level skeleton of the path: seeds, hosts, J0 per depth.

    Pure integer arithmetic; safe to call for paths far too deep to
    materialize.  Returns (steps, leaf_J0) where each step is a dict.
    """
    if len(labels) != k:
        raise ValueError("need one label per depth, %d != k=%d"
                         % (len(labels), k))
    steps = []
    seed = K_S
    R = 0
    for depth in range(1, k + 1):
        level = k - depth + 1
        leaf = level == 1
        l = _parse_label(labels[depth - 1], M, leaf)
        nu = _tower_nu(M, level)
        sched = schedule(nu, seed, M)
        J0 = min_J0(R, M, nu, sched[-1])
        steps.append({
            "depth": depth, "level": level, "label": labels[depth - 1],
            "seed": seed, "R": R, "J0": J0, "schedule": tuple(sched),
            "window": (sched[l - 1], int(nu(sched[l - 1]))) if l else None,
        })
        if not leaf:
            seed = sched[l - 1] if l else K_S
            R = J0
    return steps, steps[-1]["J0"]


def build_path(M, k, K_S, labels, J=None, I0=None):
    """Materialize the labeled path and certify point values along it."""
    if I0 is None:
        I0 = GridInterval(0, 0)
    chain, leaf_J0 = lineage_chain(M, k, K_S, labels)
    if J is None:
        J = leaf_J0
    if J < leaf_J0:
        raise ValueError("J=%d is below the path's leaf grid exponent %d"
                         % (J, leaf_J0))

    # Top-down: build each mother on its absolute host cell, keep only the
    # data the bottom-up pass and the certificate need, drop the rest.
    host = I0
    retained = []
    pieces = []
    for info in chain:
        depth, level = info["depth"], info["level"]
        leaf = level == 1
        l = _parse_label(info["label"], M, leaf)
        mother = build_base(BaseParams(
            M=M, nu=_tower_nu(M, level), N1=info["seed"],
            S=level - 1, I=host, J=J))
        if mother.J0 != info["J0"]:
            raise AssertionError("grid chain drifted at depth %d" % depth)
        piece_v, piece_s = mother.f.pieces[0]
        pieces.append((piece_v, piece_s))

        if l is not None:
            region = mother.Gamma_l(l)
            fam = region.families[0]
            rho = level_mass(M, l) * host.length / region.measure
            window = mother.window_exponents(l)
        else:
            comps = build_gamma_complements(list(mother.B), mother.params,
                                            mother.J0)
            fam = comps[0].families[0]
            rho = None
            window = None

        retained.append(PathStep(
            depth=depth, level=level, label=info["label"],
            seed=info["seed"], R=info["R"], J0=mother.J0,
            schedule=mother.schedule, window=window,
            h_exponent=M + 10 + J - mother.J0, rho=rho))

        if leaf:
            leaf_fam = fam
            leaf_l = l
            leaf_rho = rho  # the leaf's own level-set trim fraction
        else:
            # descend into the first cell of the region's first component
            j_next = fam.lo * ipow2(mother.J0)
            if j_next.denominator != 1:
                raise AssertionError("region component off its own grid")
            host = GridInterval(j_next.numerator, mother.J0)
        del mother

    # Bottom-up: start from the leaf's own level-set trim and apply each
    # ancestor's trim to the component, tracking whether x stays kept.
    x = leaf_fam.lo
    a = leaf_fam.lo
    if leaf_l is not None:
        b = a + leaf_rho * leaf_fam.length
        values = [level_value(leaf_l)]
    else:
        b = a + leaf_fam.length
        values = [ZERO]

    for step in reversed(retained[:-1]):
        if step.rho is None:
            values.append(ZERO)
            continue
        kept = step.rho * (b - a)
        if x - a < kept:
            values.append(level_value(int(step.label[len("gamma-"):])))
            b = a + kept
        else:
            values.append(ZERO)
            a, b = a + kept, b

    return Lineage(M=M, k=k, K_S=K_S, J=J, labels=tuple(labels),
                   steps=tuple(retained), pieces=tuple(pieces),
                   x=x, values=tuple(values), bounds=(a, b))
