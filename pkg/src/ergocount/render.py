"""Figure and ASCII rendering for constructed systems and reports.

The geometry here is hostile to plotting: component widths shrink below
float underflow almost immediately (2^-700 is a *small* grid exponent for
these systems).  Figures therefore never draw components to scale.  A
cascade row draws each family's extent (which stays macroscopic) shaded
by its exact density measure/extent, and the blow-up panel re-plots one
retention block in block-relative units, where offsets are moderate
rationals again.  Floats appear only at the matplotlib boundary; every
ratio is computed exactly first.

ASCII rendering uses no floats at all: an 80-column strip marks the cells
whose midpoint lies in the set, decided by the exact membership test.
"""

from __future__ import annotations

from gmpy2 import mpq

from .scalars import ZERO

_CELL_CAP = 64  # components drawn in a blow-up panel


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _density(fam):
    return fam.measure / fam.extent


def system_rows(system):
    """(label, PeriodicIntervalSet) rows for a base or level-k system."""
    if hasattr(system, "B"):
        return [("B%d" % (l + 1), s) for l, s in enumerate(system.B)]
    if hasattr(system, "mother") and system.mother is not None:
        return system_rows(system.mother)
    return []


# ---------------------------------------------------------------------------
# ASCII
# ---------------------------------------------------------------------------


def ascii_rows(rows, width=80) -> str:
    """One text strip per row; '#' where the cell midpoint is in the set."""
    lines = []
    for label, s in rows:
        cells = []
        for i in range(width):
            mid = mpq(2 * i + 1, 2 * width)
            cells.append("#" if s.contains(mid) else ".")
        lines.append("%-6s|%s|" % (label[:6], "".join(cells)))
    return "\n".join(lines) if lines else "(empty system)"


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def fig_cascade(rows, f=None, title="cascade"):
    """Extent-and-density schematic, one row per level, plus an optional
    blow-up of the first support block of f."""
    plt = _plt()
    n_panels = 2 if f is not None and not f.is_zero else 1
    fig, axes = plt.subplots(n_panels, 1,
                             figsize=(8, 2 + 1.2 * n_panels),
                             squeeze=False)
    ax = axes[0][0]
    if not rows:
        ax.text(0.5, 0.5, "empty system", ha="center", va="center")
        ax.set_axis_off()
        fig.suptitle(title)
        return fig
    for r, (label, s) in enumerate(rows):
        y = len(rows) - 1 - r
        for fam in s.families:
            alpha = min(1.0, max(0.08, float(_density(fam))))
            ax.barh(y, float(fam.extent), left=float(fam.lo), height=0.8,
                    color="C0", alpha=alpha, edgecolor="none")
        ax.text(-0.01, y, label, ha="right", va="center", fontsize=8)
    ax.set_xlim(0, 1)
    ax.set_ylim(-0.5, len(rows) - 0.5)
    ax.set_yticks([])
    ax.set_xlabel("position (family extents, shade = exact density)")

    if n_panels == 2:
        bx = axes[1][0]
        value, supp = f.pieces[0]
        fam = supp.families[0]
        # innermost stride is the block replication; re-plot one block in
        # block-relative units where offsets are moderate again
        if fam.strides:
            block, _ = fam.strides[-1]
            inner = fam.length
        else:
            block, inner = fam.length, fam.length
        shown = 0
        lo0 = fam.lo
        pos = ZERO
        while shown < _CELL_CAP and pos + inner <= block:
            bx.barh(0, float(inner / block), left=float(pos / block),
                    height=0.6, color="C3", edgecolor="none")
            shown += 1
            pos += inner * 2  # schematic spacing; exact layout is too fine
        bx.set_xlim(0, 1)
        bx.set_yticks([])
        bx.set_xlabel("one support block of f, block-relative units "
                      "(value %s)" % value)
        bx.text(0.99, 0.35, "lo = %s..." % str(lo0)[:24], ha="right",
                fontsize=7)
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def fig_exponents(est: dict, title="grid exponent forecast"):
    """Log-scale bars of the bit budgets an honest build would need."""
    plt = _plt()
    keys = [k for k in ("exit_exponent", "J_honest", "J_lineage",
                        "atom_parts_bits_hi") if k in est]
    vals = [max(1, int(est[k])) for k in keys]
    fig, ax = plt.subplots(figsize=(6, 2.5))
    ax.barh(range(len(keys)), vals, color="C1")
    ax.set_yticks(range(len(keys)), keys, fontsize=8)
    ax.set_xscale("log")
    ax.set_xlabel("bits (log scale)")
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def fig_distribution(dist: dict, threshold=None, title="sum law"):
    """Stem plot of an exact finite law; threshold drawn when given."""
    plt = _plt()
    pts = sorted(dist.items())
    fig, ax = plt.subplots(figsize=(6, 2.5))
    xs = [float(v) for v, _ in pts]
    ms = [float(m) for _, m in pts]
    ax.stem(xs, ms, basefmt=" ")
    ax.set_yscale("log")
    if threshold is not None:
        ax.axvline(float(threshold), color="C3", linestyle="--",
                   label="threshold")
        ax.legend(fontsize=8)
    ax.set_xlabel("sum value")
    ax.set_ylabel("mass")
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def fig_analog_profile(xs, values, title="one-sided maximal profile"):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 2.5))
    ax.plot([float(x) for x in xs], [float(v) for v in values],
            drawstyle="steps-post", lw=1)
    ax.set_xlabel("x")
    ax.set_ylabel("A 1_B (x)")
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def fig_claims(report_dict: dict, title=None):
    """Pass/fail strip for every claim of a report."""
    plt = _plt()
    claims = report_dict.get("claims", [])
    fig, ax = plt.subplots(figsize=(7, 1 + 0.28 * max(1, len(claims))))
    for i, c in enumerate(claims):
        ok = c["passed"]
        ax.barh(i, 1, color="C2" if ok else "C3", height=0.7)
        ax.text(0.01, i, "%s/%s [%s]" % (c["anchor"], c["name"], c["kind"]),
                va="center", fontsize=7)
    ax.set_xlim(0, 1)
    ax.set_ylim(-0.5, max(0.5, len(claims) - 0.5))
    ax.invert_yaxis()
    ax.set_xticks([])
    ax.set_yticks([])
    fig.suptitle(title or ("%s: %s" % (report_dict.get("system", "report"),
                 "PASS" if report_dict.get("passed") else "FAIL")))
    fig.tight_layout()
    return fig


def save_figure(fig, path):
    fig.savefig(path, dpi=120)
    _plt().close(fig)
    return path
