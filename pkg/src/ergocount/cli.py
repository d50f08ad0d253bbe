"""Command line front end.

Every subcommand builds one kind of object, runs its verifier, and emits a
deterministic JSON report: no timestamps, no environment captures, all
numbers exact.  Identical configuration (including the seed) produces a
byte-identical report.  With --out DIR the report lands in DIR/report.json
with rendered figures beside it; without --out the report goes to stdout.

Exit codes: 0 when every asserted claim passed, 1 when any failed,
2 for usage errors, 3 when the requested object is refused as too large
to build honestly (the refusal carries the size estimate).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from gmpy2 import mpq

from .base_system import (
    BaseParams,
    BaseSystem,
    LifeFunction,
    SamplingPolicy,
    build_base,
    run_negative_controls,
    verify_base,
)
from .counting import run_oracle_suite
from .intervals import CapacityError, GridInterval, PeriodicIntervalSet
from .level_systems import build_level_k, run_level_negative_controls, verify_level_k
from .maximal import indicator_maximal, verify_maximal, weak_type_grid_report
from .pblock import build_pblock, estimate_pblock, verify_pblock
from .render import (
    ascii_rows,
    fig_analog_profile,
    fig_cascade,
    fig_claims,
    fig_distribution,
    fig_exponents,
    save_figure,
    system_rows,
)
from .report import VerificationReport, jsonable
from .serialize import SchemaError, dump_report, dumps_payload

DEFAULTS = {
    "base": {"M": 4, "nu_offset": 3, "N1": 11, "S": 0, "R": 0,
             "seed": 20260819, "endpoint_cap": 64, "random_count": 100},
    "levelk": {"M": 4, "k": 2, "K_S": 11, "R": 0, "seed": 20260819,
               "endpoint_cap": 2, "random_count": 3, "pair_budget": 4000},
    "pblock": {"p": 3, "budget_bits": 1 << 24, "tail_state_cap": 1 << 16,
               "cheb_max_k": 16, "eps_points": 10},
    "blowup": {"p": 3, "budget_bits": 1 << 24, "tail_state_cap": 1 << 16,
               "cheb_max_k": 16, "eps_points": 10},
    "analog": {"seed": 20260819, "n_sets": 100, "n_points": 100,
               "n_seqs": 500, "grid_sets": 3, "grid_exp": 12},
    "oracle-suite": {"seed": 20260819, "cases": 1000,
                     "walk_budget": 4_000_000},
    "render": {"target": "base", "M": 4, "nu_offset": 3, "N1": 11, "S": 0,
               "R": 0, "k": 2, "K_S": 11, "width": 80},
}


def load_config(command: str, path, seed=None) -> dict:
    cfg = dict(DEFAULTS[command])
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        if not isinstance(user, dict):
            raise SchemaError("config must be a JSON object")
        unknown = set(user) - set(cfg)
        if unknown:
            raise SchemaError("unknown config keys for %s: %s"
                              % (command, ", ".join(sorted(unknown))))
        cfg.update(user)
    if seed is not None:
        if "seed" not in cfg:
            raise SchemaError("the %s command takes no seed" % command)
        cfg["seed"] = seed
    return cfg


def _build_base_from(cfg) -> BaseSystem:
    return build_base(BaseParams(
        M=cfg["M"], nu=LifeFunction.affine(cfg["nu_offset"]),
        N1=cfg["N1"], S=cfg["S"], I=GridInterval(0, cfg["R"])))


def _policy(cfg) -> SamplingPolicy:
    return SamplingPolicy(endpoint_cap=cfg["endpoint_cap"],
                          random_count=cfg["random_count"],
                          seed=cfg["seed"])


# each runner returns (report, figures) where figures maps filename stem
# to a zero-argument figure factory, so nothing renders without --out


def run_base(cfg):
    sys_ = _build_base_from(cfg)
    rep = verify_base(sys_, policy=_policy(cfg))
    rep.extend(run_negative_controls(sys_))
    rows = system_rows(sys_)
    figures = {
        "cascade": lambda: fig_cascade(rows, f=sys_.f, title="cascade"),
        "claims": lambda: fig_claims(rep.to_dict()),
    }
    return rep, figures, ascii_rows(rows)


def run_levelk(cfg):
    sys_ = build_level_k(GridInterval(0, cfg["R"]), cfg["k"], cfg["K_S"],
                         cfg["M"])
    rep = verify_level_k(sys_, policy=_policy(cfg),
                         pair_budget=cfg["pair_budget"])
    rep.extend(run_level_negative_controls(sys_))
    rows = system_rows(sys_)
    figures = {
        "cascade": lambda: fig_cascade(rows, f=sys_.f,
                                       title="level-%d cascade" % cfg["k"]),
        "claims": lambda: fig_claims(rep.to_dict()),
    }
    return rep, figures, ascii_rows(rows)


def _pblock_figures(block, rep):
    figures = {"exponents": lambda: fig_exponents(block.estimate),
               "claims": lambda: fig_claims(rep.to_dict())}
    if block.tail is not None:
        from .pblock import sum_distribution
        pr = block.params
        figures["distribution"] = lambda: fig_distribution(
            sum_distribution(pr.M, pr.k), threshold=pr.threshold,
            title="sum law at scale %d" % pr.p)
    return figures


def run_pblock(cfg, relaxed=False, estimate_only=False):
    block = build_pblock(cfg["p"], relaxed=relaxed,
                         estimate_only=estimate_only,
                         budget_bits=cfg["budget_bits"],
                         tail_state_cap=cfg["tail_state_cap"])
    rep = verify_pblock(block, cheb_max_k=cfg["cheb_max_k"],
                        eps_points=cfg["eps_points"])
    return rep, _pblock_figures(block, rep), None


def run_blowup(cfg):
    # the full relaxed certificate: lineages, witnesses, chain inequality
    return run_pblock(cfg, relaxed=True)


def run_analog(cfg):
    rep = verify_maximal(seed=cfg["seed"], n_sets=cfg["n_sets"],
                         n_points=cfg["n_points"], n_seqs=cfg["n_seqs"],
                         grid_sets=cfg["grid_sets"],
                         grid_exp=cfg["grid_exp"])
    half = PeriodicIntervalSet.from_interval(0, mpq(1, 2))
    grid = weak_type_grid_report(half, grid_exp=8)

    def profile():
        xs = [mpq(i, 256) for i in range(1, 257)]
        return fig_analog_profile(
            xs, [indicator_maximal(half, x) for x in xs])

    figures = {"profile": profile,
               "claims": lambda: fig_claims(rep.to_dict())}
    rep.add("weak-type-grid", "cli-grid-snapshot", "exact",
            grid["all_hold"], grid_exp=8,
            empirical_l2_constant=grid["empirical_l2_constant"])
    return rep, figures, None


def run_oracle(cfg):
    res = run_oracle_suite(seed=cfg["seed"], cases=cfg["cases"],
                           walk_budget=cfg["walk_budget"])
    rep = VerificationReport("oracle-suite", cfg)
    rep.add("oracle-agreement", "random-instances", "sampled", res["pass"],
            cases=res["cases"], walk_steps=res["walk_steps"],
            mismatches=res["mismatches"])
    return rep, {"claims": lambda: fig_claims(rep.to_dict())}, None


def run_render(cfg):
    # draw without verifying; the report only records what was drawn
    if cfg["target"] == "base":
        sys_ = _build_base_from(cfg)
    elif cfg["target"] == "levelk":
        sys_ = build_level_k(GridInterval(0, cfg["R"]), cfg["k"],
                             cfg["K_S"], cfg["M"])
    else:
        raise SchemaError("render target must be base or levelk")
    rows = system_rows(sys_)
    rep = VerificationReport("render", cfg)
    rep.add("determinism", "render-input-built", "exact", True,
            target=cfg["target"], rows=len(rows))
    figures = {"cascade": lambda: fig_cascade(rows, f=sys_.f,
                                              title=cfg["target"])}
    return rep, figures, ascii_rows(rows, width=cfg["width"])


RUNNERS = {
    "base": run_base,
    "levelk": run_levelk,
    "blowup": run_blowup,
    "analog": run_analog,
    "oracle-suite": run_oracle,
    "render": run_render,
}


def emit(rep, figures, ascii_text, out):
    text = dump_report(rep)
    if out is None:
        # keep stdout parseable: the report is the only thing written there
        sys.stdout.write(text)
        for line in rep.summary_lines():
            print(line, file=sys.stderr)
        return 0 if rep.passed else 1
    else:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(text)
        written = ["report.json"]
        for stem, factory in figures.items():
            save_figure(factory(), out_dir / ("%s.png" % stem))
            written.append("%s.png" % stem)
        if ascii_text is not None:
            (out_dir / "cascade.txt").write_text(ascii_text + "\n")
            written.append("cascade.txt")
        print("wrote %s" % ", ".join(sorted(written)))
    for line in rep.summary_lines():
        print(line)
    return 0 if rep.passed else 1


def build_parser():
    ap = argparse.ArgumentParser(
        prog="ergocount",
        description="exact construction and verification of "
                    "counting-operator counterexamples")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, blurb in (
            ("base", "one retention cascade and its certificate"),
            ("levelk", "nested level-k system and its certificate"),
            ("pblock", "scale-p block (honest unless told otherwise)"),
            ("blowup", "relaxed scale block with counting witnesses"),
            ("analog", "continuous one-sided maximal analogs"),
            ("oracle-suite", "randomized counting oracle cross-check"),
            ("render", "draw a system without verifying it")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", help="JSON file overriding defaults")
        p.add_argument("--seed", type=int, help="sampling seed override")
        p.add_argument("--out", help="directory for report and figures")
        if name == "pblock":
            p.add_argument("--relaxed", action="store_true",
                           help="materialize the reduced-grid lineages")
            p.add_argument("--estimate-only", action="store_true",
                           help="sizes and laws only, no geometry")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.seed)
    except (SchemaError, OSError, json.JSONDecodeError) as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2

    try:
        if args.command == "pblock":
            rep, figures, ascii_text = run_pblock(
                cfg, relaxed=args.relaxed, estimate_only=args.estimate_only)
        else:
            rep, figures, ascii_text = RUNNERS[args.command](cfg)
    except CapacityError as e:
        payload = {"error": str(e).split(";")[0], "config": jsonable(cfg)}
        if "p" in cfg:
            payload["estimate"] = jsonable(estimate_pblock(cfg["p"]))
        sys.stdout.write(dumps_payload("refusal", payload))
        return 3
    except (SchemaError, ValueError) as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2

    return emit(rep, figures, ascii_text, args.out)


if __name__ == "__main__":
    sys.exit(main())
