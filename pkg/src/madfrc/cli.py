"""Command line entry points: experiments, policy evaluation, oracle suites."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def main(argv=None):
    parser = argparse.ArgumentParser(prog="madfrc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec and write CSV results")
    p_run.add_argument("--experiment", required=True, help="experiment spec JSON path")
    p_run.add_argument("--out", default=None, help="output directory (overrides spec)")

    p_eval = sub.add_parser("eval", help="evaluate a policy checkpoint on scenario seeds")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", required=True, help="system config JSON path")
    p_eval.add_argument("--seeds", default="0..4", help="inclusive range a..b or list a,b,c")
    p_eval.add_argument("--rollout", type=int, default=3)
    p_eval.add_argument("--out", default=None, help="write a JSON report here")

    p_orc = sub.add_parser("oracle", help="run a derived-value oracle suite")
    p_orc.add_argument("--suite", required=True)
    p_orc.add_argument("--out", default=None, help="directory for the expected-value file")

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "eval":
        return _cmd_eval(args)
    if args.command == "oracle":
        return _cmd_oracle(args)
    return 2


def _cmd_run(args):
    from .harness import ExperimentSpec, sweep

    spec = ExperimentSpec.from_json(args.experiment)
    if args.out:
        spec = type(spec)(**{**spec.__dict__, "out_dir": args.out})
    rows = sweep(spec)
    ok = sum(1 for r in rows if str(r.get("status", "")).startswith("ok"))
    print(f"wrote {len(rows)} rows ({ok} ok) to {Path(spec.out_dir) / 'results.csv'}")
    return 0


def _parse_seeds(text):
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(tok) for tok in text.split(",") if tok]


def _cmd_eval(args):
    from .harness import fast_ccp_opts, heldout_min_sinrs_policy
    from .nets import load_checkpoint
    from .scenario import config_from_json
    from .td3 import Td3Nets

    config = config_from_json(args.config)
    meta, nets_dict = load_checkpoint(args.checkpoint)
    nets = Td3Nets(
        actor=nets_dict["actor"], critic1=nets_dict["critic1"],
        critic2=nets_dict["critic2"], target_actor=nets_dict["target_actor"],
        target_critic1=nets_dict["target_critic1"],
        target_critic2=nets_dict["target_critic2"],
    )
    seeds = _parse_seeds(args.seeds)
    report = []
    for seed in seeds:
        evals = heldout_min_sinrs_policy(nets, config, seed, n_eval=1,
                                         rollout=args.rollout,
                                         ccp_opts=fast_ccp_opts())
        value = float(evals[0])
        report.append({"seed": seed, "min_sinr": value,
                       "min_sinr_db": 10.0 * np.log10(value) if value > 0 else None})
        print(f"seed {seed}: min-SINR {value:.6g}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
    return 0


def _cmd_oracle(args):
    from .oracles import run_suite

    result = run_suite(args.suite, args.out)
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
