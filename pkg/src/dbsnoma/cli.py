"""Command-line entry point: ``dbsnoma run | summarize | dump-channel``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import campaign
from .channel import dump_channel, trial_channel
from .errors import DbsNomaError
from .params import SystemParams, load_params

log = logging.getLogger("dbsnoma")


def _cmd_run(args) -> int:
    config = campaign.load_config(args.config)
    if args.seed is not None:
        config = campaign.CampaignConfig(config.params.replace(seed=args.seed), config.methods,
                                         config.sweep_axis, config.sweep_values, config.trials)
    if args.trials is not None:
        config = campaign.CampaignConfig(config.params, config.methods, config.sweep_axis,
                                         config.sweep_values, args.trials)

    def progress(done, total):
        if not args.quiet and (done == total or done % max(1, total // 20) == 0):
            print(f"\r{done}/{total} trials", end="" if done < total else "\n", file=sys.stderr)

    rows = campaign.run_campaign(config, workers=args.workers, timing=args.timing, progress=progress)
    campaign.write_csv(rows, args.output)
    failed = sum(not r["audit_ok"] for r in rows)
    if not args.quiet:
        print(campaign.format_summary(campaign.summarize(rows, config.params.num_subcarriers)))
    if failed:
        log.warning("%d of %d rows failed the audit", failed, len(rows))
        return 0 if args.tolerate_failures else 1
    return 0


def _cmd_summarize(args) -> int:
    rows = campaign.read_csv(args.csv)
    summary = campaign.summarize(rows)
    if args.json:
        print(json.dumps([vars(s) for s in summary], indent=2))
    else:
        print(campaign.format_summary(summary))
    return 0


def _cmd_dump_channel(args) -> int:
    params = load_params(args.config) if args.config else SystemParams()
    if args.seed is not None:
        params = params.replace(seed=args.seed)
    dump_channel(trial_channel(params, args.trial), args.output, seed=params.seed, trial=args.trial)
    return 0


def _cmd_oracle(args) -> int:
    """Greedy OMA against exhaustive search on small random instances."""
    params = SystemParams(num_users=args.users, num_subcarriers=args.subcarriers,
                          num_rrh=args.rrhs, seed=args.seed)
    report = campaign.gap_report(campaign.greedy_gap_study(params, args.instances))
    print(json.dumps(report, indent=2))
    return 0 if report["greedy_below_optimum"] == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbsnoma", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{run,summarize,dump-channel}")

    run = sub.add_parser("run", help="run a Monte Carlo campaign and write a CSV")
    run.add_argument("config", help="campaign JSON file")
    run.add_argument("-o", "--output", required=True, help="CSV output path")
    run.add_argument("-j", "--workers", type=int, default=1)
    run.add_argument("--seed", type=int, help="override the configured seed")
    run.add_argument("--trials", type=int, help="override the number of trials")
    run.add_argument("--timing", action="store_true", help="record wall time per row")
    run.add_argument("--tolerate-failures", action="store_true",
                     help="exit 0 even when some trials fail the audit")
    run.add_argument("-q", "--quiet", action="store_true")
    run.set_defaults(func=_cmd_run)

    summ = sub.add_parser("summarize", help="aggregate a campaign CSV")
    summ.add_argument("csv")
    summ.add_argument("--json", action="store_true")
    summ.set_defaults(func=_cmd_summarize)

    dump = sub.add_parser("dump-channel", help="export one trial's channel tensor (.npz or .csv)")
    dump.add_argument("output")
    dump.add_argument("--config", help="system parameter JSON file")
    dump.add_argument("--trial", type=int, default=0)
    dump.add_argument("--seed", type=int)
    dump.set_defaults(func=_cmd_dump_channel)

    oracle = sub.add_parser("oracle")  # undocumented: acceptance reruns
    oracle.add_argument("--instances", type=int, default=1000)
    oracle.add_argument("--users", type=int, default=3)
    oracle.add_argument("--subcarriers", type=int, default=6)
    oracle.add_argument("--rrhs", type=int, default=2)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DbsNomaError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
