"""Command-line entry points.

Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import engine
from .agent import FreyrManager
from .benchmark import heldout_seed, train_seeds
from .config import MANAGERS, RunConfig
from .managers import EnsureManager, FixedManager, GreedyManager
from .metrics import report
from .model import ConfigError
from .trainer import TRAIN_LOG_HEADER, load_checkpoint, save_checkpoint, train
from .workload import (
    desk_catalog, generate_poisson_trace, load_catalog, load_trace, rescale_trace,
    synthetic_catalog, write_catalog, write_trace,
)

log = logging.getLogger("harvestsim")

SWEEP_HEADER = "threshold,safe_rate,avg_slowdown,degraded_rate"
DEFAULT_THRESHOLDS = [round(0.1 * k, 1) for k in range(11)]


class UsageError(ConfigError):
    pass


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("HARVESTSIM_OUT") or "out"
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _catalog(rc: RunConfig):
    if rc.get("workload.catalog") is not None:
        return load_catalog(rc.path("workload.catalog"))
    if rc.get("workload.preset") == "desk":
        return desk_catalog()
    return synthetic_catalog(rc.get("workload.functions"), rc.get("seed"))


def _generate(rc: RunConfig, catalog, seed: int):
    tr = generate_poisson_trace(
        catalog, rc.get("workload.mean_iat"), rc.get("workload.calls"), seed,
        scale_range=(rc.get("workload.scale_min"), rc.get("workload.scale_max")))
    f = rc.get("workload.time_factor")
    return tr if f == 1.0 else rescale_trace(tr, f)


def eval_trace(rc: RunConfig):
    """The evaluation trace: the configured file, or one generated from the seed."""
    if rc.get("workload.trace") is not None:
        tr = load_trace(rc.path("workload.trace"), rc.path("workload.catalog"))
        f = rc.get("workload.time_factor")
        return tr if f == 1.0 else rescale_trace(tr, f)
    return _generate(rc, _catalog(rc), heldout_seed(rc.get("seed")))


def training_traces(rc: RunConfig):
    cat = _catalog(rc)
    return [_generate(rc, cat, s) for s in train_seeds(rc.get("seed"), rc.get("trainer.n_traces"))]


def build_manager(rc: RunConfig, name: str, checkpoint=None, threshold=None):
    cluster = rc.cluster()
    if name == "fixed":
        return FixedManager()
    if name == "greedy":
        return GreedyManager(cluster, rc.get("greedy.over_threshold"),
                             rc.get("greedy.under_threshold"))
    if name == "ensure":
        return EnsureManager(cluster, rc.get("ensure.degradation_factor"))
    if name == "freyr":
        ckpt = checkpoint or rc.path("freyr.checkpoint_path")
        if ckpt is None:
            raise ConfigError("manager freyr needs a checkpoint (--checkpoint or "
                              "freyr.checkpoint_path)")
        actor, critic = load_checkpoint(ckpt)
        return FreyrManager(actor, critic, cluster, rc.get("freyr.mode"), rc.get("seed"),
                            threshold=threshold)
    raise UsageError(f"unknown manager {name!r}; choose from {', '.join(MANAGERS)}")


def _load_rc(args, **extra) -> RunConfig:
    overrides = {"seed": getattr(args, "seed", None)}
    if getattr(args, "episodes", None) is not None:
        overrides["trainer.episodes"] = args.episodes
    overrides.update(extra)
    return RunConfig.load(getattr(args, "config", None), overrides)


def cmd_gen_trace(args) -> int:
    if args.calls < 1:
        raise UsageError("--calls must be >= 1")
    if args.mean_iat <= 0:
        raise UsageError("--mean-iat must be > 0")
    if args.functions < 1:
        raise UsageError("--functions must be >= 1")
    out = _out_dir(args)
    if args.catalog:
        cat = load_catalog(args.catalog)
    elif args.preset == "desk":
        cat = desk_catalog()
    else:
        cat = synthetic_catalog(args.functions, args.seed)
    tr = generate_poisson_trace(cat, args.mean_iat, args.calls, args.seed,
                                scale_range=(args.scale_min, args.scale_max))
    if args.time_factor != 1.0:
        tr = rescale_trace(tr, args.time_factor)
    note = f"seed={args.seed} calls={args.calls} mean_iat={args.mean_iat!r}"
    write_trace(tr, out / "trace.csv", note)
    write_catalog(cat, out / "catalog.csv", note)
    iat = tr.mean_iat()
    rps = len(tr) / tr.calls[-1].arrival_time_s if tr.calls[-1].arrival_time_s > 0 else float("inf")
    print(f"calls={len(tr)} functions={len(cat)} avg_iat_s={iat:.3f} reqs_per_s={rps:.3f}")
    print(f"wrote {out / 'trace.csv'} and {out / 'catalog.csv'}")
    return 0


def cmd_train(args) -> int:
    rc = _load_rc(args)
    out = _out_dir(args)
    actor = critic = None
    resume = args.checkpoint or rc.path("freyr.checkpoint_path")
    if resume is not None:
        actor, critic = load_checkpoint(resume)
    traces = training_traces(rc)
    ckpt_dir = out / "checkpoint"
    log_path = out / "train_log.csv"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write(f"# {rc.provenance()}\n{TRAIN_LOG_HEADER}\n")

        def on_episode(entry):
            fh.write(entry.csv_row() + "\n")
            fh.flush()
            if args.verbose:
                print(entry.csv_row())

        learner, logs = train(traces, rc.ppo(), rc.cluster(), actor, critic,
                              checkpoint_dir=ckpt_dir,
                              checkpoint_every=rc.get("trainer.checkpoint_every"),
                              on_episode=on_episode)
    if not logs:
        save_checkpoint(ckpt_dir, learner.actor, learner.critic)
    print(f"episodes={len(logs)} checkpoint={ckpt_dir} log={log_path}")
    if logs:
        k = max(1, len(logs) // 10)
        first = np.mean([e.cumulative_reward for e in logs[:k]])
        last = np.mean([e.cumulative_reward for e in logs[-k:]])
        print(f"mean reward first {k}: {first:.3f}  last {k}: {last:.3f}")
    return 0


def _write_report(rep, out: Path, prov: str, prefix: str = ""):
    (out / f"{prefix}report.csv").write_text(rep.rows_csv(prov), encoding="utf-8")
    (out / f"{prefix}summary.txt").write_text(rep.aggregates_text(prov), encoding="utf-8")
    (out / f"{prefix}cdf.csv").write_text(rep.cdf_csv(prov), encoding="utf-8")


def cmd_eval(args) -> int:
    rc = _load_rc(args, **({"manager": args.manager} if args.manager else {}))
    out = _out_dir(args)
    name = rc.get("manager")
    mgr = build_manager(rc, name, args.checkpoint)
    tr = eval_trace(rc)
    res = engine.run(tr, mgr, rc.cluster())
    rep = report(res.records, tr.catalog, rc.cluster())
    prov = f"{rc.provenance()} manager={name}"
    _write_report(rep, out, prov)
    if args.events:
        (out / "events.csv").write_text(res.event_log(), encoding="utf-8")
    agg = rep.aggregates()
    print(f"manager={name} invocations={agg['invocations']} avg_slowdown={agg['avg_slowdown']:.4f} "
          f"p99_latency_s={agg['p99_latency_s']:.3f} slo_violation_rate={agg['slo_violation_rate']:.4f}")
    return 0


def cmd_compare(args) -> int:
    rc = _load_rc(args)
    out = _out_dir(args)
    tr = eval_trace(rc)
    names = ["fixed", "greedy", "ensure"]
    if args.checkpoint or rc.get("freyr.checkpoint_path"):
        names.append("freyr")
    lines = [f"# {rc.provenance()}",
             "manager,avg_slowdown,p99_latency_s,p99_slowdown,max_slowdown,slo_violation_rate,"
             "share_harvest,share_accelerate,share_safeguard"]
    for name in names:
        res = engine.run(tr, build_manager(rc, name, args.checkpoint), rc.cluster())
        rep = report(res.records, tr.catalog, rc.cluster())
        _write_report(rep, out, f"{rc.provenance()} manager={name}", prefix=f"{name}_")
        a = rep.aggregates()
        lines.append(f"{name},{a['avg_slowdown']!r},{a['p99_latency_s']!r},{a['p99_slowdown']!r},"
                     f"{a['max_slowdown']!r},{a['slo_violation_rate']!r},{a['share_harvest']!r},"
                     f"{a['share_accelerate']!r},{a['share_safeguard']!r}")
        print(f"{name:7s} avg_slowdown={a['avg_slowdown']:.4f} p99_latency_s={a['p99_latency_s']:.3f} "
              f"max_slowdown={a['max_slowdown']:.3f}")
    (out / "comparison.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def parse_thresholds(text: str | None) -> list[float]:
    if not text:
        return list(DEFAULT_THRESHOLDS)
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--thresholds: cannot parse {text!r}") from None
    if not vals or any(not 0.0 <= v <= 1.0 for v in vals):
        raise UsageError("--thresholds values must lie in [0, 1]")
    return vals


def sweep_threshold(rc: RunConfig, thresholds, checkpoint=None):
    """Rows of (threshold, safe_rate, avg_slowdown, degraded_rate)."""
    tr = eval_trace(rc)
    cluster = rc.cluster()
    rows = []
    for th in thresholds:
        mgr = build_manager(rc, "freyr", checkpoint, threshold=th)
        res = engine.run(tr, mgr, cluster, log_events=False)
        rep = report(res.records, tr.catalog, cluster)
        rows.append((th, rep.safe_rate, rep.avg_slowdown, rep.slo_violation_rate))
    return rows


def cmd_sweep(args) -> int:
    thresholds = parse_thresholds(args.thresholds)
    rc = _load_rc(args)
    out = _out_dir(args)
    rows = sweep_threshold(rc, thresholds, args.checkpoint)
    lines = [f"# {rc.provenance()}", SWEEP_HEADER]
    lines += [f"{th!r},{s!r},{a!r},{d!r}" for th, s, a, d in rows]
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for th, s, a, d in rows:
        print(f"threshold={th:.2f} safe_rate={s:.4f} avg_slowdown={a:.4f} degraded_rate={d:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="harvestsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory (default $HARVESTSIM_OUT or ./out)")

    g = sub.add_parser("gen-trace", help="generate a Poisson trace and catalog")
    common(g, config=False)
    g.set_defaults(seed=0)
    g.add_argument("--calls", type=int, default=268)
    g.add_argument("--mean-iat", type=float, default=2.2)
    g.add_argument("--functions", type=int, default=10)
    g.add_argument("--preset", choices=["mixed", "desk"], default="mixed")
    g.add_argument("--catalog", help="reuse an existing catalog CSV")
    g.add_argument("--scale-min", type=float, default=0.5)
    g.add_argument("--scale-max", type=float, default=2.0)
    g.add_argument("--time-factor", type=float, default=1.0,
                   help="multiply arrival times, e.g. 1/60 to read minutes as seconds")
    g.set_defaults(func=cmd_gen_trace)

    t = sub.add_parser("train", help="train the learning manager")
    common(t)
    t.add_argument("--episodes", type=int)
    t.add_argument("--checkpoint", help="checkpoint directory to resume from")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate one manager on the eval trace")
    common(e)
    e.add_argument("--manager", choices=MANAGERS)
    e.add_argument("--checkpoint")
    e.add_argument("--events", action="store_true", help="also write the event log")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="evaluate all managers on the same trace")
    common(c)
    c.add_argument("--checkpoint")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", help="safeguard threshold sensitivity sweep")
    common(s)
    s.add_argument("--checkpoint")
    s.add_argument("--thresholds", help="comma-separated values in [0, 1]")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
