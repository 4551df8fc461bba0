"""Command-line entry points: gen, bench, train, replay-check, render.

Every command that writes a primary output (``--out``) also writes a run
manifest next to it (``<out>.manifest.json``, or ``--manifest PATH``). The
manifest records the command, the full flag snapshot, the master seed,
sha256 checksums of inputs and outputs, and wall-clock timing. Passing a
manifest to ``--config`` replays the run; the subcommand may then be
omitted. A plain JSON object of flag values is also accepted by
``--config``; flags given on the command line win over either.

Exit codes:

    0  success
    2  usage error (bad flags, agent/config mismatch)
    3  data error (unreadable or malformed dataset, trace, checkpoint)
    4  verification failure (replay-check found a violation)
    5  training divergence (non-finite loss or parameters)
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, backend
from .datagen import (
    KINDS,
    DatasetParseError,
    generate_dataset,
    load_dataset,
    record_seed,
    replay_record,
    save_dataset,
)
from .geometry import BinSpec
from .mcts import SearchConfig, plan_episode
from .policy import (
    CheckpointError,
    GreedyPolicy,
    HeuristicPolicy,
    LinearPolicy,
    RandomPolicy,
    TrainingDivergenceError,
    load_checkpoint,
    save_checkpoint,
)
from .sim import SimConfig, TraceParseError, read_trace, run_episode, trace_records, write_trace

log = logging.getLogger("alphabpp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY, EXIT_DIVERGED = 0, 2, 3, 4, 5
MANIFEST_SCHEMA = "alphabpp.manifest"
BENCH_SCHEMA = "alphabpp.bench"
AGENTS = ("random", "heuristic", "greedy-policy", "mcts")
PRIORS = ("heuristic", "random", "checkpoint")

# flags that steer the run's bookkeeping rather than its results
_NOT_CONFIG = {"config", "manifest", "command", "verbose", "func"}
# seed streams, one per command, so no two commands share random numbers
BENCH_COMPONENT = 1


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_text(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- command implementations ----------------------------------------------


def cmd_gen(args, io: dict) -> int:
    if args.count is None or args.count < 1:
        raise UsageError("gen needs --count >= 1")
    if not args.out:
        raise UsageError("gen needs --out")
    bin = BinSpec(*args.bin)
    ds = generate_dataset(args.kind, args.count, args.seed, bin, split=args.split, rs_length=args.rs_length,
                          extra_split_prob=args.extra_split_prob, jobs=args.jobs)
    try:
        save_dataset(ds, args.out)
    except OSError as exc:
        raise DataError(f"{args.out}: cannot write dataset: {exc}") from exc
    io["outputs"]["out"] = args.out
    print(f"wrote {len(ds.records)} {args.kind} records to {args.out}")
    return EXIT_OK


def _load(path):
    if not path:
        raise UsageError("--dataset is required")
    try:
        return load_dataset(path)
    except DatasetParseError as exc:
        raise DataError(str(exc)) from exc


def _load_ckpt(path):
    try:
        return load_checkpoint(path)
    except (CheckpointError, OSError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def _sim_cfg(args, bin: BinSpec) -> SimConfig:
    return SimConfig(bin=bin, buffer_size=args.buffer, orientations=args.orient)


def _bin_str(bin: BinSpec) -> str:
    return f"{bin.W}x{bin.L}x{bin.H}"


def _check_ckpt_matches(ck_cfg: SimConfig, cfg: SimConfig, path) -> None:
    if (ck_cfg.bin, ck_cfg.b, ck_cfg.k) != (cfg.bin, cfg.b, cfg.k):
        raise UsageError(
            f"checkpoint {path} was trained for bin {_bin_str(ck_cfg.bin)} b={ck_cfg.b} k={ck_cfg.k}, "
            f"run asks for bin {_bin_str(cfg.bin)} b={cfg.b} k={cfg.k}"
        )


def _bench_plan(args, ds):
    """Validate agent/flag combinations and build the per-record job description."""
    cfg = _sim_cfg(args, ds.bin)
    if args.agent == "mcts":
        if args.sims is None:
            raise UsageError("agent mcts needs --sims")
        if args.sequence_mode == "stochastic" and ds.kind != "rs":
            raise UsageError("stochastic sequence mode resamples from the RS item universe; use an RS dataset")
    else:
        for flag in ("sims", "prior"):
            if getattr(args, flag) is not None:
                raise UsageError(f"--{flag} only applies to agent mcts")
    needs_ckpt = args.agent == "greedy-policy" or (args.agent == "mcts" and args.prior == "checkpoint")
    params = None
    if needs_ckpt:
        if not args.checkpoint:
            raise UsageError(f"agent {args.agent} with this prior needs --checkpoint")
        params, ck_cfg = _load_ckpt(args.checkpoint)
        _check_ckpt_matches(ck_cfg, cfg, args.checkpoint)
    elif args.checkpoint:
        raise UsageError("--checkpoint is only used by greedy-policy or mcts --prior checkpoint")
    scfg = None
    if args.agent == "mcts":
        scfg = SearchConfig(simulations=args.sims, c_puct=args.c_puct, temperature=0.0, leaf_eval=args.leaf_eval,
                            sequence_mode=args.sequence_mode)
    return {"agent": args.agent, "prior": args.prior or "heuristic", "cfg": cfg, "scfg": scfg, "params": params,
            "seed": args.seed, "trace": bool(args.trace_dir)}


def _make_policy(name: str, params):
    if name == "random":
        return RandomPolicy()
    if name == "heuristic":
        return HeuristicPolicy()
    return LinearPolicy(params)


def _bench_one(job, rec):
    cfg = job["cfg"]
    rng = np.random.default_rng(record_seed(job["seed"], rec.id, component=BENCH_COMPONENT))
    extra = None
    agent = job["agent"]
    if agent == "random":
        res = run_episode(rec.items, RandomPolicy(), cfg, rng)
    elif agent == "heuristic":
        res = run_episode(rec.items, GreedyPolicy(HeuristicPolicy()), cfg, rng)
    elif agent == "greedy-policy":
        res = run_episode(rec.items, GreedyPolicy(LinearPolicy(job["params"])), cfg, rng)
    else:
        out = plan_episode(rec.items, _make_policy(job["prior"], job["params"]), job["scfg"], cfg, rng)
        res, extra = out.episode, out.trace_extra
    row = {
        "id": rec.id,
        "items": len(rec.items),
        "packed": res.packed_count,
        "utilization": res.utilization,
        "reward": res.total_reward,
    }
    rows = trace_records(res, cfg, extra) if job["trace"] else None
    return row, rows


def _bench_one_star(a):
    return _bench_one(*a)


def bench_table(report: dict) -> str:
    rows = report["rows"]
    lines = [
        f"agent={report['agent']} dataset={report['dataset']['kind']} n={len(rows)} "
        f"b={report['config']['buffer']} k={report['config']['orient']}",
        f"{'id':>6}  {'items':>5}  {'packed':>6}  {'util(%)':>7}",
    ]
    for r in rows:
        lines.append(f"{r['id']:>6}  {r['items']:>5}  {r['packed']:>6}  {100 * r['utilization']:>7.2f}")
    m = report["mean"]
    lines.append(f"{'mean':>6}  {m['items']:>5.1f}  {m['packed']:>6.1f}  {100 * m['utilization']:>7.2f}")
    lines.append(f"summary {m['packed']:.1f}/{100 * m['utilization']:.1f}%")
    return "\n".join(lines) + "\n"


def cmd_bench(args, io: dict) -> int:
    ds = _load(args.dataset)
    io["inputs"]["dataset"] = args.dataset
    if args.checkpoint:
        io["inputs"]["checkpoint"] = args.checkpoint
    job = _bench_plan(args, ds)
    records = sorted(ds.records, key=lambda r: r.id)
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_bench_one_star, [(job, r) for r in records]))
    else:
        results = [_bench_one(job, r) for r in records]
    rows = [r for r, _ in results]
    report = {
        "schema": BENCH_SCHEMA,
        "agent": args.agent,
        "config": _config_snapshot(args),
        "dataset": {"path": args.dataset, "kind": ds.kind, "count": len(ds.records)},
        "rows": rows,
        "mean": {
            "items": float(np.mean([r["items"] for r in rows])),
            "packed": float(np.mean([r["packed"] for r in rows])),
            "utilization": float(np.mean([r["utilization"] for r in rows])),
        },
    }
    table = bench_table(report)
    sys.stdout.write(table)
    if args.out:
        _write_text(args.out, _dump_json(report))
        io["outputs"]["out"] = args.out
        table_path = str(Path(args.out).with_suffix(".txt"))
        _write_text(table_path, table)
        io["outputs"]["table"] = table_path
    if args.trace_dir:
        for (row, trace) in results:
            path = str(Path(args.trace_dir) / f"trace_{row['id']:05d}.jsonl")
            Path(args.trace_dir).mkdir(parents=True, exist_ok=True)
            write_trace(path, trace)
            io["outputs"][f"trace_{row['id']}"] = path
    return EXIT_OK


def cmd_train(args, io: dict) -> int:
    from .training import TrainConfig, train

    ds = _load(args.dataset)
    io["inputs"]["dataset"] = args.dataset
    if not args.out:
        raise UsageError("train needs --out for the checkpoint")
    if args.episodes < 1:
        raise UsageError("--episodes must be >= 1")
    cfg = _sim_cfg(args, ds.bin)
    sims = 100 if args.sims is None else args.sims
    scfg = SearchConfig(simulations=sims, c_puct=args.c_puct, leaf_eval=args.leaf_eval,
                        filter_samples=args.filter, absolute_z=args.absolute_z)
    tcfg = TrainConfig(episodes=args.episodes, augment=args.augment == "on", lr=args.lr,
                       lr_halve_every=args.lr_halve_every, batch_size=args.batch,
                       updates_per_episode=args.updates, replay_capacity=args.capacity,
                       lam_p=args.lam_p, lam_v=args.lam_v, seed=args.seed)
    sequences = [r.items for r in sorted(ds.records, key=lambda r: r.id)]
    try:
        result = train(sequences, cfg, scfg, tcfg)
    except TrainingDivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    save_checkpoint(result.params, cfg, args.out)
    io["outputs"]["out"] = args.out
    curve_path = args.curve or str(Path(args.out).with_suffix(".curve.jsonl"))
    _write_text(curve_path, "".join(json.dumps(r) + "\n" for r in result.curve))
    io["outputs"]["curve"] = curve_path
    losses = [r["loss"] for r in result.curve if r["loss"] is not None]
    n = min(10, len(losses))
    if n:
        first, last = float(np.mean(losses[:n])), float(np.mean(losses[-n:]))
        print(f"episodes {len(result.curve)} updates {len(result.losses)} "
              f"loss first{n} {first:.4f} last{n} {last:.4f} ({100 * (1 - last / first):+.1f}% drop)")
    rewards = [r["reward"] for r in result.curve]
    print(f"mean episode reward {np.mean(rewards):.3f}; checkpoint {args.out}; curve {curve_path}")
    return EXIT_OK


def cmd_replay_check(args, io: dict) -> int:
    ds = _load(args.dataset)
    io["inputs"]["dataset"] = args.dataset
    if ds.kind not in ("cut1", "cut2"):
        raise UsageError(f"replay-check needs a CUT dataset with provenance, got kind {ds.kind!r}")
    reports = []
    failed = 0
    for rec in sorted(ds.records, key=lambda r: r.id):
        if args.trace_dir:
            rep, cfg, episode = replay_record(rec, trace=True)
            Path(args.trace_dir).mkdir(parents=True, exist_ok=True)
            path = str(Path(args.trace_dir) / f"trace_{rec.id:05d}.jsonl")
            write_trace(path, trace_records(episode, cfg))
            io["outputs"][f"trace_{rec.id}"] = path
        else:
            rep = replay_record(rec)
        reports.append(rep)
        if not rep.ok:
            failed += 1
            print(f"FAIL record {rep.record_id} step {rep.failed_step}: {rep.reason}", file=sys.stderr)
    print(f"replay-check {ds.kind}: {len(reports) - failed}/{len(reports)} records pass")
    if args.out:
        body = {
            "schema": "alphabpp.replay",
            "dataset": {"path": args.dataset, "kind": ds.kind, "count": len(ds.records)},
            "passed": len(reports) - failed,
            "failed": failed,
            "records": [vars(r) for r in reports],
        }
        _write_text(args.out, _dump_json(body))
        io["outputs"]["out"] = args.out
    return EXIT_OK if failed == 0 else EXIT_VERIFY


# -- rendering --------------------------------------------------------------


def trace_frames(header: dict, steps: list) -> list[tuple[str, np.ndarray]]:
    """(caption, height map) for the initial state and after every step."""
    frames = [("initial", np.asarray(header["initial_heightmap"], dtype=np.int64))]
    for s in steps:
        w, l, h = s["item"]
        caption = f"step {s['step']}: item {w}x{l}x{h} slot {s['slot']} o{s['orientation']} at ({s['x']},{s['y']})"
        frames.append((caption, np.asarray(s["heightmap"], dtype=np.int64)))
    return frames


def heatmap_text(hm: np.ndarray) -> str:
    width = max(2, len(str(int(hm.max(initial=0)))) + 1)
    head = " " * 4 + "".join(f"{y:>{width}}" for y in range(hm.shape[1]))
    rows = [head] + [f"x={x:<2}" + "".join(f"{int(v):>{width}}" for v in hm[x]) for x in range(hm.shape[0])]
    return "\n".join(rows)


def layers_text(hm: np.ndarray, H: int) -> str:
    """Cells whose column reaches above each z slice, as seen by the height map."""
    blocks = []
    for z in range(H):
        occ = hm > z
        blocks.append(f"z={z} ({int(occ.sum())}/{occ.size})")
        blocks.extend("  " + "".join("#" if c else "." for c in row) for row in occ)
    return "\n".join(blocks)


def _svg_grid(values: np.ndarray, vmax: int, ox: float, oy: float, cell: float, label: str) -> list[str]:
    out = [f'<text x="{ox}" y="{oy - 4}" font-size="10">{label}</text>']
    for x in range(values.shape[0]):
        for y in range(values.shape[1]):
            v = int(values[x, y])
            shade = 255 - int(round(200 * v / vmax)) if vmax else 255
            out.append(
                f'<rect x="{ox + y * cell}" y="{oy + x * cell}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},255)" stroke="#888" stroke-width="0.5"/>'
            )
    return out


def render_svg(frames, mode: str, H: int, cell: float = 12.0) -> str:
    parts = []
    y0 = 20.0
    width = 0.0
    for caption, hm in frames:
        W, L = hm.shape
        if mode == "heatmap":
            parts += _svg_grid(hm, H, 10, y0, cell, caption)
            for x in range(W):
                for y in range(L):
                    parts.append(
                        f'<text x="{10 + y * cell + cell / 2}" y="{y0 + x * cell + cell * 0.7}" font-size="{cell * 0.6}" '
                        f'text-anchor="middle">{int(hm[x, y])}</text>'
                    )
            width = max(width, 20 + L * cell)
        else:
            parts.append(f'<text x="10" y="{y0 - 4}" font-size="10">{caption}</text>')
            for z in range(H):
                parts += _svg_grid((hm > z).astype(int), 1, 10 + z * (L * cell + 8), y0 + 14, cell, f"z={z}")
            width = max(width, 20 + H * (L * cell + 8))
            y0 += 14
        y0 += W * cell + 24
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{y0:g}" font-family="monospace">'
    return "\n".join([head, *parts, "</svg>"]) + "\n"


def cmd_render(args, io: dict) -> int:
    if not args.trace:
        raise UsageError("render needs --trace")
    try:
        header, steps = read_trace(args.trace)
    except (TraceParseError, OSError) as exc:
        raise DataError(f"{args.trace}: {exc}") from exc
    io["inputs"]["trace"] = args.trace
    frames = trace_frames(header, steps)
    if args.frame is not None:
        if not -len(frames) <= args.frame < len(frames):
            raise UsageError(f"--frame {args.frame} out of range; trace has {len(frames)} frames")
        frames = [frames[args.frame]]
    H = int(header["bin"][2])
    if args.format == "svg":
        text = render_svg(frames, args.mode, H)
    else:
        body = heatmap_text if args.mode == "heatmap" else (lambda hm: layers_text(hm, H))
        text = "\n\n".join(f"[{cap}]\n{body(hm)}" for cap, hm in frames) + "\n"
    if args.out:
        _write_text(args.out, text)
        io["outputs"]["out"] = args.out
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def _globals_parser() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    g.add_argument("--jobs", type=int, default=1, help="worker processes; 1 is the deterministic reference path")
    g.add_argument("--config", help="JSON file of flag values, or a run manifest to replay")
    g.add_argument("--manifest", help="manifest path (default <out>.manifest.json)")
    g.add_argument("-v", "--verbose", action="store_true")
    return g


def _sim_flags(p):
    p.add_argument("--buffer", type=int, default=1, help="buffer size b")
    p.add_argument("--orient", type=int, default=0, choices=(0, 1), help="orientations k")


def _search_flags(p):
    p.add_argument("--sims", type=int, default=None, help="simulations per search step")
    p.add_argument("--c-puct", type=float, default=1.25)
    p.add_argument("--leaf-eval", choices=("rollout", "value"), default="rollout")


def build_parser() -> argparse.ArgumentParser:
    g = _globals_parser()
    parser = argparse.ArgumentParser(prog="alphabpp", parents=[g], description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen", parents=[g], help="generate a seeded dataset")
    p.add_argument("--kind", choices=KINDS, default="cut1")
    p.add_argument("--count", type=int)
    p.add_argument("--out")
    p.add_argument("--split", default="test")
    p.add_argument("--bin", type=int, nargs=3, default=[10, 10, 10], metavar=("W", "L", "H"))
    p.add_argument("--rs-length", type=int, default=50)
    p.add_argument("--extra-split-prob", type=float, default=0.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", parents=[g], help="benchmark an agent on a dataset")
    p.add_argument("--dataset")
    p.add_argument("--agent", choices=AGENTS, default="heuristic")
    _sim_flags(p)
    _search_flags(p)
    p.add_argument("--sequence-mode", choices=("known", "stochastic"), default="known")
    p.add_argument("--prior", choices=PRIORS, default=None, help="mcts prior / rollout policy (default heuristic)")
    p.add_argument("--checkpoint")
    p.add_argument("--out", help="JSON report; the text table goes next to it with a .txt suffix")
    p.add_argument("--trace-dir", help="write one episode trace per record here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train", parents=[g], help="self-play training of the linear policy")
    p.add_argument("--dataset")
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--out", help="checkpoint path")
    p.add_argument("--curve", help="learning curve JSONL (default <out>.curve.jsonl)")
    p.add_argument("--augment", choices=("on", "off"), default="off")
    _sim_flags(p)
    _search_flags(p)
    p.add_argument("--filter", action="store_true", help="drop episodes that do not beat the baseline")
    p.add_argument("--absolute-z", action="store_true")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lr-halve-every", type=int, default=200)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--updates", type=int, default=4, help="gradient steps per episode")
    p.add_argument("--capacity", type=int, default=5000, help="replay capacity")
    p.add_argument("--lam-p", type=float, default=1e-5)
    p.add_argument("--lam-v", type=float, default=1e-5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("replay-check", parents=[g], help="verify CUT records pack to 100%%")
    p.add_argument("--dataset")
    p.add_argument("--out")
    p.add_argument("--trace-dir")
    p.set_defaults(func=cmd_replay_check)

    p = sub.add_parser("render", parents=[g], help="render an episode trace")
    p.add_argument("--trace")
    p.add_argument("--mode", choices=("layers", "heatmap"), default="heatmap")
    p.add_argument("--format", choices=("text", "svg"), default="text")
    p.add_argument("--frame", type=int, default=None, help="0 is the initial state, -1 the last")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)
    return parser


def _read_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot read config: {exc}") from exc
    if not isinstance(data, dict):
        raise DataError(f"{path}: config must be a JSON object")
    if data.get("schema") == MANIFEST_SCHEMA:
        return data.get("command"), dict(data.get("config", {}))
    return data.pop("command", None), data


def _config_snapshot(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def parse_args(argv):
    parser = build_parser()
    pre, _ = _globals_parser().parse_known_args(argv)
    argv = list(argv)
    if pre.config:
        command, values = _read_config(pre.config)
        names = set(build_parser()._subparsers._group_actions[0].choices)
        if command and not any(a in names for a in argv):
            argv = [command] + argv
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        values = {k.replace("-", "_"): v for k, v in values.items()}
        unknown = set(values) - known
        if unknown:
            raise UsageError(f"{pre.config}: unknown settings for {args.command}: {sorted(unknown)}")
        sub.set_defaults(**{k: v for k, v in values.items() if k not in _NOT_CONFIG})
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise UsageError("no command given")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return args


def write_manifest(args, io: dict, started: float, wall: float) -> str | None:
    primary = io["outputs"].get("out")
    path = args.manifest or (f"{primary}.manifest.json" if primary else None)
    if path is None:
        return None

    def entry(p):
        return {"path": p, "sha256": sha256_file(p)}

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": 1,
        "package_version": __version__,
        "backend": backend(),
        "command": args.command,
        "config": _config_snapshot(args),
        "seed": args.seed,
        "inputs": {k: entry(p) for k, p in io["inputs"].items()},
        "outputs": {k: entry(p) for k, p in io["outputs"].items()},
        "timing": {
            "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
            "seconds": round(wall, 6),
        },
    }
    _write_text(path, _dump_json(manifest))
    return path


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:  # argparse already printed its message
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    io = {"inputs": {}, "outputs": {}}
    started = time.time()
    t0 = time.perf_counter()
    try:
        code = args.func(args, io)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    path = write_manifest(args, io, started, time.perf_counter() - t0)
    if path:
        log.info("manifest %s", path)
    return code


if __name__ == "__main__":
    sys.exit(main())
