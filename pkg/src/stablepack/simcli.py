"""Experiment harness and command line interface.

Reproducible item streams, episode execution with or without
rearrangement, the validation-cost benchmark and report export.  All
randomness derives from per-episode seeds, so serial and parallel runs
produce identical reports (wall-clock timings aside).

Subcommands: ``pack`` runs packing episodes, ``srp-eval`` compares paired
episodes with and without rearrangement, ``bench-ssv`` measures
validation cost against a rebuild-from-scratch comparator, and
``gen-stream`` writes item streams to disk.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import random
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .binstate import (
    BinState,
    Item,
    Placement,
    apply_pack,
    item_from_json,
    item_to_json,
    new_bin,
    pack_order,
    rebuild,
    state_diff,
    state_to_json,
    utilization,
)
from .errors import HeightOverflowError, InconsistentStateError
from .geometry import Rect2, polygon_contains_polygon
from .placement import (
    BridgePolicyClient,
    candidate_to_json,
    enumerate_candidates,
    mask,
    policy_select,
)
from .srp import SrpConfig, SrpFailure, apply_plan, plan
from .stability import geometric_support_polygon, validate

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class StreamSpec:
    """Item stream family description.

    The default family is every (w, d, h) with each dim in
    [dim_low, dim_high], 64 size classes at the defaults; the same-height
    variant pins h to one class.  ``sampling`` is "iid" (independent
    draws) or "block" (without replacement within rolling blocks of the
    whole family).
    """

    kind: str = "rs"  # "rs" | "rs_same_height"
    bin_dims: tuple[int, int, int] = (10, 10, 10)
    length: int = 500
    count: int = 1000
    seed: int = 0
    delta_cog: float = 0.1
    dim_low: int = 2
    dim_high: int = 5
    same_height: int = 3
    sampling: str = "iid"

    def __post_init__(self):
        if self.kind not in ("rs", "rs_same_height"):
            raise ValueError(f"unknown stream kind {self.kind!r}")
        if self.sampling not in ("iid", "block"):
            raise ValueError(f"unknown sampling mode {self.sampling!r}")

    def classes(self) -> list[tuple[int, int, int]]:
        span = range(self.dim_low, self.dim_high + 1)
        if self.kind == "rs_same_height":
            return [(w, d, self.same_height) for w in span for d in span]
        return list(itertools.product(span, repeat=3))


def stream_seed(spec: StreamSpec, index: int) -> int:
    return spec.seed * 1_000_003 + index


def gen_stream(spec: StreamSpec, index: int = 0) -> list[Item]:
    """One seeded item stream; identical ids and dims for identical inputs."""
    rng = random.Random(stream_seed(spec, index))
    classes = spec.classes()
    dims: list[tuple[int, int, int]] = []
    if spec.sampling == "iid":
        dims = [classes[rng.randrange(len(classes))] for _ in range(spec.length)]
    else:
        while len(dims) < spec.length:
            block = classes[:]
            rng.shuffle(block)
            dims.extend(block)
        dims = dims[: spec.length]
    return [Item(i, *d) for i, d in enumerate(dims)]


def write_stream(items: list[Item], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item_to_json(item)) + "\n")


def read_stream(path: Path) -> list[Item]:
    with open(path, "r", encoding="utf-8") as fh:
        return [item_from_json(json.loads(line)) for line in fh if line.strip()]


@dataclass
class EpisodeReport:
    episode: int
    seed: int
    mode: str
    utilization: float
    items_packed: int
    operation_count: int
    srp_invocations: int
    srp_successes: int
    mcts_success_flags: list[bool] = field(default_factory=list)
    plan_raw_lengths: list[int] = field(default_factory=list)
    plan_refined_lengths: list[int] = field(default_factory=list)
    plans: list[dict] = field(default_factory=list)
    revalidation_checks: int = 0
    revalidation_failures: int = 0
    conservativeness_checks: int = 0
    conservativeness_failures: int = 0
    terminated: str = "stream_exhausted"
    timing_samples: list[list[float]] = field(default_factory=list)
    schema_version: int = REPORT_SCHEMA_VERSION


@dataclass(frozen=True)
class SimConfig:
    bin_dims: tuple[int, int, int] = (10, 10, 10)
    delta_cog: float = 0.1
    mode: str = "no_srp"  # "no_srp" | "srp"
    policy: str = "builtin"  # "builtin" | "random" | "bridge:HOST:PORT"
    episodes: int = 100
    seq_len: int = 50
    seed: int = 0
    t_uti: float = 0.8
    max_nodes: int = 100
    max_branch: int = 3
    max_depth: int = 6
    eta: float = 1.0
    w_v: float = 5.0
    staging_capacity: int = 6
    shrink: int = 0
    stream_kind: str = "rs"
    sampling: str = "iid"
    same_height: int = 3
    workers: int = 1

    def srp_config(self) -> SrpConfig:
        return SrpConfig(
            max_nodes=self.max_nodes,
            max_branch=self.max_branch,
            max_depth=self.max_depth,
            eta=self.eta,
            w_v=self.w_v,
            t_uti=self.t_uti,
            staging_capacity=self.staging_capacity,
        )

    def stream_spec(self) -> StreamSpec:
        return StreamSpec(
            kind=self.stream_kind,
            bin_dims=self.bin_dims,
            length=self.seq_len,
            count=self.episodes,
            seed=self.seed,
            delta_cog=self.delta_cog,
            same_height=self.same_height,
            sampling=self.sampling,
        )


class RandomScoreProvider:
    """Uniform random scores over the candidates; with masking this picks
    uniformly among the stable ones (the random-stable policy)."""

    def __init__(self, rng: random.Random):
        self.rng = rng

    def score_candidates(self, state, item, candidates):
        return [self.rng.random() for _ in candidates]

    def state_value(self, state, item):
        return None


def _make_provider(policy: str, rng: random.Random):
    if policy == "builtin":
        return None
    if policy == "random":
        return RandomScoreProvider(rng)
    if policy.startswith("bridge:"):
        return BridgePolicyClient(policy.split(":", 1)[1])
    raise ValueError(f"unknown policy {policy!r}")


def _verify_rebuild(state: BinState) -> None:
    oracle = rebuild(pack_order(state), state.dims, state.delta_cog)
    diff = state_diff(state, oracle)
    if diff:
        raise InconsistentStateError(f"incremental state diverged from rebuild: {diff}")


def _conservativeness_ok(state: BinState, item: Item, placement: Placement, polygon) -> bool:
    fp = Rect2(placement.x, placement.y, item.w, item.d)
    geometric = geometric_support_polygon(state, fp, placement.z)
    return polygon_contains_polygon(geometric, polygon)


def run_episode(
    stream: list[Item],
    mode: str,
    cfg: SimConfig,
    seed: int,
    verify_rebuild: bool = False,
) -> EpisodeReport:
    """Pack one stream.

    Per item: enumerate, mask, select, pack; every executed placement is
    re-validated first (defense in depth).  An empty mask ends a no_srp
    episode; in srp mode it triggers rearrangement planning, and the
    episode ends on planning failure or once the utilization target is
    reached.  With verify_rebuild every executed operation is checked
    bit-exactly against the rebuild oracle.
    """
    if mode not in ("no_srp", "srp"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    provider = _make_provider(cfg.policy, rng)
    srp_cfg = cfg.srp_config()
    state = new_bin(cfg.bin_dims, cfg.delta_cog)
    report = EpisodeReport(
        episode=0, seed=seed, mode=mode, utilization=0.0,
        items_packed=0, operation_count=0, srp_invocations=0, srp_successes=0,
    )

    def checked_pack(current: BinState, item: Item, cand) -> BinState:
        check = validate(current, item, (cand.x, cand.y), shrink=cfg.shrink)
        report.revalidation_checks += 1
        ok = (
            check.valid
            and check.support_height == cand.z
            and check.support_polygon == cand.result.support_polygon
        )
        if not ok:
            report.revalidation_failures += 1
            raise InconsistentStateError(
                f"re-validation of item {item.id!r} at ({cand.x}, {cand.y}) disagreed"
            )
        report.conservativeness_checks += 1
        if not _conservativeness_ok(current, item, Placement(cand.x, cand.y, cand.z), check.support_polygon):
            report.conservativeness_failures += 1
            raise InconsistentStateError(
                f"support polygon for item {item.id!r} exceeds the geometric contact hull"
            )
        nxt = apply_pack(current, item, Placement(cand.x, cand.y, cand.z), check.support_polygon)
        if verify_rebuild:
            _verify_rebuild(nxt)
        return nxt

    def plan_step(current: BinState, op) -> None:
        report.revalidation_checks += 1
        if verify_rebuild:
            _verify_rebuild(current)

    for item in stream:
        t0 = time.perf_counter()
        candidates = enumerate_candidates(state, item, shrink=cfg.shrink)
        report.timing_samples.append([len(state.packed), time.perf_counter() - t0])
        stable = mask(candidates)
        if stable:
            decision = policy_select(state, item, candidates, provider)
            state = checked_pack(state, item, candidates[decision.chosen])
            report.operation_count += 1
            continue
        if mode == "no_srp":
            report.terminated = "no_stable_placement"
            break
        report.srp_invocations += 1
        outcome = plan(state, item, srp_cfg, seed=rng.randrange(2**32), provider=provider)
        if isinstance(outcome, SrpFailure):
            report.mcts_success_flags.append(False)
            report.terminated = "srp_failure"
            break
        report.mcts_success_flags.append(True)
        report.srp_successes += 1
        report.plan_raw_lengths.append(outcome.raw_length)
        report.plan_refined_lengths.append(outcome.refined_length)
        report.plans.append(outcome.to_json())
        state = apply_plan(state, outcome, item, on_step=plan_step)
        report.operation_count += len(outcome.operations)
        if utilization(state) >= cfg.t_uti:
            report.terminated = "target_utilization"
            break

    report.utilization = utilization(state)
    report.items_packed = len(state.packed)
    if provider is not None and hasattr(provider, "close"):
        provider.close()
    return report


def _episode_task(args: tuple) -> EpisodeReport:
    cfg_doc, mode, index, verify = args
    cfg = SimConfig(**{**cfg_doc, "bin_dims": tuple(cfg_doc["bin_dims"])})
    stream = gen_stream(cfg.stream_spec(), index)
    report = run_episode(stream, mode, cfg, seed=stream_seed(cfg.stream_spec(), index), verify_rebuild=verify)
    report.episode = index
    return report


def run_batch(cfg: SimConfig, mode: str | None = None, verify_rebuild: bool = False) -> list[EpisodeReport]:
    """Run cfg.episodes independent episodes, optionally on a worker pool."""
    mode = mode or cfg.mode
    cfg_doc = asdict(cfg)
    tasks = [(cfg_doc, mode, i, verify_rebuild) for i in range(cfg.episodes)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_episode_task, tasks))
    return [_episode_task(t) for t in tasks]


# ---------------------------------------------------------------------------
# Validation-cost benchmark
# ---------------------------------------------------------------------------


@dataclass
class TimingBucket:
    lo: int
    hi: int
    count: int
    mean_s: float
    std_s: float


@dataclass
class BenchResult:
    kind: str
    samples_incremental: list[list[float]]
    samples_rebuild: list[list[float]]
    buckets_incremental: list[TimingBucket] = field(default_factory=list)
    buckets_rebuild: list[TimingBucket] = field(default_factory=list)

    def mean_over(self, samples: str, lo: int, hi: int | None = None) -> float:
        rows = getattr(self, samples)
        vals = [dt for n, dt in rows if n >= lo and (hi is None or n <= hi)]
        return statistics.fmean(vals) if vals else float("nan")


def _bucketize(samples: list[list[float]], width: int) -> list[TimingBucket]:
    groups: dict[int, list[float]] = {}
    for n, dt in samples:
        groups.setdefault(int(n) // width, []).append(dt)
    out = []
    for b in sorted(groups):
        vals = groups[b]
        out.append(
            TimingBucket(
                lo=b * width,
                hi=b * width + width - 1,
                count=len(vals),
                mean_s=statistics.fmean(vals),
                std_s=statistics.pstdev(vals) if len(vals) > 1 else 0.0,
            )
        )
    return out


def grid_positions(bin_dims, item: Item, stride: int = 1) -> list[tuple[int, int]]:
    """Pre-defined candidate grid for an item: every in-bounds lower
    corner, optionally strided.  The count depends on the item only, not
    on the bin contents."""
    return [
        (x, y)
        for x in range(0, bin_dims[0] - item.w + 1, stride)
        for y in range(0, bin_dims[1] - item.d + 1, stride)
    ]


def bench_validation(
    spec: StreamSpec,
    stride: int = 1,
    comparator: bool = True,
    comparator_every: int = 1,
    bucket_width: int = 3,
) -> BenchResult:
    """Replay random-stable packing, timing full-candidate-set validation.

    Items with no stable position are skipped, never ending the episode.
    The incremental path validates against maintained maps; the
    comparator pays for rebuilding the maps from the packed list first,
    the cost of having no incremental structure.  Timings are bucketed by
    packed-item count.
    """
    samples_inc: list[list[float]] = []
    samples_rb: list[list[float]] = []
    for index in range(spec.count):
        stream = gen_stream(spec, index)
        rng = random.Random(stream_seed(spec, index) + 1)
        state = new_bin(spec.bin_dims, spec.delta_cog)
        for step, item in enumerate(stream):
            positions = grid_positions(spec.bin_dims, item, stride)
            n_packed = len(state.packed)

            t0 = time.perf_counter()
            results = []
            for xy in positions:
                try:
                    results.append((xy, validate(state, item, xy)))
                except HeightOverflowError:
                    continue
            samples_inc.append([n_packed, time.perf_counter() - t0])

            if comparator and step % comparator_every == 0:
                t0 = time.perf_counter()
                replayed = rebuild(pack_order(state), state.dims, state.delta_cog)
                for xy in positions:
                    try:
                        validate(replayed, item, xy)
                    except HeightOverflowError:
                        continue
                samples_rb.append([n_packed, time.perf_counter() - t0])

            stable = [(xy, r) for xy, r in results if r.valid]
            if not stable:
                continue
            xy, result = stable[rng.randrange(len(stable))]
            state = apply_pack(
                state, item, Placement(xy[0], xy[1], result.support_height), result.support_polygon
            )
    return BenchResult(
        kind=spec.kind,
        samples_incremental=samples_inc,
        samples_rebuild=samples_rb,
        buckets_incremental=_bucketize(samples_inc, bucket_width),
        buckets_rebuild=_bucketize(samples_rb, bucket_width),
    )


# ---------------------------------------------------------------------------
# Report export
# ---------------------------------------------------------------------------

_CSV_LIST_FIELDS = {
    "mcts_success_flags",
    "plan_raw_lengths",
    "plan_refined_lengths",
    "plans",
    "timing_samples",
}


def export_report(reports: list[EpisodeReport], out_dir, fmt: str = "csv") -> list[Path]:
    """Write episode reports; one row per episode.  JSON round-trips."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        path = out_dir / "episodes.json"
        doc = {"schema_version": REPORT_SCHEMA_VERSION, "episodes": [asdict(r) for r in reports]}
        path.write_text(json.dumps(doc, indent=1), encoding="utf-8")
        written.append(path)
    elif fmt == "csv":
        path = out_dir / "episodes.csv"
        fields = [f.name for f in EpisodeReport.__dataclass_fields__.values()]  # type: ignore[attr-defined]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for r in reports:
                row = asdict(r)
                for key in _CSV_LIST_FIELDS:
                    row[key] = json.dumps(row[key])
                writer.writerow(row)
        written.append(path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return written


def import_reports(path) -> list[EpisodeReport]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [EpisodeReport(**entry) for entry in doc["episodes"]]


def export_timing(result: BenchResult, out_dir, fmt: str = "csv") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    tables = {
        f"timing_incremental_{result.kind}": result.buckets_incremental,
        f"timing_rebuild_{result.kind}": result.buckets_rebuild,
    }
    for name, buckets in tables.items():
        if fmt == "json":
            path = out_dir / f"{name}.json"
            path.write_text(json.dumps([asdict(b) for b in buckets], indent=1), encoding="utf-8")
        else:
            path = out_dir / f"{name}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=["lo", "hi", "count", "mean_s", "std_s"])
                writer.writeheader()
                for b in buckets:
                    writer.writerow(asdict(b))
        written.append(path)
    return written


def export_policy_fixtures(cfg: SimConfig, path, max_fixtures: int = 200) -> int:
    """Record builtin policy decisions as a conformance corpus.

    Each line holds the state, the arriving item, the candidate list and
    the builtin decision, enough for an external provider to reproduce
    the choice through the wire schema alone.
    """
    written = 0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for index in range(cfg.episodes):
            if written >= max_fixtures:
                break
            stream = gen_stream(cfg.stream_spec(), index)
            state = new_bin(cfg.bin_dims, cfg.delta_cog)
            for item in stream:
                if written >= max_fixtures:
                    break
                candidates = enumerate_candidates(state, item, shrink=cfg.shrink)
                if not mask(candidates):
                    break
                decision = policy_select(state, item, candidates)
                # strict-JSON scores: masked candidates carry null, not -Infinity
                wire_scores = [s if s == s and abs(s) != float("inf") else None for s in decision.scores]
                fh.write(
                    json.dumps(
                        {
                            "state": state_to_json(state),
                            "item": item_to_json(item),
                            "candidates": [candidate_to_json(c) for c in candidates],
                            "chosen": decision.chosen,
                            "scores": wire_scores,
                        }
                    )
                    + "\n"
                )
                written += 1
                chosen = candidates[decision.chosen]
                state = apply_pack(
                    state, item, Placement(chosen.x, chosen.y, chosen.z), chosen.result.support_polygon
                )
    return written


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _parse_bin(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"bin must look like 10x10x10, got {text!r}")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if p.suffix == ".toml":
        try:
            import tomllib
        except ImportError:  # Python 3.10
            import tomli as tomllib
        return tomllib.loads(p.read_text(encoding="utf-8"))
    return json.loads(p.read_text(encoding="utf-8"))


_FLAG_TO_FIELD = {
    "bin": "bin_dims",
    "delta_cog": "delta_cog",
    "episodes": "episodes",
    "seq_len": "seq_len",
    "seed": "seed",
    "mode": "mode",
    "t_uti": "t_uti",
    "max_nodes": "max_nodes",
    "policy": "policy",
    "shrink": "shrink",
    "workers": "workers",
    "stream_kind": "stream_kind",
    "sampling": "sampling",
}


def _build_config(args: argparse.Namespace) -> SimConfig:
    doc: dict = {}
    if getattr(args, "config", None):
        doc.update(_load_config_file(args.config))
    for flag, fld in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            doc[fld] = value
    if "bin_dims" in doc:
        doc["bin_dims"] = tuple(doc["bin_dims"]) if not isinstance(doc["bin_dims"], str) else _parse_bin(doc["bin_dims"])
    known = set(SimConfig.__dataclass_fields__)  # type: ignore[attr-defined]
    unknown = set(doc) - known
    if unknown:
        raise SystemExit(f"unknown config keys: {sorted(unknown)}")
    return SimConfig(**doc)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON config file; flags override it")
    p.add_argument("--bin", type=_parse_bin, help="bin dims as LxWxH")
    p.add_argument("--delta-cog", dest="delta_cog", type=float, help="CoG uncertainty ratio")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--episodes", type=int, help="number of episodes / streams")
    p.add_argument("--seq-len", dest="seq_len", type=int, help="items per stream")
    p.add_argument("--stream-kind", dest="stream_kind", choices=["rs", "rs_same_height"])
    p.add_argument("--sampling", choices=["iid", "block"])
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def _summary(reports: list[EpisodeReport]) -> str:
    mean_uti = statistics.fmean(r.utilization for r in reports) if reports else 0.0
    mean_items = statistics.fmean(r.items_packed for r in reports) if reports else 0.0
    srp_calls = sum(r.srp_invocations for r in reports)
    return (
        f"episodes={len(reports)} mean_utilization={mean_uti:.4f} "
        f"mean_items={mean_items:.2f} srp_invocations={srp_calls}"
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="stablepack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_pack = sub.add_parser("pack", help="run packing episodes")
    _add_common(p_pack)
    p_pack.add_argument("--mode", choices=["no_srp", "srp"])
    p_pack.add_argument("--policy", help="builtin | random | bridge:HOST:PORT")
    p_pack.add_argument("--t-uti", dest="t_uti", type=float)
    p_pack.add_argument("--max-nodes", dest="max_nodes", type=int)
    p_pack.add_argument("--shrink", type=int, help="contact-robustness shrink offset")
    p_pack.add_argument("--workers", type=int)
    p_pack.add_argument("--verify", action="store_true", help="check every operation against the rebuild oracle")
    p_pack.add_argument("--export-fixtures", dest="export_fixtures", help="also write a policy-decision fixture corpus (JSONL)")

    p_eval = sub.add_parser("srp-eval", help="paired episodes with and without rearrangement")
    _add_common(p_eval)
    p_eval.add_argument("--policy", help="builtin | random | bridge:HOST:PORT")
    p_eval.add_argument("--t-uti", dest="t_uti", type=float)
    p_eval.add_argument("--max-nodes", dest="max_nodes", type=int)
    p_eval.add_argument("--workers", type=int)

    p_bench = sub.add_parser("bench-ssv", help="validation cost benchmark")
    _add_common(p_bench)
    p_bench.add_argument("--stride", type=int, default=1, help="candidate grid stride")
    p_bench.add_argument("--no-comparator", action="store_true", help="skip the rebuild comparator")

    p_gen = sub.add_parser("gen-stream", help="write item streams to disk")
    _add_common(p_gen)

    args = parser.parse_args(argv)
    out_dir = Path(args.out)

    if args.command == "pack":
        cfg = _build_config(args)
        reports = run_batch(cfg, verify_rebuild=bool(getattr(args, "verify", False)))
        written = export_report(reports, out_dir, args.format)
        if args.export_fixtures:
            n = export_policy_fixtures(cfg, args.export_fixtures)
            print(f"wrote {n} policy fixtures to {args.export_fixtures}")
        print(_summary(reports))
        print(f"wrote {', '.join(str(p) for p in written)}")
        return 0

    if args.command == "srp-eval":
        cfg = _build_config(args)
        base = run_batch(cfg, mode="no_srp")
        with_srp = run_batch(cfg, mode="srp")
        export_report(base, out_dir / "no_srp", args.format)
        export_report(with_srp, out_dir / "srp", args.format)
        mean_base = statistics.fmean(r.utilization for r in base)
        mean_srp = statistics.fmean(r.utilization for r in with_srp)
        print(f"no_srp: {_summary(base)}")
        print(f"srp:    {_summary(with_srp)}")
        print(f"mean utilization improvement: {mean_srp - mean_base:+.4f}")
        return 0

    if args.command == "bench-ssv":
        cfg = _build_config(args)
        spec = cfg.stream_spec()
        result = bench_validation(spec, stride=args.stride, comparator=not args.no_comparator)
        written = export_timing(result, out_dir, args.format)
        first = result.mean_over("samples_incremental", 0, 3)
        last = result.mean_over("samples_incremental", 30)
        print(f"incremental mean/set: first(<=3 packed)={first * 1e3:.3f} ms, last(>=30 packed)={last * 1e3:.3f} ms")
        if result.samples_rebuild:
            rb_first = result.mean_over("samples_rebuild", 0, 3)
            rb_last = result.mean_over("samples_rebuild", 30)
            print(f"rebuild comparator:   first={rb_first * 1e3:.3f} ms, last={rb_last * 1e3:.3f} ms")
        print(f"wrote {', '.join(str(p) for p in written)}")
        return 0

    if args.command == "gen-stream":
        cfg = _build_config(args)
        spec = cfg.stream_spec()
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for index in range(spec.count):
            path = out_dir / f"stream_{index:04d}.jsonl"
            write_stream(gen_stream(spec, index), path)
            paths.append(path)
        manifest = out_dir / "manifest.json"
        manifest.write_text(json.dumps({"spec": asdict(spec), "streams": [p.name for p in paths]}, indent=1))
        print(f"wrote {len(paths)} streams and {manifest}")
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
