"""Walkthrough: validation cost stays flat as the bin fills.

Replays random-stable packing over a fixed grid of candidate positions,
timing full-candidate-set validation under (a) the incrementally
maintained maps and (b) a comparator that must rebuild its stability
state from the packed list first. The incremental path is flat; the
comparator grows with the number of packed items.

Run:  python demos/demo_benchmark.py   (about a minute)
"""

from stablepack.simcli import StreamSpec, bench_validation


def table(buckets, label):
    print(f"\n{label}")
    print("packed items   sets timed   mean ms   std ms")
    for b in buckets:
        print(f"  {b.lo:3d}-{b.hi:<3d}      {b.count:6d}     {b.mean_s * 1e3:7.3f}  {b.std_s * 1e3:7.3f}")


def main():
    spec = StreamSpec(bin_dims=(14, 14, 14), length=100, count=20, seed=7, delta_cog=0.1)
    result = bench_validation(spec, stride=2, comparator_every=5)

    table(result.buckets_incremental, "incremental maps (production path)")
    table(result.buckets_rebuild, "rebuild-from-scratch comparator")

    inc = result.mean_over("samples_incremental", 30) / result.mean_over("samples_incremental", 0, 3)
    rb = result.mean_over("samples_rebuild", 30) / result.mean_over("samples_rebuild", 0, 3)
    print(f"\nlast-bucket / first-bucket mean: incremental x{inc:.2f}, comparator x{rb:.1f}")


if __name__ == "__main__":
    main()
