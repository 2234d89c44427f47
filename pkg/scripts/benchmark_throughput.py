#!/usr/bin/env python3
"""Time a single level-100 pass over a large synthetic corpus.

Prints a per-stage breakdown (generation, banding, clustering) and the
timing line in the same shape as the run's timings.tsv.  One million records
should stay well under five minutes on a desktop core; a blowup here usually
means the compressed-size cache or the linear-time candidate grouping broke.
"""

import argparse
import sys
import time

from metacluster.clusterer import cluster_level, level_inputs
from metacluster.config import EngineConfig
from metacluster.rundir import format_duration
from metacluster.synthetic import duplicate_pairs_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records", type=int, default=1_000_000)
    parser.add_argument("--duplicate-pairs", type=int, default=5000)
    parser.add_argument("--level", type=int, default=100)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--workers", type=int, default=8)
    args = parser.parse_args()

    decoys = args.records - 2 * args.duplicate_pairs
    t0 = time.perf_counter()
    records, _ = duplicate_pairs_corpus(args.duplicate_pairs, decoys, seed=args.seed)
    t1 = time.perf_counter()
    print(f"generated {len(records)} records in {format_duration(t1 - t0)}")

    by_id = {r.id: r for r in records}
    ids = sorted(by_id)
    config = EngineConfig(seed=args.seed, workers=args.workers)
    banding, ctx = level_inputs(by_id, ids, args.level, config)
    t2 = time.perf_counter()
    print(f"banding in {format_duration(t2 - t1)}")

    result = cluster_level(ids, args.level, ctx.similarity, banding, config)
    t3 = time.perf_counter()
    print(f"clustering in {format_duration(t3 - t2)} ({result.iterations_used} iterations)")
    print()
    print("level\trecords\tclusters\ttime")
    print(f"{args.level}\t{len(ids)}\t{len(result.clusters)}\t{format_duration(t3 - t1)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
