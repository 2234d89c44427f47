#!/usr/bin/env python3
"""Generate a synthetic NDJSON corpus for experiments.

Examples:
    python scripts/generate_corpus.py --kind hierarchical --works 500 --out corpus.ndjson
    python scripts/generate_corpus.py --kind duplicates --pairs 1000 --decoys 8000 --out dup.ndjson
    python scripts/generate_corpus.py --kind ga-provider --records 500 --out prov.ndjson
"""

import argparse
import sys
from pathlib import Path

from metacluster.records import write_records
from metacluster.synthetic import (
    corrupted_pairs_corpus,
    duplicate_pairs_corpus,
    ga_provider_corpus,
    hierarchical_corpus,
    random_corpus,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--kind",
        choices=["random", "duplicates", "near-duplicates", "hierarchical", "ga-provider"],
        default="hierarchical",
    )
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--records", type=int, default=1000, help="random / ga-provider size")
    parser.add_argument("--pairs", type=int, default=500, help="duplicates / near-duplicates")
    parser.add_argument("--decoys", type=int, default=4000, help="duplicates only")
    parser.add_argument("--works", type=int, default=200, help="hierarchical only")
    parser.add_argument("--noise", type=int, default=0, help="hierarchical only")
    args = parser.parse_args()

    if args.kind == "random":
        records = random_corpus(args.records, seed=args.seed)
    elif args.kind == "duplicates":
        records, _ = duplicate_pairs_corpus(args.pairs, args.decoys, seed=args.seed)
    elif args.kind == "near-duplicates":
        records, _ = corrupted_pairs_corpus(args.pairs, seed=args.seed)
    elif args.kind == "ga-provider":
        records = ga_provider_corpus(n_records=args.records, seed=args.seed)
    else:
        records = hierarchical_corpus(
            n_works=args.works, seed=args.seed, noise_records=args.noise
        )

    with open(args.out, "w", encoding="utf-8") as fh:
        write_records(records, fh)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
