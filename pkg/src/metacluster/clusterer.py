"""Iterative clustering of one candidate population at one similarity level.

The loop per level:

1. group the current population by band keys and put non-singleton groups on
   a stack (singletons cannot cluster and stay out);
2. pop a group, randomly pick up to 10 pairwise-dissimilar cluster heads,
   assign every other record to its closest head;
3. accept a candidate cluster iff the mean similarity between head and
   members reaches level/100, otherwise push the whole candidate set back on
   the stack to be divided further;
4. when the stack drains, absorbed members leave the population and the
   remaining records (cluster heads included) go through another iteration,
   until an iteration clusters nothing or the iteration cap is reached.

Heads that rejoin later iterations keep the clusters they accrued; when such
a head is itself absorbed as a member of a new cluster, its cluster dissolves
into the absorbing one (its former members become "transferred" members of
the new head, preserving the partition of the input).

RNG sequence contract (single-worker mode, relied on by the reference
implementation in the test suite): one ``random.Random`` seeded with
``derive_seed(seed, "level", level)``; each iteration sorts its groups and
pops them in ascending order (rejected sets re-enter LIFO); every processed
group consumes exactly one ``rng.shuffle(sorted(group))`` call and nothing
else.  With ``workers > 1`` each worker owns a derived RNG and pop order
depends on scheduling, so head choice (but no invariant) may differ between
runs.
"""

from __future__ import annotations

import random
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .config import EngineConfig
from .errors import ConfigurationError, IntegrityError
from .hashing import derive_seed, digest_hex
from .minhash import SignatureComputer, band_key_matrix, group_ids
from .records import FieldMask, Record, tokenize
from .similarity import Compression, SimilarityContext

MAX_HEADS = 10

SimilarityFn = Callable[[str, str], float]


@dataclass(frozen=True, slots=True)
class Cluster:
    """An accepted cluster: head, members (head excluded) and validity stats.

    ``mean_head_similarity`` is the mean head-to-member similarity over the
    directly validated members, i.e. ``members`` minus ``transferred`` (the
    members inherited from absorbed heads, which were validated against their
    own former head at the same threshold).
    """

    id: str
    level: int
    head: str
    members: tuple[str, ...]
    mean_head_similarity: float
    transferred: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return 1 + len(self.members)

    def record_ids(self) -> tuple[str, ...]:
        return (self.head,) + self.members

    def direct_members(self) -> tuple[str, ...]:
        skip = set(self.transferred)
        return tuple(m for m in self.members if m not in skip)


@dataclass(frozen=True, slots=True)
class CandidateCluster:
    head: str
    members: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class LevelResult:
    """Outcome of one level pass: a partition of the input ids."""

    level: int
    clusters: tuple[Cluster, ...]
    unclustered: tuple[str, ...]
    iterations_used: int

    def clustered_ids(self) -> set[str]:
        out: set[str] = set()
        for cluster in self.clusters:
            out.add(cluster.head)
            out.update(cluster.members)
        return out


class LevelBanding:
    """Band keys for one population at one level, regroupable per iteration."""

    def __init__(self, level: int, ids: list[str], keys: np.ndarray, empty: np.ndarray):
        self.level = level
        self.ids = ids
        self.keys = keys
        self.empty = empty
        self._index = {rid: i for i, rid in enumerate(ids)}

    def groups(self, subset: set[str] | None = None, mode: str = "any") -> list[tuple[str, ...]]:
        if subset is None:
            return group_ids(self.ids, self.keys, self.empty, mode=mode)
        rows = [self._index[rid] for rid in self.ids if rid in subset]
        if not rows:
            return []
        sel = np.array(rows, dtype=np.intp)
        return group_ids([self.ids[i] for i in rows], self.keys[sel], self.empty[sel], mode=mode)


def build_banding(
    records: Mapping[str, Record],
    ids: Iterable[str],
    level: int,
    config: EngineConfig,
    computer: SignatureComputer | None = None,
    mask_for: Callable[[Record], FieldMask | None] | None = None,
) -> LevelBanding:
    """Tokenize, sign and band a population for one level pass."""
    id_list = list(ids)
    computer = computer or SignatureComputer(count=config.minhash_count, seed=config.seed)
    signatures = np.empty((len(id_list), computer.count), dtype=np.uint64)
    for i, rid in enumerate(id_list):
        record = records[rid]
        mask = mask_for(record) if mask_for is not None else None
        signatures[i] = computer.signature_vector(tokenize(record, mask))
    keys, empty = band_key_matrix(signatures, level, config.seed, config.group_sizes)
    return LevelBanding(level, id_list, keys, empty)


def level_inputs(
    records: Mapping[str, Record],
    ids: Iterable[str],
    level: int,
    config: EngineConfig,
    computer: SignatureComputer | None = None,
    mask_for: Callable[[Record], FieldMask | None] | None = None,
) -> tuple[LevelBanding, SimilarityContext]:
    """Banding plus a compatible similarity context for one level pass."""
    banding = build_banding(records, ids, level, config, computer, mask_for)
    ctx = SimilarityContext(
        records,
        Compression(config.compressor, config.compression_level),
        mask_for=mask_for,
    )
    return banding, ctx


def select_heads(
    group: Iterable[str],
    threshold: float,
    rng: random.Random,
    sim: SimilarityFn,
    limit: int = MAX_HEADS,
) -> list[str]:
    """Scan the group in shuffled order; a record becomes a head iff it is
    below the threshold against every head chosen so far; stop at ``limit``."""
    order = sorted(group)
    rng.shuffle(order)
    heads: list[str] = []
    for rid in order:
        if all(sim(head, rid) < threshold for head in heads):
            heads.append(rid)
            if len(heads) >= limit:
                break
    return heads


def assign_to_heads(
    group: Iterable[str],
    heads: list[str],
    sim: SimilarityFn,
) -> list[CandidateCluster]:
    """Attach each non-head record to its most similar head; ties go to the
    smallest head id.  Returns one candidate per head, members possibly empty."""
    head_set = set(heads)
    members: dict[str, list[str]] = {head: [] for head in heads}
    heads_sorted = sorted(heads)
    for rid in sorted(group):
        if rid in head_set:
            continue
        best_head = heads_sorted[0]
        best_sim = -1.0
        for head in heads_sorted:
            s = sim(head, rid)
            if s > best_sim:
                best_head, best_sim = head, s
        members[best_head].append(rid)
    return [CandidateCluster(head, tuple(members[head])) for head in heads]


def validate_candidate(
    candidate: CandidateCluster,
    threshold: float,
    sim: SimilarityFn,
) -> tuple[bool, float]:
    """Step-6 rule: accept iff the mean head-to-member similarity reaches the
    threshold (boundary inclusive).  Empty-member candidates are never
    accepted; the caller leaves such heads unclustered without re-stacking."""
    if not candidate.members:
        return False, 0.0
    total = sum(sim(candidate.head, member) for member in candidate.members)
    mean = total / len(candidate.members)
    return mean >= threshold, mean


_Accepted = tuple[str, tuple[str, ...], float]  # head, members, event mean


def _process_group(
    group: tuple[str, ...],
    threshold: float,
    rng: random.Random,
    sim: SimilarityFn,
) -> tuple[list[_Accepted], list[tuple[str, ...]]]:
    heads = select_heads(group, threshold, rng, sim)
    accepted: list[_Accepted] = []
    restack: list[tuple[str, ...]] = []
    for candidate in assign_to_heads(group, heads, sim):
        if not candidate.members:
            continue
        ok, mean = validate_candidate(candidate, threshold, sim)
        if ok:
            accepted.append((candidate.head, candidate.members, mean))
        else:
            restack.append(tuple(sorted((candidate.head,) + candidate.members)))
    return accepted, restack


def _drain_sequential(
    work: list[tuple[str, ...]],
    threshold: float,
    rng: random.Random,
    sim: SimilarityFn,
    guard: Counter,
) -> list[_Accepted]:
    stack = sorted(work, reverse=True)
    accepted: list[_Accepted] = []
    while stack:
        group = stack.pop()
        if guard[group] >= 2:
            continue  # livelocked set: dissolve to unclustered
        guard[group] += 1
        got, restack = _process_group(group, threshold, rng, sim)
        accepted.extend(got)
        stack.extend(restack)
    return accepted


def _drain_parallel(
    work: list[tuple[str, ...]],
    threshold: float,
    sim: SimilarityFn,
    guard: Counter,
    config: EngineConfig,
    level: int,
    iteration: int,
) -> list[_Accepted]:
    stack = sorted(work, reverse=True)
    cv = threading.Condition()
    outstanding = len(stack)
    accepted: list[_Accepted] = []
    errors: list[BaseException] = []

    def settle(produced: list[_Accepted], restack: list[tuple[str, ...]]) -> None:
        nonlocal outstanding
        with cv:
            accepted.extend(produced)
            stack.extend(restack)
            outstanding += len(restack) - 1
            cv.notify_all()

    def worker(widx: int) -> None:
        rng = random.Random(derive_seed(config.seed, "level", level, "iter", iteration, "worker", widx))
        while True:
            with cv:
                while not stack and outstanding > 0 and not errors:
                    cv.wait()
                if outstanding <= 0 or errors:
                    return
                group = stack.pop()
                dissolved = guard[group] >= 2
                if not dissolved:
                    guard[group] += 1
            if dissolved:
                settle([], [])
                continue
            try:
                got, restack = _process_group(group, threshold, rng, sim)
            except BaseException as exc:  # propagate to caller
                with cv:
                    errors.append(exc)
                    cv.notify_all()
                return
            settle(got, restack)

    threads = [
        threading.Thread(target=worker, args=(w,), name=f"level{level}-worker{w}")
        for w in range(config.workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    accepted.sort()
    return accepted


def cluster_level(
    input_ids: Iterable[str],
    level: int,
    sim: SimilarityFn,
    banding: LevelBanding,
    config: EngineConfig,
) -> LevelResult:
    """Run the full iterative loop at one level over one population."""
    if config.max_iterations < 1:
        raise ConfigurationError(f"max iterations must be >= 1, got {config.max_iterations}")
    threshold = level / 100.0
    population = set(input_ids)
    input_all = sorted(population)
    rng = random.Random(derive_seed(config.seed, "level", level))
    guard: Counter = Counter()

    direct: dict[str, list[str]] = {}
    inherited: dict[str, list[str]] = {}
    sim_sums: dict[str, float] = {}
    sim_counts: dict[str, int] = {}

    iterations = 0
    while iterations < config.max_iterations:
        groups = banding.groups(population, mode=config.band_match)
        work = [g for g in groups if len(g) >= 2]
        if not work:
            break
        iterations += 1
        if config.workers > 1:
            accepted = _drain_parallel(work, threshold, sim, guard, config, level, iterations)
        else:
            accepted = _drain_sequential(work, threshold, rng, sim, guard)
        if not accepted:
            break
        for head, members, mean in accepted:
            entry = direct.setdefault(head, [])
            inherit = inherited.setdefault(head, [])
            sim_sums[head] = sim_sums.get(head, 0.0) + mean * len(members)
            sim_counts[head] = sim_counts.get(head, 0) + len(members)
            for member in members:
                entry.append(member)
                if member in direct:
                    inherit.extend(direct.pop(member))
                    inherit.extend(inherited.pop(member))
                    sim_sums.pop(member)
                    sim_counts.pop(member)
            population.difference_update(members)

    clusters = []
    for head in sorted(direct):
        members = tuple(sorted(direct[head] + inherited[head]))
        mean = sim_sums[head] / sim_counts[head]
        cid = f"L{level}-" + digest_hex("\x00".join((str(level), head) + members).encode("utf-8"))
        clusters.append(
            Cluster(
                id=cid,
                level=level,
                head=head,
                members=members,
                mean_head_similarity=mean,
                transferred=tuple(sorted(inherited[head])),
            )
        )
    unclustered = tuple(sorted(population - direct.keys()))
    result = LevelResult(
        level=level,
        clusters=tuple(clusters),
        unclustered=unclustered,
        iterations_used=iterations,
    )
    _check_partition(result, input_all)
    return result


def _check_partition(result: LevelResult, input_ids: list[str]) -> None:
    seen: list[str] = list(result.unclustered)
    for cluster in result.clusters:
        seen.append(cluster.head)
        seen.extend(cluster.members)
        if not cluster.members:
            raise IntegrityError(f"cluster {cluster.id} has no members")
        threshold = result.level / 100.0
        if cluster.mean_head_similarity < threshold - 1e-9:
            raise IntegrityError(
                f"cluster {cluster.id} mean head similarity "
                f"{cluster.mean_head_similarity:.4f} below {threshold}"
            )
    if sorted(seen) != input_ids:
        raise IntegrityError(
            f"level {result.level} output is not a partition of its input "
            f"({len(seen)} placements vs {len(input_ids)} inputs)"
        )
