"""Training-mixture sampling and corpus analytics.

A mixture spec names sample pools (JSONL files) with ratio weights; pools
are apportioned by largest remainder so per-pool counts always sum to the
requested total, drawn by seeded shuffle, and interleaved by a second
seeded shuffle.  Corpus statistics cover vocabulary size and trigram
frequencies (within-turn windows only), and label-agreement matrices
compare annotation sources pairwise.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .screens import read_jsonl
from .seeding import rng_for


class InsufficientPoolError(ValueError):
    """A pool holds fewer samples than its apportioned count."""

    def __init__(self, pool: str, need: int, have: int):
        super().__init__(f"pool {pool!r} needs {need} samples but holds {have}")
        self.pool = pool


class AgreementError(ValueError):
    """Sources do not share an aligned id set."""


@dataclass(frozen=True)
class PoolSpec:
    path: str
    weight: float


@dataclass(frozen=True)
class MixtureSpec:
    """Named pools with ratio weights, a total draw size, and a seed."""

    pools: tuple[tuple[str, PoolSpec], ...]
    total: int
    seed: int
    with_replacement: bool = False

    def __post_init__(self) -> None:
        if self.total < 0:
            raise ValueError("total must be non-negative")
        if not self.pools:
            raise ValueError("mixture needs at least one pool")
        weights = [p.weight for _, p in self.pools]
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if sum(weights) <= 0:
            raise ValueError("weights must sum to a positive value")

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        pools = tuple(
            (str(name), PoolSpec(path=str(p["path"]), weight=float(p["weight"])))
            for name, p in d["pools"].items()
        )
        return cls(
            pools=pools,
            total=int(d["total"]),
            seed=int(d.get("seed", 0)),
            with_replacement=bool(d.get("with_replacement", False)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "MixtureSpec":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def apportion(weights: Sequence[float], total: int) -> list[int]:
    """Largest-remainder apportionment; counts always sum to total.

    Quotas are total * weight / sum(weights); every pool gets its floor,
    and the remaining units go to the largest fractional remainders,
    earlier pools winning ties.
    """
    wsum = sum(weights)
    quotas = [total * w / wsum for w in weights]
    counts = [int(q) for q in quotas]
    leftover = total - sum(counts)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def sample_mixture(
    spec: MixtureSpec, base_dir: str | Path | None = None
) -> list[dict]:
    """Draw the mixture: per-pool seeded selection, seeded interleave.

    Pool paths resolve relative to base_dir when given.  Without
    replacement a pool smaller than its apportioned count raises
    InsufficientPoolError naming the pool; with replacement pools may be
    oversampled (the minority-class balancing mode).
    """
    names = [name for name, _ in spec.pools]
    counts = apportion([p.weight for _, p in spec.pools], spec.total)
    combined: list[dict] = []
    for (name, pool), count in zip(spec.pools, counts):
        path = Path(pool.path)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        records = list(read_jsonl(path))
        if count == 0:
            continue
        if not spec.with_replacement and count > len(records):
            raise InsufficientPoolError(name, count, len(records))
        rng = rng_for("mixture_pool", name, spec.seed)
        if spec.with_replacement:
            if not records:
                raise InsufficientPoolError(name, count, 0)
            chosen = [records[rng.randrange(len(records))] for _ in range(count)]
        else:
            idxs = list(range(len(records)))
            rng.shuffle(idxs)
            chosen = [records[i] for i in sorted(idxs[:count])]
        combined.extend(chosen)
    rng_for("mixture_interleave", spec.seed, *names).shuffle(combined)
    return combined


def _iter_turn_texts(dataset: Iterable[dict], role_filter: str) -> Iterable[str]:
    if role_filter not in ("user", "assistant", "both"):
        raise ValueError(f"role_filter must be user|assistant|both, got {role_filter!r}")
    for rec in dataset:
        for turn in rec.get("turns", ()):
            if role_filter != "both" and turn.get("role") != role_filter:
                continue
            yield str(turn.get("text", ""))


@dataclass
class CorpusStats:
    """Vocabulary and trigram counts for one dataset slice."""

    vocab_size: int
    total_tokens: int
    turns: int
    trigrams: Counter = field(default_factory=Counter)

    def top_trigrams(self, k: int = 20) -> list[tuple[tuple[str, str, str], int]]:
        """Most frequent trigrams; count-descending, alphabetical ties."""
        return sorted(self.trigrams.items(), key=lambda kv: (-kv[1], kv[0]))[:k]

    def to_dict(self, k: int = 20) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "total_tokens": self.total_tokens,
            "turns": self.turns,
            "top_trigrams": [
                {"trigram": list(tg), "count": c} for tg, c in self.top_trigrams(k)
            ],
        }


def corpus_stats(dataset: Sequence[dict], role_filter: str = "both") -> CorpusStats:
    """Vocabulary size and trigram distribution of a dataset.

    Tokenization is lowercased whitespace splitting; trigram windows never
    cross turn boundaries.

    Raises:
        ValueError: empty dataset or unknown role filter.
    """
    if not dataset:
        raise ValueError("corpus_stats needs a non-empty dataset")
    vocab: set[str] = set()
    trigrams: Counter = Counter()
    total_tokens = 0
    turns = 0
    for text in _iter_turn_texts(dataset, role_filter):
        tokens = text.lower().split()
        turns += 1
        total_tokens += len(tokens)
        vocab.update(tokens)
        for i in range(len(tokens) - 2):
            trigrams[tuple(tokens[i : i + 3])] += 1
    return CorpusStats(
        vocab_size=len(vocab), total_tokens=total_tokens, turns=turns, trigrams=trigrams
    )


def trigrams_csv(stats: CorpusStats, k: int = 20) -> str:
    """Top-k trigrams as CSV for external plotting."""
    lines = ["trigram,count"]
    for tg, count in stats.top_trigrams(k):
        phrase = " ".join(tg).replace('"', '""')
        lines.append(f'"{phrase}",{count}')
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AgreementTable:
    """Aligned label vectors from several annotation sources."""

    ids: tuple[str, ...]
    sources: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        for name, labels in self.sources:
            if len(labels) != len(self.ids):
                raise AgreementError(
                    f"source {name!r} has {len(labels)} labels for {len(self.ids)} ids"
                )

    @classmethod
    def from_mappings(cls, sources: dict[str, dict[str, str]]) -> "AgreementTable":
        """Build from {source: {instance_id: label}}; ids must align exactly."""
        names = sorted(sources)
        if not names:
            raise AgreementError("no sources")
        id_sets = {name: set(sources[name]) for name in names}
        shared = id_sets[names[0]]
        for name in names[1:]:
            if id_sets[name] != shared:
                raise AgreementError(f"source {name!r} id set differs from {names[0]!r}")
        ids = tuple(sorted(shared))
        return cls(
            ids=ids,
            sources=tuple((name, tuple(sources[name][i] for i in ids)) for name in names),
        )


def agreement_matrix(
    table: AgreementTable, id_subset: Sequence[str] | None = None
) -> dict[str, dict[str, float]]:
    """Pairwise percent agreement between sources.

    With id_subset only those instances are compared (the "unambiguous
    subset" mode); the matrix is symmetric with 100.0 on the diagonal.

    Raises:
        AgreementError: fewer than two sources, or subset ids unknown.
    """
    if len(table.sources) < 2:
        raise AgreementError("agreement needs at least two sources")
    if id_subset is None:
        idxs = list(range(len(table.ids)))
    else:
        pos = {i: k for k, i in enumerate(table.ids)}
        missing = [i for i in id_subset if i not in pos]
        if missing:
            raise AgreementError(f"unknown ids in subset: {missing}")
        idxs = [pos[i] for i in id_subset]
    if not idxs:
        raise AgreementError("empty id subset")
    matrix: dict[str, dict[str, float]] = {}
    for name_a, labels_a in table.sources:
        row: dict[str, float] = {}
        for name_b, labels_b in table.sources:
            hits = sum(1 for i in idxs if labels_a[i] == labels_b[i])
            row[name_b] = 100.0 * hits / len(idxs)
        matrix[name_a] = row
    return matrix
