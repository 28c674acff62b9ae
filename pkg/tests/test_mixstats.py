"""Mixture sampling, corpus statistics, and annotation agreement."""

import json

import pytest

from uibench.mixstats import (
    AgreementError,
    AgreementTable,
    InsufficientPoolError,
    MixtureSpec,
    PoolSpec,
    agreement_matrix,
    apportion,
    corpus_stats,
    sample_mixture,
    trigrams_csv,
)
from uibench.screens import make_header, write_jsonl


def write_pool(path, name, n):
    write_jsonl(path, [{"sample_id": f"{name}/{i}", "pool": name,
                        "turns": [{"role": "user", "text": f"ask {name} {i}"}]}
                       for i in range(n)],
                header=make_header("test"))


def spec_for(tmp_path, sizes, weights, total, seed=0, with_replacement=False):
    pools = []
    for (name, n), w in zip(sizes.items(), weights):
        path = tmp_path / f"{name}.jsonl"
        write_pool(path, name, n)
        pools.append((name, PoolSpec(path=str(path), weight=w)))
    return MixtureSpec(pools=tuple(pools), total=total, seed=seed,
                       with_replacement=with_replacement)


class TestApportion:
    def test_exact_split(self):
        assert apportion([1, 1], 10) == [5, 5]

    def test_largest_remainder(self):
        assert apportion([1, 1, 1], 10) == [4, 3, 3]

    def test_ties_go_to_earlier_pools(self):
        assert apportion([1, 1, 1, 1], 2) == [1, 1, 0, 0]

    def test_sums_to_total(self):
        for weights in ([3, 1], [0.5, 0.3, 0.2], [7, 11, 13, 17]):
            for total in (0, 1, 9, 100):
                assert sum(apportion(weights, total)) == total, (weights, total)

    def test_zero_weight_pool_gets_nothing(self):
        assert apportion([1, 0], 5) == [5, 0]


class TestMixtureSpec:
    def test_from_dict(self):
        spec = MixtureSpec.from_dict({
            "pools": {"a": {"path": "a.jsonl", "weight": 2},
                      "b": {"path": "b.jsonl", "weight": 1}},
            "total": 9,
            "seed": 3,
        })
        assert dict(spec.pools) == {"a": PoolSpec("a.jsonl", 2.0),
                                    "b": PoolSpec("b.jsonl", 1.0)}
        assert (spec.total, spec.seed, spec.with_replacement) == (9, 3, False)

    def test_bundled_spec_loads(self, data_dir):
        spec = MixtureSpec.from_file(data_dir / "mixture.json")
        assert spec.total == 12
        assert len(spec.pools) == 4

    def test_validation(self):
        with pytest.raises(ValueError):
            MixtureSpec(pools=(), total=1, seed=0)
        with pytest.raises(ValueError):
            MixtureSpec(pools=(("a", PoolSpec("a", -1.0)),), total=1, seed=0)
        with pytest.raises(ValueError):
            MixtureSpec(pools=(("a", PoolSpec("a", 0.0)),), total=1, seed=0)
        with pytest.raises(ValueError):
            MixtureSpec(pools=(("a", PoolSpec("a", 1.0)),), total=-1, seed=0)


class TestSampleMixture:
    def test_counts_follow_weights(self, tmp_path):
        spec = spec_for(tmp_path, {"a": 20, "b": 20}, [3, 1], total=8)
        out = sample_mixture(spec)
        assert len(out) == 8
        by_pool = {}
        for r in out:
            by_pool[r["pool"]] = by_pool.get(r["pool"], 0) + 1
        assert by_pool == {"a": 6, "b": 2}

    def test_deterministic_and_interleaved(self, tmp_path):
        spec = spec_for(tmp_path, {"a": 30, "b": 30}, [1, 1], total=20, seed=5)
        first = sample_mixture(spec)
        second = sample_mixture(spec)
        assert first == second
        pools_in_order = [r["pool"] for r in first]
        # Interleave shuffle mixes the pools rather than concatenating them.
        assert pools_in_order != sorted(pools_in_order)

    def test_seed_changes_draw(self, tmp_path):
        a = sample_mixture(spec_for(tmp_path, {"a": 30}, [1], total=10, seed=0))
        b = sample_mixture(spec_for(tmp_path, {"a": 30}, [1], total=10, seed=1))
        assert a != b

    def test_without_replacement_no_duplicates(self, tmp_path):
        spec = spec_for(tmp_path, {"a": 15, "b": 15}, [1, 1], total=20)
        ids = [r["sample_id"] for r in sample_mixture(spec)]
        assert len(set(ids)) == len(ids)

    def test_insufficient_pool_named(self, tmp_path):
        spec = spec_for(tmp_path, {"tiny": 2, "big": 50}, [1, 1], total=20)
        with pytest.raises(InsufficientPoolError) as exc_info:
            sample_mixture(spec)
        assert exc_info.value.pool == "tiny"

    def test_with_replacement_oversamples(self, tmp_path):
        spec = spec_for(tmp_path, {"tiny": 2}, [1], total=10,
                        with_replacement=True)
        out = sample_mixture(spec)
        assert len(out) == 10
        assert {r["pool"] for r in out} == {"tiny"}

    def test_relative_paths_resolve_against_base_dir(self, tmp_path):
        write_pool(tmp_path / "a.jsonl", "a", 5)
        spec = MixtureSpec(pools=(("a", PoolSpec("a.jsonl", 1.0)),),
                           total=3, seed=0)
        out = sample_mixture(spec, base_dir=tmp_path)
        assert len(out) == 3

    def test_headers_not_sampled(self, tmp_path):
        spec = spec_for(tmp_path, {"a": 4}, [1], total=4)
        out = sample_mixture(spec)
        assert all("__header__" not in r for r in out)


class TestCorpusStats:
    def dataset(self):
        return [
            {"turns": [{"role": "user", "text": "Find the search bar"},
                       {"role": "assistant", "text": "the search bar is here"}]},
            {"turns": [{"role": "user", "text": "find THE search bar"}]},
        ]

    def test_counts(self):
        stats = corpus_stats(self.dataset())
        assert stats.turns == 3
        assert stats.total_tokens == 13
        assert stats.vocab_size == 6  # find, the, search, bar, is, here
        assert stats.trigrams[("find", "the", "search")] == 2
        assert stats.trigrams[("the", "search", "bar")] == 3

    def test_role_filter(self):
        stats = corpus_stats(self.dataset(), role_filter="assistant")
        assert stats.turns == 1
        assert stats.total_tokens == 5
        with pytest.raises(ValueError):
            corpus_stats(self.dataset(), role_filter="narrator")

    def test_trigrams_do_not_cross_turns(self):
        data = [{"turns": [{"role": "user", "text": "a b"},
                           {"role": "user", "text": "c d"}]}]
        assert corpus_stats(data).trigrams == {}

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            corpus_stats([])

    def test_top_trigrams_ordering_and_csv(self):
        stats = corpus_stats(self.dataset())
        top = stats.top_trigrams(2)
        assert top[0] == (("the", "search", "bar"), 3)
        csv = trigrams_csv(stats, k=2)
        lines = csv.strip().splitlines()
        assert lines[0] == "trigram,count"
        assert lines[1] == '"the search bar",3'

    def test_to_dict_serializable(self):
        d = corpus_stats(self.dataset()).to_dict(k=3)
        json.dumps(d)
        assert d["vocab_size"] == 6
        assert len(d["top_trigrams"]) == 3


class TestAgreement:
    def sources(self):
        return {
            "model_a": {"i1": "Button", "i2": "Text", "i3": "Icon", "i4": "Text"},
            "model_b": {"i1": "Button", "i2": "Text", "i3": "Text", "i4": "Icon"},
        }

    def test_matrix_values(self):
        table = AgreementTable.from_mappings(self.sources())
        matrix = agreement_matrix(table)
        assert matrix["model_a"]["model_a"] == 100.0
        assert matrix["model_a"]["model_b"] == pytest.approx(50.0)
        assert matrix["model_b"]["model_a"] == matrix["model_a"]["model_b"]

    def test_subset_mode(self):
        table = AgreementTable.from_mappings(self.sources())
        matrix = agreement_matrix(table, id_subset=["i1", "i2"])
        assert matrix["model_a"]["model_b"] == 100.0
        with pytest.raises(AgreementError):
            agreement_matrix(table, id_subset=["i1", "i9"])
        with pytest.raises(AgreementError):
            agreement_matrix(table, id_subset=[])

    def test_misaligned_ids_rejected(self):
        bad = self.sources()
        del bad["model_b"]["i4"]
        with pytest.raises(AgreementError):
            AgreementTable.from_mappings(bad)

    def test_single_source_rejected(self):
        table = AgreementTable.from_mappings({"only": {"i1": "x"}})
        with pytest.raises(AgreementError):
            agreement_matrix(table)
