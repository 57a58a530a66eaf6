import itertools

import numpy as np
import pytest

from fataudit.counterfactuals import (CounterfactualConfig, config_for_dataset,
                                      counterfactual_fairness, default_grids,
                                      find_counterfactuals,
                                      same_class_variations, score_feasibility)
from fataudit.density import fit_density
from fataudit.errors import ArgumentError, StateError
from fataudit.models import KNNModel
from fataudit.tabular import mixed_distance
from util import ConstantModel, FunctionModel, mixed_dataset, numeric_dataset


@pytest.fixture
def threshold_setup():
    """Model: class "1" iff x1 > 0.25; instance (0.2, 0.9) predicted "0"."""
    ds = numeric_dataset([(0.0, 0.0), (0.3, 0.4), (0.6, 0.7), (0.9, 1.0)],
                         ["0", "1", "1", "1"])
    model = FunctionModel(lambda r: "1" if r[0] > 0.25 else "0", ("0", "1"))
    config = CounterfactualConfig(
        schema=ds.schema,
        grids={"x1": (0.0, 0.3, 0.6, 0.9), "x2": (0.0, 0.4, 0.7, 1.0)},
        searchable=("x1", "x2"), k=1, max_results=10)
    return ds, model, config


def oracle_search(model, instance, config):
    """Independent exhaustive enumeration with the documented ranking key."""
    schema = config.schema
    original = model.predict([instance])[0]
    found = []
    names = [n for n in schema.names if n in config.searchable]
    for size in range(1, config.k + 1):
        for subset in itertools.combinations(names, size):
            if not set(config.required) <= set(subset):
                continue
            pools = []
            for name in subset:
                i = schema.index(name)
                pools.append([(name, instance[i], v)
                              for v in config.grids[name] if v != instance[i]])
            for combo in itertools.product(*pools):
                if len(combo) < size:
                    continue
                row = list(instance)
                for name, _, new in combo:
                    row[schema.index(name)] = new
                cls = model.predict([tuple(row)])[0]
                if config.mode == "implicit" and cls == original:
                    continue
                if config.mode == "explicit" and cls != config.target_class:
                    continue
                if config.mode == "same_class" and cls != original:
                    continue
                dist = mixed_distance(instance, row, schema)
                found.append((combo, cls, dist, tuple(row)))
    found.sort(key=lambda f: (len(f[0]), f[2],
                              tuple(sorted((n, v) for n, _, v in f[0]))))
    return found[: config.max_results]


class TestFindCounterfactuals:
    def test_threshold_model_minimal_flip(self, threshold_setup):
        ds, model, config = threshold_setup
        search = find_counterfactuals(model, (0.2, 0.9), config)
        top = search.counterfactuals[0]
        assert top.changes == (("x1", 0.2, 0.3),)
        assert top.resulting_class == "1"
        assert top.distance > 0

    def test_constant_model_returns_diagnostic(self, threshold_setup):
        ds, _, config = threshold_setup
        search = find_counterfactuals(ConstantModel("0", ("0", "1")), (0.2, 0.9), config)
        assert len(search) == 0
        assert "exhausted" in search.diagnostic

    def test_explicit_mode_targets_class(self, threshold_setup):
        ds, model, config = threshold_setup
        from dataclasses import replace
        explicit = replace(config, mode="explicit", target_class="0")
        search = find_counterfactuals(model, (0.9, 0.9), explicit)
        assert all(c.resulting_class == "0" for c in search)
        assert all(c.row[0] <= 0.25 for c in search)

    def test_required_features_always_change(self, threshold_setup):
        ds, model, config = threshold_setup
        from dataclasses import replace
        required = replace(config, k=2, required=("x2",))
        search = find_counterfactuals(model, (0.2, 0.9), required)
        assert len(search) > 0
        for c in search:
            assert "x2" in [name for name, _, _ in c.changes]

    def test_unfitted_model_raises(self, threshold_setup):
        ds, _, config = threshold_setup
        with pytest.raises(StateError):
            find_counterfactuals(KNNModel(), (0.2, 0.9), config)

    def test_every_result_re_predicts_to_claimed_class(self, threshold_setup):
        ds, model, config = threshold_setup
        search = find_counterfactuals(model, (0.2, 0.9), config)
        for c in search:
            assert model.predict([c.row])[0] == c.resulting_class

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(21)
        tokens = ["p", "q", "r"]
        for _ in range(60):
            n_features = int(rng.integers(1, 4))
            kinds = "".join(rng.choice(["n", "c"]) for _ in range(n_features))
            rows, grids = [], {}
            for trial_row in range(6):
                row = []
                for kind in kinds:
                    row.append(float(np.round(rng.uniform(0, 1), 2)) if kind == "n"
                               else tokens[rng.integers(0, 3)])
                rows.append(tuple(row))
            ds = mixed_dataset(rows, [str(rng.integers(0, 2)) for _ in rows], kinds)
            for name in ds.schema.names:
                col = ds.schema.column(name)
                if col.is_numeric:
                    size = int(rng.integers(2, 10))
                    grids[name] = tuple(sorted({float(np.round(rng.uniform(0, 1), 2))
                                                for _ in range(size)}))
                else:
                    grids[name] = col.values
            cut = float(rng.uniform(0.2, 0.8))
            weights = rng.uniform(-1, 1, n_features)

            def fn(row, cut=cut, weights=weights, kinds=kinds):
                total = sum(w * (float(v) if k == "n" else len(str(v)) / 3)
                            for w, v, k in zip(weights, row, kinds))
                return "1" if total > cut else "0"

            model = FunctionModel(fn, ("0", "1"))
            k = int(rng.integers(1, n_features + 1))
            mode = ["implicit", "same_class"][rng.integers(0, 2)]
            config = CounterfactualConfig(ds.schema, grids, tuple(ds.schema.names),
                                          k=k, mode=mode, max_results=8)
            instance = rows[0]
            search = find_counterfactuals(model, instance, config)
            expected = oracle_search(model, list(instance), config)
            got = [(c.changes, c.resulting_class, c.distance) for c in search]
            want = [(combo, cls, dist) for combo, cls, dist, _ in expected]
            assert got == want

    def test_deterministic_tie_order_is_lexicographic(self):
        ds = mixed_dataset([("a", "x"), ("b", "y")], ["0", "1"], "cc",
                           names=["beta", "alpha"])
        model = ConstantModel("0", ("0", "1"))
        config = CounterfactualConfig(
            ds.schema, {"beta": ("a", "b"), "alpha": ("x", "y")},
            searchable=("beta", "alpha"), k=1, mode="same_class")
        search = find_counterfactuals(model, ("a", "x"), config)
        # both single-feature foils have distance 0.5; "alpha" sorts first
        assert [c.changes[0][0] for c in search] == ["alpha", "beta"]


class TestConfigValidation:
    def test_empty_searchable_rejected(self):
        ds = numeric_dataset([(0.0,), (1.0,)], ["0", "1"], names=["x"])
        with pytest.raises(ArgumentError):
            CounterfactualConfig(ds.schema, {}, searchable=())

    def test_required_must_be_searchable(self, threshold_setup):
        ds, _, _ = threshold_setup
        with pytest.raises(ArgumentError):
            CounterfactualConfig(ds.schema, {"x1": (0.0,)}, searchable=("x1",),
                                 required=("x2",))

    def test_k_bounds(self, threshold_setup):
        ds, _, _ = threshold_setup
        with pytest.raises(ArgumentError):
            CounterfactualConfig(ds.schema, {"x1": (0.0,)}, searchable=("x1",), k=2)
        with pytest.raises(ArgumentError):
            CounterfactualConfig(ds.schema, {"x1": (0.0,)}, searchable=("x1",), k=0)

    def test_explicit_needs_target(self, threshold_setup):
        ds, _, _ = threshold_setup
        with pytest.raises(ArgumentError):
            CounterfactualConfig(ds.schema, {"x1": (0.0, 1.0)}, searchable=("x1",),
                                 mode="explicit")

    def test_empty_grid_rejected(self, threshold_setup):
        ds, _, _ = threshold_setup
        with pytest.raises(ArgumentError):
            CounterfactualConfig(ds.schema, {"x1": ()}, searchable=("x1",))

    def test_default_grids_deciles(self):
        values = [(float(v),) for v in range(1, 101)]
        ds = numeric_dataset(values, ["0", "1"] * 50, names=["v"])
        grids = default_grids(ds)
        assert grids["v"] == (10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0)

    def test_default_grids_deduplicate(self):
        ds = numeric_dataset([(5.0,)] * 10, ["0", "1"] * 5, names=["v"])
        assert default_grids(ds)["v"] == (5.0,)


class TestSameClassVariations:
    def test_constant_model_everything_qualifies(self, threshold_setup):
        ds, _, config = threshold_setup
        model = ConstantModel("0", ("0", "1"))
        search = same_class_variations(model, (0.2, 0.9), config)
        assert len(search) == 8  # every grid value differs from the instance
        assert all(c.resulting_class == "0" for c in search)

    def test_ignored_feature_gives_variations(self, threshold_setup):
        ds, model, config = threshold_setup
        from dataclasses import replace
        only_x2 = replace(config, searchable=("x2",), k=1)
        search = same_class_variations(model, (0.2, 0.9), only_x2)
        assert [c.changes[0][2] for c in search] == [1.0, 0.7, 0.4, 0.0]
        assert all(c.resulting_class == "0" for c in search)

    def test_truncation_to_max_results(self, threshold_setup):
        ds, _, config = threshold_setup
        from dataclasses import replace
        model = ConstantModel("0", ("0", "1"))
        small = replace(config, max_results=2)
        assert len(same_class_variations(model, (0.2, 0.9), small)) == 2


class TestScoreFeasibility:
    def test_empty_list(self):
        ds = numeric_dataset([(0.0,), (1.0,)], ["0", "1"], names=["x"])
        est = fit_density(ds, n=1)
        assert score_feasibility([], est) == []

    def test_dense_foil_ranks_first(self):
        # references cluster near 0; 0.9 is sparse, 0.1 dense
        ds = numeric_dataset([(0.0,), (0.05,), (0.1,), (0.15,), (1.0,)],
                             ["0", "0", "0", "0", "1"], names=["x"])
        est = fit_density(ds, n=1)
        model = FunctionModel(lambda r: "1" if r[0] > 0.5 else "0", ("0", "1"))
        config = CounterfactualConfig(ds.schema, {"x": (0.1, 0.9)},
                                      searchable=("x",), k=1, mode="same_class")
        search = find_counterfactuals(model, (0.12,), config)
        assert len(search) == 1  # only 0.1 keeps the class
        config2 = CounterfactualConfig(ds.schema, {"x": (0.55, 0.9)},
                                       searchable=("x",), k=1, mode="implicit")
        flips = find_counterfactuals(model, (0.12,), config2)
        scored = score_feasibility(list(flips), est)
        # 0.9 sits right next to the reference at 1.0, 0.55 is in no-man's land
        assert [c.changes[0][2] for c in scored] == [0.9, 0.55]
        assert scored[0].density_score <= scored[1].density_score
        assert {c.changes for c in scored} == {c.changes for c in flips}

    def test_reranks_by_density_then_distance(self):
        ds = numeric_dataset([(0.0,), (0.1,), (0.2,), (5.0,)],
                             ["0", "0", "0", "1"], names=["x"])
        est = fit_density(ds, n=1)
        model = FunctionModel(lambda r: "1" if r[0] > 2 else "0", ("0", "1"))
        config = CounterfactualConfig(ds.schema, {"x": (2.4, 4.9)},
                                      searchable=("x",), k=1, mode="implicit")
        search = find_counterfactuals(model, (1.8,), config)
        assert [c.changes[0][2] for c in search] == [2.4, 4.9]  # by distance
        scored = score_feasibility(list(search), est)
        assert [c.changes[0][2] for c in scored] == [4.9, 2.4]  # 4.9 near ref 5.0


class TestCounterfactualFairness:
    def _dataset(self):
        return mixed_dataset(
            [(0.2, "M"), (0.6, "F"), (0.9, "M"), (0.4, "F")],
            ["0", "1", "1", "0"], "nc", names=["score", "sex"],
            protected=("sex",))

    def test_protected_ignoring_model_is_fair(self):
        ds = self._dataset()
        model = FunctionModel(lambda r: "1" if r[0] > 0.5 else "0", ("0", "1"))
        config = config_for_dataset(ds, k=2)
        verdict = counterfactual_fairness(model, (0.2, "M"), ["sex"], config)
        assert verdict.verdict == "fair"
        assert verdict.counterfactuals == ()
        assert verdict.scope["k"] == 2

    def test_protected_identity_model_is_unfair(self):
        ds = self._dataset()
        model = FunctionModel(lambda r: "1" if r[1] == "F" else "0", ("0", "1"))
        config = config_for_dataset(ds, k=1)
        verdict = counterfactual_fairness(model, (0.2, "M"), ["sex"], config)
        assert verdict.verdict == "unfair"
        assert verdict.counterfactuals[0].changes == (("sex", "M", "F"),)

    def test_fair_verdict_consistent_with_protected_only_search(self):
        # fair means no change confined to protected features can flip the
        # prediction, so the protected-only required search must come up empty
        ds = self._dataset()
        model = FunctionModel(lambda r: "1" if r[0] > 0.5 else "0", ("0", "1"))
        config = config_for_dataset(ds, k=2)
        verdict = counterfactual_fairness(model, (0.2, "M"), ["sex"], config)
        assert verdict.verdict == "fair"
        protected_only = config_for_dataset(ds, searchable=("sex",), k=1,
                                            required=("sex",), mode="implicit")
        assert len(find_counterfactuals(model, (0.2, "M"), protected_only)) == 0

    def test_unfair_evidence_appears_in_required_search(self):
        ds = self._dataset()
        model = FunctionModel(lambda r: "1" if r[1] == "F" else "0", ("0", "1"))
        config = config_for_dataset(ds, k=1)
        verdict = counterfactual_fairness(model, (0.2, "M"), ["sex"], config)
        assert verdict.verdict == "unfair"
        from dataclasses import replace
        required = replace(config, required=("sex",), mode="implicit")
        found = find_counterfactuals(model, (0.2, "M"), required)
        assert {c.changes for c in verdict.counterfactuals} <= {c.changes for c in found}

    def test_multi_protected_needs_any_change(self):
        ds = mixed_dataset(
            [(0.2, "M", "a"), (0.6, "F", "b")], ["0", "1"], "ncc",
            names=["score", "sex", "grp"], protected=("sex", "grp"))
        model = FunctionModel(lambda r: "1" if r[1] == "F" else "0", ("0", "1"))
        config = config_for_dataset(ds, k=1)
        verdict = counterfactual_fairness(model, (0.2, "M", "a"),
                                          ["sex", "grp"], config)
        # k=1 can never change both protected features at once, but one suffices
        assert verdict.verdict == "unfair"

    def test_empty_protected_rejected(self):
        ds = self._dataset()
        config = config_for_dataset(ds)
        with pytest.raises(ArgumentError):
            counterfactual_fairness(ConstantModel("0"), (0.2, "M"), [], config)

    def test_protected_must_be_searchable(self):
        ds = self._dataset()
        config = config_for_dataset(ds, searchable=("score",), k=1)
        with pytest.raises(ArgumentError):
            counterfactual_fairness(ConstantModel("0"), (0.2, "M"), ["sex"], config)


class TestSentences:
    def test_template_rendering(self, threshold_setup):
        ds, model, config = threshold_setup
        search = find_counterfactuals(model, (0.2, 0.9), config)
        sentence = search.counterfactuals[0].sentence()
        assert sentence == ('Had this person had 0.3 "x1" instead of 0.2, this '
                            'person would have been predicted as "1".')

    def test_density_annotation_in_sentence(self):
        ds = numeric_dataset([(0.0,), (0.5,), (1.0,)], ["0", "0", "1"], names=["x"])
        est = fit_density(ds, n=1)
        model = FunctionModel(lambda r: "1" if r[0] > 0.75 else "0", ("0", "1"))
        config = CounterfactualConfig(ds.schema, {"x": (1.0,)}, searchable=("x",), k=1)
        scored = score_feasibility(list(find_counterfactuals(model, (0.0,), config)), est)
        assert "(Density score:" in scored[0].sentence()
