"""Ingestion tests: CSV loading, treatment rules, config validation."""

import json

import pytest

from robustz.data_io import ConfigError, load_config, load_dataset
from robustz.data_types import DataError


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def base_config(tmp_path, **overrides):
    doc = {
        "data_path": "data.csv",
        "treatment_rule": {
            "column": "flyash",
            "treated_predicate": {"op": ">=", "value": 24.5},
            "control_predicate": {"op": "==", "value": 0},
        },
        "outcome_column": "strength",
        "covariate_rules": [
            {"column": "cement", "kind": "caliper", "tolerance": 30},
        ],
    }
    doc.update(overrides)
    return write_config(tmp_path, doc)


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


FOUR_ROWS = (
    "flyash,cement,strength\n"
    "30,100,41.5\n"
    "0,102,38.0\n"
    "10,95,40.1\n"
    "25,99,45.2\n"
)


class TestLoadDataset:
    def test_partition_by_predicates(self, tmp_path):
        config = load_config(base_config(tmp_path))
        write_csv(tmp_path, FOUR_ROWS)
        ds = load_dataset(config.data_path, config)
        assert ds.n_treated == 2
        assert ds.n_control == 1
        assert ds.excluded == 1
        assert ds.n_treated + ds.n_control + ds.excluded == 4

    def test_missing_column(self, tmp_path):
        config = load_config(base_config(tmp_path))
        write_csv(tmp_path, "flyash,cement\n30,100\n0,90\n")
        with pytest.raises(DataError, match="missing column"):
            load_dataset(config.data_path, config)

    def test_non_numeric_outcome(self, tmp_path):
        config = load_config(base_config(tmp_path))
        write_csv(tmp_path, "flyash,cement,strength\n30,100,bad\n0,90,1\n")
        with pytest.raises(DataError, match="outcome"):
            load_dataset(config.data_path, config)

    def test_overlapping_predicates(self, tmp_path):
        path = base_config(tmp_path)
        doc = json.loads(path.read_text())
        doc["treatment_rule"]["control_predicate"] = {"op": "<=", "value": 100}
        write_config(tmp_path, doc)
        config = load_config(path)
        write_csv(tmp_path, FOUR_ROWS)
        with pytest.raises(DataError, match="both"):
            load_dataset(config.data_path, config)

    def test_empty_control_group(self, tmp_path):
        config = load_config(base_config(tmp_path))
        write_csv(tmp_path, "flyash,cement,strength\n30,100,41.5\n25,99,45.2\n")
        with pytest.raises(DataError, match="empty control"):
            load_dataset(config.data_path, config)

    def test_missing_covariate_value(self, tmp_path):
        config = load_config(base_config(tmp_path))
        write_csv(tmp_path, "flyash,cement,strength\n30,,41.5\n0,90,38.0\n")
        with pytest.raises(DataError, match="missing value"):
            load_dataset(config.data_path, config)

    def test_blank_lines_skipped(self, tmp_path):
        config = load_config(base_config(tmp_path))
        write_csv(tmp_path, FOUR_ROWS + "\n\n")
        ds = load_dataset(config.data_path, config)
        assert ds.n_treated + ds.n_control + ds.excluded == 4

    def test_bom_header_tolerated(self, tmp_path):
        config = load_config(base_config(tmp_path))
        (tmp_path / "data.csv").write_bytes(b"\xef\xbb\xbf" + FOUR_ROWS.encode())
        ds = load_dataset(config.data_path, config)
        assert ds.n_treated == 2

    def test_deterministic(self, tmp_path):
        config = load_config(base_config(tmp_path))
        write_csv(tmp_path, FOUR_ROWS)
        a = load_dataset(config.data_path, config)
        b = load_dataset(config.data_path, config)
        assert a == b

    def test_categorical_covariates_preserved(self, tmp_path):
        path = write_config(tmp_path, {
            "data_path": "data.csv",
            "treatment_rule": {
                "column": "grp",
                "treated_predicate": {"op": "==", "value": "t"},
                "control_predicate": {"op": "==", "value": "c"},
            },
            "outcome_column": "y",
            "covariate_rules": [{"column": "color", "kind": "exact"}],
        })
        write_csv(tmp_path, "grp,color,y\nt,red,1.0\nc,red,2.0\n")
        config = load_config(path)
        ds = load_dataset(config.data_path, config)
        assert ds.units[0].covariates["color"] == "red"

    def test_conjunction_predicate(self, tmp_path):
        path = write_config(tmp_path, {
            "data_path": "data.csv",
            "treatment_rule": {
                "column": "x",
                "treated_predicate": [{"op": ">=", "value": 10}, {"op": "<", "value": 20}],
                "control_predicate": {"op": "<", "value": 10},
            },
            "outcome_column": "y",
            "covariate_rules": [{"column": "c", "kind": "exact"}],
        })
        write_csv(tmp_path, "x,y,c\n15,1.0,a\n5,2.0,a\n25,3.0,a\n")
        config = load_config(path)
        ds = load_dataset(config.data_path, config)
        assert ds.n_treated == 1
        assert ds.n_control == 1
        assert ds.excluded == 1


class TestLoadConfig:
    def test_alpha_defaults(self, tmp_path):
        config = load_config(base_config(tmp_path))
        assert config.alpha == 0.05

    def test_oracle_budget_defaults(self, tmp_path):
        config = load_config(base_config(tmp_path))
        assert config.oracle_budget == 10_000_000

    def test_minimal_fixed_n(self, tmp_path):
        config = load_config(base_config(tmp_path, n_spec={"mode": "fixed", "n": 20}))
        assert config.n_spec.mode == "fixed"
        assert config.n_spec.n == 20

    def test_sweep_range_validated(self, tmp_path):
        path = base_config(tmp_path, n_spec={"mode": "sweep", "n_min": 9, "n_max": 3})
        with pytest.raises(ConfigError, match="n_min"):
            load_config(path)

    def test_unknown_top_level_field(self, tmp_path):
        path = base_config(tmp_path, extra_field=1)
        with pytest.raises(ConfigError, match="unknown field"):
            load_config(path)

    def test_unknown_predicate_field(self, tmp_path):
        path = write_config(tmp_path, {
            "data_path": "d.csv",
            "treatment_rule": {
                "column": "x",
                "treated_predicate": {"op": ">=", "value": 1, "oops": 2},
                "control_predicate": {"op": "<", "value": 1},
            },
            "outcome_column": "y",
            "covariate_rules": [],
        })
        with pytest.raises(ConfigError, match="unknown field"):
            load_config(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="malformed"):
            load_config(path)

    def test_alpha_range_enforced(self, tmp_path):
        with pytest.raises(ConfigError, match="alpha"):
            load_config(base_config(tmp_path, alpha=1.0))

    def test_bad_op_rejected(self, tmp_path):
        path = write_config(tmp_path, {
            "data_path": "d.csv",
            "treatment_rule": {
                "column": "x",
                "treated_predicate": {"op": "~=", "value": 1},
                "control_predicate": {"op": "<", "value": 1},
            },
            "outcome_column": "y",
            "covariate_rules": [],
        })
        with pytest.raises(ConfigError, match="op"):
            load_config(path)

    def test_caliper_tolerance_validated(self, tmp_path):
        path = base_config(
            tmp_path,
            covariate_rules=[{"column": "cement", "kind": "caliper", "tolerance": -3}],
        )
        with pytest.raises(ConfigError, match=">= 0"):
            load_config(path)

    def test_data_path_relative_to_config(self, tmp_path):
        sub = tmp_path / "sub"
        sub.mkdir()
        config = load_config(base_config(sub))
        assert config.data_path == str(sub / "data.csv")

    def test_binary_search_default(self, tmp_path):
        config = load_config(base_config(tmp_path))
        assert config.n_spec.mode == "binary_search"
        assert config.n_spec.n_min == 2
        assert config.n_spec.n_max is None

    def test_shipped_study_configs_parse(self):
        import os

        root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        concrete = load_config(os.path.join(root, "configs", "concrete.json"))
        assert concrete.treatment_rule.column == "fly_ash"
        assert len(concrete.covariate_rules) == 7
        bike = load_config(os.path.join(root, "configs", "bike.json"))
        assert [r.kind for r in bike.covariate_rules].count("exact") == 3
