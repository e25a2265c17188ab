import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simonslab.core.check import Check, CheckOutcome
from simonslab.core.config import (canonical_dump, config_hash, output_root, parse_list,
                                   parse_shorthand, resolve_schema)
from simonslab.core.errors import ConfigError
from simonslab.core.executor import CheckExecutor
from simonslab.core.reduction import rounding_floor, tree_sum
from simonslab.core.registry import get_all, get_categories, get_class


class TestConfig:
    """Schema coercion and the shorthand parser"""

    def test_int_range(self):
        assert parse_list("2..6", "int", "n") == [2, 3, 4, 5, 6]

    def test_comma_list(self):
        assert parse_list("0.4,0.2, 0.1", "float", "eps") == [0.4, 0.2, 0.1]

    def test_empty_range_is_rejected(self):
        with pytest.raises(ConfigError):
            parse_list("6..2", "int", "n")

    def test_error_carries_field_path(self):
        schema = {"quadrature": {"type": "mapping", "default": {}}}
        inner = {"levels": {"type": "int_list", "default": [5]}}
        resolve_schema(schema, {"quadrature": {"levels": [4]}})
        with pytest.raises(ConfigError) as info:
            resolve_schema(inner, {"levels": ["x"]}, path="quadrature")
        assert info.value.path == "quadrature.levels[0]"

    def test_unknown_field(self):
        with pytest.raises(ConfigError) as info:
            resolve_schema({"eps": {"type": "float", "default": 0.3}}, {"epsilon": 1.0}, path="kernel")
        assert info.value.path == "kernel.epsilon"

    def test_choices(self):
        schema = {"mode": {"type": "string", "default": "exclusion", "choices": ["exclusion", "cap"]}}
        assert resolve_schema(schema, {})["mode"] == "exclusion"
        with pytest.raises(ConfigError):
            resolve_schema(schema, {"mode": "both"})

    def test_boolean_strings(self):
        schema = {"flag": {"type": "boolean", "default": False}}
        assert resolve_schema(schema, {"flag": "yes"})["flag"] is True
        assert resolve_schema(schema, {"flag": "off"})["flag"] is False

    def test_shorthand(self):
        spec = parse_shorthand("fractional:0.5,2", {"fractional": ("s", "C")}, "kernel")
        assert spec == {"name": "fractional", "s": "0.5", "C": "2"}

    def test_shorthand_too_many_parameters(self):
        with pytest.raises(ConfigError):
            parse_shorthand("mollifier:0.3,1", {"mollifier": ("eps",)}, "kernel")

    def test_hash_ignores_key_order(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
        assert canonical_dump({"b": 1, "a": 2}).startswith("a: 2")

    def test_output_root_environment(self, monkeypatch):
        monkeypatch.setenv("SIMONSLAB_OUTPUT", "/tmp/simonslab-runs")
        assert output_root() == "/tmp/simonslab-runs"
        assert output_root("elsewhere") == "elsewhere"

    def test_mapping_section_resolves_against_its_schema(self):
        inner = {"levels": {"type": "int_list", "default": [5, 6]},
                 "delta": {"type": "float", "default": 0.0}}
        schema = {"quadrature": {"type": "mapping", "default": {}, "schema": inner}}
        assert resolve_schema(schema, {})["quadrature"] == {"levels": [5, 6], "delta": 0.0}
        assert resolve_schema(schema, {"quadrature": {"levels": "3..4"}})["quadrature"]["levels"] == [3, 4]
        with pytest.raises(ConfigError) as info:
            resolve_schema(schema, {"quadrature": {"level": [4]}})
        assert info.value.path == "quadrature.level"

    def test_section_defaults_enter_the_hash(self):
        verify = get_class("check", "verify")
        implicit = verify({}).config
        explicit = verify({"quadrature": {"levels": [5, 6]}}).config
        coarser = verify({"quadrature": {"levels": [3, 4]}}).config
        assert implicit["quadrature"]["levels"] == [5, 6]
        assert config_hash({"command": "verify", **implicit}) == config_hash({"command": "verify", **explicit})
        assert config_hash({"command": "verify", **implicit}) != config_hash({"command": "verify", **coarser})


class TestReduction:
    """Fixed-order pairwise summation"""

    @given(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=0, max_size=200))
    def test_exact_on_integers(self, values):
        assert tree_sum(np.array(values, dtype=float)) == float(sum(values))

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=100))
    @settings(max_examples=50)
    def test_deterministic(self, values):
        a = np.array(values)
        assert tree_sum(a) == tree_sum(a.copy())

    def test_axis(self):
        a = np.arange(12.0).reshape(3, 4)
        np.testing.assert_array_equal(tree_sum(a, axis=1), a.sum(axis=1))

    def test_rounding_floor_scales_with_magnitude(self):
        assert rounding_floor([1.0, -1.0]) == pytest.approx(2.0 * 64.0 * np.finfo(float).eps)


class TestExecutor:
    """Ordered map over worker threads"""

    def test_order_is_kept(self):
        items = list(range(20))
        assert CheckExecutor(4).map(lambda k: k * k, items) == [k * k for k in items]

    def test_same_results_for_any_worker_count(self):
        rng = np.random.default_rng(3)
        blocks = [rng.standard_normal(1000) for _ in range(8)]
        one = CheckExecutor(1).map(tree_sum, blocks)
        many = CheckExecutor(8).map(tree_sum, blocks)
        assert one == many

    def test_no_checks(self):
        success, message = CheckExecutor().execute_checks([])
        assert not success
        assert "No checks" in message


class _Passing(Check):
    name = "passing"
    properties = {"value": {"type": "float", "default": 1.5}}

    def execute(self):
        return {"outcomes": [CheckOutcome("passing", self.value > 1.0, "fine")], "records": {}, "tables": {}}


class TestCheck:
    """Check base class and outcome lines"""

    def test_summary_line(self):
        assert CheckOutcome("verify[plane]", True, "residual 0").summary_line() == "PASS verify[plane] residual 0"
        assert CheckOutcome("verify[plane]", False, "x").summary_line().startswith("FAIL")

    def test_properties_become_attributes(self):
        check = _Passing({"value": "2.5"})
        assert check.value == 2.5
        assert check.status == "Ready"

    def test_process(self):
        check = _Passing()
        success, _ = check.executor.execute_checks([check])
        assert success
        assert check.status == "Complete"

    def test_unknown_property(self):
        with pytest.raises(ConfigError):
            _Passing({"valeu": 1.0})


class TestRegistry:
    """Discovery of kernels, surfaces, level sets and checks"""

    def test_checks_are_discovered(self):
        names = set(get_all("check"))
        assert {"moments", "verify", "limit-study", "levelset-verify", "stability-check",
                "divergence-check"} <= names

    def test_kernel_lookup(self):
        import simonslab.kernels  # noqa: F401
        assert get_class("kernel", "mollifier").name == "mollifier"
        assert get_class("kernel", "nope") is None

    def test_categories(self):
        categories = get_categories("check")
        assert any(cls.name == "moments" for cls in categories["Oracles"])
