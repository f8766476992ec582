"""Config file loaders: ranges, lesson plans, trajectory scripts."""

import json

import pytest

from weldkit.config import load_plan, load_ranges, load_script
from weldkit.errors import SchemaError, StorageError
from weldkit.feedback import Module, Parameter
from weldkit.pose import TargetRanges
from weldkit.units import M_PER_INCH


class TestRanges:
    def test_partial_override_json(self, tmp_path):
        p = tmp_path / "ranges.json"
        p.write_text('{"ctwd_mm": [5, 20]}')
        r = load_ranges(p)
        assert r.ctwd_mm == (5.0, 20.0)
        assert r.speed_ipm == TargetRanges().speed_ipm

    def test_partial_override_yaml(self, tmp_path):
        p = tmp_path / "ranges.yaml"
        p.write_text("speed_ipm: [12, 30]\nwork_angle_deg: [70, 92]\n")
        r = load_ranges(p)
        assert r.speed_ipm == (12.0, 30.0)
        assert r.work_angle_deg == (70.0, 92.0)
        assert r.ctwd_mm == TargetRanges().ctwd_mm

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "ranges.json"
        p.write_text('{"voltage_v": [1, 2]}')
        with pytest.raises(SchemaError) as e:
            load_ranges(p)
        assert "voltage_v" in e.value.field

    def test_inverted_bounds_rejected(self, tmp_path):
        p = tmp_path / "ranges.json"
        p.write_text('{"ctwd_mm": [20, 5]}')
        with pytest.raises(SchemaError):
            load_ranges(p)

    def test_malformed_pair_names_field(self, tmp_path):
        p = tmp_path / "ranges.json"
        p.write_text('{"ctwd_mm": [5, 10, 15]}')
        with pytest.raises(SchemaError) as e:
            load_ranges(p)
        assert e.value.field == "ctwd_mm"

    def test_missing_file_is_storage_error(self, tmp_path):
        with pytest.raises(StorageError):
            load_ranges(tmp_path / "absent.yaml")

    def test_invalid_yaml_is_schema_error(self, tmp_path):
        p = tmp_path / "ranges.yaml"
        p.write_text("{:::")
        with pytest.raises(SchemaError):
            load_ranges(p)


class TestPlan:
    def test_round_plan_loads(self, tmp_path):
        p = tmp_path / "plan.json"
        p.write_text(
            json.dumps(
                {
                    "modules": [
                        {
                            "module": "ctwd",
                            "lines": 3,
                            "assisted": True,
                            "tracked": ["ctwd"],
                        },
                        {"module": "test", "lines": 2, "assisted": False, "tracked": []},
                    ],
                    "pass_threshold": 0.6,
                    "retry_factor": 1.5,
                }
            )
        )
        plan = load_plan(p)
        assert plan.pass_threshold == 0.6
        assert plan.modules[0].module is Module.CTWD
        assert plan.modules[0].tracked == (Parameter.CTWD,)
        assert plan.modules[1].lines == 2

    def test_bad_module_name_names_field(self, tmp_path):
        p = tmp_path / "plan.json"
        p.write_text(
            json.dumps(
                {
                    "modules": [
                        {"module": "sparkle", "lines": 1, "assisted": False, "tracked": []}
                    ],
                    "pass_threshold": 0.7,
                    "retry_factor": 1.0,
                }
            )
        )
        with pytest.raises(SchemaError) as e:
            load_plan(p)
        assert e.value.field == "modules[0].module"

    def test_zero_lines_rejected(self, tmp_path):
        p = tmp_path / "plan.json"
        p.write_text(
            json.dumps(
                {
                    "modules": [
                        {"module": "ctwd", "lines": 0, "assisted": False, "tracked": []}
                    ],
                    "pass_threshold": 0.7,
                    "retry_factor": 1.0,
                }
            )
        )
        with pytest.raises(SchemaError):
            load_plan(p)


class TestScript:
    def test_script_builds_specs_on_bench(self, bench, tmp_path):
        p = tmp_path / "script.json"
        p.write_text(
            json.dumps(
                {
                    "lines": [
                        {
                            "length_in": 4.0,
                            "start_uv": [0.02, 0.05],
                            "speed_ipm": 18.0,
                            "duration_s": 3.0,
                            "noise": {"position_sd_m": 0.002, "seed": 9},
                        }
                    ]
                }
            )
        )
        scripts = load_script(p, bench)
        assert len(scripts) == 1
        s = scripts[0]
        assert s.spec.speed_ipm == 18.0
        assert s.spec.line.length == pytest.approx(4.0 * M_PER_INCH)
        assert s.position_sd_m == 0.002
        assert s.seed == 9
        assert s.orientation_sd_deg == 0.0

    def test_missing_length_names_field(self, bench, tmp_path):
        p = tmp_path / "script.json"
        p.write_text('{"lines": [{"speed_ipm": 20}]}')
        with pytest.raises(SchemaError) as e:
            load_script(p, bench)
        assert e.value.field == "lines[0].length_in"

    def test_bad_tilt_sign_rejected(self, bench, tmp_path):
        p = tmp_path / "script.json"
        p.write_text('{"lines": [{"length_in": 5, "tilt_sign": 2}]}')
        with pytest.raises(SchemaError) as e:
            load_script(p, bench)
        assert e.value.field == "lines[0].tilt_sign"

    def test_negative_length_rejected(self, bench, tmp_path):
        p = tmp_path / "script.json"
        p.write_text('{"lines": [{"length_in": -1}]}')
        with pytest.raises(SchemaError) as e:
            load_script(p, bench)
        assert "positive" in str(e.value)
