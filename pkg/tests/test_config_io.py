"""Config parsing, CSV/JSON round-trips, datasets, and manifests."""

import json

import numpy as np
import pytest

from fringeworks.analysis import ExperimentalDataset
from fringeworks.config import ConfigError, load_config, parse_config
from fringeworks.dynamics import initial_state, integrate
from fringeworks.environment import EnvironmentSpec
from fringeworks.geometry import ExperimentGeometry
from fringeworks.io import (
    DatasetFormatError,
    ManifestBuilder,
    fmt,
    load_dataset,
    read_profile_csv,
    read_trajectory_csv,
    read_visibility_csv,
    write_dataset_csv,
    write_profile_csv,
    write_trajectory_csv,
    write_visibility_csv,
)
from fringeworks.pattern import intensity_profile

from conftest import CONFIGS, DATA


BASE = {
    "units": {"mode": "natural"},
    "geometry": {"L0": 2.0, "sigma_x0": 0.5},
    "environment": {"kind": "qbm_ohmic", "gamma0": 0.001, "kBT": 300.0},
}


def _tree(**overrides):
    tree = json.loads(json.dumps(BASE))
    tree.update(overrides)
    return tree


class TestConfigParsing:
    @pytest.mark.parametrize(
        "name", ["paper-fig1", "paper-fig2", "fullerene-c70", "neutron-zeilinger"]
    )
    def test_shipped_presets_load(self, name):
        cfg = load_config(CONFIGS / f"{name}.json")
        assert cfg.geometry.L0 > 0.0
        assert cfg.source

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(_tree(extra=1))

    def test_unknown_geometry_key(self):
        tree = _tree()
        tree["geometry"]["slit_width"] = 1.0
        with pytest.raises(ConfigError, match="slit_width"):
            parse_config(tree)

    def test_unknown_environment_key(self):
        tree = _tree()
        tree["environment"]["coupling"] = 2.0
        with pytest.raises(ConfigError, match="coupling"):
            parse_config(tree)

    def test_unknown_member_key(self):
        tree = _tree()
        tree["environment"] = {
            "kind": "composite",
            "members": [{"kind": "scattering", "Lambda": 1.0, "oops": 2}],
        }
        with pytest.raises(ConfigError, match="oops"):
            parse_config(tree)

    def test_slit_separation_converted(self):
        tree = _tree()
        tree["geometry"] = {"slit_separation": 4.0, "sigma_x0": 0.5}
        assert parse_config(tree).geometry.L0 == 2.0

    def test_both_separations_rejected(self):
        tree = _tree()
        tree["geometry"] = {"L0": 2.0, "slit_separation": 4.0, "sigma_x0": 0.5}
        with pytest.raises(ConfigError):
            parse_config(tree)

    def test_kbt_and_temperature_exclusive(self):
        tree = _tree()
        tree["environment"] = {"kind": "qbm_ohmic", "gamma0": 1e-3, "kBT": 1.0, "temperature": 300.0}
        with pytest.raises(ConfigError):
            parse_config(tree)

    def test_si_temperature_converted(self):
        cfg = load_config(CONFIGS / "fullerene-c70.json")
        qbm = cfg.environment.member("qbm_ohmic")
        assert qbm.kBT == pytest.approx(1.380649e-23 * 300.0, rel=1e-12)

    def test_missing_section(self):
        tree = _tree()
        del tree["environment"]
        with pytest.raises(ConfigError, match="environment"):
            parse_config(tree)

    def test_invalid_geometry_surfaces(self):
        tree = _tree()
        tree["geometry"] = {"L0": 0.5, "sigma_x0": 2.0}
        from fringeworks.geometry import GeometryError

        with pytest.raises(GeometryError):
            parse_config(tree)


class TestNumberFormat:
    def test_17_significant_digits(self):
        assert fmt(1.0 / 3.0) == "0.33333333333333331"

    def test_round_trips_float(self):
        rng = np.random.default_rng(4)
        for v in rng.standard_normal(50) * 10.0 ** rng.integers(-12, 12, 50):
            assert float(fmt(v)) == v


class TestTrajectoryRoundTrip:
    def test_csv(self, tmp_path, fig2_trajectory):
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, fig2_trajectory)
        back = read_trajectory_csv(path)
        np.testing.assert_array_equal(back["t"], fig2_trajectory.ts)
        np.testing.assert_array_equal(back["A"], fig2_trajectory.ys[:, 0])
        np.testing.assert_array_equal(back["traceLog"], fig2_trajectory.ys[:, 3])
        assert back["pre_transient"][0]
        assert not back["pre_transient"][-1]

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,A\n0,1\n")
        with pytest.raises(DatasetFormatError):
            read_trajectory_csv(path)


class TestProfileRoundTrip:
    def test_csv(self, tmp_path, fig2_trajectory, fig_geometry):
        prof = intensity_profile(fig2_trajectory, fig2_trajectory.env, fig_geometry.L0, 0.41)
        path = tmp_path / "profile.csv"
        write_profile_csv(path, prof, convention="full_2L0")
        back = read_profile_csv(path)
        np.testing.assert_array_equal(back["x"], prof.xs)
        np.testing.assert_array_equal(back["P"], prof.values)
        assert back["meta"]["normalization"] == "unit_peak"
        assert back["meta"]["convention"] == "full_2L0"


class TestVisibilityRoundTrip:
    def test_csv(self, tmp_path, fig2_trajectory, fig_geometry):
        from fringeworks.analysis import visibility_trace

        trace = visibility_trace(
            fig2_trajectory, fig2_trajectory.env, fig_geometry, [0.35, 0.41, 0.5]
        )
        path = tmp_path / "vis.csv"
        write_visibility_csv(path, trace)
        back = read_visibility_csv(path)
        np.testing.assert_array_equal(back["t"], trace.times)
        np.testing.assert_array_equal(back["nu"], trace.nu_values)


class TestDatasetIngestion:
    def test_two_column_defaults_sigma(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x,count\n0.0,4\n1.0,9\n")
        data = load_dataset(path)
        np.testing.assert_allclose(data.sigma, [2.0, 3.0])

    def test_three_column_explicit_sigma(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x,count,sigma\n0.0,4,0.5\n1.0,9,0.25\n")
        data = load_dataset(path)
        np.testing.assert_allclose(data.sigma, [0.5, 0.25])

    def test_source_comment_parsed(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("# source: bench run 12\nx,count\n0.0,1\n1.0,2\n")
        assert load_dataset(path).meta == "bench run 12"

    def test_duplicate_x_reports_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x,count\n0.0,1\n0.0,2\n")
        with pytest.raises(DatasetFormatError, match=":3:"):
            load_dataset(path)

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x,count\n0.0,1\nnot-a-number,2\n")
        with pytest.raises(DatasetFormatError, match=":3:"):
            load_dataset(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("position,value\n0.0,1\n")
        with pytest.raises(DatasetFormatError):
            load_dataset(path)

    def test_write_read_round_trip(self, tmp_path):
        data = ExperimentalDataset.from_counts([0.0, 0.5, 1.0], [3.0, 7.0, 2.0], meta="demo")
        path = tmp_path / "d.csv"
        write_dataset_csv(path, data)
        back = load_dataset(path)
        np.testing.assert_array_equal(back.xs, data.xs)
        np.testing.assert_array_equal(back.counts, data.counts)
        np.testing.assert_array_equal(back.sigma, data.sigma)
        assert back.meta == "demo"

    def test_shipped_dataset_parses(self):
        data = load_dataset(DATA / "neutron-zeilinger-synthetic.csv")
        assert len(data.xs) >= 100
        assert "synthetic" in data.meta


class TestManifest:
    def test_hashes_and_outputs(self, tmp_path):
        src = tmp_path / "in.json"
        src.write_text('{"a": 1}')
        builder = ManifestBuilder("demo", ["demo", "--x"], {"a": 1})
        builder.record_input(src)
        out_file = tmp_path / "result.csv"
        out_file.write_text("x\n1\n")
        builder.record_output(out_file)
        manifest_path = builder.write(tmp_path)
        payload = json.loads(manifest_path.read_text())
        assert payload["command"] == "demo"
        assert payload["outputs"] == [str(out_file)]
        import hashlib

        assert payload["input_hashes"][str(src)] == hashlib.sha256(src.read_bytes()).hexdigest()
        assert payload["tool_version"]
