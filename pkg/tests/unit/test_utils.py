import json
import tempfile
import unittest
from pathlib import Path

from pydantic import ValidationError

import utils
from errors import InvalidArgumentError
from settings import Settings


class TestConfiguration(unittest.TestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.dir = Path(tmp.name)

    def test_defaults_come_from_config_yaml(self):
        options = utils.load_options()
        self.assertEqual(options["qubit_cap"], 12)
        self.assertEqual(options["h_range"], "-2,2")
        self.assertEqual(set(options), set(Settings.__fields__))

    def test_missing_config_yaml(self):
        self.assertEqual(utils.load_options(self.dir / "none.yaml"), {})

    def test_precedence(self):
        user = self.dir / "user.yaml"
        user.write_text("threads: 2\nmax_steps: 10\nsa_sweeps: 64\n")
        environ = {"CHAINGAUGE_THREADS": "3", "CHAINGAUGE_MAX_STEPS": "12"}
        settings = utils.resolve_settings(user, {"threads": 4, "log_level": None}, environ)
        self.assertEqual(settings.threads, 4)
        self.assertEqual(settings.max_steps, 12)
        self.assertEqual(settings.sa_sweeps, 64)
        self.assertEqual(settings.log_level, "INFO")

    def test_options_layout(self):
        user = self.dir / "user.yaml"
        user.write_text("options:\n  gap_points:\n    type: int\n    default: 51\n")
        self.assertEqual(utils.resolve_settings(user, environ={}).gap_points, 51)

    def test_env_overrides_skip_empty(self):
        environ = {"CHAINGAUGE_QUBIT_CAP": "10", "CHAINGAUGE_THREADS": ""}
        self.assertEqual(utils.env_overrides(["qubit_cap", "threads"], environ),
                         {"qubit_cap": "10"})

    def test_invalid_values(self):
        valid, message = utils.config_valid_values({**utils.load_options(), "threads": 0})
        self.assertFalse(valid)
        self.assertIn("not valid", message)
        with self.assertRaises(InvalidArgumentError):
            utils.resolve_settings(environ={"CHAINGAUGE_J_RANGE": "0,1"})

    def test_unset_value(self):
        valid, message = utils.config_valid_values({**utils.load_options(), "max_steps": None})
        self.assertFalse(valid)
        self.assertEqual(message, "Config value max_steps is not set")

    def test_unreadable_config(self):
        with self.assertRaises(InvalidArgumentError):
            utils.read_user_config(self.dir / "absent.yaml")
        listing = self.dir / "list.yaml"
        listing.write_text("- 1\n- 2\n")
        with self.assertRaises(InvalidArgumentError):
            utils.read_user_config(listing)


class TestSettings(unittest.TestCase):
    def test_ranges(self):
        settings = Settings.parse(**{"h-range": "-3, 3", "j_range": [-0.5, 2]})
        self.assertEqual(settings.h_range, (-3.0, 3.0))
        self.assertEqual(settings.j_range, (-0.5, 2.0))
        with self.assertRaises(ValidationError):
            Settings(h_range="0,2")
        with self.assertRaises(ValidationError):
            Settings(j_range="1")

    def test_option_names(self):
        settings = Settings.parse(**{" Gap-Points ": 11, "SA_SWEEPS": 32})
        self.assertEqual((settings.gap_points, settings.sa_sweeps), (11, 32))
        with self.assertRaises(InvalidArgumentError):
            Settings.parse(**{"gap.points": 11})
        with self.assertRaises(InvalidArgumentError):
            Settings.parse(shots=5)

    def test_unknown_option_in_config_file(self):
        valid, message = utils.config_valid_values({**utils.load_options(), "colour": "blue"})
        self.assertFalse(valid)
        self.assertIn("colour", message)

    def test_log_level(self):
        self.assertEqual(Settings(log_level="debug").log_level, "DEBUG")
        with self.assertRaises(ValidationError):
            Settings(log_level="verbose")

    def test_positive_values(self):
        with self.assertRaises(ValidationError):
            Settings(gap_points=1)
        with self.assertRaises(ValidationError):
            Settings(width_tol_rel=0)


class TestOutputs(unittest.TestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.dir = Path(tmp.name)

    def test_csv(self):
        self.assertEqual(utils.format_csv(["a", "b"], [[1, 0.5], [2, 1e-3]]),
                         "a,b\n1,0.5\n2,0.001\n")

    def test_json_is_stable(self):
        self.assertEqual(utils.dump_json({"b": 1, "a": [1, 2]}),
                         '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n')

    def test_manifest(self):
        source = self.dir / "in.json"
        source.write_text("{}")
        output = self.dir / "out.csv"
        manifest = utils.RunManifest.for_run("scan", {"graph": source, "cs": [1.0, 2.0]},
                                             {"seed": 3}, [source])
        path = utils.write_manifest(output, manifest)
        self.assertEqual(path.name, "out.csv.manifest.json")
        data = json.loads(path.read_text())
        self.assertEqual(data["parameters"], {"cs": [1.0, 2.0], "graph": str(source)})
        self.assertEqual(data["inputs"][str(source)], utils.file_digest(source))
        self.assertEqual(len(data["inputs"][str(source)]), 64)
        self.assertIsNotNone(data["created"])
        self.assertNotIn("created", manifest.replay_view())

    def test_tool_version(self):
        self.assertNotEqual(utils.tool_version(), "")
