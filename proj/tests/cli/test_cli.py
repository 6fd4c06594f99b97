"""End-to-end checks of the levikin command-line tool.

Usage: test_cli.py <path-to-levikin> <scenario-dir>
"""
import csv
import json
import os
import subprocess
import sys
import tempfile
import unittest

BINARY = None
SCENARIOS = None

# Small enough to keep every invocation well under a second.
QUICK = {
    "name": "quick",
    "particle": {"radius_nm": 55},
    "source": {"kind": "thermal", "power_mW": 130},
    "trap": {"freq_kHz": [120, 140, 40], "theta_max_rad": 0.43},
    "gas": {"pressure_mbar": 4e-7},
    "feedback": {"target_temp_mK": [55, 22, 45]},
    "simulation": {"dt_s": 1e-7, "duration_s": 0.002, "n_trajectories": 3,
                   "record_stride": 10, "n_bins": 4, "write_trace": True},
    "reheat": {"n_repeats": 4, "window_s": 0.002, "n_bins": 5},
    "sweep": {"pressures_mbar": [1e-6, 1e-5, 1e-4]},
    "psd": {"n_segments": 4},
}


def run(*args, cwd=None):
    return subprocess.run([BINARY, *args], capture_output=True, text=True, cwd=cwd)


class CliCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def scenario(self, name="s.json", **overrides):
        body = json.loads(json.dumps(QUICK))
        for key, value in overrides.items():
            if value is None:
                body.pop(key, None)
            elif isinstance(value, dict) and key in body:
                body[key].update(value)
            else:
                body[key] = value
        path = os.path.join(self.dir, name)
        with open(path, "w") as f:
            json.dump(body, f)
        return path

    def out(self, name):
        return os.path.join(self.dir, name)

    def ok(self, *args):
        r = run(*args)
        self.assertEqual(r.returncode, 0, r.stderr)
        return r


class Rates(CliCase):
    def test_golden_values_of_the_55nm_preset(self):
        self.ok("rates", "-c", os.path.join(SCENARIOS, "sld-55nm.json"), "-o", self.out("r"))
        with open(self.out("r/rates.json")) as f:
            d = json.load(f)
        closed = d["closed_form"]["dTdt_K_per_s"]
        for axis, want in zip("xyz", [0.09208353, 0.16751981, 0.49475948]):
            self.assertAlmostEqual(closed[axis] / want, 1.0, delta=1e-6)
        for axis in "xyz":
            self.assertAlmostEqual(d["quadrature_over_closed_form"][axis], 0.835720622855, delta=2e-3)
        self.assertAlmostEqual(d["lambda"]["z"], 0.655864080626, delta=1e-11)
        self.assertAlmostEqual(d["thermal_prefactor"], 1.59456023529899, delta=1e-12)
        self.assertAlmostEqual(d["equilibrium_temperature_K"], 150.0, delta=1e-9)
        with open(self.out("r/rates.csv")) as f:
            rows = list(csv.DictReader(f))
        self.assertEqual({r["method"] for r in rows}, {"closed_form", "quadrature"})

    def test_oracle_flag_adds_refined_grid(self):
        self.ok("rates", "-c", self.scenario(), "-o", self.out("r"), "--oracle")
        with open(self.out("r/rates.csv")) as f:
            methods = {r["method"] for r in csv.DictReader(f)}
        self.assertIn("quadrature_refined", methods)


class Simulate(CliCase):
    def test_same_seed_gives_identical_bytes(self):
        s = self.scenario()
        self.ok("simulate", "-c", s, "--seed", "7", "-o", self.out("a"))
        self.ok("simulate", "-c", s, "--seed", "7", "--threads", "3", "-o", self.out("b"))
        self.ok("simulate", "-c", s, "--seed", "8", "-o", self.out("c"))
        for name in ("simulate.csv", "trace.bin"):
            with open(self.out("a/" + name), "rb") as f:
                a = f.read()
            with open(self.out("b/" + name), "rb") as f:
                b = f.read()
            self.assertEqual(a, b, name)
        with open(self.out("c/simulate.csv"), "rb") as f:
            self.assertNotEqual(a, f.read())

    def test_binned_output_shape(self):
        self.ok("simulate", "-c", self.scenario(), "-o", self.out("a"))
        with open(self.out("a/simulate.csv")) as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 4 * 3)
        self.assertEqual([r["axis"] for r in rows[:3]], ["x", "y", "z"])


class ExitCodes(CliCase):
    def expect(self, code, *args):
        r = run(*args)
        self.assertEqual(r.returncode, code, r.stderr)
        return r

    def test_unknown_key_is_a_configuration_error(self):
        s = self.scenario(gas={"pressure_mbr": 1e-7})
        r = self.expect(2, "rates", "-c", s)
        self.assertIn("/gas/pressure_mbr", r.stderr)

    def test_zero_duration_is_a_configuration_error(self):
        r = self.expect(2, "simulate", "-c", self.scenario(simulation={"duration_s": 0}),
                        "-o", self.out("x"))
        self.assertIn("duration_s", r.stderr)

    def test_missing_file_and_bad_arguments(self):
        self.expect(2, "rates", "-c", self.out("missing.json"))
        self.expect(2, "rates")
        self.expect(2, "rates", "-c", self.scenario(), "--threads", "0")
        self.expect(2, "rates", "-c", self.scenario(), "--unit", "torr")

    def test_single_pressure_sweep_is_a_numeric_failure(self):
        s = self.scenario(sweep={"pressures_mbar": [1e-5]})
        self.expect(3, "sweep", "-c", s, "-o", self.out("x"))

    def test_fit_of_unrecognised_csv(self):
        bad = self.out("bad.csv")
        with open(bad, "w") as f:
            f.write("a,b\n1,2\n")
        self.expect(2, "fit", "-c", self.scenario(), "--input", bad)


class Units(CliCase):
    def test_sweep_in_mbar_and_pa_agree(self):
        s = self.scenario()
        self.ok("sweep", "-c", s, "--seed", "3", "-o", self.out("m"))
        self.ok("sweep", "-c", s, "--seed", "3", "--unit", "Pa", "-o", self.out("p"))
        with open(self.out("m/sweep_fit.json")) as f:
            m = json.load(f)
        with open(self.out("p/sweep_fit.json")) as f:
            p = json.load(f)
        self.assertEqual(m["pressure_unit"], "mbar")
        self.assertEqual(p["pressure_unit"], "Pa")
        for axis in "xyz":
            a, b = m["a_ph"][axis], p["a_ph"][axis]
            self.assertAlmostEqual(a, b, delta=1e-9 * max(abs(a), 1e-30))
        self.assertAlmostEqual(m["a2"] / (100.0 * p["a2"]), 1.0, delta=1e-9)

    def test_fit_reproduces_sweep_fit(self):
        s = self.scenario()
        self.ok("sweep", "-c", s, "--seed", "3", "-o", self.out("m"))
        self.ok("fit", "-c", s, "--input", self.out("m/sweep.csv"), "-o", self.out("f"))
        with open(self.out("m/sweep_fit.json")) as f:
            a = json.load(f)
        with open(self.out("f/fit.json")) as f:
            b = json.load(f)
        self.assertAlmostEqual(a["a2"] / b["a2"], 1.0, delta=1e-6)

    def test_fit_reproduces_reheat_slopes(self):
        s = self.scenario()
        self.ok("reheat", "-c", s, "--seed", "4", "-o", self.out("r"))
        self.ok("fit", "-c", s, "--input", self.out("r/reheat.csv"), "-o", self.out("f"))
        with open(self.out("r/reheat.json")) as f:
            r = json.load(f)
        with open(self.out("f/fit.json")) as f:
            fit = json.load(f)
        for axis in "xyz":
            self.assertAlmostEqual(fit[axis]["a1_K_per_s"] / r["binned_fit"][axis]["a1_K_per_s"], 1.0, delta=1e-6)


class Psd(CliCase):
    def test_trace_round_trip(self):
        s = self.scenario(simulation={"n_trajectories": 1})
        self.ok("simulate", "-c", s, "--seed", "5", "-o", self.out("a"))
        t = self.scenario("t.json", psd={"trace_file": self.out("a/trace.bin")})
        self.ok("psd", "-c", t, "-o", self.out("p"))
        with open(self.out("p/psd.json")) as f:
            d = json.load(f)
        for axis in "xyz":
            a = d["axes"][axis]
            self.assertAlmostEqual(a["integrated_psd_m2"] / a["mean_square_m2"], 1.0, delta=0.1)


if __name__ == "__main__":
    BINARY = os.path.abspath(sys.argv[1])
    SCENARIOS = os.path.abspath(sys.argv[2])
    unittest.main(argv=sys.argv[:1], verbosity=2)
