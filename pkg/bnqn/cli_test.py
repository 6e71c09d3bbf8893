import csv
import json

import pytest

from bnqn.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_PROBE, main


def _config(tmp_path, data):
  path = tmp_path / "run.json"
  path.write_text(json.dumps(data))
  return str(path)


def _run(tmp_path, command, data, *flags, out_name="out"):
  out = tmp_path / out_name
  return main([command, "--config", _config(tmp_path, data), "--out", str(out), *flags]), out


def _read_csv(path):
  with open(path, newline="") as file:
    return list(csv.DictReader(file))


def _artifacts(out):
  return {path.name: path.read_bytes() for path in sorted(out.iterdir())}


def test_basins_writes_image_and_stats(tmp_path, capsys):
  code, out = _run(tmp_path, "basins", {"preset": "quartic_unity", "grid": {"nx": 16, "ny": 12}})

  assert code == EXIT_OK
  assert (out / "basins.ppm").read_bytes().startswith(b"P6\n16 12\n255\n")
  stats = json.loads((out / "stats.json").read_text())
  assert len(stats["roots"]) == 4
  assert stats["config"]["grid"]["nx"] == 16
  lines = capsys.readouterr().out.splitlines()
  assert len(lines) == 1
  assert lines[0].startswith("basins:")


def test_voronoi_uses_the_exact_roots(tmp_path):
  code, out = _run(tmp_path, "voronoi", {"preset": "exp_strip", "grid": {"half_width": 10, "nx": 20, "ny": 20}})

  assert code == EXIT_OK
  stats = json.loads((out / "stats.json").read_text())
  assert len(stats["roots"]) == 7
  assert stats["coverage"] == 1.0


def test_trace_ends_with_the_final_point(tmp_path):
  code, out = _run(tmp_path, "trace", {"preset": "quartic_unity", "trace": {"z0": [0.3, 0.7]}})

  assert code == EXIT_OK
  rows = _read_csv(out / "trace.csv")
  assert rows[0]["re"] == "0.3"
  assert float(rows[-1]["F"]) < 1e-16
  assert rows[-1]["delta_index"] == ""
  sidecar = json.loads((out / "trace.json").read_text())
  assert sidecar["outcome"]["kind"] == "ConvergedToRoot"
  assert sidecar["rows"] == len(rows)


def test_trace_of_a_comparison_method(tmp_path):
  code, out = _run(tmp_path, "trace", {"preset": "quartic_unity"}, "--method", "newton")

  assert code == EXIT_OK
  sidecar = json.loads((out / "trace.json").read_text())
  assert sidecar["config"]["method"] == "newton"


def test_rate_at_a_triple_root(tmp_path):
  data = {"function": {"kind": "roots_product", "roots": [[0, 0], [0, 0], [0, 0]]}, "method": "newton"}

  code, out = _run(tmp_path, "rate", data)

  assert code == EXIT_OK
  report = json.loads((out / "report.json").read_text())
  assert report["multiplicity"] == 3
  assert report["ratio"] == pytest.approx(2 / 3, rel=1e-3)
  assert report["expected"] == pytest.approx(2 / 3)


def test_local_probe_passes_on_a_cubic_saddle(tmp_path, capsys):
  code, out = _run(tmp_path, "local", {"preset": "saddle_cubic"})

  assert code == EXIT_OK
  report = json.loads((out / "report.json").read_text())
  assert report["passed"] is True
  assert report["probes"][0]["d"] == 3
  assert "1 critical points probed" in capsys.readouterr().out


def test_local_probe_fails_away_from_a_critical_point(tmp_path):
  code, out = _run(tmp_path, "local", {"preset": "saddle_cubic", "local": {"z_star": [0.5, 0]}})

  assert code == EXIT_PROBE
  assert json.loads((out / "report.json").read_text())["passed"] is False


def test_conjugacy_passes_on_the_quartic(tmp_path):
  data = {"preset": "quartic_unity", "conjugacy": {"tolerance": 1e-6, "steps": 30}}

  code, out = _run(tmp_path, "conjugacy", data)

  assert code == EXIT_OK
  assert json.loads((out / "report.json").read_text())["passed"] is True


def test_flow_writes_the_trajectory(tmp_path):
  data = {"preset": "quartic_unity", "flow_run": {"z0": [0.5, 0.3]}, "params": {"flow": {"t_max": 10}}}

  code, out = _run(tmp_path, "flow", data)

  assert code == EXIT_OK
  rows = _read_csv(out / "flow.csv")
  assert len(rows) == 1001
  assert max(float(r["drift"]) for r in rows) < 1e-6


def test_compare_tabulates_each_run(tmp_path):
  data = {
    "preset": "quartic_unity",
    "grid": {"nx": 12, "ny": 10},
    "compare": {"runs": [{"method": "bnqn"}, {"method": "newton"}, {"method": "relaxed"}]},
  }

  code, out = _run(tmp_path, "compare", data)

  assert code == EXIT_OK
  report = json.loads((out / "report.json").read_text())
  assert report["table"]["method"] == ["bnqn", "newton", "relaxed"]
  assert len(report["runs"]) == 3


def test_seed_flag_reaches_every_artifact(tmp_path):
  code, out = _run(tmp_path, "trace", {"preset": "quartic_unity"}, "--seed", "17")

  assert code == EXIT_OK
  config = json.loads((out / "trace.json").read_text())["config"]
  assert config["seed"] == 17
  assert config["params"]["random_relaxed"]["seed"] == 17


def test_invalid_config_exits_with_the_config_code(tmp_path, capsys):
  code, _ = _run(tmp_path, "basins", {"preset": "quartic_unity", "method": "halley"})

  assert code == EXIT_CONFIG
  assert "method" in capsys.readouterr().err


def test_missing_config_file_exits_with_the_io_code(tmp_path):
  assert main(["basins", "--config", str(tmp_path / "nope.json")]) == EXIT_IO


def test_unknown_subcommand_is_an_argument_error():
  with pytest.raises(SystemExit):
    main(["paint"])


def test_worker_count_leaves_every_artifact_byte_identical(tmp_path):
  data = {"preset": "quartic_unity", "grid": {"nx": 16, "ny": 12}}

  code_one, single = _run(tmp_path, "basins", data, "--threads", "1", out_name="single")
  code_two, pooled = _run(tmp_path, "basins", data, "--threads", "2", out_name="pooled")

  assert code_one == code_two == EXIT_OK
  assert set(_artifacts(single)) == {"basins.ppm", "stats.json"}
  assert _artifacts(single) == _artifacts(pooled)


@pytest.mark.parametrize("command, data, flags", [
  ("basins", {"preset": "quartic_unity", "grid": {"nx": 12, "ny": 10}}, []),
  ("trace", {"preset": "quartic_unity", "trace": {"z0": [1.3, 0.4]}}, ["--method", "random_relaxed", "--seed", "23"]),
])
def test_same_config_and_seed_repeat_byte_for_byte(tmp_path, command, data, flags):
  _, first = _run(tmp_path, command, data, *flags, out_name="first")
  _, second = _run(tmp_path, command, data, *flags, out_name="second")

  assert _artifacts(first)
  assert _artifacts(first) == _artifacts(second)
