import csv
import json

import numpy as np
import pytest

from quaddelivery.cli import main
from quaddelivery.fixtures import canny_fixtures
from quaddelivery.pdp import UavRequirements, instance_to_dict, worked_example, save_instance
from quaddelivery.pgm import read_pgm, write_pgm


@pytest.fixture
def example_file(tmp_path):
    path = tmp_path / "example.json"
    save_instance(worked_example(), path)
    return path


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_plan_and_oracle_agree(example_file, tmp_path, capsys):
    assert main(["plan", str(example_file), "-o", str(tmp_path / "p.json")]) == 0
    assert main(["oracle", str(example_file), "-o", str(tmp_path / "o.json")]) == 0
    p = json.loads((tmp_path / "p.json").read_text())
    o = json.loads((tmp_path / "o.json").read_text())
    assert p["makespan"] == pytest.approx(5.0) and o["makespan"] == pytest.approx(5.0)
    (leg,) = p["routes"]["h1"]
    assert leg["from"] == "h1" and leg["to"] == "r1" and leg["cargo"] == {"s1": 1}
    assert set(p["solver"]) >= {"nodes", "pivots", "wall_time"}
    assert "makespan 5" in capsys.readouterr().out


def test_plan_without_cuts(example_file):
    assert main(["plan", str(example_file), "--no-cuts"]) == 0


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"items": [\n  {"id": "s1",, }\n]}')
    assert main(["plan", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err
    assert main(["oracle", str(tmp_path / "missing.json")]) == 1


def test_invalid_instance_is_input_error(tmp_path):
    doc = instance_to_dict(worked_example())
    doc["requests"].append(dict(doc["requests"][0]))
    path = tmp_path / "dup.json"
    path.write_text(json.dumps(doc))
    assert main(["plan", str(path)]) == 1


def test_unreachable_request_is_infeasible(tmp_path, capsys):
    path = tmp_path / "far.json"
    save_instance(worked_example(request_at=(90.0, 90.0)), path)
    assert main(["plan", str(path), "-o", str(tmp_path / "p.json")]) == 2
    assert json.loads((tmp_path / "p.json").read_text())["status"] == "infeasible"
    assert main(["oracle", str(path)]) == 2


def test_oracle_refuses_large_instance(tmp_path):
    doc = instance_to_dict(worked_example())
    doc["requests"] = [dict(doc["requests"][0], id=f"r{i}", location=[i, 1]) for i in range(1, 6)]
    path = tmp_path / "big.json"
    path.write_text(json.dumps(doc))
    assert main(["oracle", str(path)]) == 4


def test_fly_plan(example_file, tmp_path):
    plan = tmp_path / "p.json"
    main(["plan", str(example_file), "-o", str(plan)])
    out = tmp_path / "traj.csv"
    assert main(["fly", str(plan), "-o", str(out)]) == 0
    header, rows = _read_csv(out)
    assert header[:4] == ["t", "x", "y", "z"] and len(header) == 17
    assert np.all(np.diff(rows[:, 0]) > 0)
    assert np.linalg.norm(rows[-1, 1:3] - [3.0, 4.0]) <= 0.2


def test_fly_empty_plan_hovers(tmp_path):
    plan = tmp_path / "empty.json"
    plan.write_text(json.dumps({"routes": {}, "starts": {"h1": [1.0, 2.0]}}))
    out = tmp_path / "traj.csv"
    assert main(["fly", str(plan), "-o", str(out)]) == 0
    _, rows = _read_csv(out)
    assert rows[-1, 0] == pytest.approx(0.5, abs=0.01)
    assert np.allclose(rows[:, 1:3], [1.0, 2.0], atol=1e-6)


def test_fly_absurd_gains_diverge(example_file, tmp_path):
    plan = tmp_path / "p.json"
    main(["plan", str(example_file), "-o", str(plan)])
    cfg = tmp_path / "absurd.cfg"
    cfg.write_text("".join(f"{a}.kp = 1e6\n" for a in ("roll", "pitch", "x", "y", "z")))
    out = tmp_path / "traj.csv"
    assert main(["fly", str(plan), "-o", str(out), "--config", str(cfg)]) == 3
    assert out.exists()


def test_fly_bad_config(example_file, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("wingspan = 3\n")
    plan = tmp_path / "p.json"
    plan.write_text("{}")
    assert main(["fly", str(plan), "-o", str(tmp_path / "t.csv"), "--config", str(cfg)]) == 1


def test_edges(tmp_path):
    fix = canny_fixtures()
    src = tmp_path / "square.pgm"
    write_pgm(src, fix["square"])
    out = tmp_path / "edges.pgm"
    dump = tmp_path / "stages"
    assert main(["edges", str(src), "-o", str(out), "--dump-stages", str(dump)]) == 0
    edges = read_pgm(out)
    assert set(np.unique(edges)) == {0.0, 255.0}
    assert (edges > 0).sum() == 76
    assert sorted(p.name for p in dump.iterdir()) == [f"square_{s}.pgm" for s in
                                                       ("direction", "edges", "magnitude", "nms", "smoothed")]


def test_edges_ascii_input_and_constant(tmp_path):
    src = tmp_path / "flat.pgm"
    src.write_text("P2\n# flat\n4 3\n255\n" + " ".join(["90"] * 12) + "\n")
    out = tmp_path / "e.pgm"
    assert main(["edges", str(src), "-o", str(out)]) == 0
    assert out.read_bytes().startswith(b"P5")
    assert not read_pgm(out).any()


def test_edges_errors(tmp_path):
    tiny = tmp_path / "tiny.pgm"
    tiny.write_text("P2 2 2 255 0 0 0 0")
    assert main(["edges", str(tiny), "-o", str(tmp_path / "x.pgm")]) == 1
    junk = tmp_path / "junk.pgm"
    junk.write_bytes(b"P6 1 1 255 \x00")
    assert main(["edges", str(junk), "-o", str(tmp_path / "x.pgm")]) == 1
    ok = tmp_path / "ok.pgm"
    write_pgm(ok, np.zeros((5, 5)))
    assert main(["edges", str(ok), "-o", str(tmp_path / "x.pgm"), "--t-low", "5", "--t-high", "1"]) == 1


def _airframe(tmp_path, **over):
    vals = dict(endurance_min=12, thrust_to_weight=1.8, range_sensors="true", autonomous="true",
                wireless="true", width_in=24, mass_kg=1.2, payload_kg=0.5, prop_guards="true",
                max_height_ft=15)
    vals.update(over)
    path = tmp_path / "air.cfg"
    path.write_text("".join(f"{k} = {v}\n" for k, v in vals.items() if v is not None))
    return path


def test_check_default_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 9


def test_check_thresholds_printed(tmp_path, capsys):
    r = UavRequirements()
    assert main(["check", str(_airframe(tmp_path))]) == 0
    out = capsys.readouterr().out
    assert f">= {r.min_flight_minutes:g} min" in out
    assert f"[{r.thrust_to_weight_range[0]:g}, {r.thrust_to_weight_range[1]:g}]" in out
    assert f"< {r.max_width_inches:g} in" in out and f"< {r.max_mass_kg:g} kg" in out
    assert f"{r.payload_range_kg[0]:g}-{r.payload_range_kg[1]:g} kg" in out
    assert f">= {r.min_max_height_ft:g} ft" in out


@pytest.mark.parametrize("over", [dict(mass_kg=2.0), dict(width_in=30), dict(endurance_min=9.99),
                                  dict(thrust_to_weight=2.01), dict(prop_guards="false"),
                                  dict(payload_kg=0.4), dict(max_height_ft=9)])
def test_check_failures(tmp_path, capsys, over):
    assert main(["check", str(_airframe(tmp_path, **over))]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_check_boundaries_pass(tmp_path):
    assert main(["check", str(_airframe(tmp_path, endurance_min=10, thrust_to_weight=2.0,
                                        max_height_ft=10))]) == 0
    assert main(["check", str(_airframe(tmp_path, thrust_to_weight=1.5))]) == 0


def test_check_missing_key(tmp_path, capsys):
    assert main(["check", str(_airframe(tmp_path, mass_kg=None))]) == 1
    assert "mass_kg" in capsys.readouterr().err


def test_gen_fixtures_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gen-fixtures", str(a), "--seed", "3", "--count", "5"]) == 0
    main(["gen-fixtures", str(b), "--seed", "3", "--count", "5"])
    names = sorted(p.name for p in a.iterdir())
    assert names == [f"instance_{i:03d}.json" for i in range(5)]
    for n in names:
        assert (a / n).read_text() == (b / n).read_text()
        doc = json.loads((a / n).read_text())
        assert "seed" in doc and len(doc["quadcopters"]) <= 2 and len(doc["requests"]) <= 3
