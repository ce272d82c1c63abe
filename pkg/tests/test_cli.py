import json
import subprocess
import sys

import jsonschema
import pytest

from quintessence.cli import (
    CONFIG_ENV,
    EXIT_INFEASIBLE,
    EXIT_OK,
    ConfigError,
    format_table,
    load_config,
    main,
    parse_config,
    table_schema,
    tables,
    verify_report,
)
from quintessence.meshgen import read_stl_count
from quintessence.strata import Layer


def run(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "quintessence", *args], capture_output=True, env=env, timeout=300
    )


def call(capsysbinary, *argv):
    code = main(list(argv))
    out = capsysbinary.readouterr().out
    return code, out


@pytest.fixture(scope="module")
def report():
    return verify_report()


def test_verify_report(report):
    assert report["passed"], report["first_failure"]
    assert report["group_order"] == 120
    assert abs(report["dihedral_angle"] - 2.0943951) <= 1e-7
    assert abs(report["dihedral_angle"] - 2 * 3.141592653589793 / 3) <= 1e-9
    assert report["euler_sum"] == 0
    assert all(c["passed"] for c in report["checks"].values())


def test_verify_exit_code_and_json():
    p = run("verify")
    assert p.returncode == EXIT_OK
    assert p.stdout.endswith(b"\n")
    data = json.loads(p.stdout.decode("utf-8"))
    assert data["group_order"] == 120 and data["euler_sum"] == 0


def test_layers_table(board):
    t = tables("layers")
    assert len(t["rows"]) == 9
    assert [r["values"][0] for r in t["rows"]] == [1, 12, 20, 12, 30, 12, 20, 12, 1]
    jsonschema.validate(t, table_schema())


def test_rings_table(board):
    t = tables("rings", board)
    jsonschema.validate(t, table_schema())
    eq = t["rows"][Layer.Equatorial]
    assert eq["angle"] == "pi/2"
    assert tuple(eq["values"]) == (30, 0, 10, 20, 2, 2)
    text = format_table(t)
    assert text.splitlines()[0].split()[:3] == ["layer", "angle", "number"]
    assert len(text.splitlines()) == 10


def test_schema_rejects_short_table():
    t = tables("layers")
    t["rows"] = t["rows"][:8]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(t, table_schema())


def test_tables_text_command(capsysbinary):
    code, out = call(capsysbinary, "tables", "--kind", "rings", "--format", "text")
    assert code == EXIT_OK
    row = [line for line in out.decode().splitlines() if line.split()[-6:] == ["30", "0", "10", "20", "2", "2"]]
    assert len(row) == 1


def test_solve_catalog_name(capsysbinary):
    code, out = call(capsysbinary, "solve", "--puzzle", "Dc24Star")
    assert code == EXIT_OK
    data = json.loads(out)
    assert len(data["assemblies"]) >= 1
    assert data["puzzle"]["name"] == "Dc24 Star"


def test_solve_infeasible_spec(tmp_path, capsysbinary):
    f = tmp_path / "seven.txt"
    f.write_text("name = seven inner 4\ninner4 = 7\n", encoding="utf-8")
    code, out = call(capsysbinary, "solve", "--puzzle", str(f))
    assert code == EXIT_INFEASIBLE
    data = json.loads(out)
    assert data["assemblies"] == [] and not data["limits"]["passed"]


def test_solve_unknown_puzzle_is_an_error(capsysbinary):
    code, _ = call(capsysbinary, "solve", "--puzzle", "Dc99 Nothing")
    assert code == 1


def test_ribs_stl(tmp_path, capsysbinary):
    out_path = tmp_path / "spine.stl"
    code, out = call(capsysbinary, "ribs", "--type", "spine", "--format", "stl", "--out", str(out_path))
    assert code == EXIT_OK
    data = json.loads(out)
    n = read_stl_count(out_path)
    assert n == data["mesh"]["n_triangles"]
    assert out_path.stat().st_size == 84 + 50 * n
    assert data["mesh"]["manifold"] and data["mesh"]["oriented"]


def test_ribs_rejects_degenerate_frame(tmp_path, capsysbinary):
    code, _ = call(capsysbinary, "ribs", "--type", "inner4", "--frame-width", "0.6", "--out", str(tmp_path / "x.stl"))
    assert code == 1


def test_catalog_validate(capsysbinary):
    code, out = call(capsysbinary, "catalog", "--validate")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["passed"]
    assert sum(not e["variant"] for e in data["entries"]) == 12


def test_skeleton(tmp_path, capsysbinary):
    path = tmp_path / "sk.obj"
    code, out = call(capsysbinary, "skeleton", "--ring", "spine", "--segments", "4", "--out", str(path))
    assert code == EXIT_OK
    data = json.loads(out)
    lines = path.read_text().splitlines()
    assert sum(line.startswith("l ") for line in lines) == data["edges"] > 0
    assert sum(line.startswith("v ") for line in lines) == 5 * data["edges"]


def test_config_parsing():
    cfg = parse_config("# comment\neps_alg = 1e-10\nframe_width = 0.2\ngrade.Antarctic = 1.3\npretty = no\n")
    assert cfg.eps_alg == 1e-10 and not cfg.pretty
    assert cfg.design.frame_width == 0.2
    assert cfg.design.grade(Layer.Antarctic) == 1.3
    for bad in ("colour = red", "eps_alg = 0", "eps_match = -1e-6", "frame_width = 0.7", "grade.Nowhere = 1", "oops"):
        with pytest.raises(ConfigError):
            parse_config(bad)


def test_config_from_env(tmp_path):
    f = tmp_path / "q.cfg"
    f.write_text("tessellation_level = 2\n", encoding="utf-8")
    assert load_config({CONFIG_ENV: str(f)}).design.tessellation_level == 2
    assert load_config({}).design.tessellation_level == 3
    with pytest.raises(ConfigError):
        load_config({CONFIG_ENV: str(tmp_path / "absent.cfg")})


def test_config_changes_mesh(tmp_path):
    f = tmp_path / "q.cfg"
    f.write_text("tessellation_level = 1\npretty = false\n", encoding="utf-8")
    import os

    env = dict(os.environ, **{CONFIG_ENV: str(f)})
    p = run("ribs", "--type", "inner4", "--out", str(tmp_path / "a.stl"), env=env)
    assert p.returncode == 0
    assert b"\n" not in p.stdout.rstrip(b"\n")
    assert json.loads(p.stdout)["mesh"]["n_triangles"] < 24840


def test_outputs_are_byte_identical(tmp_path):
    a = run("tables", "--kind", "rings")
    b = run("tables", "--kind", "rings")
    assert a.returncode == 0 and a.stdout == b.stdout
    for k in (1, 2):
        p = run("ribs", "--type", "outer4", "--format", "obj", "--out", str(tmp_path / f"{k}.obj"))
        assert p.returncode == 0
    assert (tmp_path / "1.obj").read_bytes() == (tmp_path / "2.obj").read_bytes()
    s1 = run("solve", "--puzzle", "Dc30 Ring", "--max", "3")
    s2 = run("solve", "--puzzle", "Dc30 Ring", "--max", "3")
    assert s1.stdout == s2.stdout
