import csv
import io
import textwrap
from pathlib import Path

import numpy as np
import pytest

from phonomog import cli
from phonomog.errors import PhonomogWarning

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

CUBE = """
[matrix]
preset = epoxy
[inclusion]
preset = steel
[cell]
shape = cube
fraction = 0.125
[solver]
method = pwe
n_list = 0, 1
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_homogeneous_steel_moduli(tmp_path):
    out = tmp_path / "steel.csv"
    code = cli.main(["moduli", "--config", str(CONFIGS / "steel.ini"), "--out", str(out), "--jobs", "1"])
    assert code == 0
    rows = read_csv(out)
    assert {r["method"] for r in rows} == {"mm", "pwe"}
    for r in rows:
        assert float(r["c11"]) == pytest.approx(170.0, rel=1e-10)
        assert float(r["c44"]) == pytest.approx(80.0, rel=1e-10)
        assert float(r["c12"]) == pytest.approx(10.0, rel=1e-9)
        assert float(r["rho"]) == pytest.approx(7.7)
        assert float(r["d1_c3"]) == pytest.approx(np.sqrt(170 / 7.7), rel=1e-10)


def test_csv_is_deterministic(tmp_path):
    cfg = write(tmp_path, CUBE)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["moduli", "--config", cfg, "--out", str(a), "--jobs", "1"]) == 0
    assert cli.main(["moduli", "--config", cfg, "--out", str(b), "--jobs", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a)
    assert [(r["method"], r["N"]) for r in rows] == [("pwe", "0"), ("pwe", "1")]


def test_negative_density_is_config_error(tmp_path, capsys):
    cfg = write(tmp_path, CUBE.replace("preset = steel", "c11 = 170\nc66 = 80\nrho = -7.7"))
    assert cli.main(["moduli", "--config", cfg]) == 2
    assert "inclusion.rho" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch, field",
    [
        (("shape = cube", "shape = torus"), "cell.shape"),
        (("n_list = 0, 1", "n_list = -1"), "solver.n_list"),
        (("method = pwe", "method = fem"), "solver.method"),
        (("fraction = 0.125", "fraction = 1.5"), "[cell]"),
    ],
)
def test_malformed_fields_name_themselves(tmp_path, capsys, patch, field):
    cfg = write(tmp_path, CUBE.replace(*patch))
    assert cli.main(["moduli", "--config", cfg]) == 2
    assert field in capsys.readouterr().err


def test_missing_config_and_bad_arguments(tmp_path):
    assert cli.main(["moduli", "--config", str(tmp_path / "nope.ini")]) == 2
    assert cli.main(["frobnicate", "--config", "x"]) == 2
    assert cli.main(["moduli"]) == 2


def test_empty_sweep_grid(tmp_path, capsys):
    cfg = write(tmp_path, CUBE + "[sweep]\nparameter = fraction\ngrid =\n")
    assert cli.main(["sweep", "--config", cfg]) == 2
    assert "sweep.grid" in capsys.readouterr().err


def test_sweep_columns_and_order(tmp_path):
    cfg = write(tmp_path, CUBE + "[sweep]\nparameter = fraction\ngrid = 0.3, 0.1, 0.2\n")
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out), "--jobs", "2"]) == 0
    rows = read_csv(out)
    assert [float(r["fraction"]) for r in rows] == [0.3, 0.1, 0.2]
    for r in rows:
        assert float(r["pwe1_cl"]) <= float(r["pwe0_cl"])
        assert float(r["mm0bound_cl"]) <= float(r["voigt_cl"])
        assert float(r["hs_lower_cl"]) > 0


def test_convergence_matrix_sides(tmp_path):
    out = tmp_path / "c.csv"
    cfg = write(tmp_path, CUBE)
    assert cli.main(["convergence", "--config", cfg, "--out", str(out), "--method", "both", "--n-list", "0,1"]) == 0
    rows = read_csv(out)
    sides = {(r["method"], r["N"]): int(r["matrix_side"]) for r in rows}
    assert sides == {("mm", "0"): 6, ("mm", "1"): 54, ("pwe", "0"): 0, ("pwe", "1"): 78}
    cl = {(r["method"], r["N"]): float(r["c3"]) for r in rows}
    assert cl[("mm", "1")] <= cl[("pwe", "1")] <= cl[("pwe", "0")]


def test_bounds_command(tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(["bounds", "--config", write(tmp_path, CUBE), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 6
    assert float(rows[0]["bound_c3"]) < float(rows[0]["voigt_c3"])
    assert float(rows[0]["hs_lower_cl"]) < float(rows[0]["hs_upper_cl"])


def test_numerical_failure_exit_code(tmp_path, capsys):
    # a step cap too small for the requested tolerance
    text = CUBE.replace("method = pwe", "method = mm").replace("n_list = 0, 1", "n_list = 1")
    text += "steps = 8\nmax_steps = 16\nrtol = 1e-14\n"
    assert cli.main(["moduli", "--config", write(tmp_path, text), "--jobs", "1"]) == 3
    assert "phonomog.mm" in capsys.readouterr().err


def test_strict_promotes_symmetry_warning(tmp_path, capsys):
    text = CUBE.replace("method = pwe", "method = mm").replace("n_list = 0, 1", "n_list = 0")
    cfg = write(tmp_path, text)
    assert cli.main(["moduli", "--config", cfg, "--jobs", "1", "--strict"]) == 3
    assert "symmetry" in capsys.readouterr().err


def test_indefinite_direction_gives_nan_or_strict_failure(tmp_path, capsys):
    text = CUBE.replace("method = pwe", "method = mm").replace("n_list = 0, 1", "n_list = 0")
    text = text.replace("fraction = 0.125", "fraction = 0.5") + "[directions]\nlist = 1 0 0; 2 1 0\n"
    cfg = write(tmp_path, text)
    out = tmp_path / "m.csv"
    with pytest.warns(PhonomogWarning, match="no speeds"):
        assert cli.main(["moduli", "--config", cfg, "--out", str(out), "--jobs", "1"]) == 0
    r = read_csv(out)[0]
    assert float(r["d1_c3"]) == pytest.approx(2.557023, rel=1e-6)
    assert np.isnan(float(r["d2_c1"]))
    capsys.readouterr()
    assert cli.main(["moduli", "--config", cfg, "--jobs", "1", "--strict"]) == 3


def test_stdout_when_no_output_path(tmp_path, capsys):
    assert cli.main(["bounds", "--config", write(tmp_path, CUBE)]) == 0
    text = capsys.readouterr().out
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][:3] == ["k1", "k2", "k3"]


@pytest.mark.parametrize("name", ["cube.ini", "cube_fraction_sweep.ini", "spheroid_aspect_sweep.ini", "oblique.ini"])
def test_shipped_configs_parse(name):
    cfg = cli.load_config(str(CONFIGS / name))
    assert cfg.cell().volume_fraction() > 0


def test_oblique_config_runs(tmp_path):
    out = tmp_path / "o.csv"
    assert cli.main(["moduli", "--config", str(CONFIGS / "oblique.ini"), "--out", str(out), "--jobs", "1"]) == 0
    r = read_csv(out)[0]
    assert float(r["c11"]) == pytest.approx(173.6, rel=1e-3)
