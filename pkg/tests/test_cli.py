import json

import pytest

from ptspec.cli import FIGURES, config_from_args, main
from ptspec.errors import ConfigError
from ptspec.io import parse


def test_spectrum_unperturbed(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["spectrum", "--gamma", "0", "--g", "0", "--b", "0.5", "--levels", "0:6",
                 "--out", str(out), "--quiet"])
    assert code == 0
    rows = parse(out.read_bytes())
    assert [r["n_label"] for r in rows] == list(range(7))
    assert max(abs(r["mu"] - (2 * r["n_label"] + 1)) for r in rows) < 1e-9
    side = json.loads((tmp_path / "s.csv.config.json").read_text())
    assert side["config_echo"]["command"] == "spectrum"


def test_reruns_are_byte_identical(tmp_path):
    args = ["sweep", "--b", "0.2", "--levels", "0:1", "--gamma-start", "0", "--gamma-stop",
            "0.4", "--gamma-step", "0.2", "--quiet", "--format", "json"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = parse(a.read_bytes(), "json")
    assert sorted({r["gamma"] for r in rows}) == [0.0, 0.2, 0.4]


def test_stdout_is_clean_csv(capsys):
    assert main(["spectrum", "--gamma", "0.3", "--b", "0.2", "--levels", "0:2"]) == 0
    cap = capsys.readouterr()
    assert cap.out.startswith("b,g,n_label,branch,gamma,re_mu,im_mu,kind,residual_norm")
    assert "level 0" in cap.err


@pytest.mark.parametrize("argv", [
    ["spectrum", "--levels", "0:95"],
    ["spectrum", "--levels", "5:2"],
    ["spectrum", "--levels", "x"],
    ["spectrum", "--b", "-1"],
    ["spectrum", "--gamma", "1", "--gamma-start", "0"],
    ["spectrum", "--g", "1", "--g-list", "1,2"],
    ["figure", "fig99"],
    ["figure"],
    ["bogus"],
    ["oracle-compare", "--g", "1", "--gamma", "0.3"],
])
def test_config_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "configuration error" in capsys.readouterr().err


def test_level_cap_override():
    cfg = config_from_args(["spectrum", "--levels", "0:95", "--allow-high-levels"])
    assert cfg.level_range == (0, 95)
    assert cfg.params(1.0, 0.0).basis_cutoff >= 190


@pytest.mark.parametrize("fig", FIGURES)
def test_presets_resolve(fig):
    cfg = config_from_args(["figure", fig])
    assert cfg.figure == fig and cfg.gamma_grid and cfg.b_values
    assert cfg.level_range[1] <= 89


def test_figure_presets_follow_captions():
    assert config_from_args(["figure", "fig2"]).level_range == (0, 29)
    assert config_from_args(["figure", "fig2"]).b_values == [0.2]
    assert config_from_args(["figure", "fig5"]).g_values == [5.0]
    fig8 = config_from_args(["figure", "fig8a"])
    assert fig8.gamma_grid == [1.5] and len(fig8.g_values) == 4 and fig8.abscissa == "N"


def test_msbound_command(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["msbound", "--gamma", "1", "--b", "1", "--levels", "0:20", "--out", str(out),
                 "--quiet"]) == 0
    rows = parse(out.read_bytes())
    assert len(rows) == 400
    assert all(r["satisfied"] for r in rows if r["valid"])


def test_oracle_compare_command(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["oracle-compare", "--gamma", "0.3", "--b", "0.2", "--levels", "0:5",
                 "--out", str(out), "--quiet"]) == 0
    rows = parse(out.read_bytes())
    assert len(rows) == 6 and max(r["abs_diff"] for r in rows) < 1e-7


def test_fit_command(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["fit", "--gamma", "1", "--b", "0.5", "--g", "2", "--levels", "0:20",
                 "--out", str(out), "--quiet"]) == 0
    rows = parse(out.read_bytes())
    assert [r["model"] for r in rows] == ["power_law", "half_inverse_bound", "log_over_n32"]
    assert rows[0]["n_min"] == 1 and rows[0]["slope"] < 0


def test_config_error_type():
    with pytest.raises(ConfigError):
        config_from_args(["sweep", "--gamma-start", "0", "--gamma-stop", "1"])
