import json
import math
import subprocess
import sys

import numpy as np
import pytest

from geocomplexity import __version__
from geocomplexity.cli import emit, main, parse_m_range, parse_precision, parse_table
from geocomplexity.errors import InvalidInputError

TERM_KEYS = {"neg_loglik", "dim_term", "log_vol", "ratio_term", "curvature_term", "total"}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    assert code == 0, err
    return json.loads(out), out


def write_rows(tmp_path, rows, name="data.csv", header=None, delim=","):
    lines = [] if header is None else [delim.join(header)]
    lines += [delim.join(f"{v:.6f}" for v in r) for r in rows]
    p = tmp_path / name
    p.write_text("\n".join(lines) + "\n")
    return str(p)


# --- parsing ----------------------------------------------------------------


def test_parse_table_variants():
    np.testing.assert_array_equal(parse_table("a,b\n1,2\n3,4\n"), [[1, 2], [3, 4]])
    np.testing.assert_array_equal(parse_table("1\t2\n3\t4\n"), [[1, 2], [3, 4]])
    np.testing.assert_array_equal(parse_table("5\n6\n7\n"), [[5], [6], [7]])


def test_parse_table_reports_line():
    with pytest.raises(InvalidInputError, match="line 3"):
        parse_table("x,y\n1,2\n3,oops\n", "f.csv")
    with pytest.raises(InvalidInputError):
        parse_table("1,2\n3\n")
    with pytest.raises(InvalidInputError):
        parse_table("")


def test_parse_precision_and_range():
    np.testing.assert_array_equal(parse_precision(None, 3), [1, 1, 1])
    np.testing.assert_array_equal(parse_precision("0.5", 2), [0.5, 0.5])
    np.testing.assert_array_equal(parse_precision("1,2", 2), [1, 2])
    for bad in ("0", "1,2,3", "x"):
        with pytest.raises(InvalidInputError):
            parse_precision(bad, 2)
    assert list(parse_m_range("2..4", 5)) == [2, 3, 4]
    assert list(parse_m_range("3", 5)) == [3]
    assert list(parse_m_range(None, 2)) == [1, 2]
    for bad in ("0..2", "2..9", "4..2", "a..b"):
        with pytest.raises(InvalidInputError):
            parse_m_range(bad, 5)


# --- pca-select -------------------------------------------------------------


def test_fixture_selection(capsys):
    rep, _ = run_json(capsys, "pca-select", "--fixture", "rank3")
    assert rep["selected_m"] == 3
    assert rep["command"] == "pca-select"
    assert rep["version"] == __version__
    assert [r["m"] for r in rep["results"]] == [1, 2, 3, 4, 5]
    for r in rep["results"]:
        assert set(r["terms"]) == TERM_KEYS
        assert isinstance(r["warnings"], list)
    assert rep["config"]["seed"] == 0xC0FFEE
    assert rep["config"]["vol_mode"] == "mc"
    rep, _ = run_json(capsys, "pca-select", "--fixture", "isotropic", "--vol-mode", "upper")
    assert rep["selected_m"] == 1


def test_reports_are_byte_stable_and_round_trip(capsys, tmp_path):
    _, first = run_json(capsys, "pca-select", "--fixture", "rank3", "--samples", "20000")
    _, second = run_json(capsys, "pca-select", "--fixture", "rank3", "--samples", "20000")
    assert first == second
    rep = json.loads(first)
    assert json.loads(emit(rep, "json")) == rep
    out = tmp_path / "r.json"
    assert main(["pca-select", "--fixture", "rank3", "--samples", "20000", "--output", str(out)]) == 0
    assert out.read_text() == first


def test_seed_changes_mc_terms(capsys):
    a, _ = run_json(capsys, "pca-select", "--fixture", "rank3", "--samples", "5000", "--seed", "1")
    b, _ = run_json(capsys, "pca-select", "--fixture", "rank3", "--samples", "5000", "--seed", "2")
    assert a["results"][2]["terms"]["log_vol"] != b["results"][2]["terms"]["log_vol"]


def test_input_file_with_header_and_precision(capsys, tmp_path):
    rng = np.random.default_rng(1)
    rows = rng.standard_normal((400, 3)) * [6.0, 2.0, 1.5]
    path = write_rows(tmp_path, rows, header=["a", "b", "c"], delim="\t")
    rep, _ = run_json(capsys, "pca-select", "--input", path, "--vol-mode", "quad", "--m-range", "1..3")
    assert rep["config"]["m_range"] == [1, 3]
    assert [r["m"] for r in rep["results"]] == [1, 2, 3]
    rep2, _ = run_json(capsys, "pca-select", "--input", path, "--vol-mode", "quad", "--precision", "0.5")
    assert rep2["s"] > rep["s"]


def test_one_column(capsys, tmp_path):
    rng = np.random.default_rng(2)
    path = write_rows(tmp_path, rng.standard_normal((200, 1)) * 3)
    rep, _ = run_json(capsys, "pca-select", "--input", path)
    assert rep["selected_m"] == 1
    assert rep["results"][0]["terms"]["curvature_term"] == 0.0


def test_stdin(capsys, monkeypatch, tmp_path):
    import io

    rng = np.random.default_rng(3)
    text = "\n".join(f"{a:.5f},{b:.5f}" for a, b in rng.standard_normal((100, 2)) * [4, 2])
    monkeypatch.setattr(sys, "stdin", io.StringIO(text))
    rep, _ = run_json(capsys, "pca-select", "--input", "-", "--vol-mode", "quad")
    assert rep["results"][0]["m"] == 1


def test_small_n_warning_surfaces(capsys, tmp_path):
    rng = np.random.default_rng(4)
    path = write_rows(tmp_path, rng.standard_normal((12, 3)) * [5, 3, 2])
    rep, _ = run_json(capsys, "pca-select", "--input", path, "--vol-mode", "upper")
    assert any(w.startswith("small_N") for w in rep["results"][2]["warnings"])


def test_table_format(capsys):
    code, out, _ = run(capsys, "pca-select", "--fixture", "rank3", "--format", "table", "--vol-mode", "upper")
    assert code == 0
    assert "selected m" in out.lower()
    assert "curvature_term" in out


# --- error paths ------------------------------------------------------------


def test_malformed_row(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,4\n5,x\n")
    code, _, err = run(capsys, "pca-select", "--input", str(p))
    assert code == 2
    assert "line 3" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "pca-select", "--input", str(tmp_path / "nope.csv"))
    assert code == 2
    assert err


def test_usage_error(capsys):
    assert run(capsys, "pca-select", "--vol-mode", "sideways")[0] == 2
    assert run(capsys, "volume", "--m", "0", "--s", "1")[0] == 2


def test_degenerate_covariance(capsys, tmp_path):
    rng = np.random.default_rng(5)
    a = rng.standard_normal((50, 1)) * 3
    path = write_rows(tmp_path, np.hstack([a, 2 * a]))
    assert run(capsys, "pca-select", "--input", path)[0] == 3


def test_resource_limit(capsys):
    assert run(capsys, "volume", "--m", "5", "--s", "1", "--vol-mode", "quad")[0] == 4


def test_point_manifold_volume_is_degenerate(capsys):
    assert run(capsys, "volume", "--m", "2", "--s", "0")[0] == 3


# --- other commands ---------------------------------------------------------


def test_complexity_command(capsys):
    rep, _ = run_json(capsys, "complexity", "--fixture", "rank3", "--m-range", "1..3", "--check-ratio")
    assert rep["command"] == "complexity"
    for r in rep["results"]:
        assert r["metadata"]["ratio_max_entry_diff"] <= 1e-4
        assert r["terms"]["ratio_term"] == 0.0


def test_volume_command(capsys):
    rep, _ = run_json(capsys, "volume", "--m", "1", "--s", "1")
    assert rep["results"][0]["log_vol"] == pytest.approx(math.log(math.sqrt(2) * math.log(2)), abs=1e-12)
    mc, _ = run_json(capsys, "volume", "--m", "2", "--s", "1", "--samples", "1000000")
    quad, _ = run_json(capsys, "volume", "--m", "2", "--s", "1", "--vol-mode", "quad")
    r_mc, r_q = mc["results"][0], quad["results"][0]
    assert abs(r_mc["log_vol"] - r_q["log_vol"]) <= 3 * r_mc["log_I_stderr"]
    big, _ = run_json(capsys, "volume", "--m", "10", "--s", "16", "--samples", "10000")
    assert math.isfinite(big["results"][0]["log_vol"])


def test_laplace_check_command(capsys):
    rep, _ = run_json(capsys, "laplace-check", "--case", "sphere")
    res = rep["results"][0]
    assert res["slope_curved"] == pytest.approx(-2.0, abs=0.3)
    assert res["slope_flat"] == pytest.approx(-1.0, abs=0.3)
    rep, _ = run_json(capsys, "laplace-check", "--case", "circle", "--ladder", "25,50,100,200")
    res = rep["results"][0]
    assert res["slope_flat"] == pytest.approx(-1.0, abs=0.3)
    for row in res["rows"]:
        assert row["approx_flat"] == row["approx_curved"]
    code, out, _ = run(capsys, "laplace-check", "--format", "table")
    assert code == 0
    for case in ("sphere", "circle", "flat", "p1"):
        assert case in out


def test_regret_check_command(capsys):
    rep, _ = run_json(capsys, "regret-check")
    diffs = [r["difference"] for r in rep["results"]]
    assert abs(diffs[-1]) <= 0.05
    assert rep["monotone_decrease"] is True
    rep, _ = run_json(capsys, "regret-check", "--ladder", "1")
    assert rep["results"][0]["nml_complexity"] == pytest.approx(math.log(2), abs=1e-14)


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "geocomplexity", "--version"], capture_output=True, text=True, check=True
    )
    assert __version__ in out.stdout
