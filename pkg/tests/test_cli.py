import csv
import io
import json

import pytest
from click.testing import CliRunner

from hecke.cli import cli


@pytest.fixture
def run():
    runner = CliRunner()

    def _run(*args):
        return runner.invoke(cli, list(args), catch_exceptions=False)

    return _run


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_gen_q3(run, tmp_path):
    res = run("gen", "--q", "3", "--radius", "1", "--cache-dir", str(tmp_path))
    assert res.exit_code == 0
    assert rows(res.stdout)[0]["count"] == "4"
    assert (tmp_path / "orbit_q3_R1.txt").exists()


def test_gen_density_columns(run):
    res = run("gen", "--q", "3", "--radius-sweep", "50,100")
    out = rows(res.stdout)
    assert [r["R"] for r in out] == ["50", "100"]
    assert float(out[1]["density"]) == pytest.approx(0.6079, rel=0.02)
    assert "vs lambda/c(q)" in res.stderr


def test_pairs_q3(run):
    res = run("pairs", "--q", "3", "--n", "1,2,3,4", "--radius", "60")
    out = rows(res.stdout)
    assert list(out[0]) == [
        "q", "R", "n", "m", "count", "empirical_density", "predicted_density",
        "rel_error", "predicted_paper", "predicted_fundamental",
    ]
    assert [r["predicted_density"] for r in out] == ["6", "3", "4", "3"]
    for r in out:
        assert float(r["rel_error"]) < 0.05


def test_pairs_refined_json(run):
    res = run("pairs", "--q", "3", "--n", "5", "--radius", "40", "--refine-m", "--format", "json")
    data = json.loads(res.stdout)
    assert [d["m"] for d in data] == ["1", "2", "3", "4"]
    assert all(d["predicted_density"] == pytest.approx(1.2) for d in data)


def test_pairs_q5_both_modes(run):
    res = run("pairs", "--q", "5", "--n", "1,L", "--radius", "30", "--phi-mode", "fundamental")
    out = rows(res.stdout)
    assert out[0]["predicted_paper"] == "0"
    assert float(out[0]["predicted_fundamental"]) == pytest.approx(10 / 3, rel=1e-5)
    assert out[1]["n"] == "1*L"


def test_pairs_deterministic_and_workers(run, tmp_path):
    a = run("pairs", "--q", "3", "--n", "1,5", "--radius-sweep", "20,30", "--cache-dir", str(tmp_path)).stdout
    b = run("pairs", "--q", "3", "--n", "1,5", "--radius-sweep", "20,30", "--cache-dir", str(tmp_path), "--workers", "2").stdout
    assert a == b


def test_slopes_farey(run):
    res = run("slopes", "--q", "3", "--n", "1", "--radius", "8")
    out = rows(res.stdout)
    assert out
    from fractions import Fraction

    for r in out:
        x, y = float(r["a_over_b"]), float(r["c_over_d"])
        assert 0 <= x <= 1 and 0 <= y <= 1
        fx, fy = Fraction(x).limit_denominator(100), Fraction(y).limit_denominator(100)
        # a/b and c/d with ad - bc = 1 are Farey neighbours up to sign
        det = fx.numerator * fy.denominator - fx.denominator * fy.numerator
        assert abs(det) == 1 or fx == 0 or fy == 0


def test_slopes_empty(run):
    res = run("slopes", "--q", "5", "--n", "2", "--radius", "5")
    assert res.exit_code == 0
    assert res.stdout == "q,n,a_over_b,c_over_d\n"


def test_tuples(run):
    res = run("tuples", "--q", "3", "--k", "2", "--radius", "5")
    assert res.exit_code == 0
    assert "criterion_failures=0" in res.stderr
    assert rows(res.stdout)[0]["class"] == "LD[+,+]"


def test_tuples_budget_exit(run):
    res = run("tuples", "--q", "3", "--k", "2", "--radius", "6", "--budget", "10")
    assert res.exit_code == 3
    assert "PARTIAL" in res.stderr


def test_phi_and_nq(run):
    res = run("phi", "--q", "3", "--n-bound", "12")
    out = rows(res.stdout)
    assert all(r["phi_paper"] == r["totient"] for r in out)
    res = run("nq", "--q", "5", "--n-bound", "2", "--phi-mode", "fundamental")
    assert [r["n"] for r in rows(res.stdout)] == ["-1*L", "-1", "1", "1*L"]


def test_validation_exit_codes(run):
    assert run("gen", "--q", "2", "--radius", "5").exit_code == 2
    assert run("pairs", "--radius-sweep", "50,25").exit_code == 2
    assert run("pairs", "--n", "0", "--radius", "5").exit_code == 2
    assert run("gen", "--radius", "0.5").exit_code == 2


def test_config_file(run, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# experiment\nq = 3\nradius = 30\nn = 1,2\nformat = json\n")
    res = run("--config", str(cfg), "pairs")
    data = json.loads(res.stdout)
    assert [d["n"] for d in data] == ["1", "2"]
    res = run("--config", str(cfg), "pairs", "--format", "csv", "--n", "3")
    assert rows(res.stdout)[0]["n"] == "3"


def test_out_file(run, tmp_path):
    out = tmp_path / "sub" / "gen.csv"
    res = run("gen", "--radius", "10", "--out", str(out))
    assert res.exit_code == 0 and res.stdout == ""
    assert out.read_text().startswith("q,R,count")


def test_cache_reuse(run, tmp_path):
    run("gen", "--q", "5", "--radius", "20", "--cache-dir", str(tmp_path))
    res = run("gen", "--q", "5", "--radius", "10", "--cache-dir", str(tmp_path), "-vv")
    assert "loading cached orbit" in res.stderr
    assert not (tmp_path / "orbit_q5_R10.txt").exists()
