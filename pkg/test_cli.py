import csv

import pytest

from diagnostics import read_csv
from main import main


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("ISORK_SEED", raising=False)
    monkeypatch.setenv("ISORK_DATABASE_URL", f"sqlite:///{tmp_path / 'runs.db'}")


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "rb.csv"
    assert main(["run", "--system", "rigidbody", "--h", "0.01", "--steps", "20", "--out", str(out)]) == 0
    records = read_csv(out)
    assert [r.step for r in records] == list(range(21))
    assert records[-1].t == pytest.approx(0.2)
    assert max(r.spectral_drift for r in records) < 1e-12
    assert "max spectral drift" in capsys.readouterr().out


def test_run_from_config_file(tmp_path):
    cfg = tmp_path / "toda.cfg"
    cfg.write_text("system = toda\nmethod = sdirk2\nh = 0.02\nsteps = 10\nout = toda.csv\n")
    assert main(["run", "--config", str(cfg)]) == 0
    with open(tmp_path / "toda.csv", newline="") as f:
        header = next(csv.reader(f))
    assert header[5:8] == ["casimir_2", "casimir_3", "casimir_4"]


def test_run_zeitlin_custom_tableau(tmp_path):
    out = tmp_path / "z.csv"
    code = main(["run", "--system", "zeitlin", "--N", "5", "--method", "custom", "--custom-b", "0.5,0.5",
                 "--h", "0.005", "--steps", "5", "--out", str(out)])
    assert code == 0
    assert all(r.solver_iters_total > 0 for r in read_csv(out)[1:])


def test_dump_config(capsys):
    assert main(["dump-config", "--method", "suzuki4", "--seed", "3"]) == 0
    text = capsys.readouterr().out
    assert "method = suzuki4" in text
    assert "seed = 3" in text


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("ISORK_SEED", "11")
    assert main(["dump-config"]) == 0
    assert "seed = 11" in capsys.readouterr().out
    assert main(["dump-config", "--seed", "5"]) == 0
    assert "seed = 5" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [],
    ["compare", "--methods", ""],
    ["compare", "--methods", "midpoint,leapfrog"],
    ["compare", "--methods", "gawlik,gawlik"],
    ["convergence", "--h-list", "0.1"],
    ["convergence", "--h-list", "0.1,abc,0.025"],
    ["run", "--h", "-0.1"],
    ["run", "--method", "custom"],
    ["run", "--method", "custom", "--custom-b", "0.3,0.3"],
], ids=["no-command", "empty-methods", "unknown-method", "duplicate-method", "single-h", "bad-h", "negative-h",
        "no-weights", "bad-weights"])
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_missing_config_file_is_io_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 4


def test_nonconvergence_exit_3(tmp_path, capsys):
    out = tmp_path / "blowup.csv"
    assert main(["run", "--h", "50", "--init-scale", "5", "--steps", "3", "--out", str(out)]) == 3
    assert [r.step for r in read_csv(out)] == [0]
    assert "step 1" in capsys.readouterr().out


def test_compare_writes_one_csv_per_method(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    code = main(["compare", "--methods", "isospectral-midpoint,gawlik,classical-rk4", "--h", "0.01",
                 "--steps", "200", "--out", str(out), "--workers", "2"])
    assert code == 0
    for m in ("isospectral-midpoint", "gawlik", "classical-rk4"):
        assert len(read_csv(tmp_path / f"cmp_{m}.csv")) == 201
    table = capsys.readouterr().out
    assert "ratio to isospectral-midpoint" in table

    iso = max(r.spectral_drift for r in read_csv(tmp_path / "cmp_isospectral-midpoint.csv"))
    gawlik = max(r.spectral_drift for r in read_csv(tmp_path / "cmp_gawlik.csv"))
    assert gawlik > 1000 * max(iso, 1e-16)


def test_convergence_command(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    code = main(["convergence", "--method", "midpoint", "--h-list", "0.0125,0.05,0.025", "--t-final", "0.5",
                 "--out", str(out)])
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "h,error"
    assert [float(r.split(",")[0]) for r in rows[1:]] == [0.05, 0.025, 0.0125]
    assert "fitted slope" in capsys.readouterr().out


def test_store_records_run(tmp_path):
    from database import make_session
    from ledger import list_runs, load_records

    out = tmp_path / "stored.csv"
    assert main(["run", "--steps", "5", "--out", str(out), "--store"]) == 0
    session = make_session()
    try:
        (run,) = list_runs(session)
        assert run.status == "ok" and run.steps == 5
        assert load_records(session, run.id) == read_csv(out)
    finally:
        session.close()
