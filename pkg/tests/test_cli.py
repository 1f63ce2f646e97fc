import json
import re
import shutil
import subprocess

import numpy as np
import pytest

from weldfactor import AnalyticCurve, BoundaryCorrespondence, BoundaryDatum, DomainSpec, FactorizationProblem
from weldfactor import schema as js
from weldfactor.cli import run
from weldfactor.curves import uniform_nodes

POLY = re.compile(r'<polygon class="curve" data-label="([^"]*)" points="([^"]*)"')


def polylines(path):
    return [(label, pts.split()) for label, pts in POLY.findall(path.read_text())]


def write(path, doc):
    path.write_text(js.dumps(doc))
    return str(path)


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_fixture_factor_verify(workdir, capsys):
    assert run(["fixture", "--n", "2", "--seed", "7", "-o", "p.json"]) == 0
    assert (workdir / "p.truth.json").exists()
    assert run(["factor", "p.json", "-o", "r.json"]) == 0
    assert run(["verify", "r.json", "p.json", "-o", "m.json"]) == 0
    metrics = json.loads((workdir / "m.json").read_text())
    assert metrics["kind"] == "metrics" and metrics["max_interior_error"] < 1e-6
    out = capsys.readouterr().out
    assert "factors=2" in out and "curve_counts=[2, 1, 0]" in out


def test_peel_order_flag(workdir):
    assert run(["fixture", "--n", "2", "--seed", "7", "-o", "p.json"]) == 0
    assert run(["factor", "p.json", "--peel-order", "0,1", "-o", "r.json"]) == 0
    assert json.loads((workdir / "r.json").read_text())["peel_order"] == [0, 1]


def test_overlapping_domain_is_rejected(workdir, capsys):
    a, b = AnalyticCurve.circle(-0.5, 1, -1), AnalyticCurve.circle(0.5, 1, -1)
    ident = BoundaryCorrespondence()
    prob = FactorizationProblem(DomainSpec([a, b]), [BoundaryDatum(a, ident), BoundaryDatum(b, ident)])
    write(workdir / "bad.json", js.enc_problem(prob))
    assert run(["factor", "bad.json", "-o", "r.json"]) == 2
    assert "error=DOMAIN_INVALID" in capsys.readouterr().err
    assert not (workdir / "r.json").exists()


def test_weld_identity(workdir):
    write(workdir / "id.json", js.enc_corr_doc(BoundaryCorrespondence.identity()))
    assert run(["weld", "id.json", "-o", "w.json", "--svg", "w.svg"]) == 0
    sol = js.dec_welding(json.loads((workdir / "w.json").read_text()))
    t = uniform_nodes(512)
    assert np.abs(sol.weld_curve(t) - np.exp(1j * t)).max() < 1e-10
    assert len(polylines(workdir / "w.svg")) == 2


def test_weld_failure_writes_diagnostics(workdir, capsys):
    phi = BoundaryCorrespondence([0, 0.3j, 0.1], 0)
    write(workdir / "phi.json", js.enc_corr_doc(phi))
    assert run(["weld", "phi.json", "--order", "2", "-o", "w.json"]) == 1
    assert "error=NO_CONVERGENCE" in capsys.readouterr().err
    diag = json.loads((workdir / "w.diagnostics.json").read_text())
    assert diag["kind"] == "diagnostics" and diag["error"] == "NO_CONVERGENCE" and diag["stage"] is not None


def test_plot_unit_circle(workdir):
    write(workdir / "c.json", js.enc_curve_doc(AnalyticCurve.circle()))
    assert run(["plot", "c.json", "-o", "c.svg"]) == 0
    lines = polylines(workdir / "c.svg")
    assert len(lines) == 1 and len(lines[0][1]) == 512


def test_plot_two_curve_domain(workdir):
    dom = DomainSpec([AnalyticCurve.circle(-2, 1, -1), AnalyticCurve.circle(2, 1, -1)])
    write(workdir / "d.json", js.enc_domain_doc(dom))
    assert run(["plot", "d.json", "-o", "d.svg"]) == 0
    lines = polylines(workdir / "d.svg")
    assert [label for label, _ in lines] == ["curve 0", "curve 1"]
    assert all(len(p) == 512 for _, p in lines)


def test_plot_is_byte_identical(workdir):
    write(workdir / "c.json", js.enc_curve_doc(AnalyticCurve([0.1, 0, 1.0, 0.05j], -1)))
    assert run(["plot", "c.json", "-o", "a.svg"]) == 0
    assert run(["plot", "c.json", "-o", "b.svg"]) == 0
    assert (workdir / "a.svg").read_bytes() == (workdir / "b.svg").read_bytes()


@pytest.mark.parametrize("side", ["interior", "exterior"])
def test_riemann_command(workdir, side):
    write(workdir / "c.json", js.enc_curve_doc(AnalyticCurve([0, 1.0, 0.2], 0)))
    assert run(["riemann", "c.json", "--side", side, "-o", "r.json"]) == 0
    doc = json.loads((workdir / "r.json").read_text())
    assert doc["kind"] == "riemann" and doc["side"] == side and doc["residual"] < 1e-8


def test_deterministic_drops_timestamps(workdir):
    assert run(["fixture", "--n", "1", "--seed", "3", "-o", "p.json", "--deterministic"]) == 0
    assert run(["factor", "p.json", "-o", "r.json", "--deterministic"]) == 0
    text = (workdir / "r.json").read_text()
    assert '"seconds"' not in text and '"created"' not in text
    assert run(["factor", "p.json", "-o", "r2.json"]) == 0
    assert '"created"' in (workdir / "r2.json").read_text()


@pytest.mark.parametrize("argv", [["factor", "missing.json", "-o", "r.json"], ["fixture", "--n", "x"],
                                  ["nosuchcommand"], ["fixture", "--n", "2"]])
def test_input_errors_exit_2(workdir, capsys, argv):
    assert run(argv) == 2
    assert capsys.readouterr().err.startswith("error=")


def test_bad_thread_cap(workdir, monkeypatch):
    monkeypatch.setenv("WELDFACTOR_THREADS", "lots")
    assert run(["fixture", "--n", "1", "-o", "p.json"]) == 2


@pytest.mark.skipif(shutil.which("weldfactor") is None, reason="console script not installed")
def test_console_script(workdir):
    proc = subprocess.run(["weldfactor", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
