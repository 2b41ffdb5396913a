import numpy as np
import pytest

from hmcflab.ambient import ModelSpace
from hmcflab.errors import DomainError
from hmcflab.flow import FlowConfig, run
from hmcflab.io import (
    FAMILY_COLUMNS,
    TRACE_COLUMNS,
    parse_snapshot,
    read_csv,
    read_snapshot,
    snapshot_text,
    write_family,
    write_reports,
    write_snapshot,
    write_trace,
)
from hmcflab.parallel import parallel_family
from hmcflab.report import AuditReport, reports_from_json
from hmcflab.surface import perturbed_sphere, surface_integrals


@pytest.mark.parametrize("a", [0.0, -1.0, -0.37])
def test_snapshot_round_trip_is_bit_exact(tmp_path, a):
    rng = np.random.default_rng(7)
    s = perturbed_sphere(ModelSpace(a), modes=[(2, 0, 0.04), (3, -1, 0.02)], ntheta=16, nphi=32)
    s = s.with_radii(s.radii * (1 + 1e-3 * rng.random(s.radii.shape)))
    path = tmp_path / "snap.txt"
    write_snapshot(path, s)
    back = read_snapshot(path)
    assert back.a == s.a
    assert np.array_equal(back.radii, s.radii)
    assert np.array_equal(back.center, s.center)
    assert np.array_equal(back.frame, s.frame)
    assert snapshot_text(back) == path.read_text()


def test_snapshot_rejects_malformed_text():
    s = perturbed_sphere(ModelSpace(-1.0), ntheta=16, nphi=32)
    text = snapshot_text(s)
    with pytest.raises(DomainError):
        parse_snapshot(text.replace("nphi = 32", "nphi = 34"))
    with pytest.raises(DomainError):
        parse_snapshot("\n".join(line for line in text.splitlines() if not line.startswith("frame")))
    with pytest.raises(DomainError):
        parse_snapshot(text + "garbage\n")


def test_trace_csv(tmp_path):
    s = perturbed_sphere(ModelSpace(-1.0), modes=[(2, 0, 0.05)], ntheta=16, nphi=32)
    tr = run(s, FlowConfig(t_max=0.05))
    path = tmp_path / "trace.csv"
    write_trace(path, tr)
    header, rows = read_csv(path)
    assert header == TRACE_COLUMNS == ["t", "area", "M", "Gtot", "phi", "kappa_min", "F_max", "dt"]
    assert rows.shape == (len(tr.samples), 8)
    assert np.array_equal(rows[:, 0], tr.times)
    assert np.array_equal(rows[:, 1], tr.areas)
    assert np.array_equal(rows[:, 4], tr.phis)


def test_family_export(tmp_path):
    s = perturbed_sphere(ModelSpace(-1.0), modes=[(2, 0, 0.05)], ntheta=16, nphi=32)
    fam = parallel_family(s, [-0.2, 0.0, 0.3])
    index = write_family(tmp_path / "fam", fam)
    header, rows = read_csv(index)
    assert header == FAMILY_COLUMNS == ["t", "area", "M", "Gtot", "volume"]
    assert list(rows[:, 0]) == [-0.2, 0.0, 0.3]
    for n, member in enumerate(fam.members):
        back = read_snapshot(tmp_path / "fam" / f"member_{n:03d}.txt")
        assert np.array_equal(back.radii, member.radii)
        i, _ = surface_integrals(member)
        assert rows[n, 1] == i.area and rows[n, 4] == i.volume


def test_write_reports(tmp_path):
    reps = [AuditReport.build("x", 2.0, 1.0, 0.0, a=-1.0), AuditReport.build("y", 1.0, 2.0, 0.0)]
    write_reports(tmp_path / "r.json", tmp_path / "r.csv", reps)
    assert reports_from_json((tmp_path / "r.json").read_text()) == reps
    assert (tmp_path / "r.csv").read_text().splitlines() == [
        "name,lhs,rhs,slack,pass",
        "x,2.0,1.0,1.0,true",
        "y,1.0,2.0,-1.0,false",
    ]
