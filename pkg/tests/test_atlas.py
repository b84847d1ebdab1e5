from dwplab import atlas
from dwplab.ode import OdeParams
from dwplab.report import to_json


def test_default_grid_size():
    grid = atlas.default_grid()
    assert len(grid) == 2 * 3 * 6 * 6 + 8
    assert len({(p.n, p.eps, p.c, p.D, p.rho0) for p in grid}) == len(grid)


def test_small_grid_agrees():
    configs = atlas.default_grid((2,), (-1, 1), (-0.5, 2.0), (-0.02, 0.0, 0.2))
    entries = atlas.run_atlas(configs)
    assert len(entries) == len(configs)
    bad = [e for e in entries if not e.agree]
    assert not bad, [(e.n, e.eps, e.c, e.D, e.notes) for e in bad]
    assert max(e.z_drift for e in entries) < 1e-8


def test_parallel_run_matches_serial():
    configs = atlas.default_grid((3,), (0,), (0.5, 2.0), (0.0, 0.2), special=False)
    a = atlas.run_atlas(configs, jobs=1)
    b = atlas.run_atlas(configs, jobs=2)
    # serialized rows compare NaN endpoints as equal
    assert to_json([e.row() for e in a]) == to_json([e.row() for e in b])


def test_entry_rows_follow_header():
    e = atlas.check_config(OdeParams(2, -1, 2.0, 0.0, 1.0))
    assert len(e.row()) == len(atlas.AtlasEntry.HEADER)
    assert e.kind == "maximal_interval" and e.closed_form == "sinh"
    assert e.agree


def test_detects_a_wrong_prediction(monkeypatch):
    # a classifier that claims the wrong left endpoint time must be flagged
    from dwplab import ode

    real = ode.classify

    def shifted(p):
        reg = real(p)
        left = ode.Endpoint(reg.left.kind, reg.left.rho_limit, reg.left.t - 0.01)
        return ode.OdeRegime(reg.kind, left, reg.right, reg.roots, reg.closed_form, reg.interval, reg.source, reg.double_roots)

    monkeypatch.setattr(atlas, "classify", shifted)
    e = atlas.check_config(OdeParams(2, -1, 2.0, 0.0, 1.0))
    assert not e.agree
