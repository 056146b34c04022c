import numpy as np
import pytest

from convexroof.measures import meyer_wallach
from convexroof.ring import RingModel, ground_state
from convexroof.sweep import (CSV_COLUMNS, SweepConfig, convex_roof_mw, default_b_grid,
                              ground_state_half_width, loglog_fit, maximize_over_b, sweep)


def test_default_grid():
    g = default_b_grid()
    assert g[0] == pytest.approx(1e-4) and g[-1] == pytest.approx(1.0)
    assert len(g) == 161
    assert np.allclose(np.diff(np.log10(g)), 1 / 40)


def test_ground_state_point_is_exact():
    g, err = convex_roof_mw(3, 0.0, 0.2, SweepConfig(restarts=1), seed=0)
    assert g == pytest.approx(meyer_wallach(ground_state(RingModel(3, 0.2)), 3))
    assert err == 0.0


def test_sweep_rows_and_columns():
    cfg = SweepConfig("cg", restarts=2, seed=5)
    res = sweep([(2, 1e-3, 0.05), (2, 1e-3, 0.3), (3, 0.0, 0.1)], cfg)
    assert [r.as_tuple()[:3] for r in res.rows] == [(2, 1e-3, 0.05), (2, 1e-3, 0.3), (3, 0.0, 0.1)]
    assert len(res.rows[0].as_tuple()) == len(CSV_COLUMNS)
    assert all(r.seconds is None for r in res.rows)
    assert np.all((res.column("gamma") >= -1e-12) & (res.column("gamma") <= 1 + 1e-12))
    # deterministic in the seed
    assert sweep([(2, 1e-3, 0.05), (2, 1e-3, 0.3), (3, 0.0, 0.1)], cfg).rows == res.rows
    assert sweep([(2, 1e-3, 0.3)], cfg, timing=True).rows[0].seconds >= 0


def test_sweep_records_failures_as_missing():
    res = sweep([(3, -1.0, 0.1), (3, 0.0, 0.1)], SweepConfig(restarts=1))
    assert res.rows[0].gamma is None
    assert res.rows[1].gamma is not None
    with pytest.raises(ValueError):
        sweep([], SweepConfig())


def test_both_algorithms_agree_on_thermal_state():
    g, err = convex_roof_mw(3, 1e-3, 0.2, SweepConfig("both", restarts=3), seed=1)
    assert err < 1e-6
    assert 0 < g < 1


def test_large_field_curves_coincide():
    cfg = SweepConfig("cg", restarts=2, seed=0)
    vals = [convex_roof_mw(3, t, 1.5, cfg, 0)[0] for t in (1e-4, 1e-3, 1e-2)]
    assert max(vals) - min(vals) < 1e-6


def test_maximize_over_b_beats_grid():
    cfg = SweepConfig("cg", restarts=2, seed=0)
    grid = np.geomspace(0.02, 2, 9)
    pt = maximize_over_b(2, 1e-4, grid, cfg)
    on_grid = sweep([(2, 1e-4, b) for b in grid], cfg).column("gamma")
    assert pt.gamma_max >= np.nanmax(on_grid) - 1e-9
    assert pt.deficit == pytest.approx(1 - pt.gamma_max)


def test_half_width_decreases_with_spin_count():
    widths = [ground_state_half_width(n) for n in (2, 3, 4, 5)]
    assert widths[0] == pytest.approx(1.0, abs=1e-9)
    assert all(a > b for a, b in zip(widths, widths[1:]))


def test_loglog_fit():
    x = np.geomspace(1e-5, 1e-3, 5)
    slope, intercept, r2 = loglog_fit(x, 3 * x**0.7)
    assert slope == pytest.approx(0.7)
    assert intercept == pytest.approx(np.log(3))
    assert r2 == pytest.approx(1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(algorithm="newton")
