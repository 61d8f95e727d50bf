import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.interpolate import CubicSpline

from richlab import dragmodel
from richlab.dragmodel import SHELL_FAMILIES, DragTable, bundled_table, cd, data_dir, load_drag_table
from richlab.errors import DragTableFormatError, InsufficientKnotsError


def data_rows(family):
    """Number of numeric rows in the shipped file, counted independently."""
    lines = (data_dir() / f"{family}.csv").read_text().splitlines()
    return sum(1 for ln in lines if ln and ln[0].isdigit())


@pytest.mark.parametrize("family", SHELL_FAMILIES)
def test_bundled_tables_load(family):
    t = bundled_table(family)
    assert len(t) == data_rows(family)
    assert np.all(np.diff(t.mach) > 0)
    assert np.all(t.cd_values > 0)


@pytest.mark.parametrize("family", SHELL_FAMILIES)
def test_knots_reproduced(family):
    t = bundled_table(family)
    vals = np.array([cd(t, m) for m in t.mach])
    assert_allclose(vals, t.cd_values, rtol=4 * np.finfo(float).eps)


@pytest.mark.parametrize("family", SHELL_FAMILIES)
def test_matches_scipy_natural_spline(family):
    t = bundled_table(family)
    ref = CubicSpline(t.mach, t.cd_values, bc_type="natural")
    mids = 0.5 * (t.mach[1:] + t.mach[:-1])
    quarter = t.mach[:-1] + 0.25 * np.diff(t.mach)
    for x in np.concatenate([mids, quarter]):
        assert_allclose(cd(t, x), ref(x), rtol=1e-12, atol=1e-14)


def test_constant_extension():
    t = bundled_table("G7")
    assert cd(t, 0.0) == t.cd_values[0]
    assert cd(t, t.mach[-1] + 10) == t.cd_values[-1]
    assert cd(t, np.nextafter(t.mach[-1], 0)) == pytest.approx(t.cd_values[-1], rel=1e-12)


@pytest.mark.parametrize("family", ["G1", "G7"])
def test_c2_across_knots(family):
    t = bundled_table(family)
    for i in range(2, len(t) - 2):
        x = t.mach[i]
        e = 1e-4 * min(t.mach[i] - t.mach[i - 1], t.mach[i + 1] - t.mach[i])
        left = [cd(t, x - e - j * e) for j in range(3)]
        right = [cd(t, x + e + j * e) for j in range(3)]
        # one-sided first and second differences agree across the knot
        d1l = (left[0] - left[1]) / e
        d1r = (right[1] - right[0]) / e
        d2l = (left[0] - 2 * left[1] + left[2]) / e**2
        d2r = (right[2] - 2 * right[1] + right[0]) / e**2
        scale = max(1.0, abs(t.m2).max())
        assert abs(d1l - d1r) < 1e-2 * scale
        assert abs(d2l - d2r) < 1e-1 * scale


def test_natural_end_conditions():
    t = bundled_table("G8")
    assert t.m2[0] == 0.0 and t.m2[-1] == 0.0


GOOD = "# comment\nmach,cd\n0.0,0.2\n0.5,0.21\n1.0,0.4\n1.5,0.35\n"


def test_load_stream():
    t = load_drag_table(io.StringIO(GOOD), "X")
    assert t.family == "X"
    assert t.knots[1] == (0.5, 0.21)


@pytest.mark.parametrize(
    "text,line",
    [
        ("mach,cd\n0.0,0.2\n0.5,0.21\n0.5,0.4\n1.5,0.35\n", 4),
        ("mach,cd\n0.0,0.2\n0.5,0.21\n0.4,0.4\n1.5,0.35\n", 4),
        ("mach,cd\n0.0,0.2\n0.5,nan\n1.0,0.4\n1.5,0.35\n", 3),
        ("mach,cd\n0.0,0.2\n0.5,inf\n1.0,0.4\n1.5,0.35\n", 3),
        ("mach,cd\n0.0,0.2\n0.5,abc\n1.0,0.4\n1.5,0.35\n", 3),
        ("mach,cd\n-0.1,0.2\n0.5,0.3\n1.0,0.4\n1.5,0.35\n", 2),
        ("mach,cd\n0.0,0.2\n0.5,0.0\n1.0,0.4\n1.5,0.35\n", 3),
        ("mach,cd\n0.0,0.2,1\n0.5,0.3\n1.0,0.4\n1.5,0.35\n", 2),
    ],
)
def test_format_errors_carry_line(text, line):
    with pytest.raises(DragTableFormatError) as info:
        load_drag_table(io.StringIO(text))
    assert info.value.line == line


@pytest.mark.parametrize("text", ["", "# only comments\nmach,cd\n", "mach,cd\n0,1\n1,1\n2,1\n"])
def test_insufficient_knots(text):
    with pytest.raises(InsufficientKnotsError):
        load_drag_table(io.StringIO(text))


def test_data_dir_override(tmp_path, monkeypatch):
    (tmp_path / "G7.csv").write_text(GOOD)
    monkeypatch.setattr(dragmodel, "_CACHE", {})
    monkeypatch.setenv("RICHLAB_DATA_DIR", str(tmp_path))
    assert data_dir() == tmp_path
    assert len(bundled_table("G7")) == 4


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.05, 2.0), min_size=4, max_size=12),
    st.lists(st.floats(0.1, 1.0), min_size=12, max_size=12),
)
def test_spline_interpolates_random_knots(steps, values):
    x = np.cumsum(steps)
    y = np.array(values[: len(x)])
    t = DragTable.from_knots("r", x, y)
    ref = CubicSpline(x, y, bc_type="natural")
    for xi, yi in zip(x, y):
        assert abs(cd(t, xi) - yi) <= 4 * np.spacing(yi)
    xm = 0.5 * (x[1:] + x[:-1])
    assert_allclose([cd(t, v) for v in xm], ref(xm), rtol=1e-9, atol=1e-12)


def test_table_is_immutable():
    t = bundled_table("G1")
    with pytest.raises(ValueError):
        t.cd_values[0] = 1.0
    assert math.isfinite(t(1.2))
