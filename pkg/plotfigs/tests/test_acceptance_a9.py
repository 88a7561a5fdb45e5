"""Acceptance: every figure-id CSV produced by the simulator CLI renders
without error, and the rendered curve count matches its recipe.

The simulator is consumed strictly through its external interfaces: the
`wpbc` command line and the CSV files it writes.
"""

import os
import subprocess
import sys

import pytest

from plotfigs.render import expected_curves, load_recipe, render

HERE = os.path.dirname(__file__)
RECIPES = os.path.abspath(os.path.join(HERE, "..", "recipes"))
SCENARIO = os.path.abspath(os.path.join(HERE, "..", "..", "scenarios",
                                        "defaults.scenario"))

# small sweep grids keep the end-to-end run quick while exercising every path
FIGURE_ARGS = {
    "F2": ["--set", "m_values=4,8", "--draws", "1000"],
    "F3": ["--set", "snr_db_values=10,30", "--draws", "1000"],
    "F4": ["--set", "r_values=4,6", "--draws", "1000"],
    "F5": ["--set", "esnr_db_values=20,40", "--draws", "1000"],
    "F6": ["--set", "r_values=4,6"],
    "F7": ["--set", "m_values=4,6"],
    "F8": ["--set", "r_values=4,6"],
    "F9": ["--set", "m_values=4,6"],
    "F10": ["--set", "eta_values=0.5,0.9", "--set", "delta_values=0.2,0.4"],
}


@pytest.fixture(scope="module")
def csv_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("figures")
    for figure, extra in FIGURE_ARGS.items():
        cmd = [sys.executable, "-m", "wpbc.cli", "run", "--scenario", SCENARIO,
               "--figure", figure, "--seed", "7", "--out", str(out)] + extra
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, f"{figure}: {proc.stderr}"
    return out


@pytest.mark.parametrize("figure", sorted(FIGURE_ARGS))
def test_a9_figure_renders_with_expected_curves(csv_dir, tmp_path, figure):
    recipe_path = os.path.join(RECIPES, f"{figure}.json")
    csv_path = csv_dir / f"{figure}.csv"
    out_path = tmp_path / f"{figure}.png"
    summary = render(recipe_path, str(csv_path), str(out_path))
    assert out_path.exists()
    expected = expected_curves(load_recipe(recipe_path))
    ok = summary.curves_drawn == expected
    print(f"A9-{figure} {'PASS' if ok else 'FAIL'}: {summary.curves_drawn} "
          f"curves rendered (expected {expected})")
    assert ok
