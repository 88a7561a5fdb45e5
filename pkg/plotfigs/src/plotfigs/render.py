"""Schema-driven rendering of wpbc figure CSVs.

A recipe names the x column, the curve columns (optionally with error-bar
columns), axis labels/scales, and an optional facet column; rendering is a
pure function of the CSV contents.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderSummary:
    figure_id: str
    out_path: str
    curves_drawn: int
    points: int


def load_recipe(path):
    with open(path, "r", encoding="utf-8") as fh:
        recipe = json.load(fh)
    for key in ("figure_id", "x", "curves"):
        if key not in recipe:
            raise RenderError(f"recipe {path}: missing key {key!r}")
    if not recipe["curves"]:
        raise RenderError(f"recipe {path}: no curves declared")
    return recipe


def read_csv(path):
    """Read a wpbc CSV: '#' provenance lines, then a header, then rows."""
    rows = []
    header = None
    with open(path, "r", encoding="utf-8") as fh:
        for record in csv.reader(line for line in fh if not line.startswith("#")):
            if not record:
                continue
            if header is None:
                header = record
                continue
            rows.append(record)
    if header is None:
        raise RenderError(f"{path}: no header row found")
    if not rows:
        raise RenderError(f"{path}: no data rows")
    table = {name: [] for name in header}
    for record in rows:
        if len(record) != len(header):
            raise RenderError(f"{path}: row width {len(record)} != header "
                              f"width {len(header)}")
        for name, value in zip(header, record):
            table[name].append(value)
    return table


def _floats(table, column, csv_path):
    if column not in table:
        raise RenderError(f"{csv_path}: column {column!r} not present "
                          f"(have: {', '.join(sorted(table))})")
    out = []
    for v in table[column]:
        try:
            out.append(float(v))
        except ValueError:
            out.append(math.nan)
    return out


def expected_curves(recipe):
    n = len(recipe["curves"])
    facets = recipe.get("facets")
    return n * (len(facets["values"]) if facets else 1)


def _draw(ax, table, recipe, csv_path, mask=None):
    x = _floats(table, recipe["x"]["column"], csv_path)
    drawn = 0
    for curve in recipe["curves"]:
        y = _floats(table, curve["column"], csv_path)
        err = (_floats(table, curve["errorbar_column"], csv_path)
               if "errorbar_column" in curve else None)
        if mask is not None:
            xs = [v for v, keep in zip(x, mask) if keep]
            ys = [v for v, keep in zip(y, mask) if keep]
            es = [v for v, keep in zip(err, mask) if keep] if err else None
        else:
            xs, ys, es = x, y, err
        style = curve.get("style", "o-")
        label = curve.get("label", curve["column"])
        if es is not None:
            ax.errorbar(xs, ys, yerr=es, fmt=style, label=label, capsize=3,
                        markersize=4)
        else:
            ax.plot(xs, ys, style, label=label, markersize=4)
        drawn += 1
    ax.set_xlabel(recipe["x"].get("label", recipe["x"]["column"]))
    ax.set_ylabel(recipe.get("y", {}).get("label", ""))
    if recipe.get("y", {}).get("scale") == "log":
        ax.set_yscale("log")
    if recipe["x"].get("scale") == "log":
        ax.set_xscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    return drawn


def render(recipe_path, csv_path, out_path):
    """Render one CSV with one recipe; returns a RenderSummary."""
    recipe = load_recipe(recipe_path)
    table = read_csv(csv_path)
    facets = recipe.get("facets")
    if facets:
        values = facets["values"]
        keys = table.get(facets["column"])
        if keys is None:
            raise RenderError(f"{csv_path}: facet column {facets['column']!r} missing")
        fig, axes = plt.subplots(1, len(values), figsize=(5.5 * len(values), 4.2))
        if len(values) == 1:
            axes = [axes]
        drawn = 0
        points = 0
        for ax, val in zip(axes, values):
            mask = [k == val for k in keys]
            if not any(mask):
                raise RenderError(f"{csv_path}: no rows with "
                                  f"{facets['column']}={val!r}")
            drawn += _draw(ax, table, recipe, csv_path, mask)
            points += sum(mask)
            ax.set_title(f"{facets['column']} = {val}")
    else:
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        drawn = _draw(ax, table, recipe, csv_path)
        points = len(next(iter(table.values())))
    fig.suptitle(recipe.get("title", recipe["figure_id"]))
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return RenderSummary(figure_id=recipe["figure_id"], out_path=str(out_path),
                         curves_drawn=drawn, points=points)
