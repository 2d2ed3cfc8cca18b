"""Render the analysis CSV tables into fixed-style figures.

Reads only the CSV contract (comment lines starting with '#', then a
header row); never imports the producer package. Figures carry no
timestamps or environment text, so the same CSV renders to the same bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("flux", "budget", "dq", "estimates", "khm")

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


class RenderError(Exception):
    """Bad plot request: unknown kind, unreadable CSV, missing columns."""


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    csv_path: Path
    out_path: Path
    logy: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown plot kind {self.kind!r}; choose from {KINDS}")


@dataclass
class Table:
    columns: list[str]
    rows: list[dict]

    def need(self, *names: str) -> None:
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise RenderError(f"CSV is missing columns {missing}; has {self.columns}")

    def floats(self, name: str, where=None) -> np.ndarray:
        rows = self.rows if where is None else [r for r in self.rows if where(r)]
        try:
            return np.array([float(r[name]) for r in rows])
        except ValueError as exc:
            raise RenderError(f"column {name!r} is not numeric: {exc}") from exc


def read_table(path) -> Table:
    path = Path(path)
    if not path.exists():
        raise RenderError(f"no such file: {path}")
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise RenderError(f"{path}: empty CSV")
    reader = csv.DictReader(lines)
    rows = list(reader)
    if reader.fieldnames is None or not rows:
        raise RenderError(f"{path}: CSV has a header but no data rows")
    return Table(list(reader.fieldnames), rows)


def _line(ax, x, y, logy: bool, **kwargs):
    if logy:
        ax.semilogy(x, np.maximum(np.abs(y), 1e-300), **kwargs)
    else:
        ax.plot(x, y, **kwargs)


def _plot_flux(table: Table, ax, logy: bool) -> None:
    table.need("t", "Q", "Pi_Q")
    times = sorted({float(r["t"]) for r in table.rows})
    final = times[-1]
    for t in times[:-1]:
        q = table.floats("Q", lambda r, t=t: float(r["t"]) == t)
        pi = table.floats("Pi_Q", lambda r, t=t: float(r["t"]) == t)
        _line(ax, q, pi, logy, color="0.75", lw=0.8)
    q = table.floats("Q", lambda r: float(r["t"]) == final)
    pi = table.floats("Pi_Q", lambda r: float(r["t"]) == final)
    label = ("|energy flux|" if logy else "energy flux") + f" at t={final:g}"
    _line(ax, q, pi, logy, marker="o", color="C0", label=label)
    ax.set_xlabel("cut index Q")
    ax.set_ylabel("energy flux past Q")
    ax.legend(loc="best")


def _plot_budget(table: Table, ax, logy: bool) -> None:
    table.need("Q", "budget_residual")
    _line(ax, table.floats("Q"), table.floats("budget_residual"), logy,
          marker="s", color="C3")
    ax.set_xlabel("cut index Q")
    ax.set_ylabel("budget residual")


def _plot_dq(table: Table, ax, logy: bool) -> None:
    table.need("field", "q", "d_q")
    fields = sorted({r["field"] for r in table.rows})
    for i, name in enumerate(fields):
        q = table.floats("q", lambda r, n=name: r["field"] == n)
        d = table.floats("d_q", lambda r, n=name: r["field"] == n)
        pos = d > 0
        _line(ax, q[pos], d[pos], logy, marker="o", color=f"C{i}",
              label=f"shell norms: {name}")
        if pos.sum() >= 3:
            qs, ds = q[pos][1:], d[pos][1:]
            slope = np.polyfit(qs, np.log2(ds), 1)[0]
            ax.annotate(f"slope {slope:+.3f}", xy=(qs[-1], ds[-1]),
                        xytext=(-40, 10 + 12 * i), textcoords="offset points",
                        color=f"C{i}", fontsize=9)
    ax.set_xlabel("shell index q")
    ax.set_ylabel("weighted shell norm d_q")
    ax.legend(loc="best")


def _plot_estimates(table: Table, ax, logy: bool) -> None:
    table.need("Q", "estimate", "ratio")
    names = sorted({r["estimate"] for r in table.rows})
    for i, name in enumerate(names):
        q = table.floats("Q", lambda r, n=name: r["estimate"] == n)
        ratio = table.floats("ratio", lambda r, n=name: r["estimate"] == n)
        _line(ax, q, ratio, logy, marker="o", color=f"C{i}", label=name)
    ax.set_xlabel("cut index Q")
    ax.set_ylabel("measured LHS/RHS ratio")
    ax.legend(loc="best", fontsize=8)


def _plot_khm(table: Table, ax, logy: bool) -> None:
    table.need("abs_l", "pi_div", "pi_sym")
    ell = table.floats("abs_l")
    order = np.argsort(ell, kind="stable")
    _line(ax, ell[order], table.floats("pi_div")[order], logy,
          marker="o", color="C0", label="divergence form")
    _line(ax, ell[order], table.floats("pi_sym")[order], logy,
          marker="x", ls="--", color="C1", label="symmetric form")
    ax.set_xlabel("lag |l|")
    ax.set_ylabel("two-point flux")
    ax.legend(loc="best")


_RENDERERS = {
    "flux": _plot_flux,
    "budget": _plot_budget,
    "dq": _plot_dq,
    "estimates": _plot_estimates,
    "khm": _plot_khm,
}


def render(spec: PlotSpec) -> Path:
    """Render one figure; returns the written path."""
    table = read_table(spec.csv_path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            _RENDERERS[spec.kind](table, ax, spec.logy)
            fig.tight_layout()
            spec.out_path.parent.mkdir(parents=True, exist_ok=True)
            # strip the creator text so identical inputs give identical bytes
            fig.savefig(spec.out_path, metadata=_no_creator_metadata(spec.out_path))
        finally:
            plt.close(fig)
    return spec.out_path


def _no_creator_metadata(path: Path) -> dict:
    suffix = path.suffix.lower()
    if suffix == ".png":
        return {"Software": None}
    if suffix == ".svg":
        return {"Date": None}
    return {}
