"""Deterministic figures from vdflux CSV tables."""

__version__ = "0.1.0"

from .render import KINDS, PlotSpec, RenderError, Table, read_table, render
