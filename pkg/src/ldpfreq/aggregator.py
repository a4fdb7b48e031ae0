"""Server-side collection: count reports, estimate frequencies, export.

The server keeps, per round t and attribute j, the number of reports and a
per-value count vector (per-bit one-counts for unary-encoded payloads).
Partial count matrices from parallel ingestion merge by addition. Estimation
divides by the realized per-attribute report count, so estimates stay
unbiased conditional on how clients split across attributes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import longitudinal as lng
from . import oracles
from .errors import MissingParameters, ShapeMismatch, UnknownAttribute
from .longitudinal import LongitudinalParams
from .multidim import TimedReport
from .oracles import DomainSpec, RoundParams


class CountMatrix:
    """Per-(round, attribute) report totals and per-value counts."""

    def __init__(self, domain: DomainSpec):
        self.domain = domain
        self._cells: dict[tuple[int, int], dict] = {}

    def _cell(self, t: int, attr: int) -> dict:
        key = (t, attr)
        if key not in self._cells:
            self._cells[key] = {
                "n": 0,
                "counts": np.zeros(self.domain.size(attr), dtype=np.int64),
            }
        return self._cells[key]

    def ingest(self, rep: TimedReport, ue: bool) -> None:
        """Count one report; ``ue`` declares the expected payload shape."""
        if not 0 <= rep.attr < self.domain.d:
            raise UnknownAttribute(f"attribute {rep.attr} outside [0, {self.domain.d})")
        k = self.domain.size(rep.attr)
        cell = self._cell(rep.t, rep.attr)
        if ue:
            payload = np.asarray(rep.payload)
            if payload.shape != (k,) or not np.isin(payload, (0, 1)).all():
                raise ShapeMismatch(f"expected a {k}-bit 0/1 payload, got {rep.payload!r}")
            cell["counts"] += payload.astype(np.int64)
        else:
            if isinstance(rep.payload, np.ndarray):
                raise ShapeMismatch("expected a category index, got a bit vector")
            v = int(rep.payload)
            if not 0 <= v < k:
                raise ShapeMismatch(f"category {v} outside [0, {k})")
            cell["counts"][v] += 1
        cell["n"] += 1

    def ingest_counts(self, t: int, attr: int, counts, n: int) -> None:
        """Add a pre-aggregated block (vectorized clients, partial workers)."""
        if not 0 <= attr < self.domain.d:
            raise UnknownAttribute(f"attribute {attr} outside [0, {self.domain.d})")
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (self.domain.size(attr),):
            raise ShapeMismatch(
                f"expected {self.domain.size(attr)} per-value counts, got {counts.shape}"
            )
        cell = self._cell(t, attr)
        cell["counts"] += counts
        cell["n"] += int(n)

    def merge(self, other: "CountMatrix") -> "CountMatrix":
        """New matrix equal to ingesting both input streams."""
        if other.domain != self.domain:
            raise ShapeMismatch("count matrices cover different domains")
        out = CountMatrix(self.domain)
        for src in (self, other):
            for (t, attr), cell in src._cells.items():
                out.ingest_counts(t, attr, cell["counts"], cell["n"])
        return out

    def counts(self, t: int, attr: int) -> tuple[int, np.ndarray] | None:
        """(n, per-value counts) for a cell, or None if nothing arrived."""
        cell = self._cells.get((t, attr))
        if cell is None or cell["n"] == 0:
            return None
        return cell["n"], cell["counts"].copy()

    def rounds(self) -> tuple[int, ...]:
        return tuple(sorted({t for t, _ in self._cells}))

    def __eq__(self, other):
        if not isinstance(other, CountMatrix):
            return NotImplemented
        if self.domain != other.domain or set(self._cells) != set(other._cells):
            return False
        return all(
            self._cells[k]["n"] == other._cells[k]["n"]
            and np.array_equal(self._cells[k]["counts"], other._cells[k]["counts"])
            for k in self._cells
        )


@dataclass(frozen=True)
class EstimateRow:
    t: int
    attr: int
    estimates: np.ndarray
    n: int


class EstimateTable:
    """Frequency estimates per (round, attribute), unclipped by default."""

    def __init__(self, domain: DomainSpec, rows: list[EstimateRow]):
        self.domain = domain
        self.rows = sorted(rows, key=lambda r: (r.t, r.attr))

    def get(self, t: int, attr: int) -> EstimateRow | None:
        for row in self.rows:
            if row.t == t and row.attr == attr:
                return row
        return None

    def clipped(self) -> "EstimateTable":
        """Copy with estimates clipped to [0, 1] and renormalized per
        attribute (uniform if everything clipped to zero)."""
        rows = []
        for row in self.rows:
            est = np.clip(row.estimates, 0.0, 1.0)
            total = est.sum()
            est = est / total if total > 0 else np.full_like(est, 1.0 / est.size)
            rows.append(EstimateRow(row.t, row.attr, est, row.n))
        return EstimateTable(self.domain, rows)

    def to_csv(self, path, labels: list[list[str]] | None = None) -> None:
        """Write rows as (t, attribute, value_index, value_label, estimate,
        n_reports), ordered by round, attribute index, value index."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "attribute", "value_index", "value_label", "estimate", "n_reports"])
            for row in self.rows:
                name = self.domain.names[row.attr]
                for i, est in enumerate(row.estimates):
                    label = labels[row.attr][i] if labels is not None else str(i)
                    writer.writerow([row.t, name, i, label, repr(float(est)), row.n])


class Aggregator:
    """Ingestion plus estimation against registered protocol parameters."""

    def __init__(self, domain: DomainSpec):
        self.domain = domain
        self.counts = CountMatrix(domain)
        self._params: dict[int, LongitudinalParams | RoundParams] = {}

    def register_params(self, attr: int, params: LongitudinalParams | RoundParams) -> None:
        if not 0 <= attr < self.domain.d:
            raise UnknownAttribute(f"attribute {attr} outside [0, {self.domain.d})")
        self._params[attr] = params

    def ingest(self, rep: TimedReport) -> None:
        params = self._params.get(rep.attr)
        if params is None:
            raise MissingParameters(f"no parameters registered for attribute {rep.attr}")
        self.counts.ingest(rep, ue=_is_ue(params))

    def estimate_all(self, t: int) -> EstimateTable:
        """Estimates for every attribute with reports at round t; attributes
        with zero reports are simply absent from the table."""
        rows = []
        for attr in range(self.domain.d):
            cell = self.counts.counts(t, attr)
            if cell is None:
                continue
            params = self._params.get(attr)
            if params is None:
                raise MissingParameters(f"no parameters registered for attribute {attr}")
            n, counts = cell
            if isinstance(params, LongitudinalParams):
                est = lng.estimate_longitudinal(counts, n, params)
            else:
                est = oracles.estimate(counts, n, params)
            rows.append(EstimateRow(t, attr, est, n))
        return EstimateTable(self.domain, rows)


def _is_ue(params: LongitudinalParams | RoundParams) -> bool:
    if isinstance(params, LongitudinalParams):
        return params.family in lng.UE_FAMILIES
    return params.family in oracles.UE_FAMILIES
