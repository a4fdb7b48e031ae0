"""Dataset ingestion and synthetic data generation for the harness.

Any CSV with a header row works as input; every column is treated as
categorical text and encoded to integer indices in sorted-unique order
(stable across platforms and runs). True frequencies are the exact
empirical column histograms of the encoded rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ConstantColumn, MalformedCsv
from .oracles import DomainSpec


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a synthetic dataset: per-attribute domain sizes, row count,
    and the seed that fixes the category frequencies once."""

    sizes: tuple[int, ...]
    n: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(k) for k in self.sizes))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


@dataclass
class EncodedDataset:
    domain: DomainSpec
    rows: np.ndarray  # (n, d) int64
    frequencies: list[np.ndarray]  # per attribute, sums to 1
    labels: list[list[str]]  # index -> original category text

    @property
    def n(self) -> int:
        return self.rows.shape[0]


def load_dataset(path) -> EncodedDataset:
    """Read a categorical CSV (header row required) into encoded form.

    Args:
        path: CSV file; every column is treated as categorical text.

    Raises:
        MalformedCsv: unreadable/ragged/empty input.
        ConstantColumn: a column with fewer than two distinct values.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise MalformedCsv(f"{path}: {exc}") from exc
    if frame.shape[0] == 0:
        raise MalformedCsv(f"{path}: no data rows")
    attributes = []
    labels: list[list[str]] = []
    columns = []
    for name in frame.columns:
        values = frame[name].to_numpy(dtype=object)
        cats = sorted(set(values))
        if len(cats) < 2:
            raise ConstantColumn(f"column {name!r} has a single value {cats[0]!r}")
        index = {c: i for i, c in enumerate(cats)}
        columns.append(np.fromiter((index[v] for v in values), dtype=np.int64, count=len(values)))
        attributes.append((str(name), len(cats)))
        labels.append([str(c) for c in cats])
    rows = np.column_stack(columns)
    domain = DomainSpec(tuple(attributes))
    return EncodedDataset(domain, rows, _histograms(rows, domain), labels)


def synthesize_dataset(spec: SyntheticSpec, names: list[str] | None = None) -> EncodedDataset:
    """Draw a synthetic categorical dataset.

    Per-attribute category weights are drawn once from a flat Dirichlet
    using the spec's seed, then n rows are sampled independently. The
    returned true frequencies are the empirical histograms of the sampled
    rows, matching the convention used for file-backed datasets.
    """
    rng = np.random.default_rng(spec.seed)
    if names is None:
        names = [f"a{j}" for j in range(len(spec.sizes))]
    columns = []
    for k in spec.sizes:
        weights = rng.dirichlet(np.ones(k))
        columns.append(rng.choice(k, size=spec.n, p=weights).astype(np.int64))
    rows = np.column_stack(columns)
    domain = DomainSpec(tuple((name, k) for name, k in zip(names, spec.sizes)))
    labels = [[str(i) for i in range(k)] for k in spec.sizes]
    return EncodedDataset(domain, rows, _histograms(rows, domain), labels)


def parse_synthetic_spec(text: str) -> SyntheticSpec:
    """Parse the CLI form ``k=3,5,4;n=12960;seed=7`` (seed optional)."""
    fields = {}
    try:
        for part in text.split(";"):
            key, _, value = part.partition("=")
            fields[key.strip()] = value.strip()
        sizes = tuple(int(v) for v in fields["k"].split(","))
        n = int(fields["n"])
        seed = int(fields.get("seed", "0"))
    except (KeyError, ValueError) as exc:
        raise ValueError(
            f"bad synthetic spec {text!r}; expected e.g. 'k=3,5,4;n=12960;seed=7'"
        ) from exc
    return SyntheticSpec(sizes, n, seed)


def _histograms(rows: np.ndarray, domain: DomainSpec) -> list[np.ndarray]:
    n = rows.shape[0]
    return [
        np.bincount(rows[:, j], minlength=domain.size(j)) / n
        for j in range(domain.d)
    ]
