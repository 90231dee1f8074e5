"""Space-time correlation data ``C_j(t)`` with per-point uncertainties."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("time_s", "site", "C", "sigma_C")


@dataclass
class CorrelationField:
    """Correlations on a (time x site) grid.

    ``values[n, k]`` is ``C`` at ``times[n]`` and absolute site ``sites[k]``;
    ``center`` is the site of the initial excitation, so spatial offsets are
    ``sites - center``.
    """

    times: np.ndarray
    sites: np.ndarray
    values: np.ndarray
    sigmas: np.ndarray | None = None
    center: int | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.sites = np.asarray(self.sites, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.times.size, self.sites.size)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} != {shape}")
        if self.sigmas is None:
            self.sigmas = np.zeros(shape)
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        if self.sigmas.shape != shape:
            raise ValueError(f"sigmas shape {self.sigmas.shape} != {shape}")
        if np.any(self.sigmas < 0):
            raise ValueError("negative standard errors")
        if self.center is None:
            self.center = int(self.sites.min() + self.sites.size // 2)

    @property
    def offsets(self) -> np.ndarray:
        return self.sites - self.center

    def autocorrelation(self) -> np.ndarray:
        k = int(np.flatnonzero(self.sites == self.center)[0])
        return self.values[:, k]

    def slice_at(self, index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Offsets, values and sigmas of one time slice."""
        return self.offsets, self.values[index], self.sigmas[index]


def write_field_csv(field: CorrelationField, path) -> None:
    """One row per (t, j), time-major, values printed round-trip exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for n, t in enumerate(field.times):
            for k, s in enumerate(field.sites):
                w.writerow((repr(float(t)), int(s), repr(float(field.values[n, k])),
                            repr(float(field.sigmas[n, k]))))


def read_field_csv(path, center: int | None = None) -> CorrelationField:
    """Inverse of :func:`write_field_csv`.

    Without an explicit ``center`` the convention ``center = floor(L / 2)``
    over the sites present is used.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
        rows = [r for r in reader if r]
    data = np.array([[float(x) for x in r] for r in rows])
    times = np.unique(data[:, 0])
    sites = np.unique(data[:, 1].astype(int))
    if data.shape[0] != times.size * sites.size:
        raise ValueError(f"{path}: rows do not form a complete time x site grid")
    ti = np.searchsorted(times, data[:, 0])
    si = np.searchsorted(sites, data[:, 1].astype(int))
    values = np.empty((times.size, sites.size))
    sigmas = np.empty_like(values)
    values[ti, si] = data[:, 2]
    sigmas[ti, si] = data[:, 3]
    return CorrelationField(times, sites, values, sigmas, center=center)
