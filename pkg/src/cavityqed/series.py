"""Correlation series container and its delimited-table file format."""

import json
from dataclasses import dataclass, field

import numpy as np

SOURCES = ("regression", "trajectory", "conditioned")


@dataclass(frozen=True)
class CorrelationSeries:
    """g2 (or conditioned photon number) sampled on a tau grid.

    For trajectory estimates ``tau_grid`` holds the left bin edges, ``errors``
    the per-bin standard errors and ``pair_count`` the raw pair counts.
    """

    tau_grid: np.ndarray
    values: np.ndarray
    n_ss: float
    source: str
    errors: np.ndarray = None
    pair_count: np.ndarray = None
    bin_width: float = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if tau.shape != values.shape or tau.ndim != 1:
            raise ValueError("tau_grid and values must be 1-d arrays of equal length")
        if tau.size and (tau[0] != 0 or np.any(np.diff(tau) <= 0)):
            raise ValueError("tau_grid must start at 0 and increase strictly")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "values", values)
        if self.errors is None:
            object.__setattr__(self, "errors", np.zeros_like(values))
        else:
            object.__setattr__(self, "errors", np.asarray(self.errors, dtype=float))

    def __len__(self):
        return self.values.size

    @property
    def tau_centers(self):
        if self.bin_width is None:
            return self.tau_grid
        return self.tau_grid + 0.5 * self.bin_width


def write_table(series, path, header=None):
    """Write ``tau  value  error`` rows preceded by ``# key = value`` metadata lines.

    Non-string header values are JSON encoded so the file round-trips.
    """
    meta = {
        "source": series.source,
        "n_ss": series.n_ss,
        "bin_width": series.bin_width,
    }
    meta.update(series.meta)
    meta.update(header or {})
    lines = [f"# {k} = {json.dumps(v) if not isinstance(v, str) else v}" for k, v in meta.items()]
    lines.append("# columns: tau\tvalue\terror" + ("\tpairs" if series.pair_count is not None else ""))
    for i in range(len(series)):
        row = f"{series.tau_grid[i]:.10g}\t{series.values[i]:.12g}\t{series.errors[i]:.6g}"
        if series.pair_count is not None:
            row += f"\t{int(series.pair_count[i])}"
        lines.append(row)
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _parse_value(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def read_header(path):
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if " = " in body:
                key, value = body.split(" = ", 1)
                meta[key.strip()] = _parse_value(value.strip())
    return meta


def read_table(path):
    meta = read_header(path)
    data = np.loadtxt(path, comments="#", ndmin=2)
    pairs = data[:, 3].astype(np.int64) if data.shape[1] > 3 else None
    series = CorrelationSeries(
        tau_grid=data[:, 0],
        values=data[:, 1],
        errors=data[:, 2],
        pair_count=pairs,
        n_ss=float(meta.get("n_ss") or 0.0),
        source=meta.get("source", "regression"),
        bin_width=meta.get("bin_width"),
    )
    return series, meta
