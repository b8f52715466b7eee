"""Nonclassicality classification of correlation series and threshold scans.

Margins are positive when the effect is present:

* ``sub_poissonian``   ``1 - g2(0)``
* ``antibunched``      initial slope ``(g2(tau_1) - g2(0)) / tau_1`` at the first
  positive delay, with a monotone rise over the first three points
* ``overshoot``        ``max_{tau>0} (g2 - 1) - |g2(0) - 1|``
* ``overshoot_strong`` ``max_{tau>0} g2 - g2(0)``
* ``undershoot``       ``(1 - min_{tau>0} g2) - |g2(0) - 1|``
* ``undershoot_strong`` ``(1 - min_{tau>0} g2) - (g2(0) - 1)``

The plain forms are the symmetric Schwarz-inequality violations; the
``_strong`` forms are the one-sided versions used for strong-drive
thresholds. The two coincide whenever ``g2(0) >= 1``; for antibunched light
the one-sided margins are trivially positive, so their flags additionally
require ``g2(0) >= 1``.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from .estimators import correlator_for
from .exceptions import ConfigError, EffectAbsentError
from .liouville import find_E_sat

log = logging.getLogger(__name__)

EFFECTS = ("sub_poissonian", "antibunched", "overshoot", "overshoot_strong",
           "undershoot", "undershoot_strong")
KNOBS = ("drive", "gamma_ph", "spectator_g2")
REGRESSION_FLOOR = 1e-4
MIN_POINTS = 10


@dataclass(frozen=True)
class EffectMargin:
    margin: float
    error: float
    flag: bool


@dataclass(frozen=True)
class NonclassicalReport:
    source: str
    g2_0: float
    effects: dict
    floor: float

    def __getitem__(self, name):
        return self.effects[name]

    def flag(self, name):
        return self.effects[name].flag

    def margin(self, name):
        return self.effects[name].margin

    @property
    def flags(self):
        return tuple(name for name in EFFECTS if self.effects[name].flag)

    @property
    def nonclassical(self):
        return bool(self.flags)

    def as_dict(self):
        out = {"source": self.source, "g2_0": self.g2_0, "floor": self.floor}
        for name in EFFECTS:
            e = self.effects[name]
            out[f"{name}.flag"] = e.flag
            out[f"{name}.margin"] = e.margin
            out[f"{name}.error"] = e.error
        return out

    def to_text(self):
        """One ``key = value`` line per field."""
        return "".join(f"{k} = {json.dumps(v) if not isinstance(v, str) else v}\n"
                       for k, v in self.as_dict().items())

    @classmethod
    def from_text(cls, text):
        raw = {}
        for line in text.splitlines():
            if " = " in line:
                k, v = line.split(" = ", 1)
                try:
                    raw[k.strip()] = json.loads(v)
                except ValueError:
                    raw[k.strip()] = v.strip()
        effects = {name: EffectMargin(float(raw[f"{name}.margin"]), float(raw[f"{name}.error"]),
                                      bool(raw[f"{name}.flag"])) for name in EFFECTS}
        return cls(raw["source"], float(raw["g2_0"]), effects, float(raw["floor"]))


def _combined(*errs):
    return float(np.sqrt(np.sum(np.square(errs))))


def classify(series, floor=REGRESSION_FLOOR):
    """Margins and flags for every effect in :data:`EFFECTS`.

    For trajectory series a flag needs the margin to exceed its standard
    error; otherwise it needs to exceed ``floor``.
    """
    g = np.asarray(series.values, dtype=float)
    err = np.asarray(series.errors, dtype=float)
    if g.size < MIN_POINTS:
        raise ConfigError(f"series too short: {g.size} points, need at least {MIN_POINTS}",
                          "tau_points")
    if series.tau_grid[0] != 0:
        raise ConfigError("series must start at tau = 0", "tau")
    stochastic = series.source == "trajectory"
    g0, e0 = g[0], err[0]
    tau1 = float(series.tau_centers[1] - series.tau_centers[0])
    rest, rest_err = g[1:], err[1:]
    i_max = int(np.argmax(rest))
    i_min = int(np.argmin(rest))
    e_max = _combined(e0, rest_err[i_max])
    e_min = _combined(e0, rest_err[i_min])

    margins = {
        "sub_poissonian": (1.0 - g0, e0),
        "antibunched": ((g[1] - g0) / tau1, _combined(e0, err[1]) / tau1),
        "overshoot": ((rest[i_max] - 1.0) - abs(g0 - 1.0), e_max),
        "overshoot_strong": (rest[i_max] - g0, e_max),
        "undershoot": ((1.0 - rest[i_min]) - abs(g0 - 1.0), e_min),
        "undershoot_strong": ((1.0 - rest[i_min]) - (g0 - 1.0), e_min),
    }
    effects = {}
    for name, (m, e) in margins.items():
        bar = e if stochastic else floor
        flag = m > bar
        if name == "antibunched":
            flag = flag and g[2] > g[1]
        elif name.endswith("_strong"):
            flag = flag and g0 >= 1.0
        effects[name] = EffectMargin(float(m), float(e) if stochastic else 0.0, bool(flag))
    return NonclassicalReport(series.source, float(g0), effects, floor)


@dataclass
class ScanResult:
    knob: str
    effect: str
    values: np.ndarray
    margins: np.ndarray
    errors: np.ndarray
    reports: list
    series: list
    threshold: float = None
    bracket: tuple = None
    monotone: bool = True
    e_sat: float = None
    extra: dict = field(default_factory=dict)

    def table(self):
        """Rows of ``(value, [E/E_sat], g2(0), margin, error, flags)``."""
        rows = []
        for v, m, e, r in zip(self.values, self.margins, self.errors, self.reports):
            row = {"value": float(v)}
            if self.e_sat:
                row["E/E_sat"] = float(v) / self.e_sat
            row.update(g2_0=r.g2_0, margin=float(m), error=float(e), flags=",".join(r.flags))
            rows.append(row)
        return rows


def apply_knob(params, knob, value):
    """Copy of ``params`` with the scanned quantity set to ``value``."""
    if knob == "drive":
        return params.replace(drive=float(value))
    if knob == "gamma_ph":
        if params.dephasing_mode == "none":
            raise ConfigError("a gamma_ph scan needs a dephasing mode", "dephasing")
        return params.replace(gamma_ph=float(value))
    if knob == "spectator_g2":
        return params.replace(couplings=(params.g, float(value)))
    raise ConfigError(f"unknown scan knob {knob!r}; choose from {KNOBS}", "knob")


def evaluate(params, method="regression", tau_grid=None, **settings):
    """Fit one correlator and return its series."""
    est = correlator_for(params, method, **settings)
    return est.fit(tau_grid).correlation()


def threshold_scan(params, knob, values, effect, method="regression", tau_grid=None,
                   n_jobs=1, floor=REGRESSION_FLOOR, relative_drive=False, **settings):
    """Scan ``knob`` over ``values`` and locate where ``effect`` disappears.

    With ``effect=None`` every point is classified but no threshold is sought.

    The threshold is the first value whose margin is non-positive (for
    trajectory series: not above one standard error); ``bracket`` holds it
    and the preceding value. With ``relative_drive`` the drive values are
    read as ``E/E_sat`` of ``params``. ``monotone`` is False if the effect
    reappears after the threshold.
    """
    if effect is not None and effect not in EFFECTS:
        raise ConfigError(f"unknown effect {effect!r}; choose from {EFFECTS}", "effect")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise ConfigError("scan needs at least one value", "values")
    if values.size > 1 and not (np.all(np.diff(values) > 0) or np.all(np.diff(values) < 0)):
        raise ConfigError("scan values must be ordered", "values")
    e_sat = None
    knob_values = values
    if knob == "drive" and (relative_drive or params.n_atoms == 1):
        e_sat = find_E_sat(params.replace(drive=0.0, gamma_ph=0.0, dephasing_mode="none"))
        if relative_drive:
            knob_values = values * e_sat
    points = [apply_knob(params, knob, v) for v in knob_values]
    template = correlator_for(points[0], method, **settings)

    def run(p):
        est = clone(template).set_params(**_estimator_params(p))
        return est.fit(tau_grid).correlation()

    if n_jobs == 1:
        series = [run(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            series = list(pool.map(run, points))
    reports = [classify(s, floor) for s in series]
    if effect is None:
        nan = np.full(len(reports), np.nan)
        return ScanResult(knob, None, knob_values, nan, nan, reports, series, e_sat=e_sat)
    margins = np.array([r[effect].margin for r in reports])
    errors = np.array([r[effect].error for r in reports])
    present = np.array([r[effect].flag for r in reports])
    result = ScanResult(knob, effect, knob_values, margins, errors, reports, series,
                        e_sat=e_sat)
    if not present[0]:
        err = EffectAbsentError(
            f"{effect} is absent at the first scan value {values[0]:g} "
            f"(margin {margins[0]:.3g})"
        )
        err.result = result
        raise err
    gone = np.flatnonzero(~present)
    if gone.size:
        k = int(gone[0])
        result.threshold = float(knob_values[k])
        result.bracket = (float(knob_values[k - 1]), float(knob_values[k]))
        result.monotone = not np.any(present[k:])
        if not result.monotone:
            log.warning("%s reappears after the threshold in the %s scan", effect, knob)
    return result


def _estimator_params(p):
    return {
        "g": p.g,
        "g2": p.couplings[1] if p.n_atoms == 2 else None,
        "kappa": p.kappa,
        "drive": p.drive,
        "gamma_ph": p.gamma_ph,
        "dephasing": p.dephasing_mode,
        "emission": p.emission_mode,
    }
