"""Named parameter sets reproducing each published figure panel.

A preset fixes the system parameters shared by every curve of a panel, the
quantity that varies between curves (``knob``) and its values, and the
correlation route. Weak-field panels carry no curve list and use
E/gamma = 0.025.
"""

from dataclasses import dataclass, field

from .exceptions import ConfigError
from .params import SystemParams

WEAK_DRIVE = 0.025


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    params: SystemParams
    method: str = "regression"
    knob: str = None
    values: tuple = ()
    effect: str = None
    settings: dict = field(default_factory=dict)

    def curves(self):
        """Parameter set for each curve of the panel."""
        from .analysis import apply_knob

        if self.knob is None:
            return [(None, self.params)]
        return [(v, apply_knob(self.params, self.knob, v)) for v in self.values]


def _p(g, kappa, drive, **kw):
    couplings = g if isinstance(g, tuple) else (g,)
    return SystemParams(couplings=couplings, kappa=kappa, drive=drive, **kw)


# Transit-dephasing and Dicke panels need photon-counting trajectories.
_TRAJ = {"bin_width": 0.25, "total_time": 2e7, "trajectories": 4}

_PRESETS = [
    Preset("fig-weak-a", "sub-Poissonian statistics and antibunching, weak drive",
           _p(1.0, 1.6, WEAK_DRIVE), effect="sub_poissonian"),
    Preset("fig-weak-b", "overshoot violation of the Schwarz inequality, weak drive",
           _p(1.0, 0.77, WEAK_DRIVE), effect="overshoot"),
    Preset("fig-weak-c", "undershoot violation of the Schwarz inequality, weak drive",
           _p(2.0, 5.0, WEAK_DRIVE), effect="undershoot"),
    Preset("fig-evolve", "conditioned photon number after a detection, g=1 kappa=0.77",
           _p(1.0, 0.77, 0.1), "conditioned", "drive", (0.1, 0.2, 0.3), "overshoot"),
    Preset("fig-evolve-b", "conditioned photon number after a detection, g=2 kappa=5",
           _p(2.0, 5.0, 0.1), "conditioned", "drive", (0.1, 0.5, 1.0), "undershoot"),
    Preset("fig-evolve-c", "conditioned photon number after a detection, g=1 kappa=1.6",
           _p(1.0, 1.6, 0.1), "conditioned", "drive", (0.1, 0.5, 1.0), "sub_poissonian"),
    Preset("fig-strong-a", "g2 versus drive, overshoot parameters",
           _p(1.0, 0.77, 0.025), "regression", "drive", (0.025, 0.125, 0.2, 0.35),
           "overshoot_strong"),
    Preset("fig-strong-b", "g2 versus drive, undershoot parameters",
           _p(2.0, 5.0, 0.025), "regression", "drive", (0.025, 0.25, 0.35, 0.5, 1.0),
           "undershoot_strong"),
    Preset("fig-strong-c", "g2 versus drive, sub-Poissonian parameters",
           _p(1.0, 1.6, 0.025), "regression", "drive", (0.025, 0.25, 0.425, 0.6),
           "sub_poissonian"),
    Preset("fig-dephasing-a", "collisional dephasing, overshoot parameters",
           _p(1.0, 0.77, 0.1, dephasing_mode="collisional"), "regression", "gamma_ph",
           (0.0, 0.05, 0.2), "overshoot"),
    Preset("fig-dephasing-b", "collisional dephasing, undershoot parameters",
           _p(2.0, 5.0, 0.1, dephasing_mode="collisional"), "regression", "gamma_ph",
           (0.0, 0.05, 0.2), "undershoot"),
    Preset("fig-dephasing-c", "collisional dephasing, sub-Poissonian parameters",
           _p(1.0, 1.6, 0.1, dephasing_mode="collisional"), "regression", "gamma_ph",
           (0.0, 0.1, 0.2), "sub_poissonian"),
    Preset("fig-dephasing2-a", "transit dephasing, overshoot parameters",
           _p(1.0, 0.77, 0.1, gamma_ph=0.05, dephasing_mode="transit"), "trajectory",
           "gamma_ph", (0.05, 0.1, 0.5), "overshoot", dict(_TRAJ)),
    Preset("fig-dephasing2-b", "transit dephasing, sub-Poissonian parameters",
           _p(1.0, 1.6, 0.1, gamma_ph=0.05, dephasing_mode="transit"), "trajectory",
           "gamma_ph", (0.05, 0.1, 0.5), "sub_poissonian", dict(_TRAJ, bin_width=0.1)),
    Preset("fig-spectator-a", "spectator atom, g1=1 kappa=0.77",
           _p((1.0, 0.1), 0.77, 0.1), "regression", "spectator_g2", (0.1, 0.5, 1.0)),
    Preset("fig-spectator-b", "spectator atom, g1=2 kappa=0.77",
           _p((2.0, 0.2), 0.77, 0.1), "regression", "spectator_g2", (0.2, 1.0, 2.0)),
    Preset("fig-spectator-c", "spectator atom, g1=1 kappa=1.6",
           _p((1.0, 0.1), 1.6, 0.1), "regression", "spectator_g2", (0.1, 0.5, 1.0)),
    Preset("fig-dicke-a", "two atoms, Dicke versus independent emission, g=1 kappa=0.77",
           _p((1.0, 1.0), 0.77, 0.1), "trajectory", settings=dict(_TRAJ, total_time=2e6)),
    Preset("fig-dicke-b", "two atoms, Dicke versus independent emission, g=2 kappa=5",
           _p((2.0, 2.0), 5.0, 0.1), "trajectory", settings=dict(_TRAJ, total_time=2e6)),
    Preset("fig-dicke-c", "two atoms, Dicke versus independent emission, g=1 kappa=1.6",
           _p((1.0, 1.0), 1.6, 0.1), "trajectory", settings=dict(_TRAJ, total_time=2e6)),
]

PRESETS = {p.name: p for p in _PRESETS}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; run 'cavityqed presets' for the list",
                          "preset") from None
