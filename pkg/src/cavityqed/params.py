"""Physical parameters of the driven atom-cavity system.

Every rate is in units of the atomic spontaneous-emission rate, so ``gamma``
is fixed at 1. The atoms, cavity and drive are resonant and the simulation
works in the frame rotating at the common frequency; there are no detunings.
"""

from dataclasses import asdict, dataclass, field, replace

from .exceptions import ConfigError

DEPHASING_MODES = ("none", "collisional", "transit")
EMISSION_MODES = ("independent", "dicke")


@dataclass(frozen=True)
class SystemParams:
    couplings: tuple = (1.0,)
    kappa: float = 1.0
    drive: float = 0.0
    gamma_ph: float = 0.0
    dephasing_mode: str = "none"
    emission_mode: str = "independent"
    gamma: float = field(default=1.0)

    def __post_init__(self):
        couplings = self.couplings
        if isinstance(couplings, (int, float)):
            couplings = (couplings,)
        object.__setattr__(self, "couplings", tuple(float(g) for g in couplings))
        if len(self.couplings) not in (1, 2):
            raise ConfigError("one or two atomic couplings are supported", "couplings")
        for g in self.couplings:
            if not g >= 0:
                raise ConfigError(f"coupling must be >= 0, got {g}", "g")
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be > 0, got {self.kappa}", "kappa")
        if not self.drive >= 0:
            raise ConfigError(f"drive must be >= 0, got {self.drive}", "drive")
        if not self.gamma_ph >= 0:
            raise ConfigError(f"gamma_ph must be >= 0, got {self.gamma_ph}", "gamma_ph")
        if self.gamma != 1.0:
            raise ConfigError("all rates are in units of gamma; gamma must be 1", "gamma")
        if self.dephasing_mode not in DEPHASING_MODES:
            raise ConfigError(f"dephasing must be one of {DEPHASING_MODES}", "dephasing")
        if self.emission_mode not in EMISSION_MODES:
            raise ConfigError(f"emission must be one of {EMISSION_MODES}", "emission")
        if self.emission_mode == "dicke" and self.n_atoms != 2:
            raise ConfigError("dicke emission requires two atoms", "emission")
        if self.dephasing_mode == "transit" and self.n_atoms != 1:
            raise ConfigError("transit dephasing is defined for a single atom", "dephasing")

    @property
    def n_atoms(self):
        return len(self.couplings)

    @property
    def g(self):
        return self.couplings[0]

    @property
    def fastest_rate(self):
        rates = [self.kappa, self.gamma, self.drive, *self.couplings]
        if self.dephasing_mode != "none" and self.gamma_ph > 0:
            rates.append(self.gamma_ph)
        return max(rates)

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        d = asdict(self)
        d["couplings"] = list(self.couplings)
        return d
