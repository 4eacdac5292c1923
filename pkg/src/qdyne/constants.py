"""Physical constants in SI units.

CODATA values come from :mod:`scipy.constants`. CODATA does not list a
13C gyromagnetic ratio, so the tabulated NMR value is used for it.
"""

from scipy import constants as _c

MU0 = _c.mu_0  # N / A^2
HBAR = _c.hbar  # J s
GAMMA_E = _c.physical_constants["electron gyromag. ratio"][0]  # rad / (s T)
GAMMA_1H = _c.physical_constants["proton gyromag. ratio"][0]  # rad / (s T)
GAMMA_13C = 6.728284e7  # rad / (s T), 10.7084 MHz/T

NUCLEAR_GAMMA = {"13C": GAMMA_13C, "1H": GAMMA_1H}
