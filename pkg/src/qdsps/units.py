"""Unit conventions and physical constants.

All internal frequencies and rates are angular frequencies in rad/ps.
Energies entering through configuration are converted once at the boundary
via hbar; times are in ps, temperatures in K.
"""

HBAR_MEV_PS = 0.6582119569  # meV * ps
KB_MEV_PER_K = 0.08617333262145  # meV / K


def mev_to_radps(energy_mev: float) -> float:
    """Convert an energy hbar*omega in meV to an angular frequency in rad/ps."""
    return energy_mev / HBAR_MEV_PS


def uev_to_radps(energy_uev: float) -> float:
    return energy_uev * 1e-3 / HBAR_MEV_PS


def radps_to_mev(omega: float) -> float:
    return omega * HBAR_MEV_PS


def thermal_energy_mev(temperature_k: float) -> float:
    """k_B T in meV."""
    return KB_MEV_PER_K * temperature_k
