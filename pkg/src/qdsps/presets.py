"""Named scenario presets reproducing the headline source configurations."""

from __future__ import annotations

PRESETS: dict[str, tuple[str, str]] = {
    "fig2-resonant": (
        "Resonant pi-pulse source: short 2 ps pulse, Purcell factor 32",
        """\
scheme = resonant
dissipator = weak_full
label = fig2-resonant

[pulse]
area = 1 pi
tau_p = 2 ps

[outputs]
trajectory = true
surfaces = true
fom = true

[check]
n_a_min = 0.88
indist_min = 0.94
""",
    ),
    "fig2-offres": (
        "Phonon-assisted inversion, 0.5 meV detuning, 6 ps pulse, area-optimized",
        """\
scheme = phonon_assisted
dissipator = weak_full
label = fig2-offres

[pulse]
area = optimize
tau_p = 6 ps

[laser]
delta_l = 0.5 meV

[outputs]
trajectory = true
surfaces = true
fom = true

[check]
indist_min = 0.98
n_a_min = 0.66
n_a_max = 0.76
""",
    ),
    "fig2-offres-long": (
        "Phonon-assisted inversion with a long 33.3 ps FWHM pulse",
        """\
scheme = phonon_assisted
dissipator = weak_full
label = fig2-offres-long

[pulse]
area = optimize
tau_p = 20 ps

[laser]
delta_l = 1 meV

[outputs]
trajectory = true
surfaces = true
fom = true

[check]
indist_min = 0.97
n_a_min = 0.85
n_a_max = 0.95
""",
    ),
    "fig3-inversion-map": (
        "Exciton population map after the pulse vs detuning and area",
        """\
scheme = phonon_assisted
dissipator = weak_simplified
label = fig3-inversion-map

[pulse]
area = 10 pi
tau_p = 4 ps

[sweep]
delta_l = 0.25 meV, 0.5 meV, 0.75 meV, 1.0 meV, 1.25 meV, 1.5 meV
area = 2 pi, 4 pi, 6 pi, 8 pi, 10 pi, 12 pi, 14 pi, 16 pi, 18 pi, 20 pi, 22 pi
tau_p = 2 ps, 4 ps, 6 ps, 8 ps

[outputs]
trajectory = false
surfaces = false
fom = false
""",
    ),
    "fig4-pulseshape": (
        "Population and scattering-rate time series for strong off-resonant pulses",
        """\
scheme = phonon_assisted
dissipator = weak_simplified
label = fig4-pulseshape

[pulse]
area = 18 pi
tau_p = 4 ps

[laser]
delta_l = 0.75 meV

[sweep]
area = 4 pi, 8 pi, 18 pi
tau_p = 4 ps, 10 ps

[outputs]
trajectory = true
surfaces = false
fom = false
""",
    ),
    "fig5-tpe": (
        "Two-photon biexciton excitation, 7.3 ps FWHM, area-optimized",
        """\
scheme = tpe_biexciton
dissipator = weak_full
label = fig5-tpe

[pulse]
area = optimize
tau_p = 4.3841 ps

[emitter]
binding_energy = 3 meV
gamma_u = 2 ueV

[outputs]
trajectory = true
surfaces = true
fom = true

[check]
d1_max = 0.03
d2_max = 0.001
""",
    ),
    "figA1-polaron-compare": (
        "Weak-coupling vs polaron dissipator populations, weak 20 ps pulse",
        """\
scheme = resonant
dissipator = weak_full
label = figA1-polaron-compare

[pulse]
area = 5 pi
tau_p = 20 ps

[numerics]
dt = 0.02 ps

[outputs]
trajectory = true
surfaces = false
fom = false
""",
    ),
    "figB1-simplified-compare": (
        "Full vs simplified scattering term populations during a strong pulse",
        """\
scheme = phonon_assisted
dissipator = weak_full
label = figB1-simplified-compare

[pulse]
area = 10 pi
tau_p = 4 ps

[laser]
delta_l = 0.5 meV

[outputs]
trajectory = true
surfaces = false
fom = false
""",
    ),
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return PRESETS[name][1]


def preset_description(name: str) -> str:
    return PRESETS[name][0]
