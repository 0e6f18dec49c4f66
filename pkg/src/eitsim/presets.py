"""Canonical model builders: the three-level Lambda scheme and the five-level
configurations with mismatched control transitions and double transparency."""

from __future__ import annotations

from .model import (
    Coupling,
    DecayChannel,
    Dephasing,
    DriveField,
    Level,
    LevelSystemSpec,
)

# Reference parameter set for the three-level scheme (rates in Hz).
GAMMA_E = 1e7       # excited-state decay, total per excited level
GAMMA_G = 1e4       # ground-state relaxation
GAMMA_G_STAR = 1e5  # ground-state dephasing
OMEGA_C = 3e6       # control Rabi frequency
OMEGA_P = 1e4       # probe Rabi frequency

# Values fitted to the double-transparency power series.
GAMMA_E_FIT = 2.7e6
GAMMA_G_STAR_FIT = 0.23e6
OMEGA_C_PER_MW = 7.4e6  # control Rabi at 1 mW

INHOM_FWHM = 140e9  # ensemble optical broadening
SIM_FWHM = 100e9    # width used in the lineshape studies


def _ground_relaxation(labels: list[str], rate: float) -> list[DecayChannel]:
    """Symmetric pairwise ground<->ground channels, each at the given rate."""
    out = []
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            out.append(DecayChannel(a, b, rate))
            out.append(DecayChannel(b, a, rate))
    return out


def three_level_lambda(
    omega_p: float = OMEGA_P,
    omega_c: float = OMEGA_C,
    gamma_e: float = GAMMA_E,
    gamma_g: float = GAMMA_G,
    gamma_g_star: float = GAMMA_G_STAR,
    gamma_e_deph: float = 0.0,
    ground_splitting: float = 1e9,
) -> LevelSystemSpec:
    """Probe g1-e2, control g2-e2; the minimal transparency scheme.

    gamma_e is the total decay of e2, split equally over both ground levels.
    Dephasing sits on g2 only, so gamma_g_star is exactly the decay rate of
    the g1-g2 coherence that carries the dark state.
    """
    dephasings = [Dephasing("g2", gamma_g_star)]
    if gamma_e_deph > 0:
        dephasings.append(Dephasing("e2", gamma_e_deph))
    return LevelSystemSpec(
        levels=(
            Level("g1", "ground", 0.0),
            Level("g2", "ground", ground_splitting),
            Level("e2", "excited", 0.0),
        ),
        drives=(
            DriveField("probe", (Coupling("g1", "e2", omega_p),)),
            DriveField("control", (Coupling("g2", "e2", omega_c),)),
        ),
        decays=tuple(
            [DecayChannel("e2", "g1", gamma_e / 2), DecayChannel("e2", "g2", gamma_e / 2)]
            + _ground_relaxation(["g1", "g2"], gamma_g)
        ),
        dephasings=tuple(dephasings),
    )


def five_level_mismatch(
    delta_k: float,
    delta_54: float = 1e9,
    omega_p: float = OMEGA_P,
    omega_c: float = OMEGA_C,
    gamma_e: float = GAMMA_E,
    gamma_g: float = GAMMA_G,
    gamma_g_star: float = GAMMA_G_STAR,
    gamma_e_deph: float = 0.0,
    ground_splitting: float = 1e9,
) -> LevelSystemSpec:
    """Control drives g2-e2 and g3-e3 with a frequency mismatch delta_k.

    The probe couples g1 to both excited levels.  delta_54 is the excited
    splitting E(e3) - E(e2); the ground splitting E(g3) - E(g2) then equals
    delta_54 - delta_k by the definition of the mismatch.  The default keeps
    e3 spectrally well separated, so the g1-g3 dark resonance at
    delta_k - delta_54 lies far outside the scanned feature.
    """
    dephasings = [Dephasing("g2", gamma_g_star), Dephasing("g3", gamma_g_star)]
    if gamma_e_deph > 0:
        dephasings += [Dephasing("e2", gamma_e_deph), Dephasing("e3", gamma_e_deph)]
    decays = [
        DecayChannel(e, g, gamma_e / 3)
        for e in ("e2", "e3")
        for g in ("g1", "g2", "g3")
    ] + _ground_relaxation(["g1", "g2", "g3"], gamma_g)
    return LevelSystemSpec(
        levels=(
            Level("g1", "ground", -ground_splitting),
            Level("g2", "ground", 0.0),
            Level("g3", "ground", delta_54 - delta_k),
            Level("e2", "excited", 0.0),
            Level("e3", "excited", delta_54),
        ),
        drives=(
            DriveField(
                "probe",
                (Coupling("g1", "e2", omega_p), Coupling("g1", "e3", omega_p)),
            ),
            DriveField(
                "control",
                (Coupling("g2", "e2", omega_c), Coupling("g3", "e3", omega_c)),
            ),
        ),
        decays=tuple(decays),
        dephasings=tuple(dephasings),
    )


def five_level_double_eit(
    delta_k: float,
    delta_54: float,
    omega_p: float = OMEGA_P,
    omega_c: float = OMEGA_C_PER_MW,
    gamma_e: float = GAMMA_E_FIT,
    gamma_g: float = GAMMA_G,
    gamma_g_star: float = GAMMA_G_STAR_FIT,
    gamma_e_deph: float = 0.0,
    ground_splitting: float = 1e9,
) -> LevelSystemSpec:
    """All four Lambda schemes of the low-field configuration.

    Both ground levels g2 and g3 couple to both excited levels, so two dark
    resonances form: one at zero two-photon detuning (g1-g2 coherence) and
    one at delta_k - delta_54 (g1-g3 coherence).
    """
    base = five_level_mismatch(
        delta_k,
        delta_54,
        omega_p=omega_p,
        omega_c=omega_c,
        gamma_e=gamma_e,
        gamma_g=gamma_g,
        gamma_g_star=gamma_g_star,
        gamma_e_deph=gamma_e_deph,
        ground_splitting=ground_splitting,
    )
    control = DriveField(
        "control",
        (
            Coupling("g2", "e2", omega_c),
            Coupling("g2", "e3", omega_c),
            Coupling("g3", "e2", omega_c),
            Coupling("g3", "e3", omega_c),
        ),
    )
    return LevelSystemSpec(
        levels=base.levels,
        drives=(base.probe, control),
        decays=base.decays,
        dephasings=base.dephasings,
    )
