"""Probe-absorption observables: homogeneous and ensemble-averaged spectra,
magneto-spectroscopy maps, and the control-intensity threshold utilities.

The steady-state sweep exploits the fact that the rotating-frame Hamiltonian
is affine in the detuning point: the Liouvillian is precomputed once and only
its diagonal is updated per (control_detuning, two_photon) sample, after which
the bordered systems are solved in LAPACK batches.  Ensemble averaging uses a
fixed-order weighted reduction, so results are bit-identical for any worker
count.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .model import (
    CONTROL,
    EXCITED,
    PROBE,
    DetuningPoint,
    LevelSystemSpec,
    assemble_hamiltonian,
    assign_rotating_frame,
    detuning_derivatives,
)
from .lindblad import TWO_PI, build_liouvillian

_CHUNK = 16  # detuning samples per batched solve; fixed so chunking does not
             # depend on the worker count


class NonConvergedSampling(RuntimeError):
    """Doubling the ensemble sample count moved the spectrum by > 0.5%."""


@dataclass(frozen=True)
class InhomogeneitySpec:
    """Gaussian distribution of the shared optical shift.

    fwhm is the full width at half maximum of the distribution.  n_samples
    must be odd so the zero-shift subensemble is always sampled.  When the
    width exceeds ~100 homogeneous linewidths a dense sampling tier is added
    around zero shift, where the EIT structure lives.
    """

    fwhm: float  # Hz
    n_samples: int = 801
    truncation: float = 4.0  # multiples of sigma
    dense_halfwidth: float = 50.0  # multiples of the homogeneous linewidth
    dense_step: float = 0.5  # multiples of the homogeneous linewidth
    auto_dense: bool = True

    def __post_init__(self):
        if self.fwhm < 0:
            raise ValueError("fwhm must be >= 0")
        if self.n_samples < 1 or self.n_samples % 2 == 0:
            raise ValueError("n_samples must be odd and >= 1")
        if self.truncation <= 0:
            raise ValueError("truncation must be > 0")

    @property
    def sigma(self) -> float:
        return self.fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))


@dataclass(frozen=True)
class SpectrumTrace:
    delta_grid: np.ndarray  # Hz, strictly increasing
    absorbance: np.ndarray  # dimensionless
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "delta_grid", np.asarray(self.delta_grid, dtype=float))
        object.__setattr__(self, "absorbance", np.asarray(self.absorbance, dtype=float))
        if np.any(np.diff(self.delta_grid) <= 0):
            raise ValueError("delta_grid must be strictly increasing")
        if self.delta_grid.shape != self.absorbance.shape:
            raise ValueError("grid/absorbance length mismatch")


@dataclass(frozen=True)
class MagnetoMap:
    delta_grid: np.ndarray  # Hz
    b_grid: np.ndarray  # Tesla
    absorbance: np.ndarray  # shape (len(b_grid), len(delta_grid))

    def __post_init__(self):
        object.__setattr__(self, "delta_grid", np.asarray(self.delta_grid, dtype=float))
        object.__setattr__(self, "b_grid", np.asarray(self.b_grid, dtype=float))
        object.__setattr__(self, "absorbance", np.asarray(self.absorbance, dtype=float))
        if self.absorbance.shape != (len(self.b_grid), len(self.delta_grid)):
            raise ValueError("absorbance shape inconsistent with grids")


@dataclass(frozen=True)
class ThresholdReport:
    satisfied: bool
    min_omega_c: float  # Hz
    margin: float  # omega_c^2 / (delta_i * gamma_g)


def model_hash(spec: LevelSystemSpec) -> str:
    return hashlib.sha1(repr(spec).encode()).hexdigest()[:12]


def homogeneous_linewidth(spec: LevelSystemSpec) -> float:
    """Largest total radiative decay rate of any excited level (Hz)."""
    totals: dict[str, float] = {}
    excited = set(spec.excited_labels())
    for ch in spec.decays:
        if ch.source in excited:
            totals[ch.source] = totals.get(ch.source, 0.0) + ch.rate
    return max(totals.values(), default=0.0)


def probe_absorption(rho: np.ndarray, spec: LevelSystemSpec) -> float:
    """Normalized rate of energy absorption from the probe field.

    A = (2 / max rabi) * sum over probe couplings of rabi * Im(rho[g, e]),
    which is Rabi-scale-free and positive for an absorbing steady state.
    """
    probe = spec.probe
    if probe is None or not probe.couplings:
        return 0.0
    rabi_max = max(c.rabi for c in probe.couplings)
    total = 0.0
    for c in probe.couplings:
        total += c.rabi * rho[spec.index(c.ground), spec.index(c.excited)].imag
    return 2.0 * total / rabi_max


class _SweepKernel:
    """Batched steady-state solver for a fixed model over detuning points."""

    def __init__(self, spec: LevelSystemSpec):
        self.spec = spec
        self.n = spec.n_levels
        frame = assign_rotating_frame(spec)
        h0 = assemble_hamiltonian(spec, frame, DetuningPoint(0.0, 0.0))
        liouv = build_liouvillian(h0, spec.decays, spec.dephasings, spec.labels)
        n = self.n
        d_delta, d_tp = detuning_derivatives(spec, frame)
        # Diagonal (in vec space) update vectors for the commutator term.
        i_idx = np.arange(n * n) % n
        j_idx = np.arange(n * n) // n
        self.diag_delta = -1j * TWO_PI * (d_delta[i_idx] - d_delta[j_idx])
        self.diag_tp = -1j * TWO_PI * (d_tp[i_idx] - d_tp[j_idx])

        # Bordered matrix: row 0 replaced by the trace constraint.  The
        # detuning updates vanish on population components, so the trace row
        # is never touched by the per-point diagonal shifts.
        a0 = liouv.matrix.copy()
        a0[0, :] = 0.0
        a0[0, np.arange(n) * (n + 1)] = 1.0
        self.a0 = a0
        self.rhs = np.zeros(n * n, dtype=complex)
        self.rhs[0] = 1.0

        probe = spec.probe
        if probe is not None and probe.couplings:
            self.probe_idx = np.array(
                [spec.index(c.ground) + n * spec.index(c.excited) for c in probe.couplings]
            )
            rabis = np.array([c.rabi for c in probe.couplings])
            self.probe_w = 2.0 * rabis / rabis.max()
        else:
            self.probe_idx = np.array([], dtype=int)
            self.probe_w = np.array([])

    def absorbance(self, deltas: np.ndarray, two_photons: np.ndarray) -> np.ndarray:
        """Absorbance on the grid deltas x two_photons, shape (nd, nt)."""
        deltas = np.asarray(deltas, dtype=float)
        two_photons = np.asarray(two_photons, dtype=float)
        nd, nt = len(deltas), len(two_photons)
        m = self.n * self.n
        a = np.empty((nd, nt, m, m), dtype=complex)
        a[...] = self.a0
        r = np.arange(m)
        a[:, :, r, r] += (
            deltas[:, None, None] * self.diag_delta[None, None, :]
            + two_photons[None, :, None] * self.diag_tp[None, None, :]
        )
        x = np.linalg.solve(a, np.broadcast_to(self.rhs, (nd, nt, m))[..., None])[..., 0]
        if self.probe_idx.size == 0:
            return np.zeros((nd, nt))
        return x[..., self.probe_idx].imag @ self.probe_w


def _sweep_rows(kernel: _SweepKernel, deltas: np.ndarray, tp_grid: np.ndarray,
                workers: int) -> np.ndarray:
    """Absorbance rows for each shift sample, chunked for batched solves.

    Chunk boundaries are independent of the worker count, and rows are
    written back by index, so the output is bit-identical for any number of
    workers.
    """
    deltas = np.asarray(deltas, dtype=float)
    chunks = [
        (k, deltas[k : k + _CHUNK]) for k in range(0, len(deltas), _CHUNK)
    ]
    out = np.empty((len(deltas), len(tp_grid)))

    def run(chunk):
        k, d = chunk
        out[k : k + len(d)] = kernel.absorbance(d, tp_grid)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, chunks))
    else:
        for chunk in chunks:
            run(chunk)
    return out


def homogeneous_spectrum(
    spec: LevelSystemSpec,
    control_detuning: float,
    delta_grid: np.ndarray,
    workers: int = 1,
) -> SpectrumTrace:
    """Steady-state probe absorption vs two-photon detuning at one shift."""
    kernel = _SweepKernel(spec)
    rows = _sweep_rows(kernel, np.array([control_detuning]), np.asarray(delta_grid, float), workers)
    return SpectrumTrace(
        delta_grid=np.asarray(delta_grid, float),
        absorbance=rows[0],
        metadata={
            "model": model_hash(spec),
            "kind": "homogeneous",
            "control_detuning_hz": control_detuning,
        },
    )


def shift_samples(
    inhom: InhomogeneitySpec, linewidth_hint: float
) -> tuple[np.ndarray, np.ndarray]:
    """Sample grid and normalized Gaussian weights for the optical shift.

    A dense tier (step dense_step * linewidth over +-dense_halfwidth *
    linewidth) is merged into the coarse grid when the distribution is much
    broader than the homogeneous linewidth, where a uniform grid would miss
    the narrow EIT structure near zero shift.
    """
    if inhom.fwhm == 0.0 or inhom.n_samples == 1:
        return np.array([0.0]), np.array([1.0])
    sigma = inhom.sigma
    half = inhom.truncation * sigma
    grid = np.linspace(-half, half, inhom.n_samples)
    if (
        inhom.auto_dense
        and linewidth_hint > 0
        and inhom.fwhm / linewidth_hint > 100.0
    ):
        dense_half = min(inhom.dense_halfwidth * linewidth_hint, half)
        n_dense = 2 * int(round(dense_half / (inhom.dense_step * linewidth_hint))) + 1
        dense = np.linspace(-dense_half, dense_half, n_dense)
        grid = np.union1d(grid, dense)
    pdf = np.exp(-0.5 * (grid / sigma) ** 2)
    # Trapezoidal cell widths for the (possibly non-uniform) grid.
    dx = np.empty_like(grid)
    dx[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    dx[0] = grid[1] - grid[0]
    dx[-1] = grid[-1] - grid[-2]
    w = pdf * dx
    return grid, w / w.sum()


def inhomogeneous_spectrum(
    spec: LevelSystemSpec,
    inhom: InhomogeneitySpec,
    delta_grid: np.ndarray,
    workers: int = 1,
    check_convergence: bool = False,
    shift_grid: tuple[np.ndarray, np.ndarray] | None = None,
) -> SpectrumTrace:
    """Gaussian-weighted average of homogeneous spectra over the shift grid.

    shift_grid overrides the automatic (samples, weights) choice; fits use
    this to keep the integration grid fixed while decay rates vary, since the
    automatic dense tier scales with the homogeneous linewidth.
    """
    tp_grid = np.asarray(delta_grid, dtype=float)
    kernel = _SweepKernel(spec)
    linewidth = homogeneous_linewidth(spec)

    def compute(n_samples: int) -> np.ndarray:
        shifts, weights = shift_samples(replace(inhom, n_samples=n_samples), linewidth)
        rows = _sweep_rows(kernel, shifts, tp_grid, workers)
        return weights @ rows

    if shift_grid is not None:
        shifts, weights = shift_grid
        absorbance = np.asarray(weights, float) @ _sweep_rows(
            kernel, np.asarray(shifts, float), tp_grid, workers
        )
    else:
        absorbance = compute(inhom.n_samples)
    if check_convergence:
        refined = compute(2 * inhom.n_samples + 1)
        tol = 0.005 * np.abs(absorbance).max()
        if np.abs(refined - absorbance).max() > tol:
            raise NonConvergedSampling(
                "spectrum changed by more than 0.5% of peak when doubling "
                "the ensemble sample count"
            )
    return SpectrumTrace(
        delta_grid=tp_grid,
        absorbance=absorbance,
        metadata={
            "model": model_hash(spec),
            "kind": "inhomogeneous",
            "fwhm_hz": inhom.fwhm,
            "n_samples": inhom.n_samples,
            "truncation": inhom.truncation,
        },
    )


def eit_threshold(omega_c: float, delta_i: float, gamma_g: float) -> ThresholdReport:
    """Minimum control Rabi frequency for complete transparency.

    The broadened-ensemble condition is omega_c^2 > delta_i * gamma_g
    (strict); margin is the ratio of the two sides.
    """
    if omega_c < 0 or delta_i < 0 or gamma_g < 0:
        raise ValueError("inputs must be nonnegative")
    product = delta_i * gamma_g
    min_omega = np.sqrt(product)
    margin = np.inf if product == 0 else omega_c**2 / product
    return ThresholdReport(
        satisfied=omega_c > min_omega,
        min_omega_c=min_omega,
        margin=margin,
    )


def rabi_from_power(power: float, omega_ref: float, power_ref: float) -> float:
    """Square-root intensity scaling from a (rabi, power) calibration point."""
    if power <= 0 or power_ref <= 0:
        raise ValueError("powers must be > 0")
    return omega_ref * np.sqrt(power / power_ref)


def power_from_rabi(omega: float, omega_ref: float, power_ref: float) -> float:
    """Inverse of rabi_from_power."""
    if omega < 0 or omega_ref <= 0 or power_ref <= 0:
        raise ValueError("invalid calibration")
    return power_ref * (omega / omega_ref) ** 2


def default_delta_grid(spec: LevelSystemSpec, n_points: int = 201) -> np.ndarray:
    """Two-photon grid spanning +-6x the feature width estimate."""
    rabi_c = max((c.rabi for d in spec.drives for c in d.couplings
                  if d.field_id == CONTROL), default=0.0)
    width = max(homogeneous_linewidth(spec), rabi_c)
    if width == 0.0:
        width = 1.0
    return np.linspace(-6.0 * width, 6.0 * width, n_points)


def magneto_map(
    template: LevelSystemSpec,
    ground_model,
    excited_model,
    b_values,
    delta_grid: np.ndarray,
    inhom: InhomogeneitySpec,
    workers: int = 1,
) -> MagnetoMap:
    """Stack inhomogeneous spectra over a magnetic-field magnitude scan.

    Template levels must be labeled g1..g3 / e1..e3; their energies are
    replaced per field value by the eigenvalues of the two spin Hamiltonians
    (ascending order within each manifold).
    """
    from .spin import level_structure

    b_values = np.atleast_1d(np.asarray(b_values, dtype=float))
    if b_values.size == 0:
        b_values = np.array([ground_model.b_field])
    tp_grid = np.asarray(delta_grid, dtype=float)
    rows = []
    for b in b_values:
        ts = level_structure(
            replace(ground_model, b_field=b), replace(excited_model, b_field=b)
        )
        levels = []
        for lv in template.levels:
            k = int(lv.label[1:]) - 1
            energy = ts.ground[k] if lv.manifold == "ground" else ts.excited[k]
            levels.append(replace(lv, energy=energy))
        spec_b = template.with_levels(levels)
        rows.append(
            inhomogeneous_spectrum(spec_b, inhom, tp_grid, workers=workers).absorbance
        )
    return MagnetoMap(delta_grid=tp_grid, b_grid=b_values, absorbance=np.array(rows))


# ---------------------------------------------------------------------------
# Trace analysis helpers (dip/feature metrics used by tests and fits)

def local_minima(trace: SpectrumTrace, prominence_fraction: float = 0.02) -> np.ndarray:
    """Indices of interior local minima lying inside the absorption feature.

    Minima are kept when their prominence (depth below the surrounding
    shoulders) exceeds prominence_fraction of the trace maximum, which
    rejects numerical ripple in the far-detuned background.
    """
    from scipy.signal import find_peaks

    a = trace.absorbance
    idx, _ = find_peaks(-a, prominence=prominence_fraction * a.max())
    return idx


def feature_centroid(trace: SpectrumTrace) -> float:
    """Centroid (Hz) of the absorption feature above its half height.

    The far-detuned background (median of the outermost points) is
    subtracted first, so broad ensemble offsets do not bias the centroid.
    """
    a = trace.absorbance
    x = trace.delta_grid
    edge = max(3, len(a) // 20)
    background = np.median(np.concatenate([a[:edge], a[-edge:]]))
    height = a.max() - background
    mask = a > background + 0.5 * height
    w = a[mask] - background
    return float((x[mask] * w).sum() / w.sum())


def dip_metrics(trace: SpectrumTrace) -> dict:
    """Peak/dip positions, contrast, and dip FWHM of a single-feature trace.

    The dip is the deepest interior local minimum; its FWHM is measured at
    the midpoint between dip depth and the surrounding shoulder height.
    """
    a = trace.absorbance
    x = trace.delta_grid
    mins = local_minima(trace)
    if mins.size == 0:
        return {
            "peak": float(a.max()),
            "peak_delta": float(x[np.argmax(a)]),
            "dip": None,
            "dip_delta": None,
            "contrast": 0.0,
            "dip_fwhm": None,
        }
    k = mins[np.argmin(a[mins])]
    left = a[:k].max()
    right = a[k + 1 :].max()
    shoulder = min(left, right)
    dip = a[k]
    contrast = (shoulder - dip) / shoulder if shoulder > 0 else 0.0
    half = dip + 0.5 * (shoulder - dip)
    # Walk out from the dip to the half level on both sides.
    i = k
    while i > 0 and a[i] < half:
        i -= 1
    xl = np.interp(half, [a[i], a[i + 1]], [x[i], x[i + 1]]) if a[i] >= half else x[0]
    j = k
    while j < len(a) - 1 and a[j] < half:
        j += 1
    xr = np.interp(half, [a[j], a[j - 1]], [x[j], x[j - 1]]) if a[j] >= half else x[-1]
    return {
        "peak": float(max(left, right)),
        "peak_delta": float(x[np.argmax(a)]),
        "dip": float(dip),
        "dip_delta": float(x[k]),
        "contrast": float(contrast),
        "dip_fwhm": float(xr - xl),
    }
