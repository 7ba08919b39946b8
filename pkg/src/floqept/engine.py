"""Model Hamiltonians, eigenvalue branches and the harmonic-balance
steady-state solver.

Three independent eigenvalue routes are provided:

* closed forms for the static and Floquet-coupled two-mode systems,
* the rotating-wave effective model carrying the band-pair coupling rate,
* exact monodromy quasi-energies of the lab-frame time-periodic system.

Lab-frame model
---------------
Channel resonances sit at ``d1 = delta0`` and ``d2 = 0`` (plus the common
Stark offset); both channels see the identical Zeeman modulation
``delta_b*cos(2 pi omega_b t)``.  Because that common-mode term is
proportional to the identity it is a pure gauge phase; the Floquet physics
lives in the dissipative coupling, which exchanges coherence between the
declared sideband pair ``(n1, n2)``:

    off-diagonal = i * Gamma_eff * exp(-+ i 2 pi n_s omega_b t),
    Gamma_eff    = |J_n1(x) J_n2(x)| * gamma_c,   x = delta_b / omega_b,

with ``n_s = sign(delta0) * (n1 - n2)`` tracking the red-detuned convention.
At ``delta_b = 0`` and ``n1 = n2 = 0`` this is exactly the static
dissipatively coupled pair.  The traceless part of the generator
anticommutes with (swap o conjugation) at every instant, so the anti-PT
structure of the static model is preserved under drive.

All matrices here are in Hz; time-domain propagation multiplies by 2*pi so
phases evolve as ``exp(-i 2 pi nu t)`` with t in seconds.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .numerics.bessel import bessel_j
from .numerics.eig import order_eigenvalues
from .numerics.integrate import integrate_linear
from .params import ModelParams, SimConfig

__all__ = [
    "TWO_PI",
    "EngineError",
    "SingularSteadyStateError",
    "Branches",
    "static_hamiltonian",
    "static_eigenvalues",
    "effective_coupling",
    "floquet_eigenvalues",
    "LabFrameModel",
    "RwaModel",
    "rwa_model",
    "QuasiEnergySet",
    "monodromy_quasienergies",
    "quasienergy_gap",
    "SidebandSolution",
    "steady_state_response",
    "steady_state_grid",
]

TWO_PI = 2.0 * math.pi

UNBROKEN = "unbroken"
EP = "ep"
BROKEN = "broken"


class EngineError(RuntimeError):
    """Numerical failure inside the engine (propagated to CLI exit code 3)."""


class SingularSteadyStateError(EngineError):
    """The harmonic-balance system is singular (exact resonance, gamma12=0)."""


@dataclass(frozen=True)
class Branches:
    """An ordered eigenvalue pair with its symmetry-phase tag.

    ``values[0]`` is the branch that is first under the global ordering
    convention (descending real part, ties by descending imaginary part);
    with the principal square root this coincides with the "+" branch of
    the closed forms.
    """

    values: tuple
    tag: str

    @property
    def nu_plus(self) -> complex:
        return self.values[0]

    @property
    def nu_minus(self) -> complex:
        return self.values[1]

    @property
    def separation(self) -> float:
        """Real-part splitting of the two branches, Hz."""
        return abs(self.values[0].real - self.values[1].real)


def _classify(mismatch_abs: float, threshold: float) -> str:
    tol = 1e-9 * max(1.0, threshold)
    if abs(mismatch_abs - threshold) <= tol:
        return EP
    return UNBROKEN if mismatch_abs < threshold else BROKEN


def static_hamiltonian(delta0: float, gamma_c: float, gamma12: float = 0.0) -> np.ndarray:
    """The static two-mode matrix [[delta0, i*gamma_c], [i*gamma_c, 0]] - i*gamma12*I."""
    return np.array(
        [
            [delta0 - 1j * gamma12, 1j * gamma_c],
            [1j * gamma_c, -1j * gamma12],
        ],
        dtype=complex,
    )


def static_eigenvalues(delta0: float, gamma_c: float) -> Branches:
    """Closed-form branches ``delta0/2 +- sqrt(delta0^2/4 - gamma_c^2)``.

    The tag compares ``|delta0|`` against the coalescence threshold
    ``2*gamma_c``.
    """
    root = cmath.sqrt(0.25 * delta0 * delta0 - gamma_c * gamma_c)
    pair = (0.5 * delta0 + root, 0.5 * delta0 - root)
    idx = order_eigenvalues(pair)
    return Branches(values=(pair[idx[0]], pair[idx[1]]), tag=_classify(abs(delta0), 2.0 * gamma_c))


def effective_coupling(gamma_c: float, delta_b: float, omega_b: float, n1: int, n2: int) -> float:
    """Band-pair dissipative coupling rate ``|J_n1(x) J_n2(x)| * gamma_c``.

    ``x = delta_b / omega_b``.  The product form for both indices nonzero is
    the measured-case generalization; the monodromy route provides the
    independent check of it.  Negative indices use ``|J_-m| = |J_m|``.
    """
    x = delta_b / omega_b
    return gamma_c * abs(bessel_j(abs(n1), x) * bessel_j(abs(n2), x))


def floquet_eigenvalues(delta0: float, omega_b: float, n: int, gamma_eff: float) -> Branches:
    """Closed-form Floquet branches of the band-pair coupled system.

    ``(delta0 + n_s*omega_b)/2 +- sqrt((delta0 - n_s*omega_b)^2/4 - gamma_eff^2)``
    with ``n_s = sign(delta0)*n`` so the resonant sideband tracks the
    experimental red-detuned convention.  The tag compares the mismatch
    ``| |delta0| - n*omega_b |`` against ``2*gamma_eff``.
    """
    ns = n if delta0 >= 0 else -n
    center = 0.5 * (delta0 + ns * omega_b)
    mismatch = delta0 - ns * omega_b
    root = cmath.sqrt(0.25 * mismatch * mismatch - gamma_eff * gamma_eff)
    pair = (center + root, center - root)
    idx = order_eigenvalues(pair)
    return Branches(values=(pair[idx[0]], pair[idx[1]]), tag=_classify(abs(mismatch), 2.0 * gamma_eff))


class LabFrameModel:
    """Time-periodic 2x2 generator of the driven dissipatively coupled pair.

    ``matrix(t)`` returns the Hamiltonian in Hz; ``generator(t)`` the
    2*pi-scaled version fed to the integrator.  ``H(t + T) = H(t)`` exactly
    with ``T = 1/omega_b``, and ``delta_b = 0`` with ``n1 = n2 = 0`` reduces
    the matrix to the static one.
    """

    def __init__(self, params: ModelParams, include_decay: bool = True,
                 include_modulation: bool = True):
        self.params = params
        self.gamma_eff = effective_coupling(
            params.gamma_c, params.delta_b, params.omega_b, params.n1, params.n2
        )
        self.n_signed = params.n_signed
        self.period = 1.0 / params.omega_b
        self._gamma12 = params.gamma12 if include_decay else 0.0
        self._include_modulation = include_modulation

    def matrix(self, t: float) -> np.ndarray:
        p = self.params
        common = p.delta_b * math.cos(TWO_PI * p.omega_b * t) if self._include_modulation else 0.0
        phase = cmath.exp(-2j * math.pi * self.n_signed * p.omega_b * t)
        off = 1j * self.gamma_eff
        return np.array(
            [
                [p.delta0 + common - 1j * self._gamma12, off * phase],
                [off * phase.conjugate(), common - 1j * self._gamma12],
            ],
            dtype=complex,
        )

    def generator(self, t: float) -> np.ndarray:
        return TWO_PI * self.matrix(t)

    def fast_generator(self):
        """Closure form of :meth:`generator` reusing one scratch matrix.

        The integrator calls the generator millions of times in long
        time-domain runs; this avoids per-call array construction.  The
        returned callable must not be used concurrently.
        """
        p = self.params
        buf = np.empty((2, 2), dtype=complex)
        w_mod = TWO_PI * p.omega_b
        w_coup = TWO_PI * self.n_signed * p.omega_b
        off = 1j * TWO_PI * self.gamma_eff
        decay = -1j * TWO_PI * self._gamma12
        d0 = TWO_PI * p.delta0
        depth = TWO_PI * p.delta_b if self._include_modulation else 0.0

        def gen(t: float) -> np.ndarray:
            common = depth * math.cos(w_mod * t) + decay
            phase = cmath.exp(-1j * w_coup * t)
            buf[0, 0] = d0 + common
            buf[1, 1] = common
            buf[0, 1] = off * phase
            buf[1, 0] = off * phase.conjugate()
            return buf

        return gen

    def __call__(self, t: float) -> np.ndarray:
        return self.matrix(t)


@dataclass(frozen=True)
class RwaModel:
    """Rotating-wave effective model: band-pair coupling with its phase law.

    The off-diagonal elements are ``i*gamma_eff*exp(-+ i 2 pi (delta0 -
    n_s*omega_b) t)`` in the frame where both carriers are static; treating
    them as stationary gives the closed-form Floquet branches.
    """

    delta0: float
    n_omega_b: float  # n_s * omega_b, the coupled sideband frame
    gamma_eff: float
    mismatch: float  # delta0 - n_s * omega_b, the oscillation exponent rate
    gamma12: float

    def branches(self) -> Branches:
        """Stationary-phase eigenvalues of the effective model."""
        center = 0.5 * (self.delta0 + self.n_omega_b)
        root = cmath.sqrt(0.25 * self.mismatch**2 - self.gamma_eff**2)
        pair = (center + root, center - root)
        idx = order_eigenvalues(pair)
        return Branches(
            values=(pair[idx[0]], pair[idx[1]]),
            tag=_classify(abs(self.mismatch), 2.0 * self.gamma_eff),
        )


def rwa_model(params: ModelParams) -> RwaModel:
    """Build the RWA effective model for the declared band pair."""
    geff = effective_coupling(params.gamma_c, params.delta_b, params.omega_b, params.n1, params.n2)
    ns = params.n_signed
    return RwaModel(
        delta0=params.delta0,
        n_omega_b=ns * params.omega_b,
        gamma_eff=geff,
        mismatch=params.delta0 - ns * params.omega_b,
        gamma12=params.gamma12,
    )


@dataclass(frozen=True)
class QuasiEnergySet:
    """Two quasi-energies with real parts folded to [-omega_b/2, omega_b/2).

    ``zone_offsets`` are the integers k with ``unfolded = folded + k*omega_b``
    for the principal-branch logarithm; ``det_residual`` is the relative
    mismatch of |det(monodromy)| against the decay identity
    ``exp(-2 * 2*pi * gamma12 * T)``.
    """

    values: tuple
    zone_offsets: tuple
    omega_b: float
    det_residual: float


def quasienergy_gap(qset: QuasiEnergySet) -> float:
    """Circular distance of the two folded real parts, Hz."""
    w = qset.omega_b
    d = (qset.values[0].real - qset.values[1].real + 0.5 * w) % w - 0.5 * w
    return abs(d)


def monodromy_quasienergies(params: ModelParams, cfg: SimConfig) -> QuasiEnergySet:
    """Exact Floquet quasi-energies from the one-period fundamental matrix.

    Integrates ``dU/dt = -i * 2*pi * H(t) * U`` over one modulation period
    with the embedded Runge-Kutta pair, then takes
    ``nu = i*log(eig(U))/(2*pi*T)`` on the principal branch and folds the
    real parts into the first Floquet zone.

    Raises
    ------
    EngineError
        When a monodromy eigenvalue underflows (log branch ambiguous).
    """
    model = LabFrameModel(params)
    period = model.period
    traj = integrate_linear(
        model.fast_generator(),
        np.eye(2, dtype=complex),
        (0.0, period),
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
    )
    mono = traj.final_y
    lam = np.linalg.eigvals(mono)
    if np.any(np.abs(lam) < 1e-300):
        raise EngineError("monodromy eigenvalue underflow: quasi-energy log branch ambiguous")
    nu = 1j * np.log(lam) / (TWO_PI * period)
    w = params.omega_b
    offsets = np.floor(nu.real / w + 0.5).astype(int)
    folded = nu - offsets * w
    idx = order_eigenvalues(folded)
    folded = folded[idx]
    offsets = offsets[idx]

    det_target = math.exp(-2.0 * TWO_PI * params.gamma12 * period)
    det_residual = abs(abs(np.linalg.det(mono)) - det_target) / det_target
    return QuasiEnergySet(
        values=(complex(folded[0]), complex(folded[1])),
        zone_offsets=(int(offsets[0]), int(offsets[1])),
        omega_b=w,
        det_residual=float(det_residual),
    )


# ---------------------------------------------------------------------------
# Harmonic-balance steady state
# ---------------------------------------------------------------------------


@dataclass
class SidebandSolution:
    """Per-sideband complex amplitudes of the driven steady state.

    ``amps[j, m + M]`` is the component of channel ``j+1`` oscillating at
    ``exp(-i 2 pi (delta + m*omega_b) t)``.  ``residual`` is the relative
    linear-system residual of the solve.
    """

    amps: np.ndarray  # (2, 2M+1)
    m_indices: np.ndarray
    delta: float
    probe_channel: int
    amplitude: complex
    residual: float
    omega_b: float

    def channel_power(self, channel: int) -> float:
        """Time-averaged steady-state power sum_m |s_(j,m)|^2 of a channel."""
        return float(np.sum(np.abs(self.amps[channel - 1]) ** 2))

    def sideband_power(self, channel: int, m: int) -> float:
        return float(np.abs(self.amps[channel - 1, m + (self.amps.shape[1] - 1) // 2]) ** 2)

    def time_state(self, ts) -> np.ndarray:
        """Reconstruct s_j(t) from the sideband expansion (channels as rows)."""
        ts = np.asarray(ts, dtype=float)
        freqs = self.delta + self.m_indices * self.omega_b
        phases = np.exp(-2j * np.pi * np.outer(freqs, ts))
        return self.amps @ phases


def _hb_base_matrix(params: ModelParams, mtrunc: int) -> np.ndarray:
    """Delta-independent part of the harmonic-balance block matrix."""
    size = 2 * (2 * mtrunc + 1)
    width = 2 * mtrunc + 1
    a = np.zeros((size, size), dtype=complex)
    d = (params.delta0 + params.stark_shift, params.stark_shift)
    geff = effective_coupling(params.gamma_c, params.delta_b, params.omega_b, params.n1, params.n2)
    ns = params.n_signed
    half_drive = 0.5 * params.delta_b

    def ix(j, m):
        return j * width + (m + mtrunc)

    for j in (0, 1):
        for m in range(-mtrunc, mtrunc + 1):
            row = ix(j, m)
            a[row, row] = m * params.omega_b - d[j] + 1j * params.gamma12
            if m - 1 >= -mtrunc:
                a[row, ix(j, m - 1)] = -half_drive
            if m + 1 <= mtrunc:
                a[row, ix(j, m + 1)] = -half_drive
    for m in range(-mtrunc, mtrunc + 1):
        if -mtrunc <= m - ns <= mtrunc:
            a[ix(0, m), ix(1, m - ns)] = -1j * geff
        if -mtrunc <= m + ns <= mtrunc:
            a[ix(1, m), ix(0, m + ns)] = -1j * geff
    return a


def steady_state_response(params: ModelParams, cfg: SimConfig, probe) -> SidebandSolution:
    """Solve the block-linear harmonic-balance system for one probe point.

    ``probe = (channel, delta, amplitude)`` puts a monochromatic source at
    sideband m = 0 of the probed channel.  Diagonal blocks read
    ``delta + m*omega_b - d_j + i*gamma12`` (``d1 = delta0``, ``d2 = 0``,
    plus the common Stark offset); the Zeeman drive couples ``m <-> m+-1``
    within each channel with strength ``delta_b/2``; the dissipative
    coupling ``i*Gamma_eff`` connects the channels between sidebands offset
    by the declared band difference.

    Raises
    ------
    SingularSteadyStateError
        If the system is singular (exact resonance with gamma12 = 0).
    """
    channel, delta, amplitude = probe
    mtrunc = cfg.truncation_m
    width = 2 * mtrunc + 1
    a = _hb_base_matrix(params, mtrunc)
    a[np.diag_indices_from(a)] += delta
    b = np.zeros(a.shape[0], dtype=complex)
    b[(channel - 1) * width + mtrunc] = amplitude
    try:
        s = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSteadyStateError(
            f"singular steady-state system at delta = {delta:g} Hz: {exc}"
        ) from exc
    residual = float(np.linalg.norm(a @ s - b) / np.linalg.norm(b))
    if not residual <= 1e-10:
        raise SingularSteadyStateError(
            f"steady-state solve residual {residual:.2e} at delta = {delta:g} Hz "
            "(near-singular system; is gamma12 zero at exact resonance?)"
        )
    return SidebandSolution(
        amps=s.reshape(2, width),
        m_indices=np.arange(-mtrunc, mtrunc + 1),
        delta=float(delta),
        probe_channel=channel,
        amplitude=complex(amplitude),
        residual=residual,
        omega_b=params.omega_b,
    )


def steady_state_grid(params: ModelParams, cfg: SimConfig, probe_channel: int,
                      deltas, amplitude: complex = 1.0):
    """Vectorized steady-state powers over a probe-detuning grid.

    Returns ``(powers, sidebands)`` with ``powers[j, g]`` the channel-(j+1)
    power at grid point g and ``sidebands[j, m + M, g]`` the per-sideband
    powers.  Equivalent to calling :func:`steady_state_response` per point;
    the base matrix is assembled once and only the diagonal shifts.
    """
    deltas = np.asarray(deltas, dtype=float)
    mtrunc = cfg.truncation_m
    width = 2 * mtrunc + 1
    size = 2 * width
    base = _hb_base_matrix(params, mtrunc)
    eye = np.eye(size, dtype=complex)
    stack = base[None, :, :] + deltas[:, None, None] * eye[None, :, :]
    rhs = np.zeros((deltas.size, size), dtype=complex)
    rhs[:, (probe_channel - 1) * width + mtrunc] = amplitude
    try:
        sol = np.linalg.solve(stack, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSteadyStateError(f"singular steady-state system in grid solve: {exc}") from exc
    amps = sol.reshape(deltas.size, 2, width)
    sidebands = np.abs(amps) ** 2
    powers = sidebands.sum(axis=2)
    return powers.T.copy(), np.transpose(sidebands, (1, 2, 0)).copy()
