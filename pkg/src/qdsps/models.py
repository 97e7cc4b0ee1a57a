"""Excitation-scheme models: Hamiltonians, collapse channels, phonon dissipators.

Three interchangeable phonon scattering terms are provided for the driven
emitter-cavity system:

* ``WEAK_FULL``    -- second-order weak-coupling scattering evaluated in the
  instantaneous eigenbasis of the system Hamiltonian, with matrix elements
  weighted by the half-Fourier transform of the memory kernel.
* ``WEAK_SIMPLIFIED`` -- the explicit analytic form obtained by dropping the
  cavity coupling from the interaction-picture transformation; valid during
  short, strong pulses and exact for g = 0 (two-level model only).
* ``POLARON``      -- scattering in the polaron frame, with the drive and the
  cavity coupling attenuated by the coherent displacement factor <B>.

All dissipators return traceless, Hermiticity-preserving contributions.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import bath as bathmod
from .algebra import HilbertSpace, dagger, destroy, eig_hermitian, number
from .bath import PhononParams, bath_tables, polaron_shift

OMEGA_EPS = 1e-12  # rad/ps; drive below this is treated as exactly zero


class DissipatorKind(enum.Enum):
    NONE = "none"
    WEAK_FULL = "weak_full"
    WEAK_SIMPLIFIED = "weak_simplified"
    POLARON = "polaron"


@dataclass(frozen=True)
class PulseParams:
    """Gaussian pulse: area (rad), width tau_p (ps), peak time center (ps)."""

    area: float
    tau_p: float
    center: float | None = None

    def __post_init__(self):
        if self.tau_p <= 0:
            raise ValueError("tau_p must be > 0")
        if self.area < 0:
            raise ValueError("pulse area must be >= 0")
        if self.center is None:
            object.__setattr__(self, "center", 3.0 * self.tau_p)

    @property
    def omega0(self) -> float:
        """Peak Rabi amplitude area / (sqrt(pi) tau_p)."""
        return self.area / (np.sqrt(np.pi) * self.tau_p)

    @property
    def fwhm(self) -> float:
        return 2.0 * np.sqrt(np.log(2.0)) * self.tau_p

    @property
    def cutoff_time(self) -> float:
        """Time after which the envelope is below OMEGA_EPS and treated as 0."""
        if self.omega0 <= OMEGA_EPS:
            return 0.0
        half_width = self.tau_p * np.sqrt(np.log(self.omega0 / OMEGA_EPS))
        return self.center + half_width


def pulse_envelope(t, p: PulseParams):
    """Rabi envelope W(t) = W0 exp(-((t - center)/tau_p)^2) in rad/ps."""
    tt = np.asarray(t, dtype=float)
    out = p.omega0 * np.exp(-(((tt - p.center) / p.tau_p) ** 2))
    return out if out.ndim else float(out)


def _drive_amplitude(t: float, p: PulseParams) -> float:
    """Envelope with the sub-OMEGA_EPS tail clamped to exactly zero.

    The clamp makes the generator exactly time-independent outside the pulse
    window, which the evolver and correlator exploit; the change to the
    dynamics is below 1e-12/ps.
    """
    w = p.omega0 * np.exp(-(((t - p.center) / p.tau_p) ** 2))
    return w if w > OMEGA_EPS else 0.0


class TwoLevelCavityModel:
    """Single exciton coupled to one cavity mode, driven by a pulsed laser.

    Frequencies are angular (rad/ps) in the frame rotating at the laser
    frequency.  delta_l >= 0 detunes the laser above the polaron-shifted
    exciton; the exciton and cavity detunings follow from the resonance
    condition delta_x = Delta_P - delta_l, delta_c = -delta_l.
    """

    def __init__(
        self,
        delta_l: float = 0.0,
        g: float = 0.0,
        kappa: float = 0.0,
        gamma: float = 0.0,
        n_max: int = 2,
        pulse: PulseParams = PulseParams(area=np.pi, tau_p=2.0),
        bath: PhononParams = PhononParams(),
    ):
        if n_max < 2:
            raise ValueError("n_max must be >= 2 so two-photon emission is representable")
        for name, val in (("g", g), ("kappa", kappa), ("gamma", gamma)):
            if val < 0:
                raise ValueError(f"{name} must be >= 0")
        self.delta_l = float(delta_l)
        self.g = float(g)
        self.kappa = float(kappa)
        self.gamma = float(gamma)
        self.n_max = int(n_max)
        self.pulse = pulse
        self.bath = bath

        self.delta_p = polaron_shift(bath)
        self.delta_x = self.delta_p - self.delta_l
        self.delta_c = -self.delta_l

        self.space = HilbertSpace((2, n_max + 1))
        self.dim = self.space.total_dim
        nc = n_max + 1
        sm2 = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><x|
        self.sm = self.space.embed(sm2, 0)
        self.sp = dagger(self.sm)
        self.sx = self.sp + self.sm
        self.sy = 1j * (self.sm - self.sp)
        self.n_x = self.sp @ self.sm
        self.a = self.space.embed(destroy(nc), 1)
        self.adag = dagger(self.a)
        self.n_ph = self.space.embed(number(nc), 1)
        self.identity = self.space.identity()

        self._h_static = (
            self.delta_x * self.n_x
            + self.delta_c * self.n_ph
            + self.g * (self.sp @ self.a + self.sm @ self.adag)
        )
        self._drive_op = 0.5 * self.sx
        self._b_avg = None

    # -- shared model interface -------------------------------------------------

    @property
    def b_avg(self) -> float:
        if self._b_avg is None:
            self._b_avg = bath_tables(self.bath).polaron["b_average"]
        return self._b_avg

    def drive_amplitude(self, t: float) -> float:
        return _drive_amplitude(t, self.pulse)

    def hamiltonian(self, t: float) -> np.ndarray:
        """System Hamiltonian divided by hbar at time t."""
        return self._h_static + self.drive_amplitude(t) * self._drive_op

    def hamiltonian_polaron(self, t: float) -> np.ndarray:
        """Polaron-frame Hamiltonian / hbar: shift absorbed, couplings scaled by <B>."""
        b = self.b_avg
        return (
            -self.delta_l * self.n_x
            - self.delta_l * self.n_ph
            + b * self.g * (self.sp @ self.a + self.sm @ self.adag)
            + b * self.drive_amplitude(t) * self._drive_op
        )

    def collapse_channels(self) -> list[tuple[np.ndarray, float]]:
        """(operator, rate) pairs; the collapse operator is sqrt(rate) * op."""
        return [(self.a, self.kappa), (self.sm, self.gamma)]

    def phonon_coupling_operator(self) -> np.ndarray:
        return self.n_x

    def population_ops(self) -> dict[str, np.ndarray]:
        return {"exciton": self.n_x, "photon": self.n_ph}

    def excitation_op(self) -> np.ndarray:
        """Total excitation counter used by the decay-termination criterion."""
        return self.n_x + self.n_ph

    def ground_state(self) -> np.ndarray:
        ket = self.space.basis_state(0, 0)
        return np.outer(ket, ket.conj())

    def max_rate(self) -> float:
        return max(self.pulse.omega0, self.g, self.kappa, abs(self.delta_l))


class BiexcitonModel:
    """Four-level biexciton cascade with the upper transition cavity-coupled.

    Basis order |g>, |x>, |y>, |u> (tensor) Fock.  The laser is two-photon
    resonant with the biexciton; in its rotating frame the exciton sits at
    +E_B/2hbar and the cavity at -E_B/2hbar, so the cavity is resonant with
    the biexciton-to-exciton transition.  binding_energy is E_B/hbar in
    rad/ps.
    """

    def __init__(
        self,
        binding_energy: float,
        g: float = 0.0,
        kappa: float = 0.0,
        gamma: float = 0.0,
        gamma_u: float = 0.0,
        n_max: int = 2,
        pulse: PulseParams = PulseParams(area=np.pi, tau_p=4.0),
        bath: PhononParams = PhononParams(),
    ):
        if n_max < 2:
            raise ValueError("n_max must be >= 2 so two-photon emission is representable")
        if binding_energy <= 0:
            raise ValueError("binding_energy must be > 0")
        for name, val in (("g", g), ("kappa", kappa), ("gamma", gamma), ("gamma_u", gamma_u)):
            if val < 0:
                raise ValueError(f"{name} must be >= 0")
        if kappa > binding_energy / 10.0:
            warnings.warn(
                "kappa exceeds binding_energy/10; the cavity is not well "
                "detuned from the exciton-ground transition",
                stacklevel=2,
            )
        if pulse.tau_p * binding_energy / 4.0 < 5.0:
            warnings.warn(
                "pulse is short enough to drive the exciton directly "
                "(tau_p * E_B / 4 hbar < 5)",
                stacklevel=2,
            )
        self.binding_energy = float(binding_energy)
        self.g = float(g)
        self.kappa = float(kappa)
        self.gamma = float(gamma)
        self.gamma_u = float(gamma_u)
        self.n_max = int(n_max)
        self.pulse = pulse
        self.bath = bath

        self.space = HilbertSpace((4, n_max + 1))
        self.dim = self.space.total_dim
        nc = n_max + 1

        def qd_op(bra: int, ket: int) -> np.ndarray:
            m = np.zeros((4, 4), dtype=complex)
            m[bra, ket] = 1.0
            return self.space.embed(m, 0)

        G, X, Y, U = 0, 1, 2, 3
        self.sm = qd_op(G, X)  # |g><x|
        self.sp = dagger(self.sm)
        self.sm_u = qd_op(X, U)  # |x><u|
        self.sp_u = dagger(self.sm_u)
        self.op_yu = qd_op(Y, U)  # |y><u|
        self.op_gy = qd_op(G, Y)  # |g><y|
        self.proj_x = qd_op(X, X)
        self.proj_y = qd_op(Y, Y)
        self.proj_u = qd_op(U, U)
        self.sx = self.sp + self.sm
        self.sx_u = self.sp_u + self.sm_u

        self.a = self.space.embed(destroy(nc), 1)
        self.adag = dagger(self.a)
        self.n_ph = self.space.embed(number(nc), 1)
        self.identity = self.space.identity()

        eb2 = 0.5 * self.binding_energy
        # The phonon scattering term shifts each level by -Delta_P nu^2 where
        # nu is its lattice-coupling eigenvalue (0, 1, 0, 2).  The counter-term
        # +Delta_P N_ux^2 keeps the two-photon resonance and the cavity on the
        # dressed biexciton-exciton transition, mirroring the two-level
        # resonance condition (which is the nu^2 = nu special case).
        shift = polaron_shift(bath)
        self._h_static = (
            eb2 * self.proj_x
            - eb2 * self.n_ph
            + shift * (self.proj_x + 4.0 * self.proj_u)
            + self.g * (self.adag @ self.sm_u + self.a @ self.sp_u)
        )
        self._drive_op = 0.5 * (self.sx + self.sx_u)

    def drive_amplitude(self, t: float) -> float:
        return _drive_amplitude(t, self.pulse)

    def hamiltonian(self, t: float) -> np.ndarray:
        return self._h_static + self.drive_amplitude(t) * self._drive_op

    def collapse_channels(self) -> list[tuple[np.ndarray, float]]:
        return [
            (self.a, self.kappa),
            (self.sm_u, 0.5 * self.gamma_u),
            (self.op_yu, 0.5 * self.gamma_u),
            (self.sm, self.gamma),
            (self.op_gy, self.gamma),
        ]

    def phonon_coupling_operator(self) -> np.ndarray:
        """Diagonal coupling (0, 1, 0, 2) on (g, x, y, u): the biexciton couples
        twice as strongly to the lattice as a single exciton."""
        return 2.0 * self.proj_u + self.proj_x

    def population_ops(self) -> dict[str, np.ndarray]:
        return {
            "exciton": self.proj_x,
            "exciton_y": self.proj_y,
            "biexciton": self.proj_u,
            "photon": self.n_ph,
        }

    def excitation_op(self) -> np.ndarray:
        return self.proj_x + self.proj_y + self.proj_u + self.n_ph

    def ground_state(self) -> np.ndarray:
        ket = self.space.basis_state(0, 0)
        return np.outer(ket, ket.conj())

    def max_rate(self) -> float:
        return max(self.pulse.omega0, self.g, self.kappa, 0.5 * self.binding_energy)


Model = TwoLevelCavityModel | BiexcitonModel


# -- generator terms ---------------------------------------------------------


@dataclass
class GeneratorTerms:
    """Master-equation right-hand side as L rho + rho R + sum_k A_k rho B_k."""

    left: np.ndarray
    right: np.ndarray
    sandwiches: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = self.left @ rho + rho @ self.right
        for a, b in self.sandwiches:
            out += a @ rho @ b
        return out

    def apply_stack(self, stack: np.ndarray) -> np.ndarray:
        """Apply to a (batch, d, d) stack via single-GEMM reshapes."""
        b, d, _ = stack.shape
        flat = stack.reshape(b * d, d)
        out = np.matmul(flat, self.right).reshape(b, d, d)
        out += np.einsum("ij,bjk->bik", self.left, stack, optimize=True)
        for aa, bb in self.sandwiches:
            mid = np.einsum("ij,bjk->bik", aa, stack, optimize=True)
            out += np.matmul(mid.reshape(b * d, d), bb).reshape(b, d, d)
        return out

    def smatrix(self) -> np.ndarray:
        """Vectorized generator S with vec(rhs) = S vec(rho), row-major vec."""
        d = self.left.shape[0]
        eye = np.eye(d, dtype=complex)
        s = np.kron(self.left, eye) + np.kron(eye, self.right.T)
        for a, b in self.sandwiches:
            s += np.kron(a, b.T)
        return s


def _weak_full_coupling(model: Model, kind_h, t: float) -> np.ndarray:
    """Kernel-weighted coupling operator in the instantaneous eigenbasis.

    Returns M with matrix elements M_jk = K(l_j - l_k) N_jk expressed back in
    the lab basis; the scattering term is M rho N - N M rho + H.c.
    """
    n_op = model.phonon_coupling_operator()
    eig = eig_hermitian(kind_h(t))
    v = eig.eigenvectors
    n_eig = v.conj().T @ n_op @ v
    diffs = eig.eigenvalues[:, None] - eig.eigenvalues[None, :]
    kmat = bath_tables(model.bath).k(diffs)
    return v @ (kmat * n_eig) @ v.conj().T


def _phonon_terms_weak_full(model: Model, t: float) -> GeneratorTerms:
    n_op = model.phonon_coupling_operator()
    m = _weak_full_coupling(model, model.hamiltonian, t)
    md = dagger(m)
    return GeneratorTerms(
        left=-(n_op @ m),
        right=-(md @ n_op),
        sandwiches=[(m, n_op), (n_op, md)],
    )


def dissipator_weak_full(rho: np.ndarray, t: float, model: Model) -> np.ndarray:
    """Weak-coupling phonon scattering term (full transformation)."""
    if model.bath.alpha == 0.0:
        return np.zeros_like(rho)
    return _phonon_terms_weak_full(model, t).apply(rho)


def _simplified_rates(model: TwoLevelCavityModel, t: float):
    """Coefficients of the analytic short-pulse scattering term."""
    omega = model.drive_amplitude(t)
    dx = model.delta_x
    omega_r = np.hypot(omega, dx)
    dp = model.delta_p
    if omega_r <= 0.0 or omega == 0.0:
        return dp, 0.0, 0.0, 0.0, 0.0, 0.0
    tables = bath_tables(model.bath)
    kp = tables.k(omega_r)
    km = tables.k(-omega_r)
    rc = 0.25 * (kp + km)
    rs = 0.25j * (kp - km)
    g_eff = 4.0 * (omega / omega_r) ** 2 * rc.real
    c2 = (omega * dx / omega_r**2) * (0.5 * dp + rc.imag)
    c3 = (omega * dx / omega_r**2) * rc.real
    c4 = (omega / omega_r) * rs.real
    c5 = (omega / omega_r) * rs.imag
    return dp, g_eff, c2, c3, c4, c5


def dissipator_weak_simplified(
    rho: np.ndarray, t: float, model: TwoLevelCavityModel
) -> np.ndarray:
    """Analytic scattering term for the driven two-level model.

    Five groups: the polaron-shift commutator, pulse-driven pure dephasing of
    the exciton population operator, and two pairs of drive-axis cross terms
    whose coefficients are the cosine/sine half-transforms of the memory
    kernel at the effective Rabi frequency.
    """
    if not isinstance(model, TwoLevelCavityModel):
        raise TypeError("simplified dissipator is defined for the two-level model only")
    if model.bath.alpha == 0.0:
        return np.zeros_like(rho)
    dp, g_eff, c2, c3, c4, c5 = _simplified_rates(model, t)
    n_op, sx, sy = model.n_x, model.sx, model.sy
    out = -1j * (-(dp) * (n_op @ rho) - rho @ (-(dp) * n_op))
    if g_eff == c2 == c3 == c4 == c5 == 0.0:
        return out
    nn = n_op @ n_op
    out += 0.5 * g_eff * (2.0 * (n_op @ rho @ n_op) - nn @ rho - rho @ nn)
    x_cross = sx @ rho @ n_op - n_op @ sx @ rho
    x_cross_hc = dagger(x_cross)
    out += -1j * c2 * (x_cross - x_cross_hc)
    out += -c3 * (x_cross + x_cross_hc)
    y_cross = sy @ rho @ n_op - n_op @ sy @ rho
    y_cross_hc = dagger(y_cross)
    out += -c4 * (y_cross + y_cross_hc)
    out += -1j * c5 * (y_cross - y_cross_hc)
    return out


def _phonon_terms_weak_simplified(model: TwoLevelCavityModel, t: float) -> GeneratorTerms:
    """Sandwich form of the simplified term: M rho N - N M rho + H.c. with
    M = (g_eff/2 - i Delta_P) N - (c3 + i c2) sx - (c4 + i c5) sy."""
    dp, g_eff, c2, c3, c4, c5 = _simplified_rates(model, t)
    n_op = model.n_x
    m = (0.5 * g_eff - 1j * dp) * n_op
    m = m - (c3 + 1j * c2) * model.sx - (c4 + 1j * c5) * model.sy
    md = dagger(m)
    return GeneratorTerms(
        left=-(n_op @ m),
        right=-(md @ n_op),
        sandwiches=[(m, n_op), (n_op, md)],
    )


def _polaron_interaction_ops(model: TwoLevelCavityModel, t: float):
    omega = model.drive_amplitude(t)
    x_g = 0.5 * omega * model.sx + model.g * (model.sp @ model.a + model.sm @ model.adag)
    x_u = -0.5 * omega * model.sy + 1j * model.g * (model.sp @ model.a - model.sm @ model.adag)
    return x_g, x_u


def _phonon_terms_polaron(model: TwoLevelCavityModel, t: float) -> GeneratorTerms:
    tables = bath_tables(model.bath).polaron
    eig = eig_hermitian(model.hamiltonian_polaron(t))
    v = eig.eigenvectors
    diffs = eig.eigenvalues[:, None] - eig.eigenvalues[None, :]
    left = np.zeros((model.dim, model.dim), dtype=complex)
    right = np.zeros_like(left)
    sandwiches = []
    for x_op, table in zip(_polaron_interaction_ops(model, t), (tables["kg"], tables["ku"])):
        x_eig = v.conj().T @ x_op @ v
        c_op = v @ (table(diffs) * x_eig) @ v.conj().T
        cd = dagger(c_op)
        left -= x_op @ c_op
        right -= cd @ x_op
        sandwiches.append((c_op, x_op))
        sandwiches.append((x_op, cd))
    return GeneratorTerms(left=left, right=right, sandwiches=sandwiches)


def dissipator_polaron(rho: np.ndarray, t: float, model: TwoLevelCavityModel) -> np.ndarray:
    """Polaron-frame phonon scattering term (two-level model only)."""
    if not isinstance(model, TwoLevelCavityModel):
        raise TypeError("polaron dissipator is defined for the two-level model only")
    if model.bath.alpha == 0.0:
        return np.zeros_like(rho)
    return _phonon_terms_polaron(model, t).apply(rho)


def phonon_terms(model: Model, kind: DissipatorKind, t: float) -> GeneratorTerms | None:
    """Phonon scattering contribution in sandwich form, or None for no phonons."""
    if kind is DissipatorKind.NONE or model.bath.alpha == 0.0:
        return None
    if kind is DissipatorKind.WEAK_FULL:
        return _phonon_terms_weak_full(model, t)
    if kind is DissipatorKind.WEAK_SIMPLIFIED:
        if not isinstance(model, TwoLevelCavityModel):
            raise TypeError("simplified dissipator is defined for the two-level model only")
        return _phonon_terms_weak_simplified(model, t)
    if kind is DissipatorKind.POLARON:
        if not isinstance(model, TwoLevelCavityModel):
            raise TypeError("polaron dissipator is defined for the two-level model only")
        return _phonon_terms_polaron(model, t)
    raise ValueError(f"unknown dissipator kind {kind!r}")


def model_hamiltonian(model: Model, kind: DissipatorKind, t: float) -> np.ndarray:
    """Coherent part of the generator for the selected dissipator's frame."""
    if kind is DissipatorKind.POLARON:
        return model.hamiltonian_polaron(t)
    return model.hamiltonian(t)


def generator_terms(model: Model, kind: DissipatorKind, t: float) -> GeneratorTerms:
    """Full master-equation generator at time t in sandwich form."""
    h = model_hamiltonian(model, kind, t)
    left = -1j * h
    right = 1j * h
    sandwiches = []
    for op, rate in model.collapse_channels():
        if rate == 0.0:
            continue
        ada = dagger(op) @ op
        left = left - 0.5 * rate * ada
        right = right - 0.5 * rate * ada
        sandwiches.append((rate * op, dagger(op)))
    ph = phonon_terms(model, kind, t)
    if ph is not None:
        left = left + ph.left
        right = right + ph.right
        sandwiches.extend(ph.sandwiches)
    return GeneratorTerms(left=left, right=right, sandwiches=sandwiches)
