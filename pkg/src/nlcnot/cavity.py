"""Input-output physics of one network node.

Frequency-dependent reflection of a single-photon pulse off a single-sided
cavity containing a Lambda-type atom, its narrowband limit, the lower-level
coherence-survival factor, the resonant intensity reflection, pulse-spectrum
averaging, and construction of the (possibly imperfect) controlled-phase-flip
Kraus channel.

Conventions: the frequency argument `omega` is the offset from the h-polarized
carrier (the atom-cavity detuning is fixed at zero).  G = |g|^2/(gamma*gamma_s)
is the dimensionless coupling ratio; p_z counts atoms coupled to the cavity
mode (0 when the atom is shelved in |1>, 1 for a single coupled atom).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .qstate import KrausChannel

IDEAL = "ideal"
NARROWBAND_IMPERFECT = "narrowband-imperfect"


class CavityError(Exception):
    pass


class InvalidMode(CavityError):
    pass


class QuadratureFailure(CavityError):
    pass


@dataclass(frozen=True)
class CavityParams:
    """Atom-cavity coupling g, cavity decay gamma, spontaneous decay gamma_s.

    All three share the same angular-frequency units; only ratios matter here.
    """

    g: float
    gamma: float
    gamma_s: float

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.gamma <= 0 or self.gamma_s <= 0:
            raise ValueError(f"gamma and gamma_s must be > 0, got {self.gamma}, {self.gamma_s}")

    @property
    def big_g(self) -> float:
        """Dimensionless coupling ratio G = |g|^2 / (gamma * gamma_s)."""
        return self.g**2 / (self.gamma * self.gamma_s)

    @staticmethod
    def from_g_ratio(big_g: float) -> "CavityParams":
        """Convenience: unit decay rates, g chosen to realize the given G."""
        if big_g < 0:
            raise ValueError(f"G must be >= 0, got {big_g}")
        return CavityParams(g=math.sqrt(big_g), gamma=1.0, gamma_s=1.0)


def reflection_coefficient(omega: float, p_z: float, params: CavityParams) -> complex:
    """Spectral reflection amplitude r(omega) of the h-polarized photon.

    r = (omega - i*gamma/2 - i*gamma_s*g^2*P_z / ((omega + i*gamma_s)(omega + i*gamma_s/2)))
      / (omega + i*gamma/2 - same atomic term).
    """
    atom = 1j * params.gamma_s * params.g**2 * p_z / (
        (omega + 1j * params.gamma_s) * (omega + 1j * params.gamma_s / 2)
    )
    return (omega - 1j * params.gamma / 2 - atom) / (omega + 1j * params.gamma / 2 - atom)


def ideal_reflection(p_z: float, big_g: float) -> float:
    """Narrowband reflection amplitude (-1 + 4*G*P_z) / (1 + 4*G*P_z).

    -1 for an uncoupled atom (p_z = 0); approaches +1 for strong coupling.
    """
    if big_g < 0 or p_z < 0:
        raise ValueError("G and P_z must be >= 0")
    return (-1.0 + 4.0 * big_g * p_z) / (1.0 + 4.0 * big_g * p_z)


def coherence_survival(big_g: float, p_z: float) -> float:
    """Surviving fraction of the lower-level coherence, 1 - 8G/(1 + 4G*P_z)^2.

    First-order estimate of the off-diagonal decay induced by one reflected
    photon; differs from ideal_reflection(1, G) by exactly 2/(1+4G)^2.
    """
    if big_g < 0 or p_z < 0:
        raise ValueError("G and P_z must be >= 0")
    return 1.0 - 8.0 * big_g / (1.0 + 4.0 * big_g * p_z) ** 2


def resonant_R(big_g: float, p_z: float) -> float:
    """Resonant intensity reflection ((1 - 4G*P_z)/(1 + 4G*P_z))^2."""
    r = ideal_reflection(p_z, big_g)
    return r * r


@dataclass(frozen=True)
class PulseSpectrum:
    """Intensity spectrum |f(omega)|^2 of the incoming pulse, unit-normalized.

    gaussian: |f|^2 is a normal density with std `bandwidth` around `center`.
    flat-top: uniform on center +- bandwidth*sqrt(3) (same second moment).
    """

    shape: str = "gaussian"
    center: float = 0.0
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.shape not in ("gaussian", "flat-top"):
            raise ValueError(f"unknown spectrum shape {self.shape!r}")
        if self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")

    def density(self, omega):
        if self.shape == "gaussian":
            s = self.bandwidth
            return np.exp(-((omega - self.center) ** 2) / (2 * s * s)) / (s * math.sqrt(2 * math.pi))
        half = self.bandwidth * math.sqrt(3.0)
        inside = np.abs(np.asarray(omega) - self.center) <= half
        return np.where(inside, 1.0 / (2 * half), 0.0)

    def support(self) -> tuple[float, float]:
        if self.shape == "gaussian":
            return self.center - 8 * self.bandwidth, self.center + 8 * self.bandwidth
        half = self.bandwidth * math.sqrt(3.0)
        return self.center - half, self.center + half


def pulse_averaged_reflection(
    spectrum: PulseSpectrum, p_z: float, params: CavityParams
) -> complex:
    """Spectrum-weighted average of r(omega), by adaptive quadrature.

    Converges to reflection_coefficient(center, p_z, params) as bandwidth -> 0.
    """
    lo, hi = spectrum.support()

    def integrand_re(w):
        return spectrum.density(w) * reflection_coefficient(w, p_z, params).real

    def integrand_im(w):
        return spectrum.density(w) * reflection_coefficient(w, p_z, params).imag

    out = []
    for fn in (integrand_re, integrand_im):
        val, err = integrate.quad(fn, lo, hi, epsabs=1e-12, epsrel=1e-9, limit=200)
        if err > 1e-8 * max(1.0, abs(val)):
            raise QuadratureFailure(f"quadrature error {err} for value {val}")
        out.append(val)
    return complex(out[0], out[1])


def cpf_channel(big_g: float, p_z: float = 1.0, mode: str = IDEAL) -> KrausChannel:
    """Controlled-phase-flip channel on (atom, photon).

    Basis ordering |atom, photon> with the atom as the most significant bit and
    photon v = 0, h = 1: indices (|0v>, |0h>, |1v>, |1h>).  The -1 phase sits
    on |1h>; in the narrowband-imperfect mode the coupled |0h> branch reflects
    with amplitude r1 = ideal_reflection(p_z, G) < 1 and the missing weight is
    carried by a loss operator (atom relaxes to |0>, photon scattered).
    """
    if mode == IDEAL:
        k0 = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
        return KrausChannel([k0])
    if mode == NARROWBAND_IMPERFECT:
        r1 = ideal_reflection(p_z, big_g)
        k0 = np.diag([1.0, r1, 1.0, -1.0]).astype(complex)
        loss = np.zeros((4, 4), dtype=complex)
        loss[0, 1] = math.sqrt(max(0.0, 1.0 - r1 * r1))  # |0v><0h|: photon gone
        return KrausChannel([k0], loss_matrices=[loss])
    raise InvalidMode(f"mode must be {IDEAL!r} or {NARROWBAND_IMPERFECT!r}, got {mode!r}")


def dephasing_completion(channel: KrausChannel) -> np.ndarray:
    """Trace-preserving completion sqrt(I - sum K^dag K) of a diagonal channel.

    Models the scattering event as which-path dephasing with the photon still
    reaching the detector: diagonal populations are untouched while the
    coupled-branch coherence carries the kept-branch amplitude.
    """
    s = KrausChannel._ksum(channel.matrices)
    defect = np.eye(s.shape[0]) - s
    if np.max(np.abs(defect - np.diag(np.diagonal(defect)))) > 1e-12:
        raise InvalidMode("completion implemented for diagonal channels only")
    return np.diag(np.sqrt(np.clip(np.real(np.diagonal(defect)), 0.0, None))).astype(complex)
