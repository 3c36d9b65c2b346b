"""Dense density-matrix engine for a small labeled register of two-level systems.

The register is fixed at construction (default order A, B, A1, B1).  Basis
index convention: label k is the k-th tensor factor, and the bit of a basis
index addressing label k is bit (n-1-k), i.e. the first label is the most
significant bit.  |0010> on (A, B, A1, B1) therefore means A1 = 1.

All operations return new objects; nothing is mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
ZERO_BRANCH_TOL = 1e-15


class QStateError(Exception):
    """Base class for state-engine errors."""


class DimensionMismatch(QStateError):
    pass


class NotNormalized(QStateError):
    pass


class NotUnitary(QStateError):
    pass


class UnknownLabel(QStateError):
    pass


class ZeroProbabilityBranch(QStateError):
    pass


@dataclass(frozen=True)
class Register:
    """Ordered collection of unique qubit labels."""

    labels: tuple[str, ...] = ("A", "B", "A1", "B1")

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2 ** len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"label {label!r} not in register {self.labels}") from None

    def subset(self, keep: tuple[str, ...]) -> "Register":
        return Register(tuple(lb for lb in self.labels if lb in keep))


DEFAULT_REGISTER = Register()


@dataclass
class KrausChannel:
    """Kraus map on a named subset of labels.

    ``matrices`` may be sub-normalized (sum K^dag K <= I): the missing weight
    models post-selected photon loss.  ``loss_matrices`` optionally carry the
    complementary loss branch so the full set is trace preserving.
    """

    matrices: list[np.ndarray]
    loss_matrices: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not self.matrices and not self.loss_matrices:
            # empty channel maps everything to zero; allowed
            return
        dims = {m.shape for m in self.matrices + self.loss_matrices}
        if len(dims) != 1:
            raise DimensionMismatch(f"inconsistent Kraus shapes {dims}")
        (shape,) = dims
        if shape[0] != shape[1] or shape[0] & (shape[0] - 1):
            raise DimensionMismatch(f"Kraus matrices must be square power-of-two, got {shape}")
        s = self._ksum(self.matrices + self.loss_matrices)
        if np.max(np.linalg.eigvalsh(s)) > 1 + HERMITICITY_TOL:
            raise DimensionMismatch("sum K^dag K exceeds identity")

    @staticmethod
    def _ksum(mats) -> np.ndarray:
        return sum(m.conj().T @ m for m in mats)

    @property
    def n_targets(self) -> int:
        shape = (self.matrices + self.loss_matrices)[0].shape[0]
        return int(np.log2(shape))

    @property
    def completeness_defect(self) -> float:
        """Operator norm of I - sum K^dag K over the kept branch."""
        if not self.matrices:
            return 1.0
        s = self._ksum(self.matrices)
        return float(np.linalg.norm(np.eye(s.shape[0]) - s, 2))


@dataclass
class DensityMatrix:
    """Dense density operator on a labeled register."""

    register: Register
    mat: np.ndarray

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=complex)
        if self.mat.shape != (self.register.dim, self.register.dim):
            raise DimensionMismatch(
                f"matrix shape {self.mat.shape} vs register dim {self.register.dim}"
            )

    # ---------------------------------------------------------------- basics

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.mat)))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.register, self.mat.copy())

    def renormalized(self) -> "DensityMatrix":
        t = self.trace
        if t <= ZERO_BRANCH_TOL:
            raise ZeroProbabilityBranch(f"trace {t} too small to renormalize")
        return DensityMatrix(self.register, self.mat / t)

    def validate(self, check_trace: bool = True) -> None:
        """Assert the physicality invariants; raises QStateError on violation."""
        h = np.max(np.abs(self.mat - self.mat.conj().T))
        if h > HERMITICITY_TOL:
            raise QStateError(f"hermiticity defect {h}")
        if check_trace and not (0 < self.trace <= 1 + HERMITICITY_TOL):
            raise QStateError(f"trace {self.trace} out of range")
        lo = float(np.min(np.linalg.eigvalsh((self.mat + self.mat.conj().T) / 2)))
        if lo < EIGENVALUE_FLOOR:
            raise QStateError(f"negative eigenvalue {lo}")

    # ---------------------------------------------------------- construction

    @staticmethod
    def pure(register: Register, amplitudes: np.ndarray) -> "DensityMatrix":
        return pure_state(register, amplitudes)

    # ------------------------------------------------------------ operations

    def _expand(self, op: np.ndarray, targets: tuple[str, ...]) -> np.ndarray:
        """Embed an operator on `targets` (first target = most significant bit)
        into the full register space."""
        n = self.register.n
        t = len(targets)
        if op.shape != (2**t, 2**t):
            raise DimensionMismatch(f"operator shape {op.shape} for {t} targets")
        tidx = [self.register.index(lb) for lb in targets]
        if len(set(tidx)) != t:
            raise UnknownLabel(f"repeated target labels {targets}")
        rest = [k for k in range(n) if k not in tidx]
        order = tidx + rest
        full = np.kron(op, np.eye(2 ** (n - t))).reshape((2,) * (2 * n))
        perm = [order.index(k) for k in range(n)]
        full = np.transpose(full, perm + [n + p for p in perm])
        return full.reshape(2**n, 2**n)

    def apply_unitary(self, matrix: np.ndarray, targets: tuple[str, ...]) -> "DensityMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        d = matrix.shape[0]
        if matrix.shape != (d, d) or d != 2 ** len(targets):
            raise DimensionMismatch(f"unitary shape {matrix.shape} for targets {targets}")
        if np.max(np.abs(matrix.conj().T @ matrix - np.eye(d))) > 1e-12:
            raise NotUnitary("matrix is not unitary within 1e-12")
        u = self._expand(matrix, targets)
        return DensityMatrix(self.register, u @ self.mat @ u.conj().T)

    def apply_kraus(
        self, channel: KrausChannel, targets: tuple[str, ...], include_loss: bool = False
    ) -> tuple["DensityMatrix", float]:
        """Apply the channel; returns (unnormalized state, survival probability)."""
        mats = list(channel.matrices)
        if include_loss:
            mats += channel.loss_matrices
        out = np.zeros_like(self.mat)
        for k in mats:
            kf = self._expand(np.asarray(k, dtype=complex), targets)
            out += kf @ self.mat @ kf.conj().T
        result = DensityMatrix(self.register, out)
        return result, result.trace

    def project(
        self, label: str, outcome: int, renormalize: bool = True
    ) -> tuple[float, "DensityMatrix"]:
        """Projective measurement of one label onto computational `outcome`."""
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome}")
        k = self.register.index(label)
        n = self.register.n
        idx = np.arange(self.register.dim)
        mask = ((idx >> (n - 1 - k)) & 1) == outcome
        projected = np.where(np.outer(mask, mask), self.mat, 0.0)
        prob = float(np.real(np.sum(np.diag(projected))))
        state = DensityMatrix(self.register, projected)
        if renormalize:
            if prob <= ZERO_BRANCH_TOL:
                raise ZeroProbabilityBranch(f"outcome {outcome} on {label} has probability {prob}")
            state = DensityMatrix(self.register, projected / prob)
        return prob, state

    def fidelity(self, reference: np.ndarray) -> float:
        """<psi|rho|psi> against a pure reference; global-phase invariant."""
        psi = np.asarray(reference, dtype=complex).ravel()
        if psi.shape[0] != self.register.dim:
            raise DimensionMismatch(
                f"reference length {psi.shape[0]} vs dimension {self.register.dim}"
            )
        return float(np.real(psi.conj() @ self.mat @ psi))

    def partial_trace(self, keep: tuple[str, ...]) -> "DensityMatrix":
        if not keep:
            raise UnknownLabel("must keep at least one label")
        for lb in keep:
            self.register.index(lb)
        n = self.register.n
        keep_idx = [k for k in range(n) if self.register.labels[k] in keep]
        drop_idx = [k for k in range(n) if k not in keep_idx]
        tensor = self.mat.reshape((2,) * (2 * n))
        for off, k in enumerate(drop_idx):
            ax = k - off  # axes shift as we trace out
            tensor = np.trace(tensor, axis1=ax, axis2=ax + (n - off))
        d = 2 ** len(keep_idx)
        return DensityMatrix(self.register.subset(keep), tensor.reshape(d, d))


def pure_state(register: Register, amplitudes: np.ndarray) -> DensityMatrix:
    """rho = |psi><psi| from an amplitude vector (must be normalized)."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    if psi.shape[0] != register.dim:
        raise DimensionMismatch(f"amplitude length {psi.shape[0]} vs dimension {register.dim}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-12:
        raise NotNormalized(f"amplitude norm {norm} != 1")
    return DensityMatrix(register, np.outer(psi, psi.conj()))


# Common single-qubit gates (module constants, reused everywhere).
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
