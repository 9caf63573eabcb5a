"""Two-mode Gaussian state bookkeeping.

States with vanishing first moments are fully described by the ten
normal-ordered second moments of the cavity mode ``a`` and detector mode
``b``.  This module converts them to the quadrature covariance matrix over
``(X_a, P_a, X_b, P_b)`` with ``X = (a + a^dag)/sqrt(2)``, checks the
uncertainty principle and evaluates the logarithmic negativity.

Vacuum has covariance ``I/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NonPhysicalStateError, NumericalError

# positions in the moment vector
AA, ADA, ADAD, AB, ADB, ABD, ADBD, BB, BDB, BDBD = range(10)

MOMENT_LABELS = (
    "<aa>", "<a+a>", "<a+a+>", "<ab>", "<a+b>",
    "<ab+>", "<a+b+>", "<bb>", "<b+b>", "<b+b+>",
)

PHYSICALITY_TOL = 1e-9
_IMAG_TOL = 1e-10

# (X_a, P_a, X_b, P_b) = QUAD @ (a, a^dag, b, b^dag)
QUAD = np.array(
    [[1, 1, 0, 0],
     [-1j, 1j, 0, 0],
     [0, 0, 1, 1],
     [0, 0, -1j, 1j]],
    dtype=complex,
) / np.sqrt(2.0)

SYMPLECTIC = np.array(
    [[0.0, 1.0, 0.0, 0.0],
     [-1.0, 0.0, 0.0, 0.0],
     [0.0, 0.0, 0.0, 1.0],
     [0.0, 0.0, -1.0, 0.0]]
)

@dataclass(frozen=True)
class MomentVector:
    """Normal-ordered second moments in the order of ``MOMENT_LABELS``."""

    entries: NDArray[np.complex128]

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex).reshape(-1)
        if arr.shape != (10,):
            raise ValueError(f"moment vector needs 10 entries, got {arr.size}")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def vacuum(cls) -> "MomentVector":
        return cls(np.zeros(10, dtype=complex))

    @classmethod
    def from_pairs(
        cls,
        n_a: float = 0.0,
        n_b: float = 0.0,
        aa: complex = 0.0,
        bb: complex = 0.0,
        ab: complex = 0.0,
        adb: complex = 0.0,
    ) -> "MomentVector":
        """Build a vector from the independent moments; the rest follow by conjugation."""
        v = np.zeros(10, dtype=complex)
        v[AA], v[ADAD] = aa, np.conj(aa)
        v[BB], v[BDBD] = bb, np.conj(bb)
        v[AB], v[ADBD] = ab, np.conj(ab)
        v[ADB], v[ABD] = adb, np.conj(adb)
        v[ADA], v[BDB] = n_a, n_b
        return cls(v)

    @property
    def n_a(self) -> float:
        return float(self.entries[ADA].real)

    @property
    def n_b(self) -> float:
        return float(self.entries[BDB].real)

    def rotated(self, theta_a: float, theta_b: float) -> "MomentVector":
        """Apply the local phase rotations a -> e^{i theta_a} a, b -> e^{i theta_b} b."""
        ea, eb = np.exp(1j * theta_a), np.exp(1j * theta_b)
        phase = np.array([
            ea * ea, 1.0, np.conj(ea * ea), ea * eb, np.conj(ea) * eb,
            ea * np.conj(eb), np.conj(ea * eb), eb * eb, 1.0, np.conj(eb * eb),
        ])
        return MomentVector(self.entries * phase)


def as_moments(v: MomentVector | ArrayLike) -> MomentVector:
    return v if isinstance(v, MomentVector) else MomentVector(np.asarray(v))


def check_moment_invariants(v: MomentVector | ArrayLike, tol: float = _IMAG_TOL) -> MomentVector:
    """Raise ``ValueError`` when occupations are complex or conjugate pairs mismatch."""
    v = as_moments(v)
    e = v.entries
    scale = max(1.0, float(np.max(np.abs(e))))
    for idx in (ADA, BDB):
        if abs(e[idx].imag) > tol * scale:
            raise ValueError(f"{MOMENT_LABELS[idx]} must be real, got {e[idx]}")
    for i, j in ((AA, ADAD), (BB, BDBD), (AB, ADBD), (ADB, ABD)):
        if abs(e[i] - np.conj(e[j])) > tol * scale:
            raise ValueError(
                f"{MOMENT_LABELS[j]} must equal conj({MOMENT_LABELS[i]}): {e[j]} vs {e[i]}"
            )
    return v


def symmetrized_ladder_matrix(v: MomentVector | ArrayLike) -> NDArray[np.complex128]:
    """``<{xi_i, xi_j}>/2`` for ``xi = (a, a^dag, b, b^dag)``."""
    e = as_moments(v).entries
    na = e[ADA] + 0.5
    nb = e[BDB] + 0.5
    return np.array(
        [[e[AA], na, e[AB], e[ABD]],
         [na, e[ADAD], e[ADB], e[ADBD]],
         [e[AB], e[ADB], e[BB], nb],
         [e[ABD], e[ADBD], nb, e[BDBD]]],
        dtype=complex,
    )


def physicality_eigenvalues(gamma: ArrayLike) -> NDArray[np.float64]:
    """Eigenvalues of ``gamma + (i/2) Omega``; all nonnegative for a quantum state."""
    g = np.asarray(gamma, dtype=float)
    return np.linalg.eigvalsh(g + 0.5j * SYMPLECTIC)


def check_physical(gamma: ArrayLike, tol: float = PHYSICALITY_TOL) -> NDArray[np.float64]:
    """Validate symmetry and the uncertainty principle of a covariance matrix.

    Returns the covariance as a float array.  Raises
    :class:`NonPhysicalStateError` listing the offending eigenvalue.
    """
    g = np.asarray(gamma, dtype=float)
    if g.shape != (4, 4):
        raise ValueError(f"covariance must be 4x4, got {g.shape}")
    asym = np.max(np.abs(g - g.T))
    if asym > 1e-12 * max(1.0, float(np.max(np.abs(g)))):
        raise ValueError(f"covariance not symmetric (max asymmetry {asym:.3e})")
    ev = physicality_eigenvalues(g)
    if ev[0] < -tol:
        raise NonPhysicalStateError(
            f"non-physical covariance: eigenvalue {ev[0]:.6g} of gamma + (i/2)Omega "
            f"below -{tol:g} (all eigenvalues {np.array2string(ev, precision=6)})",
            eigenvalue=float(ev[0]),
        )
    return g


def is_physical(gamma: ArrayLike, tol: float = PHYSICALITY_TOL) -> bool:
    return bool(physicality_eigenvalues(gamma)[0] >= -tol)


def moments_to_covariance(v: MomentVector | ArrayLike, check: bool = True) -> NDArray[np.float64]:
    """Quadrature covariance ``Gamma_ab = <R_a R_b + R_b R_a>/2`` from normal-ordered moments.

    Anti-normal products enter through ``<a a^dag> = <a^dag a> + 1``.

    Parameters
    ----------
    v:
        Moment vector with vanishing first moments assumed.
    check:
        Reject non-physical states (default).

    Raises
    ------
    NonPhysicalStateError
        If ``gamma + (i/2) Omega`` has an eigenvalue below ``-1e-9``.
    """
    e = check_moment_invariants(v).entries
    aa, bb, ab, adb = e[AA], e[BB], e[AB], e[ADB]
    na, nb = e[ADA].real + 0.5, e[BDB].real + 0.5
    g = np.empty((4, 4))
    g[0, 0] = na + aa.real
    g[1, 1] = na - aa.real
    g[0, 1] = g[1, 0] = aa.imag
    g[2, 2] = nb + bb.real
    g[3, 3] = nb - bb.real
    g[2, 3] = g[3, 2] = bb.imag
    g[0, 2] = g[2, 0] = ab.real + adb.real
    g[0, 3] = g[3, 0] = ab.imag + adb.imag
    g[1, 2] = g[2, 1] = ab.imag - adb.imag
    g[1, 3] = g[3, 1] = adb.real - ab.real
    if check:
        check_physical(g)
    return g


def covariance_to_moments(gamma: ArrayLike) -> MomentVector:
    """Inverse of :func:`moments_to_covariance`."""
    g = np.asarray(gamma, dtype=float)
    aa = 0.5 * (g[0, 0] - g[1, 1]) + 1j * g[0, 1]
    bb = 0.5 * (g[2, 2] - g[3, 3]) + 1j * g[2, 3]
    ab = 0.5 * (g[0, 2] - g[1, 3]) + 0.5j * (g[0, 3] + g[1, 2])
    adb = 0.5 * (g[0, 2] + g[1, 3]) + 0.5j * (g[0, 3] - g[1, 2])
    return MomentVector.from_pairs(
        n_a=0.5 * (g[0, 0] + g[1, 1]) - 0.5,
        n_b=0.5 * (g[2, 2] + g[3, 3]) - 0.5,
        aa=aa, bb=bb, ab=ab, adb=adb,
    )


def partial_transpose(gamma: ArrayLike) -> NDArray[np.float64]:
    """Flip the sign of ``X_a``: ``Lambda Gamma Lambda`` with ``Lambda = diag(-1, 1, 1, 1)``."""
    g = np.array(gamma, dtype=float, copy=True)
    # sign flips only, so applying twice is bit-exact
    g[0, :] = -g[0, :]
    g[:, 0] = -g[:, 0]
    return g


def symplectic_eigenvalues(gamma: ArrayLike) -> NDArray[np.float64]:
    """The two symplectic eigenvalues (ascending) of a 4x4 covariance matrix.

    All four eigenvalues of ``i Omega Gamma`` are computed and checked to
    form ``+/- nu`` pairs before the pairs are merged.
    """
    g = np.asarray(gamma, dtype=float)
    raw = np.linalg.eigvals(1j * SYMPLECTIC @ g)
    pos = np.sort(raw.real[raw.real > 0])
    neg = np.sort(-raw.real[raw.real <= 0])
    scale = max(1.0, float(np.max(np.abs(raw))))
    if (pos.size != 2 or np.max(np.abs(raw.imag)) > 1e-8 * scale
            or np.max(np.abs(pos - neg)) > 1e-8 * scale):
        raise NumericalError(f"symplectic spectrum is not paired as +/- nu: {raw}")
    return 0.5 * (pos + neg)


def log_negativity(gamma: ArrayLike) -> float:
    """Logarithmic negativity ``sum_i max(0, -log2(2 nu_i))`` of the partial transpose."""
    g = check_physical(gamma)
    nu = symplectic_eigenvalues(partial_transpose(g))
    return float(np.sum(np.maximum(0.0, -np.log2(2.0 * nu))))


def log_negativity_from_moments(v: MomentVector | ArrayLike) -> float:
    return log_negativity(moments_to_covariance(v))


def effective_temperature(
    occupation: float, mode_freq: float = 1.0, redshift_factor: float = 1.0
) -> float:
    """Effective temperature ``k_B T / (hbar omega)`` of a thermal mode.

    Inverts the Bose-Einstein occupation; ``redshift_factor`` multiplies the
    result (1 for the cavity, the instantaneous Lorentz factor ratio for the
    moving detector).  ``mode_freq`` fixes the unit of the ratio and must be
    positive.
    """
    if not occupation > 0:
        raise ValueError(f"temperature undefined for occupation {occupation!r} <= 0")
    if not mode_freq > 0:
        raise ValueError("mode_freq must be positive")
    return float(redshift_factor / np.log1p(1.0 / occupation))
