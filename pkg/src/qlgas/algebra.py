"""Fixed matrix representations and exact matrix algebra.

All matrices are built from Pauli blocks so their entries are 0, +-1 or +-1i
and products of them stay exact in floating point.  Layout conventions:

  4-spinor components:  (L-up, L-down, R-up, R-down)
  8-doublet components: gauge spinor pair (calA, tilde-calA)
  16-multiplet:         (calA, tilde-calA, psi, tilde-psi); the gauge doublet
                        occupies components 0..7, the fermion pair 8..15.

gamma0 = sz x 1,  gamma_i = i sy x sigma_i         (4x4)
calG0  = sx x 1 x 1,  calG_i = i sy x 1 x sigma_i  (8x8)
delta0 = diag(calG0, 1 x gamma0)  etc.             (16x16)
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianError

HERM_TOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA = (SIGMA_X, SIGMA_Y, SIGMA_Z)
ID2 = np.eye(2, dtype=complex)

# Minkowski metric, signature (+,-,-,-)
ETA = np.diag([1.0, -1.0, -1.0, -1.0])

GAMMA = np.stack(
    [np.kron(SIGMA_Z, ID2)] + [1j * np.kron(SIGMA_Y, s) for s in SIGMA]
)
GAMMA_LOWER = np.stack([ETA[mu, mu] * GAMMA[mu] for mu in range(4)])
GAMMA0 = GAMMA[0]

# alpha_i = gamma0 gamma_i = sx x sigma_i, hermitian, squares to identity
ALPHA = np.stack([GAMMA[0] @ GAMMA[i] for i in (1, 2, 3)])

CALG = np.stack(
    [np.kron(SIGMA_X, np.eye(4, dtype=complex))]
    + [1j * np.kron(SIGMA_Y, np.kron(ID2, s)) for s in SIGMA]
)

# n singles out the fermion pair (components 8..15), h the gauge doublet
NUMBER_OP = np.diag([0.0, 1.0])
HOLE_OP = np.diag([1.0, 0.0])

DELTA = np.stack(
    [
        np.kron(HOLE_OP, CALG[mu]) + np.kron(NUMBER_OP, np.kron(ID2, GAMMA[mu]))
        for mu in range(4)
    ]
)

SPIN = np.stack(
    [
        np.stack([(GAMMA[m] @ GAMMA[n] - GAMMA[n] @ GAMMA[m]) / 4 for n in range(4)])
        for m in range(4)
    ]
)

# slices of the multiplet, by block
CALA_SLICE = slice(0, 4)
TILDE_CALA_SLICE = slice(4, 8)
PSI_SLICE = slice(8, 12)
TILDE_PSI_SLICE = slice(12, 16)
DOUBLET_SLICE = slice(0, 8)
FERMION_SLICE = slice(8, 16)


@dataclass(frozen=True)
class Metric:
    """Flat background metric."""

    eta: np.ndarray


@dataclass(frozen=True)
class CliffordRep:
    """The fixed representation used everywhere in the package.

    gamma : (4,4,4)    contravariant gamma^mu
    calG  : (4,8,8)    doublet Dirac matrices
    delta : (4,16,16)  multiplet Dirac matrices
    spin  : (4,4,4,4)  S^{mu nu} = [gamma^mu, gamma^nu]/4
    alpha : (3,4,4)    gamma0 gamma_i
    n, h  : (2,2)      number / hole projectors, n + h = 1, n h = 0
    """

    eta: np.ndarray
    gamma: np.ndarray
    calG: np.ndarray
    delta: np.ndarray
    spin: np.ndarray
    alpha: np.ndarray
    n: np.ndarray
    h: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    out.setflags(write=False)
    return out


def build_rep() -> CliffordRep:
    """Build the fixed representation; pure and bit-for-bit reproducible."""
    return CliffordRep(
        eta=_frozen(ETA),
        gamma=_frozen(GAMMA),
        calG=_frozen(CALG),
        delta=_frozen(DELTA),
        spin=_frozen(SPIN),
        alpha=_frozen(ALPHA),
        n=_frozen(NUMBER_OP),
        h=_frozen(HOLE_OP),
    )


def spin_generator(mu: int, nu: int) -> np.ndarray:
    """[gamma^mu, gamma^nu]/4; antisymmetric under index swap."""
    if not (0 <= mu <= 3 and 0 <= nu <= 3):
        raise IndexError(f"spacetime indices must be in 0..3, got ({mu}, {nu})")
    return SPIN[mu, nu].copy()


def spin_algebra_residual() -> float:
    """Max-norm residual of the Lorentz algebra over all 256 index tuples.

    [S^{mn}, S^{rs}] = eta^{nr} S^{ms} - eta^{rm} S^{ns}
                       - eta^{ns} S^{mr} + eta^{ms} S^{nr}
    """
    worst = 0.0
    for m in range(4):
        for n in range(4):
            for r in range(4):
                for s in range(4):
                    lhs = SPIN[m, n] @ SPIN[r, s] - SPIN[r, s] @ SPIN[m, n]
                    rhs = (
                        ETA[n, r] * SPIN[m, s]
                        - ETA[r, m] * SPIN[n, s]
                        - ETA[n, s] * SPIN[m, r]
                        + ETA[m, s] * SPIN[n, r]
                    )
                    worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def bilinear(psi: np.ndarray, op: np.ndarray) -> complex:
    """psibar O psi = psi^dag gamma0 O psi.

    `psi` may carry leading site axes; the spinor index is last.
    """
    psi = np.asarray(psi)
    return np.einsum("...a,ab,bc,...c->...", psi.conj(), GAMMA0, op, psi)


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def hermiticity_defect(h: np.ndarray) -> float:
    """Relative max-norm of the anti-hermitian part."""
    h = np.asarray(h)
    scale = max(float(np.max(np.abs(h))), 1.0)
    return float(np.max(np.abs(h - h.conj().swapaxes(-1, -2)))) / scale


def herm_exp(h: np.ndarray, theta: float) -> np.ndarray:
    """exp(i theta H) for hermitian H, via eigendecomposition.

    Eigendecomposition rather than a series keeps the result unitary to
    machine precision, which the evolution operators rely on.

    Raises NonHermitianError if the anti-hermitian part of H exceeds the
    1e-12 relative gate.
    """
    h = np.asarray(h, dtype=complex)
    defect = hermiticity_defect(h)
    if defect > HERM_TOL:
        raise NonHermitianError(defect)
    w, v = np.linalg.eigh((h + h.conj().swapaxes(-1, -2)) / 2)
    phases = np.exp(1j * theta * w)
    return np.einsum("...ab,...b,...cb->...ac", v, phases, v.conj())
