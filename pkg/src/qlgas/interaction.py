"""Pointwise fermion-gauge coupling machinery.

Everything here acts site by site: expectation values, the deformed metric,
the London potential, outgoing currents, the forward and back reaction
unitaries, the doublet mass matrix, and gauge transformations.  All
functions accept either a single 4-spinor / 4-vector or arrays with leading
site axes (spinor and vector component axes last), and are pure.

Index conventions: the commutator bilinear B^{mn} = psibar [g^m, g^n] psi is
stored with both indices up; contractions with the 4-potential insert the
metric explicitly.  The first-order back reaction contracts B's *first*
index with A, matching the metric form A'^n = g^{mn} A_m.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .algebra import ETA, GAMMA, GAMMA_LOWER, SPIN, bilinear, herm_exp, hermiticity_defect
from .errors import NonHermitianError, NonUnitaryError, NullNormError
from .params import PhysicalParams
from .spinor import T_DAGGER, T_MATRIX

NULL_NORM_RTOL = 1e-14

# [gamma^m, gamma^n], all 16 pairs, shape (4,4,4,4)
_COMM = 4.0 * SPIN


def current(psi: np.ndarray) -> np.ndarray:
    """Contravariant 4-current J^mu = psibar gamma^mu psi (real)."""
    psi = np.asarray(psi)
    vals = np.stack([bilinear(psi, GAMMA[mu]) for mu in range(4)], axis=-1)
    return vals.real


def commutator_bilinear(psi: np.ndarray) -> np.ndarray:
    """B^{mn} = psibar [gamma^m, gamma^n] psi, purely imaginary, antisymmetric."""
    psi = np.asarray(psi)
    return np.einsum(
        "...a,ab,mnbc,...c->...mn", psi.conj(), GAMMA[0], _COMM, psi
    )


def expectation(psi: np.ndarray, op: np.ndarray) -> complex:
    """<O> = psibar O psi / psibar psi.

    Raises NullNormError when |psibar psi| <= 1e-14 ||psi||^2: the bilinear
    norm is indefinite and can vanish for physical states, in which case
    the expectation is undefined.
    """
    psi = np.asarray(psi)
    norm = bilinear(psi, np.eye(4, dtype=complex))
    scale = np.einsum("...a,...a->...", psi.conj(), psi).real
    if np.any(np.abs(norm) <= NULL_NORM_RTOL * scale):
        bad = norm if norm.ndim == 0 else norm[np.abs(norm) <= NULL_NORM_RTOL * scale][0]
        raise NullNormError(complex(bad))
    return bilinear(psi, op) / norm


@dataclass(frozen=True)
class MetricValue:
    """Deformed metric g = eta + i eps B / rho0, truncated at first order."""

    g: np.ndarray

    def apply(self, A: np.ndarray) -> np.ndarray:
        """g^{mn} A_m as a contravariant 4-vector."""
        return _apply_mixed(self.g, A)


def _apply_mixed(tensor_uu: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Contract the FIRST upper index of tensor^{mn} with A_m; A is contravariant."""
    return np.einsum("...mn,mk,...k->...n", tensor_uu, ETA, np.asarray(A))


def metric(psi: np.ndarray, p: PhysicalParams) -> MetricValue:
    """g^{mn} = eta^{mn} + i eps psibar[g^m,g^n]psi / rho0."""
    B = commutator_bilinear(psi)
    g = ETA + 1j * (p.epsilon / p.rho0) * B
    return MetricValue(g=g)


@dataclass(frozen=True)
class BackgroundDensity:
    value: float  # real part of the grid mean
    imag_residual: float
    flagged: bool  # imaginary residual exceeded 1e-10


def background_density(psi_field: np.ndarray, p: PhysicalParams) -> BackgroundDensity:
    """Grid mean of (4 m0 c ell / hbar) i psibar psi.

    For c-number spinors psibar psi is real, so the flux lands on the
    imaginary axis; the real part is reported and the imaginary residual
    flagged when above 1e-10.
    """
    psi_field = np.asarray(psi_field)
    if psi_field.size == 0:
        raise ValueError("empty field")
    flux = (4.0 * p.m0 * p.c * p.ell / p.hbar) * 1j * bilinear(
        psi_field, np.eye(4, dtype=complex)
    )
    mean = complex(np.mean(flux))
    return BackgroundDensity(
        value=mean.real,
        imag_residual=abs(mean.imag),
        flagged=abs(mean.imag) > 1e-10,
    )


def london_potential(psi: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """A^mu = -lambda_L^2 e J^mu (contravariant; the relation is index-uniform)."""
    return -p.lambda_L**2 * p.e * current(psi)


def forward_reaction(psi: np.ndarray, A: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """psi' = exp(-i ell e gamma_mu A^mu / (hbar c)) psi.

    The generator gamma_mu A^mu is hermitian only when the spatial part of A
    carries the appropriate reality; the hermiticity gate raises otherwise
    and callers may fall back to the alpha-form used by the lattice engine.
    """
    A = np.asarray(A)
    gen = np.einsum("mab,...m->...ab", GAMMA_LOWER, A)
    try:
        u = herm_exp(gen, -p.ell * p.e / (p.hbar * p.c))
    except NonHermitianError as err:
        raise NonHermitianError(err.residual, what="gamma_mu A^mu") from None
    return np.einsum("...ab,...b->...a", u, np.asarray(psi, dtype=complex))


def _reaction_generator(psi: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """Real matrix Y with (Y A)^n = (i eps / rho0) B^{mn} A_m; eta-antisymmetric."""
    B = commutator_bilinear(psi)
    Y = 1j * (p.epsilon / p.rho0) * np.einsum("...mn,mk->...nk", B, ETA)
    return Y.real  # B is purely imaginary, so Y is real up to rounding


def _expm_batched(Y: np.ndarray) -> np.ndarray:
    """exp of a stack of small real matrices via diagonalization."""
    w, v = np.linalg.eig(Y)
    ew = np.exp(w)
    out = np.einsum("...ab,...b->...ab", v, ew)
    return np.linalg.solve(np.swapaxes(v, -1, -2), np.swapaxes(out, -1, -2)).swapaxes(
        -1, -2
    )


def back_reaction(psi: np.ndarray, A: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """Exact flux-conserving update A' = exp(Y) A.

    Y is the eta-antisymmetric generator whose linearization is the metric
    action, so the Minkowski norm A'.eta.A' = A.eta.A is preserved to
    rounding.
    """
    Y = _reaction_generator(psi, p)
    U = _expm_batched(Y).real
    return np.einsum("...nk,...k->...n", U, np.asarray(A, dtype=float))


def back_reaction_linearized(psi: np.ndarray, A: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """First-order truncation; identical arithmetic to metric(psi).apply(A)."""
    B = commutator_bilinear(psi)
    g = ETA + 1j * (p.epsilon / p.rho0) * B
    return _apply_mixed(g, A).real


def outgoing_current(psi: np.ndarray, A: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """J'^n = e psibar gamma^n psi - i (e^2 ell / hbar c) B^{mn} A_m."""
    J = current(psi)
    B = commutator_bilinear(psi)
    corr = -1j * (p.e**2 * p.ell / (p.hbar * p.c)) * _apply_mixed(B, A)
    return p.e * J + corr.real


def outgoing_correction_contracted(psi: np.ndarray, A: np.ndarray, p: PhysicalParams):
    """The correction term of J' contracted once more with A_n.

    Antisymmetric-times-symmetric, so it cancels; terms are summed in
    mu < nu pairs so the cancellation is exact in floating point.
    """
    A = np.asarray(A)
    B = commutator_bilinear(psi)
    A_low = np.einsum("mk,...k->...m", ETA, A)
    coef = -1j * (p.e**2 * p.ell / (p.hbar * p.c))
    total = np.zeros(np.asarray(psi).shape[:-1], dtype=complex)
    for mu in range(4):
        for nu in range(mu + 1, 4):
            pair = (B[..., mu, nu] + B[..., nu, mu]) * (A_low[..., mu] * A_low[..., nu])
            total = total + pair
    return coef * total


def spin_contraction(psi: np.ndarray, A: np.ndarray) -> complex:
    """Sum_{mn} <S^{mn}> A_m A_n, summed in cancelling pairs."""
    A = np.asarray(A)
    A_low = ETA @ A
    norm = bilinear(psi, np.eye(4, dtype=complex))
    scale = float(np.vdot(psi, psi).real)
    if abs(norm) <= NULL_NORM_RTOL * scale:
        raise NullNormError(complex(norm))
    total = 0.0 + 0.0j
    for mu in range(4):
        for nu in range(mu + 1, 4):
            s_mn = bilinear(psi, SPIN[mu, nu]) / norm
            s_nm = bilinear(psi, SPIN[nu, mu]) / norm
            total += (s_mn + s_nm) * (A_low[mu] * A_low[nu])
    return total


@dataclass(frozen=True)
class MassMatrixL:
    """Tensor M^n_m and the block-diagonal doublet mass matrix M_L."""

    M: np.ndarray  # (...,4,4), mixed indices, real
    ML: np.ndarray  # (...,8,8)


def mass_matrix(psi: np.ndarray, p: PhysicalParams) -> MassMatrixL:
    """M^n_m = i m0 psibar[g^n, g_m]psi / rho0 and M_L per the doublet equation.

    The lower-right block of M_L is exactly (hbar / lambda_L c) I4; the
    upper-left is (hbar / lambda_L c)(I - T M T^dag c ell / hbar).  For
    generic psi the upper block is not hermitian; consumers that
    exponentiate must hermitize (the lattice engine reports the defect).
    """
    psi = np.asarray(psi)
    B = commutator_bilinear(psi)
    M = (1j * p.m0 / p.rho0) * np.einsum("...nk,km->...nm", B, ETA)
    M = M.real
    P = np.einsum("ab,...bc,cd->...ad", T_MATRIX, M.astype(complex), T_DAGGER)
    a = p.doublet_mass
    lead = psi.shape[:-1]
    ML = np.zeros(lead + (8, 8), dtype=complex)
    eye4 = np.eye(4)
    ML[..., 0:4, 0:4] = a * (eye4 - P * (p.c * p.ell / p.hbar))
    ML[..., 4:8, 4:8] = a * eye4
    return MassMatrixL(M=M, ML=ML)


def gauge_transform(
    psi: np.ndarray,
    A: np.ndarray,
    chi: Union[float, np.ndarray],
    p: PhysicalParams,
    D=None,
):
    """Gauge pair (psi', A') for U = exp(-i chi), chi hermitian.

    chi may be a scalar, a scalar field over the grid, a constant 4x4
    hermitian matrix, or a matrix field (grid axes leading).  A' follows
    U^dag A^nu U - i (hbar c / e) U^dag d^nu U with d^nu computed by the
    supplied derivative provider (static chi: the time component is zero).
    For matrix-valued chi, A' is returned as a field of 4x4 matrices.
    """
    psi = np.asarray(psi, dtype=complex)
    A = np.asarray(A, dtype=float)
    chi_arr = np.asarray(chi)

    scalar = chi_arr.ndim < 2 or chi_arr.shape[-2:] != (4, 4)

    if scalar:
        if np.max(np.abs(np.imag(chi_arr))) > 1e-12:
            raise NonUnitaryError("scalar gauge generator must be real")
        U = np.exp(-1j * chi_arr.real)
        psi_out = (U[..., None] if chi_arr.ndim else U) * psi
        if chi_arr.ndim == 0 or D is None:
            return psi_out, A.copy()
        A_out = A.copy()
        for nu in range(4):
            if nu == 0:
                continue  # static gauge function
            axis = nu - 1
            if axis < D.dims:
                # d^i = -d_i for spatial upper indices
                A_out[..., nu] -= (p.hbar * p.c / p.e) * (-D.partial(chi_arr, axis))
        return psi_out, A_out

    defect = hermiticity_defect(chi_arr.astype(complex))
    if defect > 1e-12:
        raise NonUnitaryError(f"gauge generator not hermitian: defect {defect:.3e}")
    U = herm_exp(chi_arr.astype(complex), -1.0)
    psi_out = np.einsum("...ab,...b->...a", U, psi)
    Udag = U.conj().swapaxes(-1, -2)
    eye = np.eye(4, dtype=complex)
    A_out = np.einsum("...n,ab->...nab", A, eye)  # U^dag A^nu U = A^nu I
    if D is not None and chi_arr.ndim > 2:
        for nu in range(1, 4):
            axis = nu - 1
            if axis < D.dims:
                dU = -np.stack(
                    [
                        D.partial(U[..., a, b], axis)
                        for a in range(4)
                        for b in range(4)
                    ],
                    axis=-1,
                ).reshape(U.shape)
                A_out[..., nu, :, :] += (
                    -1j * (p.hbar * p.c / p.e) * np.einsum("...ab,...bc->...ac", Udag, dU)
                )
    return psi_out, A_out


@dataclass(frozen=True)
class TorsionResidual:
    residual: float  # max_{mn} | hbar <S^{mn}> + m c ell <J^{mn}> |
    normalization_dev: float  # | <J^{mn}><J_{mn}> - 1 |


def torsion_quantization_residual(
    psi: np.ndarray, grad_psi: np.ndarray, p: PhysicalParams
) -> TorsionResidual:
    """How well a state satisfies hbar<S^{mn}> = -m c ell <J^{mn}>.

    grad_psi holds the lower-index 4-gradient samples d_nu psi with shape
    (..., 4, 4) = (..., nu, spinor); the position-representation generator
    J^{mn} = i ell (gamma^m d^n - gamma^n d^m) raises indices with eta.
    """
    psi = np.asarray(psi)
    grad_psi = np.asarray(grad_psi)
    norm = bilinear(psi, np.eye(4, dtype=complex))
    scale = np.einsum("...a,...a->...", psi.conj(), psi).real
    if np.any(np.abs(norm) <= NULL_NORM_RTOL * scale):
        bad = norm if norm.ndim == 0 else norm[np.abs(norm) <= NULL_NORM_RTOL * scale][0]
        raise NullNormError(complex(bad))

    grad_up = np.einsum("nk,...ka->...na", ETA, grad_psi)  # d^nu psi
    gbar = np.einsum("...a,ab->...b", psi.conj(), GAMMA[0])
    gamma_d = np.einsum("...b,mbc,...nc->...mn", gbar, GAMMA, grad_up)
    j_bilin = 1j * p.ell * (gamma_d - gamma_d.swapaxes(-1, -2))
    j_exp = j_bilin / norm[..., None, None]

    s_exp = np.stack(
        [
            np.stack([bilinear(psi, SPIN[m, n]) / norm for n in range(4)], axis=-1)
            for m in range(4)
        ],
        axis=-2,
    )
    worst = float(np.max(np.abs(p.hbar * s_exp + p.m * p.c * p.ell * j_exp)))
    j_low = np.einsum("mk,nl,...kl->...mn", ETA, ETA, j_exp)
    norm_dev = float(np.max(np.abs(np.einsum("...mn,...mn->...", j_exp, j_low) - 1.0)))
    return TorsionResidual(residual=worst, normalization_dev=norm_dev)
