"""Spinor images of the 4-potential and the spinor-form field equations.

The unitary map T sends a 4-vector (v0, vx, vy, vz) to a 4-spinor.  Applied
to the potential A, the complex field 4-vector F, and the current J it gives
the spinor fields calA, tildeF, calJ; the dual potential is
tildeA = -i lambda_L tildeF.

The two first-order spinor field equations read, in tensor-product notation
with sigma^mu = (1, sigma) and sigmabar^mu = (1, -sigma),

    e calJ + (1 x sigma.d) tildeF = 0
    tildeF + (1 x sigmabar.d) calA = 0

and their massive (London) counterparts couple calA to tildeA with the mass
scale 1/lambda_L.  Residual routines evaluate these with a supplied
derivative provider; time derivatives come from stored level pairs or from
analytic input.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import derivatives as dv

INV_SQRT2 = 1.0 / np.sqrt(2.0)

# rows are spinor components, columns are 4-vector components
T_MATRIX = INV_SQRT2 * np.array(
    [
        [0.0, -1.0, 1.0j, 0.0],
        [1.0, 0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 1.0j, 0.0],
    ],
    dtype=complex,
)
T_DAGGER = T_MATRIX.conj().T


def to_spinor(v: np.ndarray) -> np.ndarray:
    """T.v for a 4-vector with the component axis last."""
    return np.einsum("ab,...b->...a", T_MATRIX, np.asarray(v, dtype=complex))


def from_spinor(s: np.ndarray) -> np.ndarray:
    """Inverse map T^dag.s; to_spinor round trips to 1e-15."""
    return np.einsum("ab,...b->...a", T_DAGGER, np.asarray(s, dtype=complex))


def _pderiv(D, f: np.ndarray, axis: int) -> np.ndarray:
    if axis < D.dims:
        return D.partial(f, axis)
    return np.zeros_like(np.asarray(f))


def field_4vector(
    A: np.ndarray,
    D,
    dA_dt: Optional[np.ndarray] = None,
    A_prev: Optional[np.ndarray] = None,
    tau: Optional[float] = None,
) -> np.ndarray:
    """Complex field 4-vector F = (-d.A, -d0 Avec - grad A0 + i curl Avec).

    The time derivative of A comes either from `dA_dt` (analytic input) or
    from a stored previous level `A_prev` with time step `tau`.
    """
    A = np.asarray(A)
    if dA_dt is None:
        if A_prev is None or tau is None:
            raise ValueError("missing time-derivative data: pass dA_dt or (A_prev, tau)")
        dA_dt = dv.backward_dt(A, A_prev, tau)
    dA_dt = np.asarray(dA_dt)

    div_avec = dv.div(D, [A[..., 1], A[..., 2], A[..., 3]])
    grad_a0 = [_pderiv(D, A[..., 0], ax) for ax in range(3)]
    curl_avec = dv.curl(D, [A[..., 1], A[..., 2], A[..., 3]])

    F = np.zeros(A.shape, dtype=complex)
    F[..., 0] = -(dA_dt[..., 0] + div_avec)
    for i in range(3):
        F[..., 1 + i] = -dA_dt[..., 1 + i] - grad_a0[i] + 1j * curl_avec[i]
    return F


@dataclass
class FieldBundle:
    """The 4-potential together with its derived spinor fields.

    Time derivatives of the derived fields are carried alongside so that
    residual evaluations stay pure; dF_dt (and hence d(tildeF)/dt) needs a
    second time derivative of A and may be absent.
    """

    A: np.ndarray
    dA_dt: np.ndarray
    F: np.ndarray
    calA: np.ndarray
    dcalA_dt: np.ndarray
    tildeF: np.ndarray
    tildeA: np.ndarray
    lambda_L: float
    dF_dt: Optional[np.ndarray] = None

    @property
    def dtildeF_dt(self) -> Optional[np.ndarray]:
        if self.dF_dt is None:
            return None
        return to_spinor(self.dF_dt)

    @property
    def dtildeA_dt(self) -> Optional[np.ndarray]:
        f = self.dtildeF_dt
        if f is None:
            return None
        return -1j * self.lambda_L * f


def build_bundle(
    A: np.ndarray,
    D,
    lambda_L: float,
    dA_dt: Optional[np.ndarray] = None,
    d2A_dt2: Optional[np.ndarray] = None,
    A_prev: Optional[np.ndarray] = None,
    A_next: Optional[np.ndarray] = None,
    tau: Optional[float] = None,
) -> FieldBundle:
    """Assemble a FieldBundle from analytic derivatives or stored levels.

    With three stored levels (A_prev, A, A_next) the first time derivative
    is centered and the second is available, enabling the sourced spinor
    residual; with only (A_prev, A) the derivative is one-sided and dF_dt
    is left unset.
    """
    A = np.asarray(A, dtype=float)
    if dA_dt is None:
        if A_prev is None or tau is None:
            raise ValueError("missing time-derivative data: pass dA_dt or (A_prev, tau)")
        if A_next is not None:
            dA_dt = dv.centered_dt(A_next, A_prev, tau)
            d2A_dt2 = dv.second_dt(A_next, A, A_prev, tau)
        else:
            dA_dt = dv.backward_dt(A, A_prev, tau)

    F = field_4vector(A, D, dA_dt=dA_dt)
    dF_dt = None
    if d2A_dt2 is not None:
        # dF/dt is F's formula applied to (dA/dt, d2A/dt2); the spatial
        # derivative operators commute with d/dt
        dF_dt = field_4vector(dA_dt, D, dA_dt=d2A_dt2)

    tildeF = to_spinor(F)
    return FieldBundle(
        A=A,
        dA_dt=np.asarray(dA_dt),
        F=F,
        calA=to_spinor(A),
        dcalA_dt=to_spinor(dA_dt),
        tildeF=tildeF,
        tildeA=-1j * lambda_L * tildeF,
        lambda_L=float(lambda_L),
        dF_dt=dF_dt,
    )


def sigma_dot_partial(s: np.ndarray, ds_dt: np.ndarray, D, bar: bool = False) -> np.ndarray:
    """(1 x sigma.d) s, or the sigmabar form, on a 4-spinor field.

    Acts blockwise on the (0,1) and (2,3) component pairs:
    sigma.d = d0 + sigma.grad, sigmabar.d = d0 - sigma.grad.
    """
    s = np.asarray(s, dtype=complex)
    sgn = -1.0 if bar else 1.0
    out = np.array(ds_dt, dtype=complex, copy=True)
    dx = lambda f: _pderiv(D, f, 0)
    dy = lambda f: _pderiv(D, f, 1)
    dz = lambda f: _pderiv(D, f, 2)
    for base in (0, 2):
        u1, u2 = s[..., base], s[..., base + 1]
        out[..., base] += sgn * (dz(u1) + dx(u2) - 1j * dy(u2))
        out[..., base + 1] += sgn * (dx(u1) + 1j * dy(u1) - dz(u2))
    return out


def maxwell_spinor_residual(bundle: FieldBundle, J: np.ndarray, e: float, D):
    """Grid max-norms of the two spinor-form field equations.

    r1 needs d(tildeF)/dt, i.e. a bundle built with second time-derivative
    information.
    """
    calJ = to_spinor(np.asarray(J))
    dtf = bundle.dtildeF_dt
    if dtf is None:
        raise ValueError("missing time-derivative data: bundle lacks dF_dt")
    r1_field = e * calJ + sigma_dot_partial(bundle.tildeF, dtf, D)
    r2_field = bundle.tildeF + sigma_dot_partial(bundle.calA, bundle.dcalA_dt, D, bar=True)
    return float(np.max(np.abs(r1_field))), float(np.max(np.abs(r2_field)))


def london_spinor_residual(bundle: FieldBundle, D):
    """Residuals of the massive pair coupling calA to tildeA."""
    lam = bundle.lambda_L
    dta = bundle.dtildeA_dt
    if dta is None:
        raise ValueError("missing time-derivative data: bundle lacks dF_dt")
    r1_field = -bundle.calA / lam + 1j * sigma_dot_partial(bundle.tildeA, dta, D)
    r2_field = -bundle.tildeA / lam + 1j * sigma_dot_partial(
        bundle.calA, bundle.dcalA_dt, D, bar=True
    )
    return float(np.max(np.abs(r1_field))), float(np.max(np.abs(r2_field)))


def maxwell_component_residual(bundle: FieldBundle, J: np.ndarray, e: float, D) -> np.ndarray:
    """Residual 4-vector of the component-form field equations.

    e J^nu - (div F, -d0 Fvec - i curl Fvec), using the complex 3-vector
    part of the bundle's F.  Gauge invariant: depends on A only through F.
    """
    if bundle.dF_dt is None:
        raise ValueError("missing time-derivative data: bundle lacks dF_dt")
    Fv = [bundle.F[..., 1], bundle.F[..., 2], bundle.F[..., 3]]
    dFv_dt = [bundle.dF_dt[..., 1], bundle.dF_dt[..., 2], bundle.dF_dt[..., 3]]
    c = dv.curl(D, Fv)
    out = np.zeros(bundle.F.shape, dtype=complex)
    out[..., 0] = e * J[..., 0] - dv.div(D, Fv)
    for i in range(3):
        out[..., 1 + i] = e * J[..., 1 + i] - (-dFv_dt[i] - 1j * c[i])
    return out
