"""Discrete derivatives on periodic grids.

Fields live on uniform periodic grids with the grid axes leading and any
component axes trailing, e.g. shape (nx, ny, 4).  Spatial derivatives are
spectral by default (machine precision on smooth band-limited fields); a
2nd-order central stencil is available as a fallback.  Time derivatives
come from explicitly stored time levels.
"""

import numpy as np


class SpectralDerivatives:
    """Fourier differentiation along the first `dims` axes."""

    order = np.inf

    def __init__(self, shape, ell: float):
        self.shape = tuple(shape)
        self.dims = len(self.shape)
        self.ell = float(ell)
        self._ik = []
        for axis, n in enumerate(self.shape):
            k = 2.0 * np.pi * np.fft.fftfreq(n, d=self.ell)
            # odd-sized trailing component axes broadcast over this
            kshape = [1] * self.dims
            kshape[axis] = n
            self._ik.append(1j * k.reshape(kshape))

    def _bcast(self, arr, axis):
        ik = self._ik[axis]
        extra = arr.ndim - self.dims
        if extra:
            ik = ik.reshape(ik.shape + (1,) * extra)
        return ik

    def partial(self, field: np.ndarray, axis: int) -> np.ndarray:
        """d(field)/dx_axis."""
        f = np.fft.fft(field, axis=axis)
        f *= self._bcast(f, axis)
        out = np.fft.ifft(f, axis=axis)
        if not np.iscomplexobj(field):
            return out.real
        return out

    def laplacian(self, field: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(field, dtype=complex))
        for axis in range(self.dims):
            f = np.fft.fft(field, axis=axis)
            f *= self._bcast(f, axis) ** 2
            out += np.fft.ifft(f, axis=axis)
        if not np.iscomplexobj(field):
            return out.real
        return out


class CentralDerivatives:
    """2nd-order central differences; fallback for non-smooth data."""

    order = 2

    def __init__(self, shape, ell: float):
        self.shape = tuple(shape)
        self.dims = len(self.shape)
        self.ell = float(ell)

    def partial(self, field: np.ndarray, axis: int) -> np.ndarray:
        return (np.roll(field, -1, axis=axis) - np.roll(field, 1, axis=axis)) / (
            2.0 * self.ell
        )

    def laplacian(self, field: np.ndarray) -> np.ndarray:
        out = np.zeros_like(field, dtype=complex if np.iscomplexobj(field) else float)
        for axis in range(self.dims):
            out += (
                np.roll(field, -1, axis=axis)
                - 2.0 * field
                + np.roll(field, 1, axis=axis)
            ) / self.ell**2
        return out


def grad(D, scalar: np.ndarray) -> list[np.ndarray]:
    """Spatial gradient as a list over active axes."""
    return [D.partial(scalar, ax) for ax in range(D.dims)]


def div(D, vec3) -> np.ndarray:
    """Divergence of a 3-component field; inactive axes contribute zero."""
    out = np.zeros_like(np.asarray(vec3[0]))
    for ax in range(min(D.dims, 3)):
        out = out + D.partial(vec3[ax], ax)
    return out


def curl(D, vec3):
    """Right-handed curl of a 3-component field on a grid with <= 3 axes.

    Components along axes beyond D.dims are treated as functions of the
    active coordinates only (their derivatives along inactive axes vanish).
    """

    def d(f, ax):
        if ax < D.dims:
            return D.partial(f, ax)
        return np.zeros_like(np.asarray(f))

    return [
        d(vec3[2], 1) - d(vec3[1], 2),
        d(vec3[0], 2) - d(vec3[2], 0),
        d(vec3[1], 0) - d(vec3[0], 1),
    ]


def backward_dt(now: np.ndarray, prev: np.ndarray, tau: float) -> np.ndarray:
    """First-order time derivative from a stored (t, t - tau) pair."""
    return (now - prev) / tau


def centered_dt(nxt: np.ndarray, prev: np.ndarray, tau: float) -> np.ndarray:
    """Second-order time derivative from (t + tau, t - tau)."""
    return (nxt - prev) / (2.0 * tau)


def second_dt(nxt: np.ndarray, now: np.ndarray, prev: np.ndarray, tau: float) -> np.ndarray:
    """Second time derivative from three stored levels."""
    return (nxt - 2.0 * now + prev) / tau**2
