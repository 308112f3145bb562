"""Initial-condition generation for the multiplet field."""

import numpy as np

from .config import InitSpec, RunConfig
from .derivatives import SpectralDerivatives
from .engine import DOUBLET, PSI, LatticeState, zero_state
from .errors import NullNormError
from .interaction import london_potential
from .spinor import field_4vector, to_spinor

BLOCK_SLICES = (slice(0, 4), slice(4, 8), slice(8, 12), slice(12, 16))


def _grid_coords(cfg):
    axes = [np.arange(n) * cfg.ell for n in cfg.extents]
    return np.meshgrid(*axes, indexing="ij")


def _plane_phase(cfg, k):
    coords = _grid_coords(cfg)
    phase = np.zeros(coords[0].shape)
    for d in range(cfg.dims):
        phase = phase + k[d] * coords[d]
    return np.exp(1j * phase)


def _center(cfg, spec):
    if spec.center is not None:
        return np.asarray(spec.center[: cfg.dims], dtype=float)
    return np.array([n * cfg.ell / 2.0 for n in cfg.extents])


def make_initial(spec: InitSpec, run: RunConfig) -> LatticeState:
    """Deterministic initial state from the init spec.

    Block weights address (calA, tilde-calA, psi, tilde-psi); for
    london_equilibrium they are instead the four spinor components of psi,
    from which the potential and its spinor images are derived (psi is
    normalized before the derivation so the London relation stays exact).
    """
    cfg = run.lattice
    state = zero_state(cfg)

    if spec.kind == "file":
        from .snapio import read_snapshot

        return read_snapshot(spec.file, cfg)

    if spec.kind == "london_equilibrium":
        _fill_london(state, spec, run)
        return state

    if spec.kind == "plane_wave":
        wave = _plane_phase(cfg, spec.k)
        for b, sl in enumerate(BLOCK_SLICES):
            state.psi16[..., sl] = spec.weights[b] * wave[..., None]
    elif spec.kind == "gaussian":
        coords = _grid_coords(cfg)
        center = _center(cfg, spec)
        r2 = sum((coords[d] - center[d]) ** 2 for d in range(cfg.dims))
        envelope = np.exp(-0.5 * r2 / spec.width**2) * _plane_phase(cfg, spec.k)
        for b, sl in enumerate(BLOCK_SLICES):
            state.psi16[..., sl] = spec.weights[b] * envelope[..., None]
    elif spec.kind == "delta":
        center = _center(cfg, spec)
        site = tuple(int(round(c / cfg.ell)) % n for c, n in zip(center, cfg.extents))
        for b, sl in enumerate(BLOCK_SLICES):
            state.psi16[site + (sl,)] = spec.weights[b]
    else:
        raise ValueError(f"unknown init kind {spec.kind!r}")

    if run.lattice.coupling_mode != "free":
        state.A[:] = run.A_uniform

    if spec.normalize:
        n = state.norm()
        if n == 0.0:
            raise ValueError("cannot normalize an identically zero state")
        state.psi16 /= n
    return state


def _fill_london(state: LatticeState, spec: InitSpec, run: RunConfig) -> None:
    cfg = run.lattice
    p = cfg.params
    wave = _plane_phase(cfg, spec.k)
    psi = np.asarray(spec.weights, dtype=complex) * wave[..., None]
    if spec.normalize:
        nrm = float(np.linalg.norm(psi))
        if nrm == 0.0:
            raise NullNormError(0.0)
        psi = psi / nrm

    from .algebra import bilinear

    nb = bilinear(psi, np.eye(4, dtype=complex))
    scale = np.einsum("...a,...a->...", psi.conj(), psi).real
    if np.max(np.abs(nb)) <= 1e-14 * max(float(np.max(scale)), 1e-300):
        raise NullNormError(complex(np.max(np.abs(nb))))

    A = london_potential(psi, p)
    D = SpectralDerivatives(cfg.extents, cfg.ell)
    # initial snapshot: no stored history, so the potential is taken static
    F = field_4vector(A, D, dA_dt=np.zeros_like(A))
    calA = to_spinor(A)
    tildeA = -1j * p.lambda_L * to_spinor(F)

    state.psi16[..., PSI] = psi
    state.psi16[..., DOUBLET][..., 0:4] = calA
    state.psi16[..., DOUBLET][..., 4:8] = tildeA
    state.A[:] = A.real
