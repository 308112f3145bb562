"""Stream-collide evolution of the 16-component multiplet on a periodic lattice.

One step advances Psi by dt = zeta ell / c:

  * a pointwise phase from the embedded scalar potential,
  * per active axis, an exact +-1 cell shift of the delta0.delta_i
    eigencomponents followed by a pointwise phase from the embedded vector
    potential,
  * a pointwise mass-mixing collide built from hermitized generators,

all exactly unitary (shifts are permutations of orthogonal projections;
phases and collides are eigen-exponentials of hermitian generators).  The
small-cell limit of the fermion block is the minimally coupled Dirac
equation and of the gauge doublet the massive doublet equation; the
verification module measures both.

Sign conventions are fixed by that continuum limit: a +1 eigencomponent of
delta0.delta_i moves one cell in the +i direction, the vector-potential
phase is exp(+i e A^i dt delta0 delta_i / hbar), the scalar-potential phase
is exp(-i e A^0 dt / hbar) on the fermion block, and the collide rotates by
exp(-i arcsin(m c^2 dt / hbar) delta0) per mass block.

Splitting:
  lie_xyz  - axes in fixed x,y,z order, whole-step collide at the end.
  strang   - per-step palindrome (half scalar phase and half collide on
             both ends, vector phases halved around each shift) with the
             axis order alternating x,y,z / z,y,x on even/odd steps;
             second-order accurate per step pair.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import ALPHA, CALG, DELTA
from .errors import MassTooLargeError, NonHermitianMassWarning
from .interaction import back_reaction, current, mass_matrix, outgoing_current
from .params import PhysicalParams

COUPLING_MODES = ("free", "external_A", "self_consistent")
SPLITTINGS = ("lie_xyz", "strang")

ML_HERM_TOL = 1e-10

# fermion-block slice of the multiplet and the doublet slice
PSI = slice(8, 12)
PSI_TILDE = slice(12, 16)
FERMIONS = slice(8, 16)
DOUBLET = slice(0, 8)

# diagonal of 1 x gamma0 on the fermion pair
_GAMMA0_DIAG8 = np.array([1.0, 1.0, -1.0, -1.0] * 2)

# exact (entries 0, +-1/2, +-i/2) chiral projectors per axis
_PROJ_PLUS = [(np.eye(16) + DELTA[0] @ DELTA[i]) / 2.0 for i in (1, 2, 3)]
_PROJ_MINUS = [(np.eye(16) - DELTA[0] @ DELTA[i]) / 2.0 for i in (1, 2, 3)]


@dataclass(frozen=True)
class LatticeConfig:
    dims: int
    extents: tuple
    params: PhysicalParams
    coupling_mode: str = "free"
    splitting: str = "strang"

    @property
    def ell(self) -> float:
        return self.params.ell

    @property
    def dt(self) -> float:
        return self.params.tau

    def validate(self) -> None:
        from .errors import ConfigError

        errors = []
        if not 1 <= self.dims <= 3:
            errors.append(f"dims must be 1..3, got {self.dims}")
        if len(self.extents) != self.dims:
            errors.append(f"need {self.dims} extents, got {self.extents}")
        if any(n < 2 for n in self.extents):
            errors.append(f"extent >= 2 required per active axis, got {self.extents}")
        if self.coupling_mode not in COUPLING_MODES:
            errors.append(f"coupling_mode must be one of {COUPLING_MODES}")
        if self.splitting not in SPLITTINGS:
            errors.append(f"splitting must be one of {SPLITTINGS}")
        if errors:
            raise ConfigError(errors)
        self.params.validate()


@dataclass
class LatticeState:
    """Multiplet and 4-potential samples; grid axes lead, components trail."""

    config: LatticeConfig
    psi16: np.ndarray  # (*extents, 16) complex
    A: np.ndarray  # (*extents, 4) real
    step_index: int = 0
    time: float = 0.0

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi16))

    def psi_block(self) -> np.ndarray:
        return self.psi16[..., PSI]

    def doublet_block(self) -> np.ndarray:
        return self.psi16[..., DOUBLET]

    def copy(self) -> "LatticeState":
        return LatticeState(
            config=self.config,
            psi16=self.psi16.copy(),
            A=self.A.copy(),
            step_index=self.step_index,
            time=self.time,
        )


def zero_state(config: LatticeConfig) -> LatticeState:
    shape = tuple(config.extents)
    return LatticeState(
        config=config,
        psi16=np.zeros(shape + (16,), dtype=complex),
        A=np.zeros(shape + (4,), dtype=float),
    )


def build_G(A_field: np.ndarray, e: float) -> np.ndarray:
    """Embed e A^mu on the fermion block: shape (..., 4, 16) diagonal values.

    The projector pair n x h singles out multiplet components 8..11; every
    other component receives zero potential (and hence zero phase).
    """
    A_field = np.asarray(A_field)
    out = np.zeros(A_field.shape[:-1] + (4, 16), dtype=float)
    out[..., :, PSI] = e * A_field[..., :, None]
    return out


def _apply_matrix(psi: np.ndarray, mat: np.ndarray) -> np.ndarray:
    return np.einsum("ab,...b->...a", mat, psi)


def stream_axis(
    state: LatticeState, axis: int, g_axis: Optional[np.ndarray] = None
) -> LatticeState:
    """Shift the +-1 eigencomponents of delta0.delta_i by +-1 cell, then phase.

    `g_axis` holds the pointwise values e A^i(x); the phase acts on the
    fermion block only, through the hermitian generator delta0 delta_i.
    """
    cfg = state.config
    if axis >= cfg.dims:
        raise ValueError(f"axis {axis} inactive for dims={cfg.dims}")
    psi = state.psi16
    plus = _apply_matrix(psi, _PROJ_PLUS[axis])
    minus = _apply_matrix(psi, _PROJ_MINUS[axis])
    out = np.roll(plus, 1, axis=axis) + np.roll(minus, -1, axis=axis)
    if g_axis is not None:
        out = _vector_phase(out, axis, g_axis, cfg.params, half=False)
    return replace_state(state, out)


def replace_state(state: LatticeState, psi16: np.ndarray, **kw) -> LatticeState:
    return LatticeState(
        config=state.config,
        psi16=psi16,
        A=kw.get("A", state.A),
        step_index=kw.get("step_index", state.step_index),
        time=kw.get("time", state.time),
    )


def _shift(psi: np.ndarray, axis: int) -> np.ndarray:
    plus = _apply_matrix(psi, _PROJ_PLUS[axis])
    minus = _apply_matrix(psi, _PROJ_MINUS[axis])
    return np.roll(plus, 1, axis=axis) + np.roll(minus, -1, axis=axis)


def _vector_phase(
    psi: np.ndarray, axis: int, g_axis: np.ndarray, p: PhysicalParams, half: bool
) -> np.ndarray:
    """exp(+i theta(x) delta0 delta_i) restricted to the fermion block.

    theta = e A^i dt / hbar (halved for the symmetric splitting); within the
    block the generator is alpha_i, which squares to one, so the rotation is
    cos + i sin alpha_i.
    """
    theta = np.asarray(g_axis) * (p.tau / p.hbar)
    if half:
        theta = theta / 2.0
    c = np.cos(theta)[..., None]
    s = np.sin(theta)[..., None]
    out = psi.copy()
    blk = psi[..., PSI]
    out[..., PSI] = c * blk + 1j * s * _apply_matrix(blk, ALPHA[axis])
    return out


def _scalar_phase(psi: np.ndarray, g0: np.ndarray, p: PhysicalParams, half: bool) -> np.ndarray:
    """exp(-i e A^0(x) dt / hbar) on the fermion block, identity elsewhere."""
    theta = np.asarray(g0) * (p.tau / p.hbar)
    if half:
        theta = theta / 2.0
    out = psi.copy()
    out[..., PSI] = psi[..., PSI] * np.exp(-1j * theta)[..., None]
    return out


def _fermion_collide(psi: np.ndarray, p: PhysicalParams, half: bool) -> np.ndarray:
    s = p.m * p.c**2 * p.tau / p.hbar
    if s > 1.0:
        raise MassTooLargeError(s)
    theta = np.arcsin(s)
    if half:
        theta = theta / 2.0
    out = psi.copy()
    out[..., FERMIONS] = psi[..., FERMIONS] * np.exp(-1j * theta * _GAMMA0_DIAG8)
    return out


def _doublet_collide_matrix(ml: np.ndarray, p: PhysicalParams, half: bool):
    """Unitary collide block exp(-i Theta) for the doublet, batched.

    Theta = sym(calG0, arcsin(K_h)) with K = M_L c^2 dt / hbar hermitized;
    for a scalar mass block this reduces exactly to
    sqrt(1 - s^2) - i s calG0.  Returns (matrices, antihermiticity defect).
    """
    k = ml * (p.c**2 * p.tau / p.hbar)
    kd = k.conj().swapaxes(-1, -2)
    defect = float(np.max(np.abs(ml - ml.conj().swapaxes(-1, -2))))
    kh = (k + kd) / 2.0
    w, v = np.linalg.eigh(kh)
    if np.max(np.abs(w)) > 1.0:
        site = None
        if w.ndim > 1:
            site = np.unravel_index(
                int(np.argmax(np.max(np.abs(w), axis=-1))), w.shape[:-1]
            )
        raise MassTooLargeError(float(np.max(np.abs(w))), site=site)
    asin_k = np.einsum("...ab,...b,...cb->...ac", v, np.arcsin(w), v.conj())
    g0 = CALG[0]
    theta = (np.einsum("ab,...bc->...ac", g0, asin_k) + np.einsum("...ab,bc->...ac", asin_k, g0)) / 2.0
    if half:
        theta = theta / 2.0
    w2, v2 = np.linalg.eigh(theta)
    mats = np.einsum("...ab,...b,...cb->...ac", v2, np.exp(-1j * w2), v2.conj())
    return mats, defect


def collide(state: LatticeState, ml_field: Optional[np.ndarray], half: bool = False):
    """Apply the pointwise collide; returns (state, doublet antihermiticity).

    `ml_field` is the doublet mass block: a single 8x8 matrix applied
    uniformly or a per-site (*extents, 8, 8) array.  None means the bare
    scalar doublet mass hbar / (lambda_L c).
    """
    p = state.config.params
    psi = _fermion_collide(state.psi16, p, half)
    if ml_field is None:
        ml_field = p.doublet_mass * np.eye(8, dtype=complex)
    mats, defect = _doublet_collide_matrix(ml_field, p, half)
    blk = psi[..., DOUBLET]
    if mats.ndim == 2:
        psi[..., DOUBLET] = _apply_matrix(blk, mats)
    else:
        psi[..., DOUBLET] = np.einsum("...ab,...b->...a", mats, blk)
    return replace_state(state, psi), defect


def _axis_order(cfg: LatticeConfig, parity: int):
    axes = list(range(cfg.dims))
    if cfg.splitting == "strang" and parity % 2 == 1:
        axes.reverse()
    return axes


def step(state: LatticeState) -> LatticeState:
    """One full update Psi(t + dt) = U Psi(t); exactly norm preserving.

    In self_consistent mode the potential is then updated pointwise by the
    exact back reaction and the doublet mass block is rebuilt from the new
    fermion field for the next step.
    """
    cfg = state.config
    p = cfg.params
    mode = cfg.coupling_mode
    psi = state.psi16.copy()

    if mode == "free":
        g0 = None
        gvec = None
    else:
        g0 = p.e * state.A[..., 0]
        gvec = [p.e * state.A[..., 1 + ax] for ax in range(cfg.dims)]

    if mode == "self_consistent":
        ml_field = mass_matrix(state.psi16[..., PSI], p).ML
    else:
        ml_field = None

    work = replace_state(state, psi)
    if cfg.splitting == "lie_xyz":
        if g0 is not None:
            work = replace_state(work, _scalar_phase(work.psi16, g0, p, half=False))
        for ax in range(cfg.dims):
            out = _shift(work.psi16, ax)
            if gvec is not None:
                out = _vector_phase(out, ax, gvec[ax], p, half=False)
            work = replace_state(work, out)
        work, defect = collide(work, ml_field, half=False)
    else:
        if g0 is not None:
            work = replace_state(work, _scalar_phase(work.psi16, g0, p, half=True))
        work, defect = collide(work, ml_field, half=True)
        for ax in _axis_order(cfg, state.step_index):
            out = work.psi16
            if gvec is not None:
                out = _vector_phase(out, ax, gvec[ax], p, half=True)
            out = _shift(out, ax)
            if gvec is not None:
                out = _vector_phase(out, ax, gvec[ax], p, half=True)
            work = replace_state(work, out)
        work, d2 = collide(work, ml_field, half=True)
        defect = max(defect, d2)
        if g0 is not None:
            work = replace_state(work, _scalar_phase(work.psi16, g0, p, half=True))

    if defect > ML_HERM_TOL and mode == "self_consistent":
        warnings.warn(
            f"doublet mass block antihermiticity {defect:.3e}; hermitian part used",
            NonHermitianMassWarning,
            stacklevel=2,
        )

    A_new = state.A
    if mode == "self_consistent":
        A_new = back_reaction(work.psi16[..., PSI], state.A, p)

    return LatticeState(
        config=cfg,
        psi16=work.psi16,
        A=A_new,
        step_index=state.step_index + 1,
        time=state.time + cfg.dt,
    )


@dataclass
class Diagnostics:
    """Per-step scalar time series plus collected snapshots."""

    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    norm_drifts: list = field(default_factory=list)
    continuity_residuals: list = field(default_factory=list)
    london_residuals: list = field(default_factory=list)
    equilibrium_residuals: list = field(default_factory=list)
    ml_antihermiticities: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (step, LatticeState)

    def record(self, state, norm0, cont, lond, equi, mlh):
        n = state.norm()
        self.steps.append(state.step_index)
        self.times.append(state.time)
        self.norms.append(n)
        self.norm_drifts.append(abs(n / norm0 - 1.0) if norm0 else 0.0)
        self.continuity_residuals.append(cont)
        self.london_residuals.append(lond)
        self.equilibrium_residuals.append(equi)
        self.ml_antihermiticities.append(mlh)


def _diag_values(state: LatticeState, D, prev_jp0):
    """Continuity, London and equilibrium residuals for one state."""
    p = state.config.params
    psi = state.psi16[..., PSI]
    jp = outgoing_current(psi, state.A, p)
    cont = float("nan")
    if prev_jp0 is not None:
        dt0 = (jp[..., 0] - prev_jp0) / state.config.dt
        div = np.zeros_like(dt0)
        for ax in range(state.config.dims):
            div = div + D.partial(jp[..., 1 + ax], ax)
        cont = float(np.max(np.abs(dt0 + div)))
    lond = float(np.max(np.abs(state.A + p.lambda_L**2 * p.e * current(psi))))
    equi = float(np.max(np.abs(back_reaction(psi, state.A, p) - state.A)))
    return cont, lond, equi, jp[..., 0]


def evolve(
    state: LatticeState,
    n_steps: int,
    snapshot_steps=None,
    diag_every: int = 1,
) -> tuple:
    """Run `n_steps` updates, recording diagnostics and snapshots.

    Deterministic: identical inputs give bit-identical outputs.  Snapshots
    are state copies taken after the listed step indices (0 = initial).
    """
    from .derivatives import SpectralDerivatives

    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    cfg = state.config
    D = SpectralDerivatives(cfg.extents, cfg.ell)
    snapshot_steps = set(snapshot_steps or ())
    diag = Diagnostics()
    norm0 = state.norm()
    prev_jp0 = None

    if state.step_index in snapshot_steps:
        diag.snapshots.append((state.step_index, state.copy()))

    current_state = state
    for _ in range(n_steps):
        p = cfg.params
        mlh = 0.0
        if cfg.coupling_mode == "self_consistent":
            ml = mass_matrix(current_state.psi16[..., PSI], p).ML
            mlh = float(np.max(np.abs(ml - ml.conj().swapaxes(-1, -2))))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonHermitianMassWarning)
            current_state = step(current_state)
        if diag_every and current_state.step_index % diag_every == 0:
            cont, lond, equi, jp0 = _diag_values(current_state, D, prev_jp0)
            prev_jp0 = jp0
            diag.record(current_state, norm0, cont, lond, equi, mlh)
        if current_state.step_index in snapshot_steps:
            diag.snapshots.append((current_state.step_index, current_state.copy()))
    return current_state, diag


def step_symbol(cfg: LatticeConfig, k, A_uniform=None) -> np.ndarray:
    """The one-step operator restricted to the plane-wave sector exp(i k.x).

    Mirrors step() exactly for spatially uniform potentials: a +1 cell shift
    multiplies the mode by exp(-i k_i ell).  Returns the 16x16 matrix for
    the even-parity axis order.
    """
    p = cfg.params
    k = np.atleast_1d(np.asarray(k, dtype=float))
    eye = np.eye(16, dtype=complex)

    def shift_mat(ax):
        ph = np.exp(-1j * k[ax] * p.ell)
        return _PROJ_PLUS[ax] * ph + _PROJ_MINUS[ax] * ph.conjugate()

    def vec_phase_mat(ax, half):
        if A_uniform is None:
            return eye
        theta = p.e * A_uniform[1 + ax] * p.tau / p.hbar
        if half:
            theta /= 2.0
        m = eye.copy()
        m[8:12, 8:12] = np.cos(theta) * np.eye(4) + 1j * np.sin(theta) * ALPHA[ax]
        return m

    def scalar_phase_mat(half):
        if A_uniform is None:
            return eye
        theta = p.e * A_uniform[0] * p.tau / p.hbar
        if half:
            theta /= 2.0
        m = eye.copy()
        m[8:12, 8:12] = np.exp(-1j * theta) * np.eye(4)
        return m

    def collide_mat(half):
        s = p.m * p.c**2 * p.tau / p.hbar
        if s > 1.0:
            raise MassTooLargeError(s)
        theta = np.arcsin(s) * (0.5 if half else 1.0)
        m = np.zeros((16, 16), dtype=complex)
        m[8:16, 8:16] = np.diag(np.exp(-1j * theta * _GAMMA0_DIAG8))
        mats, _ = _doublet_collide_matrix(
            p.doublet_mass * np.eye(8, dtype=complex), p, half
        )
        m[0:8, 0:8] = mats
        return m

    if cfg.splitting == "lie_xyz":
        u = scalar_phase_mat(half=False)
        for ax in range(cfg.dims):
            u = shift_mat(ax) @ u
            u = vec_phase_mat(ax, half=False) @ u
        u = collide_mat(half=False) @ u
        return u
    u = scalar_phase_mat(half=True)
    u = collide_mat(half=True) @ u
    for ax in range(cfg.dims):
        u = vec_phase_mat(ax, half=True) @ u
        u = shift_mat(ax) @ u
        u = vec_phase_mat(ax, half=True) @ u
    u = collide_mat(half=True) @ u
    u = scalar_phase_mat(half=True) @ u
    return u
