"""
Time integration of the vorticity-current system and of everything
transported with it: Lagrangian markers (the flow map), frozen-in
scalars such as the stream function of the magnetic field, push-forward
vector fields, and level-set cut-offs.

One classical RK4 step advances the state together with all passengers,
every passenger consuming the same stage velocities as the fields, so
the coupled system is integrated at full fourth order.  Two schemes are
available and agree to rounding: the primitive form marches (omega, j)
directly; the characteristic form marches the combinations omega +/- j,
advected by v -/+ b with source +/- the quadratic source term.

Marker velocities are sampled spectrally (exact for the band-limited
fields) up to 4096 markers, bilinearly beyond that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .spectral import Grid, ScalarField, VectorField, bilinear_sample
from .fields import MHDState, SpectralWorkspace, tendency_hats

__all__ = [
    "SolverConfig",
    "FlowMap",
    "TransportedScalar",
    "Passengers",
    "CFLViolation",
    "NaNAbort",
    "step",
    "step_elsasser",
    "advect_markers",
    "transport_scalar",
    "pushforward",
    "build_cutoff",
    "evolve",
    "StepInfo",
]

SPECTRAL_MARKER_LIMIT = 4096
FILTER_ORDER = 36


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters.

    Exactly one of dt (fixed step) or cfl (Courant number, speed
    max|v|+|b| recomputed each step) drives the step size.  filter is
    the strength of the optional high-shell exponential filter
    exp(-filter * (|m| / (n/2))^36), applied once per step; 0 disables it.
    """

    t_end: float = 1.0
    dt: float | None = None
    cfl: float | None = 0.5
    scheme: str = "primitive"
    filter: float = 0.0

    def __post_init__(self):
        if self.scheme not in ("primitive", "elsasser"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.dt is None and self.cfl is None:
            raise ValueError("one of dt or cfl is required")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.cfl is not None and not 0 < self.cfl <= 0.8:
            raise ValueError("cfl must be in (0, 0.8]")
        if self.filter < 0:
            raise ValueError("filter strength must be >= 0")


class CFLViolation(RuntimeError):
    pass


class NaNAbort(RuntimeError):
    def __init__(self, step_index: int):
        super().__init__(f"non-finite state after step {step_index}")
        self.step_index = step_index


@dataclass(frozen=True)
class FlowMap:
    """Marker positions carried by the flow, with their start positions."""

    initial: np.ndarray
    positions: np.ndarray

    @classmethod
    def from_points(cls, points: np.ndarray) -> "FlowMap":
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64)).copy()
        return cls(initial=pts, positions=pts.copy())


@dataclass(frozen=True)
class TransportedScalar:
    field: ScalarField
    label: str = "hamiltonian"


@dataclass(frozen=True)
class Passengers:
    """Extra unknowns advanced inside the same RK4 stages as the state."""

    scalars: dict = field(default_factory=dict)  # name -> TransportedScalar
    vectors: dict = field(default_factory=dict)  # name -> VectorField
    markers: dict = field(default_factory=dict)  # name -> FlowMap

    def is_empty(self) -> bool:
        return not (self.scalars or self.vectors or self.markers)


# --- stage tendencies ----------------------------------------------------------


def _state_tendency(ws: SpectralWorkspace, scheme: str) -> tuple[np.ndarray, np.ndarray]:
    if scheme == "primitive":
        return tendency_hats(ws)
    # characteristic combinations: d(w+j) = -div((v-b)(w+j)) + src,
    #                              d(w-j) = -div((v+b)(w-j)) - src
    phi = ws.w + ws.j
    psi = ws.w - ws.j
    src = 2.0 * ws.div_hat(
        ws.vy * ws.d1bx - ws.vx * ws.d2bx,
        ws.vy * ws.d1by - ws.vx * ws.d2by,
    )
    dphi = -ws.div_hat((ws.vx - ws.bx) * phi, (ws.vy - ws.by) * phi) + src
    dpsi = -ws.div_hat((ws.vx + ws.bx) * psi, (ws.vy + ws.by) * psi) - src
    return 0.5 * (dphi + dpsi), 0.5 * (dphi - dpsi)


def _scalar_tendency(ws: SpectralWorkspace, s_hat: np.ndarray) -> np.ndarray:
    s = np.fft.ifft2(s_hat * ws.grid.dealias_mask).real
    out = -ws.div_hat(ws.vx * s, ws.vy * s)
    # conservative advection moves no mean; keep the stored mean frozen
    out[0, 0] = 0.0
    return out


def _vector_tendency(ws: SpectralWorkspace, xh: np.ndarray, yh: np.ndarray):
    """Push-forward transport dX/dt = -div(v X) + X.grad v, spectral products."""
    g = ws.grid
    mask = g.dealias_mask
    xv = np.fft.ifft2(xh * mask).real
    yv = np.fft.ifft2(yh * mask).real
    d1vx, d2vx, d1vy, d2vy = ws.grad_v()
    stretch_x = xv * d1vx + yv * d2vx
    stretch_y = xv * d1vy + yv * d2vy
    dx_hat = -ws.div_hat(ws.vx * xv, ws.vy * xv) + np.fft.fft2(stretch_x) * mask
    dy_hat = -ws.div_hat(ws.vx * yv, ws.vy * yv) + np.fft.fft2(stretch_y) * mask
    return dx_hat, dy_hat


def _sample_velocity(ws: SpectralWorkspace, pts: np.ndarray) -> np.ndarray:
    """Stage velocity at marker positions, (m, 2)."""
    g = ws.grid
    if len(pts) <= SPECTRAL_MARKER_LIMIT:
        m1 = np.fft.fftfreq(g.n, d=1.0 / g.n)
        scale = 2.0 * np.pi / g.length
        ex = np.exp(1j * scale * np.outer(pts[:, 0], m1))
        ey = np.exp(1j * scale * np.outer(pts[:, 1], m1))
        psi_w = -ws.w_hat * g.inv_k2 / g.n**2
        vx_hat = -1j * g.ky * psi_w
        vy_hat = 1j * g.kx * psi_w
        vx = np.einsum("pa,ab,pb->p", ex, vx_hat, ey).real
        vy = np.einsum("pa,ab,pb->p", ex, vy_hat, ey).real
        return np.column_stack([vx, vy])
    f_vx = ScalarField(g, ws.vx)
    f_vy = ScalarField(g, ws.vy)
    return np.column_stack([bilinear_sample(f_vx, pts), bilinear_sample(f_vy, pts)])


# --- one coupled RK4 step --------------------------------------------------------


class _SystemVector:
    """Flat container of everything RK4 marches: hats plus marker coordinates."""

    def __init__(self, w_hat, j_hat, scalar_hats, vector_hats, marker_pos):
        self.w_hat = w_hat
        self.j_hat = j_hat
        self.scalar_hats = scalar_hats  # dict name -> hat
        self.vector_hats = vector_hats  # dict name -> (hat_x, hat_y)
        self.marker_pos = marker_pos  # dict name -> (m, 2)

    def combined(self, others_and_weights, dt):
        def mix(get):
            acc = get(self).copy()
            for other, wgt in others_and_weights:
                acc = acc + dt * wgt * get(other)
            return acc

        return _SystemVector(
            mix(lambda s: s.w_hat),
            mix(lambda s: s.j_hat),
            {k: mix(lambda s, k=k: s.scalar_hats[k]) for k in self.scalar_hats},
            {
                k: (
                    mix(lambda s, k=k: s.vector_hats[k][0]),
                    mix(lambda s, k=k: s.vector_hats[k][1]),
                )
                for k in self.vector_hats
            },
            {k: mix(lambda s, k=k: s.marker_pos[k]) for k in self.marker_pos},
        )


def _system_tendency(sys_vec: _SystemVector, grid: Grid, scheme: str) -> _SystemVector:
    ws = SpectralWorkspace(grid, sys_vec.w_hat, sys_vec.j_hat)
    dw, dj = _state_tendency(ws, scheme)
    dscalars = {k: _scalar_tendency(ws, h) for k, h in sys_vec.scalar_hats.items()}
    dvectors = {k: _vector_tendency(ws, hx, hy) for k, (hx, hy) in sys_vec.vector_hats.items()}
    dmarkers = {k: _sample_velocity(ws, pos) for k, pos in sys_vec.marker_pos.items()}
    return _SystemVector(dw, dj, dscalars, dvectors, dmarkers)


def _rk4(sys_vec: _SystemVector, grid: Grid, dt: float, scheme: str) -> _SystemVector:
    k1 = _system_tendency(sys_vec, grid, scheme)
    k2 = _system_tendency(sys_vec.combined([(k1, 0.5)], dt), grid, scheme)
    k3 = _system_tendency(sys_vec.combined([(k2, 0.5)], dt), grid, scheme)
    k4 = _system_tendency(sys_vec.combined([(k3, 1.0)], dt), grid, scheme)
    return sys_vec.combined(
        [(k1, 1.0 / 6.0), (k2, 2.0 / 6.0), (k3, 2.0 / 6.0), (k4, 1.0 / 6.0)], dt
    )


def _pack(state: MHDState, passengers: Passengers) -> _SystemVector:
    return _SystemVector(
        np.fft.fft2(state.omega.values),
        np.fft.fft2(state.j.values),
        {k: np.fft.fft2(ts.field.values) for k, ts in passengers.scalars.items()},
        {
            k: (np.fft.fft2(v.x.values), np.fft.fft2(v.y.values))
            for k, v in passengers.vectors.items()
        },
        {k: fm.positions.copy() for k, fm in passengers.markers.items()},
    )


def _unpack(sys_vec: _SystemVector, grid: Grid, passengers: Passengers, time: float):
    state = MHDState(
        ScalarField(grid, np.fft.ifft2(sys_vec.w_hat).real),
        ScalarField(grid, np.fft.ifft2(sys_vec.j_hat).real),
        time=time,
    )
    scalars = {
        k: TransportedScalar(
            ScalarField(grid, np.fft.ifft2(h).real), passengers.scalars[k].label
        )
        for k, h in sys_vec.scalar_hats.items()
    }
    vectors = {
        k: VectorField(
            ScalarField(grid, np.fft.ifft2(hx).real),
            ScalarField(grid, np.fft.ifft2(hy).real),
            divergence_free=passengers.vectors[k].divergence_free,
        )
        for k, (hx, hy) in sys_vec.vector_hats.items()
    }
    markers = {
        k: FlowMap(passengers.markers[k].initial, pos % grid.length)
        for k, pos in sys_vec.marker_pos.items()
    }
    return state, Passengers(scalars=scalars, vectors=vectors, markers=markers)


def _filter_multiplier(grid: Grid, strength: float) -> np.ndarray:
    rel = grid.mode_mag / (grid.n / 2.0)
    return np.exp(-strength * rel**FILTER_ORDER)


def step_system(
    state: MHDState, passengers: Passengers, dt: float, cfg: SolverConfig
) -> tuple[MHDState, Passengers]:
    """One RK4 step of the state and all passengers with shared stage velocities."""
    sys_vec = _pack(state, passengers)
    out = _rk4(sys_vec, state.grid, dt, cfg.scheme)
    if cfg.filter > 0.0:
        filt = _filter_multiplier(state.grid, cfg.filter)
        out.w_hat *= filt
        out.j_hat *= filt
    return _unpack(out, state.grid, passengers, state.time + dt)


def step(state: MHDState, cfg: SolverConfig, dt: float | None = None) -> MHDState:
    """One RK4 step of the primitive scheme; dt from cfg when not given."""
    dt = _resolve_dt(state, cfg, math.inf) if dt is None else dt
    new, _ = step_system(state, Passengers(), dt, replace(cfg, scheme="primitive"))
    return new


def step_elsasser(state: MHDState, cfg: SolverConfig, dt: float | None = None) -> MHDState:
    """One RK4 step of the characteristic (omega +/- j) scheme."""
    dt = _resolve_dt(state, cfg, math.inf) if dt is None else dt
    new, _ = step_system(state, Passengers(), dt, replace(cfg, scheme="elsasser"))
    return new


# --- standalone transport operators (frozen velocity) ---------------------------


def advect_markers(flow_map: FlowMap, velocity: VectorField, dt: float) -> FlowMap:
    """RK4 marker update in a velocity field frozen over the step."""
    g = velocity.grid
    spectral = len(flow_map.positions) <= SPECTRAL_MARKER_LIMIT

    if spectral:
        from .spectral import fourier_sample

        def vel(pts):
            return np.column_stack(
                [fourier_sample(velocity.x, pts), fourier_sample(velocity.y, pts)]
            )

    else:

        def vel(pts):
            return np.column_stack(
                [bilinear_sample(velocity.x, pts), bilinear_sample(velocity.y, pts)]
            )

    p = flow_map.positions
    k1 = vel(p)
    k2 = vel(p + 0.5 * dt * k1)
    k3 = vel(p + 0.5 * dt * k2)
    k4 = vel(p + dt * k3)
    new = p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return FlowMap(flow_map.initial, new % g.length)


def transport_scalar(ts: TransportedScalar, velocity: VectorField, dt: float) -> TransportedScalar:
    """RK4 conservative spectral advection in a velocity frozen over the step."""
    g = velocity.grid
    mask = g.dealias_mask
    vx = np.fft.ifft2(np.fft.fft2(velocity.x.values) * mask).real
    vy = np.fft.ifft2(np.fft.fft2(velocity.y.values) * mask).real

    def tend(s_hat):
        s = np.fft.ifft2(s_hat * mask).real
        out = -(1j * g.kx * np.fft.fft2(vx * s) + 1j * g.ky * np.fft.fft2(vy * s)) * mask
        out[0, 0] = 0.0
        return out

    s0 = np.fft.fft2(ts.field.values)
    k1 = tend(s0)
    k2 = tend(s0 + 0.5 * dt * k1)
    k3 = tend(s0 + 0.5 * dt * k2)
    k4 = tend(s0 + dt * k3)
    s1 = s0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return TransportedScalar(ScalarField(g, np.fft.ifft2(s1).real), ts.label)


# --- driver ---------------------------------------------------------------------


@dataclass(frozen=True)
class StepInfo:
    index: int
    time: float
    dt: float
    max_speed: float
    state: MHDState
    passengers: Passengers


def _resolve_dt(state: MHDState, cfg: SolverConfig, remaining: float) -> float:
    ws = SpectralWorkspace(
        state.grid, np.fft.fft2(state.omega.values), np.fft.fft2(state.j.values)
    )
    speed = ws.max_speed()
    if cfg.dt is not None:
        dt = min(cfg.dt, remaining)
        if speed > 0 and dt * speed / state.grid.spacing > 1.0:
            raise CFLViolation(
                f"dt={dt:g} gives Courant number {dt * speed / state.grid.spacing:.2f} > 1"
            )
        return dt
    if speed == 0.0:
        return remaining
    return min(cfg.cfl * state.grid.spacing / speed, remaining)


def evolve(
    state: MHDState,
    cfg: SolverConfig,
    passengers: Passengers | None = None,
    on_step=None,
) -> tuple[MHDState, Passengers]:
    """March to cfg.t_end, invoking on_step(StepInfo) after every step.

    Raises NaNAbort (carrying the step index) as soon as the state goes
    non-finite.
    """
    passengers = passengers or Passengers()
    t0 = state.time
    index = 0
    while state.time < t0 + cfg.t_end - 1e-14:
        remaining = t0 + cfg.t_end - state.time
        dt = _resolve_dt(state, cfg, remaining)
        state, passengers = step_system(state, passengers, dt, cfg)
        index += 1
        if not (
            np.all(np.isfinite(state.omega.values)) and np.all(np.isfinite(state.j.values))
        ):
            raise NaNAbort(index)
        if on_step is not None:
            ws = SpectralWorkspace(
                state.grid, np.fft.fft2(state.omega.values), np.fft.fft2(state.j.values)
            )
            on_step(
                StepInfo(
                    index=index,
                    time=state.time,
                    dt=dt,
                    max_speed=ws.max_speed(),
                    state=state,
                    passengers=passengers,
                )
            )
    return state, passengers


def pushforward(
    phi0: ScalarField, state: MHDState, cfg: SolverConfig
) -> tuple[VectorField, VectorField]:
    """Transport X0 = perp_grad(phi0) to t_end along the run, two ways.

    (a) direct integration of the push-forward equation
        dt X + v.grad X = X.grad v;
    (b) perp_grad of the transported stream function phi(t).
    Both are returned for cross-validation; they coincide in the
    continuum because the push-forward of a Hamiltonian field stays
    Hamiltonian with transported Hamiltonian.
    """
    from .spectral import perp_grad

    x0 = perp_grad(phi0)
    passengers = Passengers(
        scalars={"phi": TransportedScalar(phi0, "hamiltonian")},
        vectors={"X": x0},
    )
    _, out = evolve(state, cfg, passengers)
    direct = out.vectors["X"]
    from_stream = perp_grad(out.scalars["phi"].field)
    return direct, from_stream


# --- level-set cut-off ------------------------------------------------------------


def _dist_to_intervals(theta: np.ndarray, intervals) -> np.ndarray:
    d = np.full(theta.shape, np.inf)
    for lo, hi in intervals:
        d = np.minimum(d, np.maximum(np.maximum(lo - theta, theta - hi), 0.0))
    return d


def _as_intervals(spec) -> list[tuple[float, float]]:
    out = []
    for item in spec:
        if np.isscalar(item):
            out.append((float(item), float(item)))
        else:
            lo, hi = item
            if hi < lo:
                raise ValueError("interval with hi < lo")
            out.append((float(lo), float(hi)))
    return out


def build_cutoff(phi: ScalarField, a_set, b_set) -> ScalarField:
    """chi = H(phi) with H(theta) = dist(theta, A) / (dist(theta, A) + dist(theta, B)).

    A and B are disjoint closed unions of intervals (scalars allowed as
    point intervals) of stream-function values; chi is 0 where phi lies
    in A, 1 where phi lies in B, and in [0, 1] everywhere.  Because chi
    is an exact pointwise function of phi, it is transported whenever
    phi is.
    """
    a_int = _as_intervals(a_set)
    b_int = _as_intervals(b_set)
    for lo_a, hi_a in a_int:
        for lo_b, hi_b in b_int:
            if max(lo_a, lo_b) <= min(hi_a, hi_b):
                raise ValueError("A and B must be disjoint")
    da = _dist_to_intervals(phi.values, a_int)
    db = _dist_to_intervals(phi.values, b_int)
    return ScalarField(phi.grid, da / (da + db))
