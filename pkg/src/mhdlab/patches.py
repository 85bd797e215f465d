"""
Initial data for vortex-patch runs.

A patch vorticity is the characteristic function of a bounded domain,
mollified here over a width h with a quintic (C^2) ramp of the signed
distance.  The magnetic field is built tangential to the patch boundary
as the perpendicular gradient of a level-set Hamiltonian phi0 = Phi(f),
where f is a defining function with f = 1 exactly on the boundary and
nonvanishing gradient there, and Phi is a monotone flattening equal to
the identity near the boundary level and constant far below it (a
plateau cut-off in level-set coordinates).  The boundary is then the
lambda = 1 level line of phi0 and b0 = perp_grad(phi0) is tangential
along it.

Admissible data additionally satisfy the non-degeneracy condition

    |phi0(x) - lambda| < eta  ==>  |b0(x)| > delta

for some positive (eta, delta), certified here by a grid scan over a
ladder of eta values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .spectral import (
    Grid,
    ScalarField,
    VectorField,
    fourier_sample,
    laplacian,
    mean_project,
    perp_grad,
)
from .fields import MHDState

__all__ = [
    "ShapeSpec",
    "PatchData",
    "AdmissibilityError",
    "indicator",
    "level_set_hamiltonian",
    "check_equiv1",
    "Equiv1Report",
    "commuting_pair",
    "lie_bracket",
    "rankine",
    "concentric_state",
    "make_patch_data",
    "boundary_points",
    "smoothstep",
    "smoothstep7",
    "flatten_above",
]


def smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic ramp 6t^5 - 15t^4 + 10t^3 clipped to [0, 1] (C^2)."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep11(t: np.ndarray) -> np.ndarray:
    """Degree-11 ramp clipped to [0, 1], C^5 at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t**6 * (462.0 + t * (-1980.0 + t * (3465.0 + t * (-3080.0 + t * (1386.0 - 252.0 * t)))))


def _smoothstep11_integral(t: np.ndarray) -> np.ndarray:
    """Antiderivative of smoothstep11 with value 0 at t=0 (1/2 at t=1)."""
    t = np.clip(t, 0.0, 1.0)
    return t**7 * (66.0 + t * (-247.5 + t * (385.0 + t * (-308.0 + t * (126.0 - 21.0 * t)))))


def flatten_above(f: np.ndarray, a: float, b: float) -> np.ndarray:
    """Phi(f): identity for f >= b, constant b - (b-a)/2 for f <= a, C^6 blend.

    Phi' is the degree-11 ramp of (f-a)/(b-a), so Phi is monotone with
    Phi' = 1 on [b, inf) and Phi' = 0 on (-inf, a].
    """
    if not b > a:
        raise ValueError("flatten_above needs b > a")
    t = (np.asarray(f, dtype=np.float64) - a) / (b - a)
    mid = b - (b - a) * (0.5 - _smoothstep11_integral(t))
    return np.where(f >= b, f, np.where(f <= a, b - 0.5 * (b - a), mid))


@dataclass(frozen=True)
class ShapeSpec:
    """Disc, axis-aligned ellipse, or polar star r(theta) = r0(1 + sum eps_k cos k theta)."""

    kind: str
    center: tuple[float, float]
    radius: float = 0.0  # disc
    a: float = 0.0  # ellipse semi-axes
    b: float = 0.0
    r0: float = 0.0  # star base radius
    eps: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("disc", "ellipse", "polar-star"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.kind == "disc" and not self.radius > 0:
            raise ValueError("disc needs radius > 0")
        if self.kind == "ellipse" and not (self.a > 0 and self.b > 0):
            raise ValueError("ellipse needs positive semi-axes")
        if self.kind == "polar-star":
            if not self.r0 > 0:
                raise ValueError("star needs r0 > 0")
            if sum(abs(e) for e in self.eps.values()) >= 1.0:
                raise ValueError("star perturbation must keep r(theta) > 0")

    # -- geometry ---------------------------------------------------------

    def boundary_radius(self, theta: np.ndarray) -> np.ndarray:
        if self.kind == "disc":
            return np.full_like(theta, self.radius, dtype=float)
        if self.kind == "ellipse":
            return self.a * self.b / np.hypot(self.b * np.cos(theta), self.a * np.sin(theta))
        r = np.full_like(theta, 1.0, dtype=float)
        for k, e in self.eps.items():
            r = r + e * np.cos(k * theta)
        return self.r0 * r

    def max_extent(self) -> float:
        theta = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
        return float(self.boundary_radius(theta).max())

    def area(self) -> float:
        if self.kind == "disc":
            return math.pi * self.radius**2
        if self.kind == "ellipse":
            return math.pi * self.a * self.b
        # 1/2 integral r(theta)^2: cross terms of distinct cosines vanish
        return math.pi * self.r0**2 * (1.0 + 0.5 * sum(e * e for e in self.eps.values()))

    def inside(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        cx, cy = self.center
        dx, dy = x - cx, y - cy
        if self.kind == "disc":
            return dx * dx + dy * dy < self.radius**2
        if self.kind == "ellipse":
            return (dx / self.a) ** 2 + (dy / self.b) ** 2 < 1.0
        theta = np.arctan2(dy, dx)
        return np.hypot(dx, dy) < self.boundary_radius(theta)

    def defining_function(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Smooth f with f = 1 on the boundary, > 1 inside, grad f != 0 there.

        For the star the angular modulation is blended out near the
        center (where arctan2 is singular) to keep f twice continuously
        differentiable everywhere.
        """
        cx, cy = self.center
        dx, dy = x - cx, y - cy
        if self.kind == "disc":
            rho2 = (dx * dx + dy * dy) / self.radius**2
        elif self.kind == "ellipse":
            rho2 = (dx / self.a) ** 2 + (dy / self.b) ** 2
        else:
            theta = np.arctan2(dy, dx)
            r2 = dx * dx + dy * dy
            inv_b2 = self.boundary_radius(theta) ** -2
            theta_probe = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
            rho_blend = 0.6 * float(self.boundary_radius(theta_probe).min())
            blend = smoothstep11(np.sqrt(r2) / rho_blend)
            rho2 = r2 * (blend * inv_b2 + (1.0 - blend) / self.r0**2)
        return 2.0 - rho2


def boundary_points(shape: ShapeSpec, count: int) -> tuple[np.ndarray, np.ndarray]:
    """(points (count,2), outward unit normals (count,2)) along the boundary."""
    theta = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    r = shape.boundary_radius(theta)
    cx, cy = shape.center
    px = cx + r * np.cos(theta)
    py = cy + r * np.sin(theta)
    # tangent of (r(t) cos t, r(t) sin t), outward normal = (t_y, -t_x)
    if shape.kind == "disc":
        dr = np.zeros_like(theta)
    elif shape.kind == "ellipse":
        # use exact ellipse normal direction (x/a^2, y/b^2)
        nx = (px - cx) / shape.a**2
        ny = (py - cy) / shape.b**2
        norm = np.hypot(nx, ny)
        return np.column_stack([px, py]), np.column_stack([nx / norm, ny / norm])
    else:
        dr = np.zeros_like(theta)
        for k, e in shape.eps.items():
            dr -= shape.r0 * e * k * np.sin(k * theta)
    tx = dr * np.cos(theta) - r * np.sin(theta)
    ty = dr * np.sin(theta) + r * np.cos(theta)
    norm = np.hypot(tx, ty)
    return np.column_stack([px, py]), np.column_stack([ty / norm, -tx / norm])


def _signed_distance(shape: ShapeSpec, grid: Grid, samples: int = 4096) -> np.ndarray:
    """Signed distance to the boundary on the grid, positive inside."""
    pts, _ = boundary_points(shape, samples)
    tree = cKDTree(pts)
    x, y = grid.coords()
    q = np.column_stack([x.ravel(), y.ravel()])
    d, _ = tree.query(q, k=1)
    d = d.reshape(grid.n, grid.n)
    sign = np.where(shape.inside(x, y), 1.0, -1.0)
    return sign * d


def _check_fits(shape: ShapeSpec, grid: Grid, h: float) -> None:
    cx, cy = shape.center
    bc = grid.length / 2.0
    off = math.hypot(cx - bc, cy - bc)
    if off + shape.max_extent() + 4.0 * h > grid.length / 2.0:
        raise ValueError("shape (with mollification margin) does not fit inside the box")


def indicator(shape: ShapeSpec, h: float, grid: Grid) -> ScalarField:
    """Mollified characteristic function of the shape.

    1 at depth >= h inside, 0 at distance >= h outside, quintic C^2 ramp
    of the signed distance in between.  h must resolve the grid
    (h >= 2 * spacing).
    """
    if h < 2.0 * grid.spacing:
        raise ValueError(f"mollification width {h} below resolution 2*dx = {2*grid.spacing}")
    _check_fits(shape, grid, h)
    sd = _signed_distance(shape, grid)
    return ScalarField(grid, smoothstep((sd + h) / (2.0 * h)))


def level_set_hamiltonian(
    shape: ShapeSpec, h: float, grid: Grid
) -> tuple[ScalarField, VectorField, float]:
    """Hamiltonian with boundary level lambda = 1 and tangential b0 = perp_grad(phi0).

    phi0 = Phi(f) where f is the shape's defining function and Phi is a
    monotone C^4 flattening: identity on f >= b (a region containing the
    h-neighborhood of the boundary, so phi0 = f exactly there) and a
    constant plateau once f has dropped to a, reached well before the
    box frame so phi0 is smoothly periodic.  Composing with f keeps the
    level lines of phi0 aligned with those of f, which makes the
    boundary the lambda = 1 streamline of b0 by construction.
    """
    if h < 2.0 * grid.spacing:
        raise ValueError(f"cut-off width {h} below resolution 2*dx = {2*grid.spacing}")
    x, y = grid.coords()
    f = shape.defining_function(x, y)

    # identity region must cover the h-neighborhood of the boundary
    pts, normals = boundary_points(shape, 1024)
    eps = 1e-4 * grid.length
    f_in = shape.defining_function(pts[:, 0] - eps * normals[:, 0], pts[:, 1] - eps * normals[:, 1])
    grad_scale = float(np.abs(f_in - 1.0).max()) / eps
    b_level = min(0.5, 1.0 - 1.5 * h * grad_scale)

    # plateau must engage before the periodic frame
    cx, cy = shape.center
    bc = grid.length / 2.0
    frame_dist = grid.length / 2.0 - math.hypot(cx - bc, cy - bc)
    a_level = 2.0 - (0.92 * frame_dist / shape.max_extent()) ** 2
    if a_level > b_level - 1.0:
        raise ValueError("shape too large for a smooth plateau inside the box")

    phi0 = ScalarField(grid, flatten_above(f, a_level, b_level))
    return phi0, perp_grad(phi0), 1.0


@dataclass(frozen=True)
class Equiv1Report:
    """Grid certification of the non-degeneracy ladder."""

    ladder: tuple[tuple[float, float], ...]  # (eta, delta) pairs, eta ascending
    eta: float
    delta: float
    ok: bool


def check_equiv1(
    phi0: ScalarField,
    b0: VectorField,
    lam: float,
    eta_fractions: tuple[float, ...] = (0.05, 0.1, 0.2),
) -> Equiv1Report:
    """Largest delta per eta such that |phi0 - lambda| < eta implies |b0| > delta.

    delta(eta) is the minimum of |b0| over the eta-band around the level
    set; it can only grow as eta shrinks.  The report keeps the largest
    eta with positive delta.
    """
    mag = b0.magnitude()
    floor = 1e-12 * float(mag.max())  # spectral zero, not a genuine lower bound
    vals = phi0.values
    rng = float(vals.max() - vals.min())
    ladder = []
    best = (0.0, 0.0)
    for frac in sorted(eta_fractions):
        eta = frac * rng
        band = np.abs(vals - lam) < eta
        delta = float(mag[band].min()) if band.any() else float(mag.max())
        ladder.append((eta, delta))
        # prefer the rung balancing band width against field strength
        if delta > floor and eta * delta > best[0] * best[1]:
            best = (eta, delta)
    ok = best[1] > floor
    return Equiv1Report(ladder=tuple(ladder), eta=best[0], delta=best[1], ok=ok)


def commuting_pair(phi0: ScalarField, gprime, gprime_floor: float = 1e-8) -> VectorField:
    """Magnetic field G'(phi0) * perp_grad(phi0), commuting with X0 = perp_grad(phi0).

    gprime must be bounded away from zero on the range of phi0; the
    returned field is the perpendicular gradient of G(phi0) for any
    antiderivative G, so its Lie bracket with X0 vanishes.
    """
    gp = np.asarray(gprime(phi0.values), dtype=np.float64)
    if np.abs(gp).min() < gprime_floor:
        raise ValueError("gprime must be bounded away from zero")
    x0 = perp_grad(phi0)
    return VectorField(
        ScalarField(phi0.grid, gp * x0.x.values),
        ScalarField(phi0.grid, gp * x0.y.values),
        divergence_free=True,
    )


def lie_bracket(x_field: VectorField, y_field: VectorField) -> VectorField:
    """[X, Y] = X.grad Y - Y.grad X, spectral derivatives, pointwise products."""
    from .spectral import derivative

    x1, x2 = x_field.x.values, x_field.y.values
    y1, y2 = y_field.x.values, y_field.y.values
    g = x_field.grid

    def dgrad(a1, a2, f):
        return a1 * derivative(f, 1).values + a2 * derivative(f, 2).values

    bx = dgrad(x1, x2, y_field.x) - dgrad(y1, y2, x_field.x)
    by = dgrad(x1, x2, y_field.y) - dgrad(y1, y2, x_field.y)
    return VectorField(ScalarField(g, bx), ScalarField(g, by))


def rankine(r: float, x) -> tuple[float, np.ndarray]:
    """Stream value and velocity of the circular patch of radius r at point x.

    Stream function (vorticity = indicator of the disc, centered at 0):
        |x|^2/4 - (r^2/2)(log(1/r) + 1/2)   for |x| <= r
        (r^2/2) log|x|                      for |x| >= r
    Velocity is the perpendicular gradient: x_perp/2 inside,
    (r^2 / (2|x|^2)) x_perp outside.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=np.float64)
    rho = float(np.hypot(x[0], x[1]))
    if rho <= r:
        stream = 0.25 * rho**2 - 0.5 * r**2 * (math.log(1.0 / r) + 0.5)
        vel = 0.5 * np.array([-x[1], x[0]])
    else:
        stream = 0.5 * r**2 * math.log(rho)
        vel = (r**2 / (2.0 * rho**2)) * np.array([-x[1], x[0]])
    return stream, vel


def concentric_state(r: float, R: float, grid: Grid, h: float) -> MHDState:
    """State with omega the disc of radius r and j the disc of radius R, common center."""
    c = (grid.length / 2.0, grid.length / 2.0)
    omega = indicator(ShapeSpec("disc", c, radius=r), h, grid)
    if R == r:
        jfield = omega
    else:
        jfield = indicator(ShapeSpec("disc", c, radius=R), h, grid)
    return MHDState(omega, jfield)


class AdmissibilityError(RuntimeError):
    """Initial data failing tangency or the non-degeneracy scan."""


@dataclass(frozen=True)
class PatchData:
    """Initial-data bundle for a tangential-magnetic-field patch run."""

    omega0: ScalarField
    j0: ScalarField
    phi0: ScalarField
    b0: VectorField
    lam: float
    eta: float
    delta: float
    h: float
    tangency: float  # max |b0 . n| over boundary markers
    shape: ShapeSpec

    def state(self) -> MHDState:
        return MHDState(self.omega0, self.j0)


def make_patch_data(
    shape: ShapeSpec,
    grid: Grid,
    h: float | None = None,
    marker_count: int = 512,
    tangency_tol: float = 1e-5,
    require_admissible: bool = True,
) -> PatchData:
    """Build and certify patch initial data on the grid.

    omega0 is the mollified indicator, phi0/b0 the level-set Hamiltonian
    pair, j0 = Laplacian(phi0) the matching current density.  Raises
    AdmissibilityError when the boundary tangency of b0 exceeds
    tangency_tol * max|b0| or when the non-degeneracy scan finds no
    positive delta (unless require_admissible is False).
    """
    if h is None:
        h = 4.0 * grid.spacing
    omega0 = indicator(shape, h, grid)
    phi0, b0, lam = level_set_hamiltonian(shape, h, grid)
    j0 = mean_project(laplacian(phi0))

    pts, normals = boundary_points(shape, marker_count)
    bx = fourier_sample(b0.x, pts)
    by = fourier_sample(b0.y, pts)
    tangency = float(np.abs(bx * normals[:, 0] + by * normals[:, 1]).max())
    bmax = float(b0.magnitude().max())

    report = check_equiv1(phi0, b0, lam)
    if require_admissible:
        if tangency > tangency_tol * bmax:
            raise AdmissibilityError(
                f"boundary tangency {tangency:.3e} exceeds {tangency_tol:.1e} * max|b0| = {tangency_tol * bmax:.3e}"
            )
        if not report.ok:
            raise AdmissibilityError("non-degeneracy scan found no positive delta")
    return PatchData(
        omega0=omega0,
        j0=j0,
        phi0=phi0,
        b0=b0,
        lam=lam,
        eta=report.eta,
        delta=report.delta,
        h=h,
        tangency=tangency,
        shape=shape,
    )
