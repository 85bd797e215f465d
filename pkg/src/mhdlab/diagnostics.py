"""
Norm ledger and property monitors for runs: Lebesgue and Holder norms,
energy, stationarity residuals, boundary tangency, frozen-in and
co-normal errors, and the a-priori envelope fits

    ||(w, j)(t)||_p   <= C ||(w0, j0)||_p exp(C int ||grad v||)
    ||(w, j)(t)||_inf <= C ||(w0, j0)||_inf + int ||grad v|| ||grad b||
    ||(w, j)(t)||_1   <= C ||(w0, j0)||_1 + C ||(w0, j0)||_2^2 t exp(C int ||grad v||)

where the fitted constants are diagnostics: pass/fail decisions use
their stability under time refinement, never their absolute size.

The Holder norm is estimated from the dyadic blocks,
max_q 2^{qs} sup|Delta_q f|, with a direct difference-quotient sampler
as an independent cross-check (the equivalence constant between the two
is not pinned by theory).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .spectral import (
    Grid,
    ScalarField,
    VectorField,
    block_project,
    fourier_sample,
    max_block,
)
from .fields import MHDState, SpectralWorkspace, conormal, rhs

__all__ = [
    "lp_norm",
    "holder_norm",
    "holder_modulus",
    "energy",
    "StationarityResidual",
    "stationarity_residual",
    "conormal_norms",
    "apriori_envelope",
    "DiagnosticsRecord",
    "compute_record",
    "RECORD_COLUMNS",
    "format_csv_row",
    "csv_header",
]


def lp_norm(f: ScalarField, p) -> float:
    """Grid L^p norm: cell-weighted quadrature for finite p, max for inf."""
    v = np.abs(f.values)
    if p == np.inf or p == "inf":
        return float(v.max())
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(v**p) * f.grid.cell_area()) ** (1.0 / p))


def holder_norm(f: ScalarField, s: float) -> float:
    """Dyadic-block Holder estimate max_q 2^{qs} sup|Delta_q f|, s in (0, 1)."""
    if not 0 < s < 1:
        raise ValueError("s must be in (0, 1)")
    qmax = max_block(f.grid.n)
    return max(
        2.0 ** (q * s) * float(np.abs(block_project(f, q).values).max())
        for q in range(-1, qmax + 1)
    )


def holder_modulus(f: ScalarField, s: float) -> float:
    """Direct estimate ||f||_inf + max over dyadic lags of sup|f - shift f| / lag^s."""
    if not 0 < s < 1:
        raise ValueError("s must be in (0, 1)")
    g = f.grid
    best = 0.0
    lag = 1
    while lag <= g.n // 4:
        d = lag * g.spacing
        for axis in (0, 1):
            diff = np.abs(f.values - np.roll(f.values, lag, axis=axis)).max()
            best = max(best, float(diff) / d**s)
        lag *= 2
    return float(np.abs(f.values).max()) + best


def energy(state: MHDState) -> float:
    """Total energy (||v||_2^2 + ||b||_2^2) / 2 of the induced fields."""
    ws = SpectralWorkspace(
        state.grid, np.fft.fft2(state.omega.values), np.fft.fft2(state.j.values)
    )
    a = state.grid.cell_area()
    return float(0.5 * ((ws.vx**2 + ws.vy**2).sum() + (ws.bx**2 + ws.by**2).sum()) * a)


# --- stationarity -----------------------------------------------------------------


@dataclass(frozen=True)
class StationarityResidual:
    l2: tuple[float, float]  # both tendency components
    sup: tuple[float, float]
    rel_l2: float  # largest component residual over its no-cancellation scale

    def max_l2(self) -> float:
        return max(self.l2)


def stationarity_residual(state: MHDState) -> StationarityResidual:
    """Norms of the tendency, absolute and relative.

    The relative figure divides each component's L^2 norm by the L^2
    size its advection/source terms would have without cancellation
    (|v||grad w| + |b||grad j| and so on), so that a genuinely steady
    configuration scores small even though the individual terms are
    order one.
    """
    g = state.grid
    dw, dj = rhs(state)
    ws = SpectralWorkspace(
        g, np.fft.fft2(state.omega.values), np.fft.fft2(state.j.values)
    )
    kx, ky, mask = g.kx, g.ky, g.dealias_mask

    def grad_mag(hat):
        gx = np.fft.ifft2(1j * kx * hat * mask).real
        gy = np.fft.ifft2(1j * ky * hat * mask).real
        return np.hypot(gx, gy)

    gw = grad_mag(ws.w_hat)
    gj = grad_mag(ws.j_hat)
    vmag = np.hypot(ws.vx, ws.vy)
    bmag = np.hypot(ws.bx, ws.by)
    area = g.cell_area()

    def l2(arr):
        return float(np.sqrt((arr**2).sum() * area))

    scale_w = l2(vmag * gw) + l2(bmag * gj)
    grad_v_mag = np.hypot(np.hypot(ws.grad_v()[0], ws.grad_v()[1]),
                          np.hypot(ws.grad_v()[2], ws.grad_v()[3]))
    grad_b_mag = np.hypot(np.hypot(ws.d1bx, ws.d2bx), np.hypot(ws.d1by, ws.d2by))
    scale_j = l2(vmag * gj) + l2(bmag * gw) + 2.0 * l2(grad_v_mag * grad_b_mag)

    r_l2 = (l2(dw.values), l2(dj.values))
    r_sup = (float(np.abs(dw.values).max()), float(np.abs(dj.values).max()))
    rel = 0.0
    if scale_w > 0:
        rel = max(rel, r_l2[0] / scale_w)
    if scale_j > 0:
        rel = max(rel, r_l2[1] / scale_j)
    return StationarityResidual(l2=r_l2, sup=r_sup, rel_l2=rel)


# --- co-normal norms ---------------------------------------------------------------


def conormal_norms(x_field: VectorField, state: MHDState, p: float) -> dict:
    """L^p norms of d_X omega, d_X j and the composite anisotropic norms.

    The composite norm is max(||u||_1, ||u||_inf) + ||d_X u||_p (an
    equivalent realization of the L^1-cap-L^inf part).
    """
    dxw = conormal(x_field, state.omega)
    dxj = conormal(x_field, state.j)
    out = {
        "dx_omega_p": lp_norm(dxw, p),
        "dx_j_p": lp_norm(dxj, p),
    }
    for name, f, dxf in (("omega", state.omega, dxw), ("j", state.j, dxj)):
        base = max(lp_norm(f, 1), lp_norm(f, np.inf))
        out[f"wpx_{name}"] = base + lp_norm(dxf, p)
    return out


# --- a-priori envelope fits ---------------------------------------------------------


def _bisect_feasible(feasible, lo=1e-8, hi=1e8, iters=200) -> float:
    """Smallest C with feasible(C) true; feasible must be monotone in C."""
    if not feasible(hi):
        return math.inf
    if feasible(lo):
        return lo
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def apriori_envelope(records: list["DiagnosticsRecord"], p: float) -> dict:
    """Fit the smallest constants closing the three weak-estimate envelopes.

    records must carry the norm columns of a completed run (one record
    per step, t ascending, first record at the initial time).
    """
    t = np.array([r.t for r in records])
    if len(t) < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("need a time series with strictly increasing t")
    norm_p = np.array([r.lp_omega + r.lp_j for r in records])
    norm_inf = np.array([r.linf_omega + r.linf_j for r in records])
    norm_1 = np.array([r.l1_omega + r.l1_j for r in records])
    norm_2_sq0 = (records[0].l2_omega + records[0].l2_j) ** 2
    gv = np.array([r.grad_v_sup for r in records])
    gb = np.array([r.grad_b_sup for r in records])

    v_int = np.concatenate([[0.0], np.cumsum(0.5 * (gv[1:] + gv[:-1]) * np.diff(t))])
    vb_int = np.concatenate(
        [[0.0], np.cumsum(0.5 * (gv[1:] * gb[1:] + gv[:-1] * gb[:-1]) * np.diff(t))]
    )

    g_lp = np.log(norm_p / norm_p[0])

    def feas_lp(c):
        return bool(np.all(math.log(c) + c * v_int - g_lp >= -1e-12))

    c_lp = _bisect_feasible(feas_lp)

    c_linf = float(np.max((norm_inf - vb_int) / norm_inf[0]))

    tt = t - t[0]

    def feas_l1(c):
        bound = c * norm_1[0] + c * norm_2_sq0 * tt * np.exp(np.minimum(c * v_int, 60.0))
        return bool(np.all(bound - norm_1 >= -1e-12 * norm_1[0]))

    c_l1 = _bisect_feasible(feas_l1)

    return {"c_lp": float(c_lp), "c_linf": float(c_linf), "c_l1": float(c_l1)}


# --- per-step record ----------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One CSV row; optional entries are nan when the run does not track them."""

    t: float
    l1_omega: float
    l2_omega: float
    lp_omega: float
    linf_omega: float
    l1_j: float
    l2_j: float
    lp_j: float
    linf_j: float
    energy: float
    grad_v_sup: float
    grad_b_sup: float
    stat_l2_omega: float
    stat_l2_j: float
    stat_sup_omega: float
    stat_sup_j: float
    stat_rel: float
    mean_omega: float
    mean_j: float
    tangency: float = math.nan
    frozen_in_err: float = math.nan
    dx_omega_p: float = math.nan
    dx_j_p: float = math.nan
    holder_omega: float = math.nan
    holder_j: float = math.nan


RECORD_COLUMNS = [f.name for f in dc_fields(DiagnosticsRecord)]


def csv_header() -> str:
    return ",".join(RECORD_COLUMNS)


def format_csv_row(rec: DiagnosticsRecord) -> str:
    return ",".join("%.17g" % getattr(rec, c) for c in RECORD_COLUMNS)


def compute_record(
    state: MHDState,
    p: float = 4.0,
    x_field: VectorField | None = None,
    phi: ScalarField | None = None,
    markers=None,
    boundary_normals: np.ndarray | None = None,
    phi0_at_markers: np.ndarray | None = None,
    with_stationarity: bool = True,
    with_holder: float | None = None,
) -> DiagnosticsRecord:
    """Assemble the ledger row for one snapshot.

    markers / boundary_normals feed the tangency of the induced magnetic
    field along the advected contour; phi + markers + phi0_at_markers
    feed the frozen-in error max |phi(t, psi_t(x)) - phi0(x)|.
    """
    g = state.grid
    ws = SpectralWorkspace(
        g, np.fft.fft2(state.omega.values), np.fft.fft2(state.j.values)
    )
    gv = ws.grad_v()
    grad_v_sup = float(max(np.abs(a).max() for a in gv))
    grad_b_sup = float(
        max(np.abs(a).max() for a in (ws.d1bx, ws.d2bx, ws.d1by, ws.d2by))
    )
    if with_stationarity:
        res = stationarity_residual(state)
    else:
        nanpair = (math.nan, math.nan)
        res = StationarityResidual(l2=nanpair, sup=nanpair, rel_l2=math.nan)

    tangency = math.nan
    if markers is not None and boundary_normals is not None:
        pts = markers.positions
        bx = fourier_sample(ScalarField(g, ws.bx), pts)
        by = fourier_sample(ScalarField(g, ws.by), pts)
        tangency = float(
            np.abs(bx * boundary_normals[:, 0] + by * boundary_normals[:, 1]).max()
        )

    frozen = math.nan
    if phi is not None and markers is not None and phi0_at_markers is not None:
        now = fourier_sample(phi, markers.positions)
        frozen = float(np.abs(now - phi0_at_markers).max())

    dxw = dxj = math.nan
    if x_field is not None:
        cn = conormal_norms(x_field, state, p)
        dxw, dxj = cn["dx_omega_p"], cn["dx_j_p"]

    h_w = h_j = math.nan
    if with_holder is not None:
        h_w = holder_norm(state.omega, with_holder)
        h_j = holder_norm(state.j, with_holder)

    return DiagnosticsRecord(
        t=state.time,
        l1_omega=lp_norm(state.omega, 1),
        l2_omega=lp_norm(state.omega, 2),
        lp_omega=lp_norm(state.omega, p),
        linf_omega=lp_norm(state.omega, np.inf),
        l1_j=lp_norm(state.j, 1),
        l2_j=lp_norm(state.j, 2),
        lp_j=lp_norm(state.j, p),
        linf_j=lp_norm(state.j, np.inf),
        energy=energy(state),
        grad_v_sup=grad_v_sup,
        grad_b_sup=grad_b_sup,
        stat_l2_omega=res.l2[0],
        stat_l2_j=res.l2[1],
        stat_sup_omega=res.sup[0],
        stat_sup_j=res.sup[1],
        stat_rel=res.rel_l2,
        mean_omega=state.omega.mean,
        mean_j=state.j.mean,
        tangency=tangency,
        frozen_in_err=frozen,
        dx_omega_p=dxw,
        dx_j_p=dxj,
        holder_omega=h_w,
        holder_j=h_j,
    )
