"""Height functions over planar domains and their area/energy/volume integrals.

A graph handle is any callable mapping points ``z`` of shape ``(..., 2)`` to
``(w, Dw, D2w)`` with shapes ``(...)``, ``(..., 2)`` and ``(..., 2, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .errors import QuadratureDivergence


class ScaledGraph:
    """w_lam(z) = lam * w(z / lam)."""

    def __init__(self, base, lam: float):
        self.base, self.lam = base, float(lam)

    def __call__(self, z):
        w, g, h = self.base(np.asarray(z) / self.lam)
        return self.lam * w, g, h / self.lam


class LinearCombination:
    """sum_i c_i w_i of graph handles."""

    def __init__(self, *pairs):
        self.pairs = [(float(c), f) for c, f in pairs]

    def __call__(self, z):
        out = None
        for c, f in self.pairs:
            w, g, h = f(z)
            if out is None:
                out = [c * w, c * g, c * h]
            else:
                out[0] = out[0] + c * w
                out[1] = out[1] + c * g
                out[2] = out[2] + c * h
        return tuple(out)


def smoothstep(t):
    """Quintic 0 -> 1 on [0, 1] with first and second derivatives."""
    t = np.clip(t, 0.0, 1.0)
    s = t * t * t * (10 - 15 * t + 6 * t * t)
    ds = 30 * t * t * (1 - t) ** 2
    d2s = 60 * t * (1 - t) * (1 - 2 * t)
    return s, ds, d2s


@dataclass(frozen=True)
class Cutoff:
    """eta(x) = 0 for x <= band/4, 1 for x >= 3 band/4, quintic in between."""

    band: float

    def __call__(self, x):
        lo, width = 0.25 * self.band, 0.5 * self.band
        s, ds, d2s = smoothstep((np.asarray(x, dtype=float) - lo) / width)
        return s, ds / width, d2s / width ** 2


class BlendedGraph:
    """base(z) + eta(sign * (|z| - r0)) * remainder(z).

    With ``sign=-1, r0=gamma`` this is ``p + eta(gamma - r) phi``; with
    ``sign=+1, r0=1`` it is ``q + eta(r - 1) psi``.
    """

    def __init__(self, base, remainder, cutoff: Cutoff, r0: float, sign: int):
        self.base, self.remainder, self.cutoff = base, remainder, cutoff
        self.r0, self.sign = float(r0), int(sign)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        w0, g0, h0 = self.base(z)
        w1, g1, h1 = self.remainder(z)
        r = np.hypot(z[..., 0], z[..., 1])
        e, de, d2e = self.cutoff(self.sign * (r - self.r0))
        rhat = z / r[..., None]
        # derivatives of eta(sign (r - r0)) with respect to z
        De = self.sign * de[..., None] * rhat
        P = np.eye(2) - rhat[..., :, None] * rhat[..., None, :]
        D2e = d2e[..., None, None] * rhat[..., :, None] * rhat[..., None, :] + (
            self.sign * de / r
        )[..., None, None] * P
        w = w0 + e * w1
        g = g0 + e[..., None] * g1 + w1[..., None] * De
        h = (
            h0
            + e[..., None, None] * h1
            + De[..., :, None] * g1[..., None, :]
            + g1[..., :, None] * De[..., None, :]
            + w1[..., None, None] * D2e
        )
        return w, g, h


class PiecewiseRadial:
    """Different handles on consecutive radial intervals [r_k, r_{k+1})."""

    def __init__(self, pieces):
        self.pieces = [(float(a), float(b), f) for a, b, f in pieces]

    def breakpoints(self):
        return sorted({p[0] for p in self.pieces} | {p[1] for p in self.pieces})

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        r = np.hypot(z[..., 0], z[..., 1])
        w = np.zeros(r.shape)
        g = np.zeros(r.shape + (2,))
        h = np.zeros(r.shape + (2, 2))
        done = np.zeros(r.shape, dtype=bool)
        for k, (a, b, f) in enumerate(self.pieces):
            last = k == len(self.pieces) - 1
            m = ~done & (r >= a) & ((r <= b) if last else (r < b))
            if np.any(m):
                wk, gk, hk = f(z[m])
                w[m], g[m], h[m] = wk, gk, hk
                done |= m
        return w, g, h


def graph_mean_curvature(Dw, D2w):
    """Divergence of Dw / sqrt(1 + |Dw|^2): minus H for the upward normal."""
    wx, wy = Dw[..., 0], Dw[..., 1]
    wxx, wxy, wyy = D2w[..., 0, 0], D2w[..., 0, 1], D2w[..., 1, 1]
    q = 1.0 + wx * wx + wy * wy
    return ((1 + wy * wy) * wxx - 2 * wx * wy * wxy + (1 + wx * wx) * wyy) / q ** 1.5


@dataclass
class GraphEnergetics:
    area: float
    willmore: float
    volume_integrand_bound: float
    area_excess: float  # area minus flat-domain area
    volume: float  # (1/3) * integral of (w - z.Dw), the upward-normal flux term
    orders: tuple = (64, 256)
    converged: bool = True
    message: str = ""
    extras: dict = field(default_factory=dict)

    def values(self) -> np.ndarray:
        return np.array(
            [self.area, self.willmore, self.volume_integrand_bound, self.area_excess, self.volume]
        )


def _radial_nodes(edges, n_r, tail, log_radial=False):
    """Gauss-Legendre nodes on each finite interval; r = a / s on an infinite tail.

    With ``log_radial`` the finite intervals are mapped through log r, which
    suits integrands varying on the scale of r itself.
    """
    x, wx = roots_legendre(n_r)
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        if log_radial and a > 0:
            la, lb = np.log(a), np.log(b)
            r = np.exp(0.5 * (lb - la) * x + 0.5 * (la + lb))
            rs.append(r)
            ws.append(0.5 * (lb - la) * wx * r)
            continue
        rs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * wx)
    if tail is not None:
        s = 0.5 * x + 0.5
        rs.append(tail / s)
        ws.append(0.5 * wx * tail / s ** 2)
    return np.concatenate(rs), np.concatenate(ws)


def _integrate(w, edges, tail, n_r, n_t, theta0=0.0, log_radial=False):
    r, wr = _radial_nodes(edges, n_r, tail, log_radial)
    th = theta0 + 2 * np.pi * np.arange(n_t) / n_t
    R, T = np.meshgrid(r, th, indexing="ij")
    Z = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
    val, D, D2 = w(Z)
    weight = (wr * r)[:, None] * (2 * np.pi / n_t)
    g2 = np.sum(D * D, axis=-1)
    root = np.sqrt(1.0 + g2)
    H = graph_mean_curvature(D, D2)
    zdot = np.sum(Z * D, axis=-1)
    excess = g2 / (1.0 + root)
    flat = np.sum(weight)
    return np.array(
        [
            np.sum(weight * root) if tail is None else np.inf,
            0.25 * np.sum(weight * H * H * root),
            np.sum(weight * (R * np.sqrt(g2) + np.abs(val))),
            np.sum(weight * excess),
            np.sum(weight * (val - zdot)) / 3.0,
        ]
    ), flat


def graph_energetics(
    w,
    r_in: float,
    r_out: float,
    n_r: int = 64,
    n_theta: int = 256,
    breakpoints=(),
    check: bool = True,
    strict: bool = False,
    rtol: float = 1e-4,
    log_radial: bool = False,
) -> GraphEnergetics:
    """Area, Willmore energy and volume terms of the graph of ``w`` over an annulus.

    ``r_out`` may be ``np.inf``; the tail beyond the last finite breakpoint is
    mapped to a finite interval by ``r = a / s``. ``breakpoints`` are radii
    where ``w`` is only finitely smooth; the radial rule is split there.
    With ``check`` the computation is repeated with doubled orders and the
    relative change is reported (or raised with ``strict``).
    """
    if hasattr(w, "breakpoints"):
        breakpoints = tuple(breakpoints) + tuple(w.breakpoints())
    finite_out = np.isfinite(r_out)
    top = r_out if finite_out else max([r_in] + [b for b in breakpoints if np.isfinite(b)])
    edges = sorted({r_in, top} | {b for b in breakpoints if r_in < b < top})
    tail = None if finite_out else top

    vals, _ = _integrate(w, edges, tail, n_r, n_theta, log_radial=log_radial)
    out = GraphEnergetics(*vals, orders=(n_r, n_theta))
    if check:
        # shift the angular grid so the refined rule is not nested
        fine, _ = _integrate(
            w, edges, tail, 2 * n_r, 2 * n_theta, theta0=np.pi / (2 * n_theta), log_radial=log_radial
        )
        floor = 1e-12 * max(1.0, np.nanmax(np.abs(np.where(np.isfinite(vals), vals, 0.0))))
        diff = np.abs(fine - vals)
        rel = np.where(np.isfinite(vals), diff / np.maximum(np.abs(fine), floor), 0.0)
        worst = float(np.nanmax(rel))
        out.extras["refinement_change"] = worst
        if worst > rtol:
            out.converged = False
            out.message = f"doubling quadrature orders changed outputs by {worst:.3g} relative"
            if strict:
                raise QuadratureDivergence(out.message)
    return out
