"""Sphere-valued director fields, generators, spherical charts and moving frames.

Chart conventions: each chart names which Cartesian component is the polar
(``cos theta``) component and which pair plays ``(sin phi, cos phi) sin theta``::

    z:  d = (sin phi sin theta, cos phi sin theta, cos theta)
    x:  d = (cos theta, sin phi sin theta, cos phi sin theta)
    y:  d = (cos phi sin theta, cos theta, sin phi sin theta)

All three index maps are cyclic, so every chart is right-handed.

Angles are never stored; chart quantities are formed pointwise from the
Cartesian components and their central differences, which sidesteps branch
cuts of ``phi`` entirely.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .torus_grid import (
    EVEN,
    ODD,
    SampledField,
    TorusGrid,
    erode,
    gradient,
    scalar_field,
)

UNIT_TOL = 1e-12
NORMALIZE_FLOOR = 1e-8
TWIST_TOL = 1e-10
DEFAULT_EPS_POLE = 0.05
# largest |theta - pi/2| keeping |cos theta| <= 0.9
POLE_FREE_MAX_TILT = float(np.arcsin(0.9))

# (sin-phi component, cos-phi component, polar component)
CHART_AXES: dict[str, tuple[int, int, int]] = {
    "z": (0, 1, 2),
    "x": (1, 2, 0),
    "y": (2, 0, 1),
}


class TwistError(ValueError):
    """A generator produced a field that violates d(x + L_i e_i) = (-1)^a_i d(x)."""


@dataclass(frozen=True)
class DirectorField:
    base: SampledField
    label: str = ""

    def __post_init__(self):
        b = self.base
        if b.components != 3:
            raise ValueError(f"director needs 3 components, got {b.components}")
        if b.parity != ODD:
            raise ValueError("director field must have odd antipodal parity")
        err = unit_norm_error(b.values)
        if err > UNIT_TOL:
            raise ValueError(f"director is not unit length: max ||d| - 1| = {err:.3e}")

    @property
    def grid(self) -> TorusGrid:
        return self.base.grid

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    def __neg__(self) -> "DirectorField":
        return DirectorField(-self.base, self.label)


def unit_norm_error(values: np.ndarray) -> float:
    return float(np.max(np.abs(np.sqrt(np.sum(values**2, axis=0)) - 1.0)))


def normalize(raw: SampledField, label: str = "") -> DirectorField:
    if raw.components != 3 or raw.parity != ODD:
        raise ValueError("normalize expects a 3-component odd-parity field")
    norm = np.sqrt(np.sum(raw.values**2, axis=0))
    if np.min(norm) < NORMALIZE_FLOOR:
        raise ValueError(
            f"cannot normalize: node norm {np.min(norm):.3e} below {NORMALIZE_FLOOR:g}"
        )
    return DirectorField(SampledField(raw.grid, raw.values / norm, ODD), label)


def _angles_to_cartesian(theta, phi):
    st = np.sin(theta)
    return np.stack([np.sin(phi) * st, np.cos(phi) * st, np.cos(theta) * np.ones_like(st)])


def gen_angle_ansatz(
    grid: TorusGrid,
    theta_fn: Callable[..., np.ndarray],
    phi_fn: Callable[..., np.ndarray],
    label: str = "ansatz",
) -> DirectorField:
    """Director from polar/azimuthal sample functions of the node coordinates.

    The functions are also evaluated on each far face ``x_i = L_i`` and the
    result compared with the twisted image of the ``x_i = 0`` face.
    """

    def build(coords):
        theta = np.broadcast_to(np.asarray(theta_fn(*coords), dtype=float), coords[0].shape)
        phi = np.broadcast_to(np.asarray(phi_fn(*coords), dtype=float), coords[0].shape)
        return _angles_to_cartesian(theta, phi)

    mesh = grid.mesh()
    d = build(mesh)
    for i in range(grid.dim):
        face = [c.copy() for c in mesh]
        face[i] = face[i] + grid.lengths[i]
        image = build(face)
        sign = -1.0 if grid.parities[i] else 1.0
        err = float(np.max(np.abs(image - sign * d)))
        if err > TWIST_TOL:
            raise TwistError(
                f"ansatz violates the twisted boundary condition d(x+L e_{i + 1}) = "
                f"(-1)^a_{i + 1} d(x) on axis {i} (a={grid.parities[i]}, mismatch {err:.2e})"
            )
    return normalize(SampledField(grid, d, ODD), label)


def gen_equator(grid: TorusGrid, winding: float = 0.5, label: str | None = None) -> DirectorField:
    """Equator map ``(sin 2 pi w x1/L1, cos 2 pi w x1/L1, 0)``; ``w = 1/2`` is field F1."""
    if abs(2 * winding - round(2 * winding)) > 1e-12:
        raise TwistError(f"winding must be a half-integer, got {winding}")
    if int(round(2 * winding)) % 2 != grid.parities[0]:
        raise TwistError(
            f"winding {winding} is incompatible with twist a_1={grid.parities[0]}: "
            "d(x+e_1) = (-1)^a_1 d(x) requires 2*winding = a_1 (mod 2)"
        )
    L1 = grid.lengths[0]
    return gen_angle_ansatz(
        grid,
        lambda *x: np.pi / 2,
        lambda *x: 2 * np.pi * winding * x[0] / L1,
        label=label or f"equator(w={winding:g})",
    )


def gen_f2(grid: TorusGrid, tilt: float = 0.3) -> DirectorField:
    """theta = pi/2 + tilt sin(2 pi x2), phi = 2 pi x1: the non-harmonic test field F2."""
    L1, L2 = grid.lengths[0], grid.lengths[1]
    return gen_angle_ansatz(
        grid,
        lambda *x: np.pi / 2 + tilt * np.sin(2 * np.pi * x[1] / L2),
        lambda *x: 2 * np.pi * x[0] / L1,
        label="F2",
    )


def constant_field(grid: TorusGrid, vector=(0.0, 0.0, 1.0), label: str = "constant") -> DirectorField:
    if any(grid.parities):
        raise TwistError("a constant director is only compatible with an untwisted grid")
    v = np.asarray(vector, dtype=float)
    v = v / np.linalg.norm(v)
    values = np.broadcast_to(v.reshape(3, *([1] * grid.dim)), (3, *grid.sizes)).copy()
    return normalize(SampledField(grid, values, ODD), label)


def _axis_modes(band: int, twisted: int) -> list[float]:
    if twisted:
        return [k + 0.5 for k in range(band) if k + 0.5 <= band]
    return list(range(band + 1))


class TrigPoly:
    """Real trigonometric polynomial that changes sign across axis i iff ``flips[i]``.

    Axes that flip use half-integer frequencies. Coefficients are normal with
    standard deviation ``amplitude / (1 + |k|^2)``, drawn in a fixed order.
    """

    def __init__(self, grid: TorusGrid, rng: np.random.Generator, band: int,
                 flips: tuple[int, ...], amplitude: float = 1.0):
        self.lengths = grid.lengths
        per_axis = []
        for i in range(grid.dim):
            modes = []
            for k in _axis_modes(band, flips[i]):
                modes.append((k, np.cos))
                if k > 0:
                    modes.append((k, np.sin))
            per_axis.append(modes)
        self.terms = []
        for combo in itertools.product(*per_axis):
            ksq = sum(k * k for k, _ in combo)
            self.terms.append((rng.standard_normal() * amplitude / (1.0 + ksq), combo))
        self.scale = 1.0

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(coords[0]))
        for c, combo in self.terms:
            term = c
            for x, L, (k, fn) in zip(coords, self.lengths, combo):
                term = term * fn(2 * np.pi * k * x / L)
            out += term
        return self.scale * out


def _check_band(grid: TorusGrid, band: int) -> None:
    if band < 1 or band >= min(grid.sizes) / 4:
        raise ValueError(f"band must satisfy 1 <= band < min(N)/4 = {min(grid.sizes) / 4:g}")


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] *= -1
    return q


def gen_random_bandlimited(
    grid: TorusGrid, seed: int, band: int = 3, amplitude: float = 0.5
) -> DirectorField:
    """Seeded smooth director ``normalize(R w + amplitude * P / max|P|)``.

    ``w = (sin k.x, cos k.x, 0)`` with ``k_i = pi a_i / L_i`` is the simplest
    unit field obeying the twist, ``R`` a seeded rotation and ``P`` a vector of
    twist-odd trigonometric polynomials. Since ``amplitude < 1`` the raw field
    stays at least ``1 - amplitude`` away from zero.
    """
    _check_band(grid, band)
    if not 0 < amplitude < 1:
        raise ValueError(f"amplitude must lie in (0, 1), got {amplitude}")
    rng = np.random.default_rng(seed)
    mesh = grid.mesh()
    arg = sum(np.pi * a * x / L for a, x, L in zip(grid.parities, mesh, grid.lengths))
    arg = arg + np.zeros(grid.sizes)
    w = np.stack([np.sin(arg), np.cos(arg), np.zeros(grid.sizes)])
    rot = _random_rotation(rng)
    pert = np.stack([TrigPoly(grid, rng, band, grid.parities)(*mesh) for _ in range(3)])
    pert *= amplitude / max(float(np.max(np.sqrt(np.sum(pert**2, axis=0)))), 1e-300)
    v = np.einsum("ij,j...->i...", rot, w) + pert
    return normalize(SampledField(grid, v, ODD), f"random(seed={seed},band={band})")


def gen_pole_free(
    grid: TorusGrid, seed: int, band: int = 2, amplitude: float = 0.6
) -> DirectorField:
    """Random director confined to ``|d_3| <= sin(amplitude) <= 0.9``.

    ``theta = pi/2 + psi`` with ``psi`` a twist-odd polynomial scaled so that
    ``|psi| <= amplitude``; ``phi`` is a linear winding compatible with the
    twist plus a periodic polynomial.
    """
    _check_band(grid, band)
    if not 0 < amplitude <= POLE_FREE_MAX_TILT:
        raise ValueError(f"amplitude must lie in (0, {POLE_FREE_MAX_TILT:.4f}]")
    rng = np.random.default_rng(seed)
    psi = TrigPoly(grid, rng, band, grid.parities)
    chi = TrigPoly(grid, rng, band, (0,) * grid.dim)
    mesh = grid.mesh()
    psi.scale = amplitude / max(float(np.max(np.abs(psi(*mesh)))), 1e-300)
    chi.scale = amplitude / max(float(np.max(np.abs(chi(*mesh)))), 1e-300)
    windings = [np.pi * a / L for a, L in zip(grid.parities, grid.lengths)]

    def phi(*x):
        return chi(*x) + sum(w * xi for w, xi in zip(windings, x))

    return gen_angle_ansatz(
        grid, lambda *x: np.pi / 2 + psi(*x), phi, label=f"polefree(seed={seed},band={band})"
    )


@dataclass(frozen=True)
class ChartFields:
    """Chart quantities with polar axis ``axis``.

    ``grad_theta``, ``u1`` (= sin theta grad phi) and ``b`` (= cos theta grad phi)
    have shape ``(dim, *sizes)``; ``s`` (= sin theta) and ``cos`` have shape
    ``sizes``. ``interior`` is ``mask`` eroded by one stencil width.
    """

    axis: str
    mask: np.ndarray
    interior: np.ndarray
    s: np.ndarray
    cos: np.ndarray
    grad_theta: SampledField
    u1: SampledField
    b: SampledField

    @property
    def grid(self) -> TorusGrid:
        return self.u1.grid

    @property
    def masked_fraction(self) -> float:
        return float(np.mean(self.mask))

    def sin_field(self) -> SampledField:
        return scalar_field(self.grid, self.s, EVEN)

    def cos_field(self) -> SampledField:
        return scalar_field(self.grid, self.cos, ODD)


def _chart_components(values: np.ndarray, axis: str):
    ip, iq, ir = CHART_AXES[axis]
    return values[ip], values[iq], values[ir]


def chart_extract(d: DirectorField, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE) -> ChartFields:
    if not 0 < eps_pole < 1:
        raise ValueError("eps_pole must lie in (0, 1)")
    if axis not in CHART_AXES:
        raise ValueError(f"chart axis must be one of x, y, z; got {axis!r}")
    grid = d.grid
    p, q, r = _chart_components(d.values, axis)
    grad = gradient(d.base)  # (dim, 3, *sizes)
    ip, iq, ir = CHART_AXES[axis]
    gp, gq, gr = grad[:, ip], grad[:, iq], grad[:, ir]
    s = np.sqrt(p * p + q * q)
    mask = s >= eps_pole
    s_safe = np.where(mask, s, 1.0)
    swirl = q * gp - p * gq
    grad_theta = np.where(mask, -gr / s_safe, 0.0)
    u1 = np.where(mask, swirl / s_safe, 0.0)
    b = np.where(mask, r * swirl / s_safe**2, 0.0)
    return ChartFields(
        axis=axis,
        mask=mask,
        interior=erode(mask, grid, 1),
        s=s,
        cos=np.array(r),
        grad_theta=SampledField(grid, grad_theta, ODD),
        u1=SampledField(grid, u1, EVEN),
        b=SampledField(grid, b, ODD),
    )


def _to_cartesian(chart_vec: tuple[np.ndarray, np.ndarray, np.ndarray], axis: str) -> np.ndarray:
    out = [None, None, None]
    for k, idx in enumerate(CHART_AXES[axis]):
        out[idx] = chart_vec[k]
    return np.stack(out)


def frame_vectors(
    d: DirectorField, axis: str = "z", eps_pole: float = DEFAULT_EPS_POLE
) -> tuple[SampledField, SampledField, np.ndarray]:
    """``(dperp1, dperp2, mask)`` completing ``d`` to an orthonormal frame in the given chart."""
    grid = d.grid
    p, q, r = _chart_components(d.values, axis)
    s = np.sqrt(p * p + q * q)
    mask = s >= eps_pole
    s_safe = np.where(mask, s, 1.0)
    zero = np.zeros_like(p)
    e1 = _to_cartesian((q / s_safe, -p / s_safe, zero), axis)
    e2 = _to_cartesian((p * r / s_safe, q * r / s_safe, -s * s / s_safe), axis)
    e1 = np.where(mask, e1, 0.0)
    e2 = np.where(mask, e2, 0.0)
    return SampledField(grid, e1, ODD), SampledField(grid, e2, EVEN), mask


def reconstruct_from_chart(d: DirectorField, axis: str = "z") -> np.ndarray:
    """Rebuild ``d`` from (theta, phi) with phi = atan2(sin-component, cos-component)."""
    p, q, r = _chart_components(d.values, axis)
    phi = np.arctan2(p, q)
    s = np.sqrt(p * p + q * q)
    return _to_cartesian((s * np.sin(phi), s * np.cos(phi), r), axis)
