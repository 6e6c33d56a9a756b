"""Stochastic flow maps and their inverses on periodic grids.

A :class:`FlowEnsemble` tracks, for ``M`` noise realizations, the forward
map ``X`` and the back-to-labels map ``A = X^{-1}`` over the current label
window. Maps are stored as displacements so they stay periodic:

    X_m(a) = a + xi_m(a) + s_m

where ``xi_m`` is a periodic field and ``s_m`` is the spatially uniform
part (the accumulated Brownian shift of realization ``m``). Because the
noise is uniform in space, inverting ``X_m`` reduces exactly to inverting
the periodic core ``I + xi_m`` and translating:

    A_m(x) = B_m(x - s_m),        B_m = (I + xi_m)^{-1}

so Newton iteration only ever sees the periodic core. Immediately after a
label reset all realizations share one core (``xi_m`` identical for all
``m``); the ensemble stays in that cheap shared representation until a
subsequent drift evaluation makes the cores diverge.

Two drift integrators are provided: the one-stage Euler-Maruyama update
(``stages=1``) and a two-stage midpoint/Heun update of the noise-shifted
deterministic flow (``stages=2``), which realizes the translated-flow
construction ``X = Y + W`` with ``Y' = u(Y + W)``.
"""

from __future__ import annotations

import numpy as np

from .errors import NonInvertible
from .grid import PeriodicGrid
from .utils import thread_map
from .interp import FieldInterpolator
from .spectral import (
    SpectralWorkspace,
    gradient_values,
    laplacian_values,
    workspace,
)

DEFAULT_TOL_FACTOR = 1e-8
DEFAULT_MAX_NEWTON = 25


# ---------------------------------------------------------------------------
# small dense linear algebra, vectorized over points
# ---------------------------------------------------------------------------


def _solve_pointwise(jac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``J delta = r`` for stacks of 1x1/2x2/3x3 systems.

    ``jac`` has shape ``(d, d, n)``, ``rhs`` ``(d, n)``.
    """
    d = rhs.shape[0]
    if d == 1:
        return rhs / jac[0, 0]
    if d == 2:
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        out = np.empty_like(rhs)
        out[0] = (jac[1, 1] * rhs[0] - jac[0, 1] * rhs[1]) / det
        out[1] = (-jac[1, 0] * rhs[0] + jac[0, 0] * rhs[1]) / det
        return out
    a, b, c = jac[0, 0], jac[0, 1], jac[0, 2]
    e, f, g = jac[1, 0], jac[1, 1], jac[1, 2]
    h, i, j = jac[2, 0], jac[2, 1], jac[2, 2]
    co00 = f * j - g * i
    co01 = g * h - e * j
    co02 = e * i - f * h
    det = a * co00 + b * co01 + c * co02
    co10 = c * i - b * j
    co11 = a * j - c * h
    co12 = b * h - a * i
    co20 = b * g - c * f
    co21 = c * e - a * g
    co22 = a * f - b * e
    out = np.empty_like(rhs)
    out[0] = (co00 * rhs[0] + co10 * rhs[1] + co20 * rhs[2]) / det
    out[1] = (co01 * rhs[0] + co11 * rhs[1] + co21 * rhs[2]) / det
    out[2] = (co02 * rhs[0] + co12 * rhs[1] + co22 * rhs[2]) / det
    return out


# ---------------------------------------------------------------------------
# Newton inversion of a periodic core map
# ---------------------------------------------------------------------------


def invert_core(
    grid: PeriodicGrid,
    xi: np.ndarray,
    order: int = 3,
    tol: float | None = None,
    max_iter: int = DEFAULT_MAX_NEWTON,
) -> np.ndarray:
    """Invert ``Y = I + xi`` on the grid: returns the displacement ``beta``
    with ``Y(y + beta(y)) = y`` (mod L) at every node.

    Damped Newton from the translation guess ``beta ~ -xi``; raises
    :exc:`NonInvertible` if any node fails to reach ``tol`` within
    ``max_iter`` iterations.
    """
    d = grid.dim
    if tol is None:
        tol = DEFAULT_TOL_FACTOR * grid.length
    ws = workspace(grid)
    xi_interp = FieldInterpolator(grid, xi, order=order)
    grad_xi = gradient_values(xi, ws).reshape((d * d,) + grid.shape)
    grad_interp = FieldInterpolator(grid, grad_xi, order=order)

    x = grid.coordinates().reshape(d, -1)
    a = x - xi.reshape(d, -1)

    def residual(pts: np.ndarray, targets: np.ndarray) -> np.ndarray:
        return grid.wrap_centered(pts + xi_interp.at(pts) - targets)

    r = residual(a, x)
    rnorm = np.max(np.abs(r), axis=0)
    for _ in range(max_iter):
        active = rnorm > tol
        if not active.any():
            break
        a_act = a[:, active]
        x_act = x[:, active]
        r_act = r[:, active]
        jac = grad_interp.at(a_act).reshape(d, d, -1)
        for i in range(d):
            jac[i, i] += 1.0
        delta = _solve_pointwise(jac, r_act)
        step = 1.0
        trial = a_act - delta
        r_trial = residual(trial, x_act)
        rn_old = np.max(np.abs(r_act), axis=0)
        for _ in range(3):
            rn_new = np.max(np.abs(r_trial), axis=0)
            worse = rn_new > rn_old
            if not worse.any():
                break
            step *= 0.5
            trial[:, worse] = a_act[:, worse] - step * delta[:, worse]
            r_trial[:, worse] = residual(trial[:, worse], x_act[:, worse])
        a[:, active] = trial
        r[:, active] = r_trial
        rnorm[active] = np.max(np.abs(r_trial), axis=0)
    else:
        worst = float(rnorm.max())
        raise NonInvertible(
            f"map inversion stalled: residual {worst:.3e} > tol {tol:.3e} "
            f"after {max_iter} iterations (reduce dt or the reset interval)"
        )
    beta = grid.wrap_centered(a - x).reshape((d,) + grid.shape)
    return beta


# ---------------------------------------------------------------------------
# ensemble container
# ---------------------------------------------------------------------------


class FlowEnsemble:
    """Forward and inverse map displacements for an ensemble of realizations.

    ``mode == "shared"``: ``xi``/``beta`` have shape ``(d,) + grid.shape``
    and apply to every realization; ``mode == "general"``: shape
    ``(M, d) + grid.shape``. ``shifts`` always has shape ``(M, d)``.
    """

    def __init__(
        self,
        grid: PeriodicGrid,
        realizations: int,
        order: int = 3,
        tol: float | None = None,
        max_newton: int = DEFAULT_MAX_NEWTON,
        workers: int = 1,
    ):
        self.grid = grid
        self.m = realizations
        self.order = order
        self.tol = DEFAULT_TOL_FACTOR * grid.length if tol is None else tol
        self.max_newton = max_newton
        self.workers = workers
        self.mode = "shared"
        d = grid.dim
        self.xi = np.zeros((d,) + grid.shape)
        self.shifts = np.zeros((realizations, d))
        self.beta: np.ndarray | None = np.zeros((d,) + grid.shape)
        self.steps_in_window = 0
        self.window_id = 0
        self.time_in_window = 0.0
        self._chi = None

    # -- representation helpers ------------------------------------------

    def _spawn(self) -> "FlowEnsemble":
        new = FlowEnsemble.__new__(FlowEnsemble)
        new.grid = self.grid
        new.m = self.m
        new.order = self.order
        new.tol = self.tol
        new.max_newton = self.max_newton
        new.workers = self.workers
        new.mode = self.mode
        new.xi = self.xi
        new.shifts = self.shifts
        new.beta = None
        new.steps_in_window = self.steps_in_window
        new.window_id = self.window_id
        new.time_in_window = self.time_in_window
        new._chi = None
        return new

    def reset(self) -> None:
        """Start a new label window at the identity map."""
        d = self.grid.dim
        self.mode = "shared"
        self.xi = np.zeros((d,) + self.grid.shape)
        self.shifts = np.zeros((self.m, d))
        self.beta = np.zeros((d,) + self.grid.shape)
        self.steps_in_window = 0
        self.window_id += 1
        self.time_in_window = 0.0
        self._chi = None

    def xi_general(self) -> np.ndarray:
        """Periodic core displacements as ``(M, d) + shape`` regardless of mode."""
        if self.mode == "general":
            return self.xi
        return np.broadcast_to(self.xi, (self.m,) + self.xi.shape)

    def is_identity(self) -> bool:
        return self.steps_in_window == 0

    # -- advancing ---------------------------------------------------------

    def advanced(
        self,
        u_values: np.ndarray,
        dt: float,
        noise: np.ndarray | None,
        stages: int = 1,
    ) -> "FlowEnsemble":
        """One time step of the forward maps with frozen drift ``u``.

        ``stages=1`` is the Euler-Maruyama update
        ``X += dt u(X) + dW``; ``stages=2`` integrates the noise-shifted
        deterministic flow with a two-stage (Heun) rule before adding the
        new increment, i.e. the translated-flow construction. ``noise`` is
        the pre-scaled uniform increment ``sqrt(2 nu) dW`` per realization,
        or None for a noise-free advance. Returns a new ensemble; ``self``
        is unchanged (so a step can be re-advanced with a corrected drift).
        """
        grid = self.grid
        d = grid.dim
        new = self._spawn()
        if not u_values.any():
            # zero drift: a pure uniform translation in any representation
            new.shifts = self.shifts if noise is None else self.shifts + noise
            new.steps_in_window = self.steps_in_window + 1
            new.time_in_window = self.time_in_window + dt
            return new
        drift = FieldInterpolator(grid, u_values, order=self.order)
        coords = grid.coordinates()

        if self.mode == "shared" and not self.shifts.any():
            # Single deterministic core: evaluation points are shared.
            if not self.xi.any():
                k1 = u_values.reshape(d, -1)  # nodes: no interpolation needed
            else:
                pts = (coords + self.xi).reshape(d, -1)
                k1 = drift.at(pts)
            if stages == 1:
                incr = dt * k1
            else:
                pts = (coords + self.xi).reshape(d, -1)
                k2 = drift.at(pts + dt * k1)
                incr = (0.5 * dt) * (k1 + k2)
            new.xi = self.xi + incr.reshape((d,) + grid.shape)
            new.mode = "shared"
        else:
            xi = self.xi_general()
            pts = xi.reshape(self.m, d, -1) + coords.reshape(1, d, -1)
            pts = pts + self.shifts[:, :, None]
            flat = np.moveaxis(pts, 1, 0).reshape(d, -1)
            k1 = drift.at(flat)
            if stages == 1:
                incr = dt * k1
            else:
                k2 = drift.at(flat + dt * k1)
                incr = (0.5 * dt) * (k1 + k2)
            incr = np.moveaxis(incr.reshape(d, self.m, -1), 0, 1)
            new.xi = xi + incr.reshape((self.m, d) + grid.shape)
            new.mode = "general"

        new.shifts = self.shifts if noise is None else self.shifts + noise
        new.steps_in_window = self.steps_in_window + 1
        new.time_in_window = self.time_in_window + dt
        return new

    # -- inversion ----------------------------------------------------------

    def invert(self) -> None:
        """Compute back-to-labels displacements by damped Newton on the
        periodic core of each realization."""
        if self.mode == "shared":
            self.beta = invert_core(
                self.grid, self.xi, self.order, self.tol, self.max_newton
            )
        else:
            beta = np.empty_like(self.xi)

            def _one(i: int) -> None:
                beta[i] = invert_core(
                    self.grid, self.xi[i], self.order, self.tol, self.max_newton
                )

            thread_map(_one, self.m, self.workers)
            self.beta = beta

    def _require_beta(self) -> np.ndarray:
        if self.beta is None:
            raise RuntimeError("invert() must run before using the inverse map")
        return self.beta

    def alpha_general(self) -> np.ndarray:
        """Back-to-labels displacements ``A_m - I`` as ``(M, d) + shape``.

        ``A_m(x) = B_m(x - s_m)``, realized by an exact spectral translation
        of the periodic inverse core.
        """
        beta = self._require_beta()
        ws = workspace(self.grid)
        if self.mode == "shared":
            beta_m = np.broadcast_to(beta, (self.m,) + beta.shape)
        else:
            beta_m = beta
        translated = translate_batch(beta_m, self.shifts, ws)
        return translated - self.shifts[(...,) + (None,) * self.grid.dim]

    # -- derived quantities --------------------------------------------------

    def grad_x_core(self) -> np.ndarray:
        """Forward-map Jacobian ``grad[..., i, j, sp] = d(X_i)/d(a_j)``,
        identity included (uniform shifts do not contribute). Shared mode
        returns one matrix field; general mode one per realization."""
        ws = workspace(self.grid)
        g = gradient_values(self.xi, ws)
        d = self.grid.dim
        idx = np.arange(d)
        if self.mode == "shared":
            g[idx, idx] += 1.0
        else:
            g[:, idx, idx] += 1.0
        return g

    def shift_multiplier(self, ws: SpectralWorkspace) -> np.ndarray:
        """Cached empirical characteristic function of this ensemble's
        uniform shifts (the translate-averaging multiplier)."""
        if self._chi is None:
            from .spectral import shift_mean_multiplier

            self._chi = shift_mean_multiplier(self.shifts, ws)
        return self._chi

    def max_det_deviation(self) -> float:
        """``max |det(grad X) - 1|`` over grid and realizations, without
        materializing per-realization copies in shared mode."""
        det = _det_from_grad(self.grad_x_core(), self.grid.dim)
        return float(np.max(np.abs(det - 1.0)))

    def det_jacobian(self) -> np.ndarray:
        """Pointwise ``det(grad X)`` per realization, shape ``(M,) + shape``."""
        g = self.grad_x_core()
        det = _det_from_grad(g, self.grid.dim)
        if self.mode == "shared":
            det = np.broadcast_to(det, (self.m,) + det.shape)
        return det

    def max_condition_estimate(self) -> float:
        """Frobenius condition number ``||J||_F ||J^{-1}||_F`` of the
        forward-map Jacobian, maximized over the grid (and realizations).
        Values above ~1e6 signal an ill-conditioned label window."""
        g = self.grad_x_core()
        d = self.grid.dim
        det = _det_from_grad(g, d)
        mat_axes = (0, 1) if self.mode == "shared" else (1, 2)
        fro2 = np.sum(g**2, axis=mat_axes)
        adj_fro2 = _adjugate_frobenius_sq(g, d, mat_axes)
        cond = np.sqrt(fro2 * adj_fro2) / np.abs(det)
        return float(np.max(cond))

    def composition_residual(self) -> float:
        """``max |X(A(x)) - x|`` over grid and realizations."""
        beta = self._require_beta()
        grid = self.grid
        d = grid.dim
        coords = grid.coordinates().reshape(d, -1)
        if self.mode == "shared":
            pts = coords + beta.reshape(d, -1)
            xi_interp = FieldInterpolator(grid, self.xi, order=self.order)
            res = grid.wrap_centered(pts + xi_interp.at(pts) - coords)
            return float(np.max(np.abs(res)))
        worst = 0.0
        for i in range(self.m):
            pts = coords + beta[i].reshape(d, -1)
            xi_interp = FieldInterpolator(grid, self.xi[i], order=self.order)
            res = grid.wrap_centered(pts + xi_interp.at(pts) - coords)
            worst = max(worst, float(np.max(np.abs(res))))
        return worst


def _adjugate_frobenius_sq(g: np.ndarray, d: int, mat_axes: tuple) -> np.ndarray:
    """``||adj J||_F^2`` for matrix fields (axes ``mat_axes`` index i, j)."""
    if d == 1:
        return np.ones(np.sum(g, axis=mat_axes).shape)
    if d == 2:
        # the 2x2 adjugate is a rotation of J itself
        return np.sum(g**2, axis=mat_axes)
    idx = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]

    def entry(i: int, j: int) -> np.ndarray:
        return np.take(np.take(g, i, axis=mat_axes[0]), j, axis=mat_axes[0])

    total = 0.0
    for _, i1, i2 in idx:
        for _, j1, j2 in idx:
            cof = entry(i1, j1) * entry(i2, j2) - entry(i1, j2) * entry(i2, j1)
            total = total + cof**2
    return total


def _det_from_grad(g: np.ndarray, d: int) -> np.ndarray:
    """Determinant of matrix fields ``g`` with axes ``(..., i, j, spatial)``."""
    if d == 1:
        return g[..., 0, 0, :]
    if d == 2:
        return (
            g[..., 0, 0, :, :] * g[..., 1, 1, :, :]
            - g[..., 0, 1, :, :] * g[..., 1, 0, :, :]
        )
    a = g[..., 0, 0, :, :, :]
    b = g[..., 0, 1, :, :, :]
    c = g[..., 0, 2, :, :, :]
    e = g[..., 1, 0, :, :, :]
    f = g[..., 1, 1, :, :, :]
    h = g[..., 1, 2, :, :, :]
    p = g[..., 2, 0, :, :, :]
    q = g[..., 2, 1, :, :, :]
    r = g[..., 2, 2, :, :, :]
    return a * (f * r - h * q) - b * (e * r - h * p) + c * (e * q - f * p)


def translate_batch(
    values: np.ndarray, shifts: np.ndarray, ws: SpectralWorkspace
) -> np.ndarray:
    """``out[m] = values[m](x - shifts[m])`` by spectral phase shifts.

    ``values``: ``(M, c) + shape`` (or ``(M,) + shape``); exact for
    band-limited fields.
    """
    d = ws.grid.dim
    squeeze = values.ndim == 1 + d
    if squeeze:
        values = values[:, None]
    coeffs = ws.fft(values)
    m = shifts.shape[0]
    phase = np.ones((m,) + ws.spectral_shape, dtype=complex)
    for j in range(d):
        k1d = np.ravel(ws.k_full[j])
        pj = np.exp(-1j * shifts[:, j][:, None] * k1d[None, :])
        shape = [m] + [1] * d
        shape[1 + j] = k1d.shape[0]
        phase = phase * pj.reshape(shape)
    out = ws.ifft(coeffs * phase[:, None])
    return out[:, 0] if squeeze else out


# ---------------------------------------------------------------------------
# SPDE residual diagnostic
# ---------------------------------------------------------------------------


def spde_residual_flows(
    flow_prev: FlowEnsemble,
    flow_next: FlowEnsemble,
    u_values: np.ndarray,
    noise: np.ndarray,
    nu: float,
    dt: float,
) -> np.ndarray:
    """Residual between two consecutive inverted states of one window.

    Raises when the pair spans a label reset, since back-to-labels maps of
    different windows do not satisfy one evolution equation.
    """
    if flow_prev.window_id != flow_next.window_id:
        raise ValueError("residual window crosses a label reset")
    if flow_next.steps_in_window != flow_prev.steps_in_window + 1:
        raise ValueError("flows are not consecutive steps of one window")
    return spde_residual(
        flow_prev.grid,
        flow_prev.alpha_general(),
        flow_next.alpha_general(),
        u_values,
        noise,
        nu,
        dt,
    )


def spde_residual(
    grid: PeriodicGrid,
    alpha_prev: np.ndarray,
    alpha_next: np.ndarray,
    u_values: np.ndarray,
    noise: np.ndarray,
    nu: float,
    dt: float,
) -> np.ndarray:
    """Discrete residual of the back-to-labels evolution equation.

    Checks, per realization, how well the stored maps satisfy

        dA + (u . grad) A dt - nu Lap A dt + sqrt(2 nu) (grad A) dW = 0

    over one step, with ``A = x + alpha`` and ``noise = sqrt(2 nu) dW``.
    Both ``alpha`` arrays must come from the same label window. Returns the
    grid L2 norm of the residual for each realization.
    """
    if alpha_prev.shape != alpha_next.shape:
        raise ValueError("alpha arrays disagree in shape")
    ws = workspace(grid)
    d = grid.dim
    grad_a = gradient_values(alpha_prev, ws)  # (M, d, d, spatial)
    lap_a = laplacian_values(alpha_prev, ws)
    advect = np.einsum("mij...,j...->mi...", grad_a, u_values)
    stretch = np.einsum("mij...,mj->mi...", grad_a, noise)
    noise_uniform = noise[(...,) + (None,) * d]
    res = (
        (alpha_next - alpha_prev)
        + dt * (u_values[None] + advect - nu * lap_a)
        + (noise_uniform + stretch)
    )
    return np.sqrt(np.sum(res**2, axis=tuple(range(1, res.ndim))) * grid.cell_volume)
