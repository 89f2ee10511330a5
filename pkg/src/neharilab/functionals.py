"""Energy ingredients of the variational problem.

On the truncated radial domain the energy-space norm is

    ||u||^2 = omega_N * int (u'^2 + V u^2) r^(N-1) dr

with central differences (one-sided closure at both ends, hard zero at r = R)
so the discrete inner product is the bilinear form of a symmetric positive
definite matrix G built once per (grid, potential) pair.

The nonlocal interaction

    B(u) = int int b(y)|u(y)|^p b(x)|u(x)|^p / (|x|^a |x-y|^mu |y|^a) dx dy

has two independent engines in N = 3:

* radial: the angular integral collapses to the closed-form kernel
      k_mu(r, s) = ((r+s)^(2-mu) - |r-s|^(2-mu)) / (r s (2-mu))      (mu != 2)
      k_2(r, s)  = log((r+s)/|r-s|) / (r s)
  giving B = 8 pi^2 II f(r) f(s) r^(2-a) s^(2-a) k_mu(r, s) dr ds with
  f = b u^p.  Diagonal cells integrate the lone singular factor |r-s|^(2-mu)
  analytically over the cell; all smooth factors are frozen at cell centers.
* direct: O(m^6) midpoint pair sum over a Cartesian box, plus a self-cell
  correction f(x)^2 |x|^(-2a) * 4 pi rho^(3-mu)/(3-mu) * h^3 per node with
  rho the equal-volume-sphere radius (3 h^3 / 4 pi)^(1/3).

Both engines evaluate B through the nonlocal potential w_u, so the discrete
identity D(u, u) = B(u) holds exactly.
"""

from __future__ import annotations

import warnings
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    GridTooLarge,
    KernelDomain,
    LengthMismatch,
    NotInPositiveCone,
    SingularMassWarning,
    UnsupportedDimension,
)
from .grid import GridFunction
from .params import ProblemParams

DEFAULT_FLOOR_FACTOR = 1e-10
_DIRECT_MAX_M = 24


@dataclass(frozen=True)
class ReducedTriple:
    """The scalars (E, A, B) = (||u||^2, A(u), B(u)); fields may be arrays."""

    E: float
    A: float
    B: float

    def as_tuple(self):
        return self.E, self.A, self.B


# --------------------------------------------------------------------------
# workspace: per-(grid, params) cached operators
# --------------------------------------------------------------------------

class FunctionalWorkspace:
    def __init__(self, grid, params: ProblemParams):
        self.grid = grid
        self.params = params
        r = grid.radii
        self.a = params.a_values(r)
        self.b = params.b_values(r)
        self.V = params.v_values(r)
        if grid.kind == "radial":
            self._build_radial_operator()
            self._K = None  # built lazily (depends on mu only through params)
        self._cho = None

    # -- radial operator -----------------------------------------------------

    def _build_radial_operator(self):
        g = self.grid
        r, w, M = g.nodes, g.weights, g.M
        D = np.zeros((M, M))
        D[0, 0] = -1.0 / (r[1] - r[0])
        D[0, 1] = 1.0 / (r[1] - r[0])
        idx = np.arange(1, M - 1)
        D[idx, idx - 1] = -1.0 / (r[idx + 1] - r[idx - 1])
        D[idx, idx + 1] = 1.0 / (r[idx + 1] - r[idx - 1])
        D[M - 1, M - 1] = -1.0 / (g.R - r[M - 1])  # hard zero at r = R
        G = g.omega * (D.T @ (w[:, None] * D) + np.diag(w * self.V))
        self.G = 0.5 * (G + G.T)
        self.D = D

    def cho(self):
        if self._cho is None:
            self._cho = cho_factor(self.G)
        return self._cho

    def solve_G(self, rhs):
        return cho_solve(self.cho(), rhs)

    def solve_shifted(self, diag, rhs):
        """Solve (G + diag(diag)) z = rhs; the shift must keep it SPD."""
        return np.linalg.solve(self.G + np.diag(diag), rhs)

    # -- kernel ---------------------------------------------------------------

    def kernel(self):
        if self._K is not None:
            return self._K
        g, mu = self.grid, self.params.mu
        if g.dim != 3:
            raise UnsupportedDimension("the radial nonlocal kernel is implemented for N = 3")
        if not (0.0 < mu < 3.0):
            raise KernelDomain(f"mu must lie in (0, 3), got {mu}")
        r, d = g.nodes, g.cell_widths
        rr, ss = r[:, None], r[None, :]
        if abs(mu - 2.0) > 1e-13:
            e = 2.0 - mu
            with np.errstate(divide="ignore"):
                K = ((rr + ss) ** e - np.abs(rr - ss) ** e) / (rr * ss * e)
            diag = ((2.0 * r) ** e - 2.0 * d**e / ((3.0 - mu) * (4.0 - mu))) / (r * r * e)
        else:
            with np.errstate(divide="ignore"):
                K = np.log((rr + ss) / np.abs(rr - ss)) / (rr * ss)
            diag = (np.log(2.0 * r / d) + 1.5) / (r * r)
        np.fill_diagonal(K, diag)
        self._K = K
        return K

    # -- integrals ------------------------------------------------------------

    def space_integral(self, vals) -> float:
        """Integral over R^N of a nodal integrand (angular factor included)."""
        g = self.grid
        if g.kind == "radial":
            return float(g.omega * (g.weights @ vals))
        return float(g.h**3 * np.sum(vals))

    def wnorm(self, vals) -> float:
        """Quadrature-weighted L^2 norm of a nodal field."""
        return float(np.sqrt(self.space_integral(np.asarray(vals) ** 2)))

    def norm_sq(self, u_vals) -> float:
        g = self.grid
        if g.kind == "radial":
            return float(u_vals @ (self.G @ u_vals))
        return self.inner(u_vals, u_vals)

    def inner(self, u_vals, phi_vals) -> float:
        g = self.grid
        if g.kind == "radial":
            return float(u_vals @ (self.G @ phi_vals))
        m, h = g.m, g.h
        u3 = u_vals.reshape(m, m, m)
        p3 = phi_vals.reshape(m, m, m)
        total = np.sum(self.V * u_vals * phi_vals)
        for ax in range(3):
            du = _forward_diff(u3, ax, h)
            dp = _forward_diff(p3, ax, h)
            total += np.sum(du * dp)
        return float(h**3 * total)

    def apply_G(self, u_vals):
        return self.G @ u_vals

    # -- nonlocal potential ----------------------------------------------------

    def w_u(self, u_vals) -> np.ndarray:
        """w_u(x) = int b(y)|u(y)|^p / (|x|^a |x-y|^mu |y|^a) dy at the nodes."""
        params, g = self.params, self.grid
        f = self.b * np.abs(u_vals) ** params.p
        if g.kind == "radial":
            K = self.kernel()
            r = g.nodes
            return 2.0 * np.pi * r ** (-params.alpha) * (K @ (f * r ** (-params.alpha) * g.weights))
        return self._w_u_direct(f)

    def _w_u_direct(self, f) -> np.ndarray:
        g, params = self.grid, self.params
        if g.m > _DIRECT_MAX_M:
            raise GridTooLarge(f"direct engine limited to m <= {_DIRECT_MAX_M}, got {g.m}")
        if not (0.0 < params.mu < 3.0):
            raise KernelDomain(f"mu must lie in (0, 3), got {params.mu}")
        X, h, mu, alpha = g.points, g.h, params.mu, params.alpha
        rad = g.radii
        gv = f * rad ** (-alpha)
        n = len(gv)
        out = np.empty(n)
        block = max(1, int(2**22 // n))
        for s0 in range(0, n, block):
            sl = slice(s0, min(s0 + block, n))
            d = np.linalg.norm(X[sl, None, :] - X[None, :, :], axis=2)
            with np.errstate(divide="ignore"):
                Kb = d ** (-mu)
            rows = np.arange(sl.start, sl.stop)
            Kb[np.arange(len(rows)), rows] = 0.0
            out[sl] = Kb @ gv * h**3
        rho = (3.0 * h**3 / (4.0 * np.pi)) ** (1.0 / 3.0)
        out += gv * 4.0 * np.pi * rho ** (3.0 - mu) / (3.0 - mu)
        return rad ** (-alpha) * out


_workspaces: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _params_key(params: ProblemParams):
    return (params.alpha, params.mu, params.p, params.q, params.gamma3,
            params.gamma4, params.v_form, params.b_form)


def workspace(grid, params: ProblemParams) -> FunctionalWorkspace:
    """Fetch (or build) the cached operator workspace for (grid, params)."""
    per_grid = _workspaces.setdefault(grid, {})
    key = _params_key(params)
    ws = per_grid.get(key)
    if ws is None:
        ws = FunctionalWorkspace(grid, params)
        per_grid[key] = ws
    return ws


def _forward_diff(u3, axis, h):
    shifted = np.roll(u3, -1, axis=axis)
    index = [slice(None)] * 3
    index[axis] = -1
    shifted[tuple(index)] = 0.0  # zero extension beyond the box
    return (shifted - u3) / h


def _require_cone(u: GridFunction):
    if not u.in_positive_cone:
        raise NotInPositiveCone("function must be nonnegative and not identically zero")


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------

def norm_sq(u: GridFunction, params: ProblemParams) -> float:
    """Energy-space norm squared ||u||^2 (Dirichlet zero beyond r = R)."""
    return workspace(u.grid, params).norm_sq(u.values)


def inner(u: GridFunction, phi: GridFunction, params: ProblemParams) -> float:
    """Discrete inner product <u, phi>; matches norm_sq by polarization."""
    if phi.grid is not u.grid:
        raise LengthMismatch("u and phi must share a grid")
    return workspace(u.grid, params).inner(u.values, phi.values)


def weight_a(u: GridFunction, params: ProblemParams) -> float:
    """A(u) = int a(x) |u|^q dx."""
    ws = workspace(u.grid, params)
    return ws.space_integral(ws.a * np.abs(u.values) ** params.q)


def nonlocal_potential(u: GridFunction, params: ProblemParams) -> GridFunction:
    """The potential w_u generated by b|u|^p through the weighted kernel."""
    ws = workspace(u.grid, params)
    return GridFunction(u.grid, ws.w_u(u.values))


def steinweiss_B_radial(u: GridFunction, params: ProblemParams) -> float:
    """B(u) on a radial grid via the closed-form angular kernel (N = 3)."""
    if u.grid.kind != "radial":
        raise UnsupportedDimension("radial engine needs a radial grid")
    ws = workspace(u.grid, params)
    f = ws.b * np.abs(u.values) ** params.p
    return ws.space_integral(f * ws.w_u(u.values))


def steinweiss_B_direct(u: GridFunction, params: ProblemParams) -> float:
    """B(u) by brute-force pair summation on a Cartesian box (m <= 24)."""
    if u.grid.kind != "cartesian":
        raise UnsupportedDimension("direct engine needs a Cartesian grid")
    ws = workspace(u.grid, params)
    f = ws.b * np.abs(u.values) ** params.p
    return ws.space_integral(f * ws.w_u(u.values))


def steinweiss_B(u: GridFunction, params: ProblemParams) -> float:
    """Dispatch B(u) to the grid's engine."""
    if u.grid.kind == "radial":
        return steinweiss_B_radial(u, params)
    return steinweiss_B_direct(u, params)


def floored_fraction(u: GridFunction, params: ProblemParams,
                     floor_factor: float = DEFAULT_FLOOR_FACTOR) -> float:
    """Quadrature-mass share of the domain where u < floor."""
    ws = workspace(u.grid, params)
    eps = floor_factor * float(np.max(u.values))
    below = (u.values < eps).astype(float)
    return ws.space_integral(below) / ws.space_integral(np.ones_like(u.values))


def singular_action(u: GridFunction, phi: GridFunction, params: ProblemParams,
                    floor_factor: float = DEFAULT_FLOOR_FACTOR) -> float:
    """H(u, phi) = int a u^(q-1) phi dx with u floored at floor_factor*max(u).

    Emits SingularMassWarning when floored nodes contribute more than 1% of
    the integrand's absolute mass: the evaluation is then floor-dominated
    rather than genuine.  (The plain quadrature-mass share of {u < eps} is
    reported separately by floored_fraction; a fast-decaying trial profile
    can floor most of the domain's volume while contributing nothing to H.)
    """
    _require_cone(u)
    ws = workspace(u.grid, params)
    eps = floor_factor * float(np.max(u.values))
    uf = np.maximum(u.values, eps)
    integrand = ws.a * uf ** (params.q - 1.0) * phi.values
    total_abs = ws.space_integral(np.abs(integrand))
    if total_abs > 0.0:
        floored_share = ws.space_integral(np.abs(integrand) * (u.values < eps)) / total_abs
        if floored_share > 0.01:
            warnings.warn(
                f"floor-dominated evaluation: floored nodes carry {floored_share:.3%} "
                "of the singular integrand",
                SingularMassWarning,
                stacklevel=2,
            )
    return ws.space_integral(integrand)


def nonlocal_action(u: GridFunction, phi: GridFunction, params: ProblemParams) -> float:
    """D(u, phi) = int b |u|^(p-2) u phi w_u dx; D(u, u) = B(u) exactly."""
    ws = workspace(u.grid, params)
    uv = u.values
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = ws.b * np.abs(uv) ** (params.p - 2.0) * uv
    fac[uv == 0.0] = 0.0  # |u|^(p-2) u -> 0 as u -> 0 for p > 1
    return ws.space_integral(fac * ws.w_u(uv) * phi.values)


def reduced_triple(u: GridFunction, params: ProblemParams) -> ReducedTriple:
    """Bundle (||u||^2, A(u), B(u)); u must lie in the positive cone."""
    _require_cone(u)
    return ReducedTriple(
        E=norm_sq(u, params),
        A=weight_a(u, params),
        B=steinweiss_B(u, params),
    )


def energy(u: GridFunction, lam: float, params: ProblemParams) -> float:
    """J_lambda(u) = ||u||^2/2 - (lambda/q) A(u) - B(u)/(2p)."""
    t = reduced_triple(u, params)
    return 0.5 * t.E - lam / params.q * t.A - t.B / (2.0 * params.p)


def energy_from_triple(triple: ReducedTriple, lam: float, params: ProblemParams) -> float:
    return 0.5 * triple.E - lam / params.q * triple.A - triple.B / (2.0 * params.p)


def gradient_action(u: GridFunction, phi: GridFunction, lam: float,
                    params: ProblemParams,
                    floor_factor: float = DEFAULT_FLOOR_FACTOR) -> float:
    """J'_lambda(u)[phi] = <u, phi> - lambda H(u, phi) - D(u, phi)."""
    return (
        inner(u, phi, params)
        - lam * singular_action(u, phi, params, floor_factor)
        - nonlocal_action(u, phi, params)
    )


def strong_form_defect(u: GridFunction, lam: float, params: ProblemParams,
                       floor_factor: float = DEFAULT_FLOOR_FACTOR,
                       include_nonlocal: bool = True,
                       source=None) -> np.ndarray:
    """Nodal Euler-Lagrange defect d with sum_i d_i phi_i w_i = J'(u)[phi].

    d_i = (G u)_i/(omega w_i) - lambda a_i max(u_i, eps)^(q-1)
          - b_i u_i^(p-1) (w_u)_i  [- source_i]

    Radial grids only (the solver's habitat).
    """
    if u.grid.kind != "radial":
        raise UnsupportedDimension("strong-form defect implemented on radial grids")
    ws = workspace(u.grid, params)
    g = u.grid
    uv = u.values
    eps = floor_factor * float(np.max(uv))
    uf = np.maximum(uv, eps)
    d = ws.apply_G(uv) / (g.omega * g.weights)
    if lam != 0.0:
        d = d - lam * ws.a * uf ** (params.q - 1.0)
    if include_nonlocal:
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = ws.b * np.abs(uv) ** (params.p - 2.0) * uv
        fac[uv == 0.0] = 0.0
        d = d - fac * ws.w_u(uv)
    if source is not None:
        d = d - np.asarray(source, dtype=float)
    return d
