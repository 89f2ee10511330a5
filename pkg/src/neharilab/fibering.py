"""Exact scalar algebra of the fibering map on a reduced triple (E, A, B).

Everything here is a function of the three scalars E = ||u||^2, A = A(u),
B = B(u) and the exponents (p, q); no grids are involved.  The central
objects:

    phi(t)   = t^2 E/2 - lambda t^q A/q - t^(2p) B/(2p)        (ray energy)
    Q_n(t)   = (t^(2-q) E - t^(2p-q) B) / A                    (Nehari quotient)
    Q_e(t)   = q (t^(2-q) E/2 - t^(2p-q) B/(2p)) / A           (zero-energy quotient)

Q_n is unimodal with maximizer t_n = ((2-q)E / ((2p-q)B))^(1/(2p-2)) and
maximum Lambda_n = C_pq E^((2p-q)/(2p-2)) / (A B^((2-q)/(2p-2))); Q_e peaks at
t_e = p^(1/(2p-2)) t_n with maximum Lambda_e = ratio * Lambda_n.  For
lambda < Lambda_n the equation Q_n(t) = lambda has exactly two roots

    t_plus < t_n < t_minus,

the ray's projections onto the two Nehari branches.  All functions accept
numpy arrays in the triple fields and in t.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .errors import NonpositiveT, NotNormalized, RootBracketFailure, ZeroA, ZeroB
from .functionals import ReducedTriple
from .params import fibering_constants

ROOT_RTOL = 1e-12        # |Q_n(t) - lambda| <= ROOT_RTOL * Lambda_n
DOUBLE_ROOT_BAND = 1e-12  # |lambda - Lambda_n| <= band * Lambda_n -> tangency
CLASSIFY_RTOL = 1e-9


def _check_t(t):
    if np.any(np.asarray(t) <= 0.0):
        raise NonpositiveT("fibering maps are defined for t > 0")


def _check_A(triple):
    if np.any(np.asarray(triple.A) <= 0.0):
        raise ZeroA("quotients need A > 0")


def _check_B(triple):
    if np.any(np.asarray(triple.B) <= 0.0):
        raise ZeroB("critical points need B > 0")


def scale_triple(triple: ReducedTriple, s, p: float, q: float) -> ReducedTriple:
    """Triple of s*u: (E, A, B) -> (s^2 E, s^q A, s^(2p) B)."""
    return ReducedTriple(E=s**2 * triple.E, A=s**q * triple.A, B=s ** (2 * p) * triple.B)


# --- fibering map -----------------------------------------------------------

def phi(t, triple: ReducedTriple, lam, p: float, q: float):
    _check_t(t)
    t = np.asarray(t, dtype=float) if not np.isscalar(t) else t
    return t**2 * triple.E / 2.0 - lam * t**q * triple.A / q - t ** (2 * p) * triple.B / (2 * p)


def phi_prime(t, triple: ReducedTriple, lam, p: float, q: float):
    _check_t(t)
    return t * triple.E - lam * t ** (q - 1) * triple.A - t ** (2 * p - 1) * triple.B


def phi_second(t, triple: ReducedTriple, lam, p: float, q: float):
    _check_t(t)
    return (
        triple.E
        - (q - 1) * lam * t ** (q - 2) * triple.A
        - (2 * p - 1) * t ** (2 * (p - 1)) * triple.B
    )


# --- nonlinear Rayleigh quotients on the ray ---------------------------------

def q_n(t, triple: ReducedTriple, p: float, q: float):
    _check_t(t)
    _check_A(triple)
    return (t ** (2 - q) * triple.E - t ** (2 * p - q) * triple.B) / triple.A


def q_n_prime(t, triple: ReducedTriple, p: float, q: float):
    _check_t(t)
    _check_A(triple)
    return (
        (2 - q) * t ** (1 - q) * triple.E - (2 * p - q) * t ** (2 * p - q - 1) * triple.B
    ) / triple.A


def q_e(t, triple: ReducedTriple, p: float, q: float):
    _check_t(t)
    _check_A(triple)
    return q * (t ** (2 - q) * triple.E / 2.0 - t ** (2 * p - q) * triple.B / (2 * p)) / triple.A


def q_e_prime(t, triple: ReducedTriple, p: float, q: float):
    _check_t(t)
    _check_A(triple)
    return (
        q
        * ((2 - q) / 2.0 * t ** (1 - q) * triple.E
           - (2 * p - q) / (2 * p) * t ** (2 * p - q - 1) * triple.B)
        / triple.A
    )


# --- closed-form critical points and values ----------------------------------

def t_max_n(triple: ReducedTriple, p: float, q: float):
    """Maximizer of Q_n: ((2-q)E / ((2p-q)B))^(1/(2p-2)), in log space."""
    _check_B(triple)
    return np.exp(
        (np.log((2 - q) * np.asarray(triple.E)) - np.log((2 * p - q) * np.asarray(triple.B)))
        / (2 * p - 2)
    )


def t_max_e(triple: ReducedTriple, p: float, q: float):
    """Maximizer of Q_e: p^(1/(2p-2)) * t_n > t_n."""
    return p ** (1.0 / (2 * p - 2)) * t_max_n(triple, p, q)


def lambda_n(triple: ReducedTriple, p: float, q: float):
    """Lambda_n = max_t Q_n(t), evaluated in log space."""
    _check_A(triple)
    _check_B(triple)
    C = fibering_constants(p, q)
    kappa = (2 * p - q) / (2 * p - 2)
    nu = (2 - q) / (2 * p - 2)
    return C.c_pq * np.exp(
        kappa * np.log(np.asarray(triple.E))
        - np.log(np.asarray(triple.A))
        - nu * np.log(np.asarray(triple.B))
    )


def lambda_e(triple: ReducedTriple, p: float, q: float):
    """Lambda_e = max_t Q_e(t) = ratio * Lambda_n."""
    return fibering_constants(p, q).ratio * lambda_n(triple, p, q)


# --- Nehari roots -------------------------------------------------------------

@dataclass(frozen=True)
class TwoRoots:
    t_plus: float
    t_minus: float
    t_n: float


@dataclass(frozen=True)
class DoubleRoot:
    t_n: float


@dataclass(frozen=True)
class NoRoot:
    t_n: float
    lambda_n: float


RootsResult = Union[TwoRoots, DoubleRoot, NoRoot]


def _refine_root(f, lo, hi, flo, fhi, tol):
    """Safeguarded bisection/secant hybrid; returns t with |f(t)| <= tol.

    False position on a sign-changing bracket with the Illinois modification
    (a retained endpoint has its value halved) so neither endpoint goes
    stale, falling back to bisection whenever the secant step leaves the
    bracket.
    """
    side = 0
    for _ in range(300):
        denom = fhi - flo
        t = (lo * fhi - hi * flo) / denom if denom != 0.0 else 0.5 * (lo + hi)
        if not (lo < t < hi):
            t = 0.5 * (lo + hi)
        ft = f(t)
        if abs(ft) <= tol:
            return t
        if flo * ft < 0.0:
            hi, fhi = t, ft
            if side == -1:
                flo *= 0.5
            side = -1
        else:
            lo, flo = t, ft
            if side == +1:
                fhi *= 0.5
            side = +1
        if hi - lo <= 4.0 * np.finfo(float).eps * max(abs(hi), 1e-300):
            if abs(ft) <= tol:
                return t
            raise RootBracketFailure(
                f"bracket collapsed with |residual| = {abs(ft):.3e} > {tol:.3e}"
            )
    raise RootBracketFailure(f"root refinement stalled above tolerance {tol:.3e}")


def nehari_roots(triple: ReducedTriple, lam: float, p: float, q: float) -> RootsResult:
    """Solve Q_n(t) = lambda on the ray.

    lambda < Lambda_n: TwoRoots with t_plus in (0, t_n), t_minus in (t_n, inf),
    each refined to |Q_n(t) - lambda| <= 1e-12 Lambda_n; the second-derivative
    signs phi''(t_plus) > 0 > phi''(t_minus) are asserted.  Within the
    tangency band |lambda - Lambda_n| <= 1e-12 Lambda_n: DoubleRoot(t_n).
    Above: NoRoot.
    """
    if lam <= 0.0:
        raise NonpositiveT("nehari_roots needs lambda > 0")
    _check_A(triple)
    _check_B(triple)
    tn = float(t_max_n(triple, p, q))
    Ln = float(lambda_n(triple, p, q))
    if abs(lam - Ln) <= DOUBLE_ROOT_BAND * Ln:
        return DoubleRoot(t_n=tn)
    if lam > Ln:
        return NoRoot(t_n=tn, lambda_n=Ln)

    def f(t):
        return float(q_n(t, triple, p, q)) - lam

    tol = ROOT_RTOL * Ln
    # bracket t_plus in (lo, t_n]
    lo = tn
    flo = f(lo)
    for _ in range(2000):
        lo *= 0.5
        flo = f(lo)
        if flo < 0.0:
            break
    else:  # pragma: no cover
        raise RootBracketFailure("could not bracket t_plus")
    t_plus = _refine_root(f, lo, tn, flo, Ln - lam, tol)
    # bracket t_minus in [t_n, hi)
    hi = tn
    fhi = f(hi)
    for _ in range(2000):
        hi *= 2.0
        fhi = f(hi)
        if fhi < 0.0:
            break
    else:  # pragma: no cover
        raise RootBracketFailure("could not bracket t_minus")
    t_minus = _refine_root(lambda t: -f(t), tn, hi, -(Ln - lam), -fhi, tol)

    if not (phi_second(t_plus, triple, lam, p, q) > 0.0 > phi_second(t_minus, triple, lam, p, q)):
        raise RootBracketFailure("second-derivative signs violated at the refined roots")
    return TwoRoots(t_plus=float(t_plus), t_minus=float(t_minus), t_n=tn)


# --- Nehari branch classification ----------------------------------------------

class Branch(Enum):
    NPLUS = "Nplus"
    NMINUS = "Nminus"
    NZERO = "Nzero"
    NOT_ON_NEHARI = "NotOnNehari"


def classify(triple: ReducedTriple, lam: float, p: float, q: float,
             rtol: float = CLASSIFY_RTOL) -> Branch:
    """Classify the point t = 1 of the ray by the signs of phi'(1), phi''(1)."""
    scale = max(triple.E, lam * triple.A, triple.B)
    d1 = phi_prime(1.0, triple, lam, p, q)
    d2 = phi_second(1.0, triple, lam, p, q)
    if abs(d1) > rtol * scale:
        return Branch.NOT_ON_NEHARI
    if abs(d2) <= rtol * scale:
        return Branch.NZERO
    return Branch.NPLUS if d2 > 0.0 else Branch.NMINUS


# --- degenerate-point identities -------------------------------------------------

def normalize_degenerate(triple: ReducedTriple, p: float, q: float) -> ReducedTriple:
    """Rescale so the double root sits at t = 1, then normalize E to 1.

    The ray scaling s = t_n moves the tangency point to t = 1; dividing the
    triple by its E afterwards fixes the normalization without moving t_n
    (t_n depends only on E/B, which is preserved).
    """
    s = float(t_max_n(triple, p, q))
    scaled = scale_triple(triple, s, p, q)
    return ReducedTriple(E=1.0, A=scaled.A / scaled.E, B=scaled.B / scaled.E)


@dataclass(frozen=True)
class DegenerateReport:
    lambda_star: float
    expected_A: float
    expected_B: float
    residual_A: float
    residual_B: float


def degenerate_relations_check(triple: ReducedTriple, p: float, q: float) -> DegenerateReport:
    """Residuals of the tangency identities at a normalized triple.

    Requires E = 1 and t_n = 1 (NotNormalized otherwise).  At such a triple
    the double root t = 1 at lambda = Lambda_n forces

        A = (2p-2) / (Lambda_n (2p-q)),    B = (2-q) / (2p-q).

    Residuals are relative to the expected values: the normalized A grows
    without bound as Lambda_n shrinks, so an absolute bound would be
    meaningless across scales.
    """
    if abs(triple.E - 1.0) > 1e-9:
        raise NotNormalized(f"E = {triple.E} != 1")
    tn = float(t_max_n(triple, p, q))
    if abs(tn - 1.0) > 1e-9:
        raise NotNormalized(f"t_n = {tn} != 1")
    Ln = float(lambda_n(triple, p, q))
    expected_A = (2 * p - 2) / (Ln * (2 * p - q))
    expected_B = (2 - q) / (2 * p - q)
    return DegenerateReport(
        lambda_star=Ln,
        expected_A=expected_A,
        expected_B=expected_B,
        residual_A=abs(triple.A - expected_A) / expected_A,
        residual_B=abs(triple.B - expected_B) / expected_B,
    )


# --- Rayleigh-quotient equivalences -----------------------------------------------

@dataclass(frozen=True)
class EquivalenceReport:
    rn_sign_matches_phi_prime: bool
    re_sign_matches_energy: bool
    qn_slope_matches_second_form: bool
    qe_slope_matches_first_form: bool

    @property
    def ok(self) -> bool:
        return (
            self.rn_sign_matches_phi_prime
            and self.re_sign_matches_energy
            and self.qn_slope_matches_second_form
            and self.qe_slope_matches_first_form
        )


def _signs_agree(x, y, scale) -> bool:
    x, y, scale = np.asarray(x), np.asarray(y), np.asarray(scale)
    tol = 1e-10 * scale
    zero_x, zero_y = np.abs(x) <= tol, np.abs(y) <= tol
    return bool(np.all(zero_x | zero_y | (np.sign(x) == np.sign(y))))


def rayleigh_equivalences(triple: ReducedTriple, lam: float, p: float, q: float,
                          t_samples=None) -> EquivalenceReport:
    """Sign equivalences tying the quotients to the energy derivatives.

    At t = 1: sign(R_n - lambda) = sign(phi'(1)) and
    sign(R_e - lambda) = sign(J_lambda).  Along the ray, the slope of
    R_n(t u) has the sign of the reduced second-derivative form
    (2-q)E - (2p-q) t^(2p-2) B (the lambda-eliminated phi''), and the slope
    of R_e(t u) has the sign of phi'(t) evaluated at lambda = Q_e(t).
    """
    _check_A(triple)
    if t_samples is None:
        tn = float(t_max_n(triple, p, q))
        t_samples = tn * np.logspace(-2, 2, 41)
    t_samples = np.asarray(t_samples, dtype=float)

    scale0 = max(triple.E, lam * triple.A, triple.B)
    rn = float(q_n(1.0, triple, p, q))
    re = float(q_e(1.0, triple, p, q))
    d1 = float(phi_prime(1.0, triple, lam, p, q))
    j = float(phi(1.0, triple, lam, p, q))
    rn_ok = _signs_agree(rn - lam, d1 / triple.A, scale0 / triple.A)
    re_ok = _signs_agree(re - lam, j * q / triple.A, scale0 / triple.A)

    slope_n = q_n_prime(t_samples, triple, p, q)
    second_form = (2 - q) * triple.E - (2 * p - q) * t_samples ** (2 * p - 2) * triple.B
    scale_n = (2 - q) * triple.E + (2 * p - q) * t_samples ** (2 * p - 2) * triple.B
    qn_ok = _signs_agree(slope_n, second_form / triple.A, scale_n / triple.A)

    slope_e = q_e_prime(t_samples, triple, p, q)
    lam_t = q_e(t_samples, triple, p, q)
    first_form = (
        t_samples * triple.E
        - lam_t * t_samples ** (q - 1) * triple.A
        - t_samples ** (2 * p - 1) * triple.B
    )
    scale_e = (
        t_samples * triple.E
        + np.abs(lam_t) * t_samples ** (q - 1) * triple.A
        + t_samples ** (2 * p - 1) * triple.B
    )
    qe_ok = _signs_agree(slope_e, first_form / triple.A, scale_e / triple.A)

    return EquivalenceReport(rn_ok, re_ok, qn_ok, qe_ok)


# --- one-stop report ---------------------------------------------------------------

@dataclass(frozen=True)
class FiberingReport:
    t_n: float
    t_e: float
    lambda_n: float
    lambda_e: float
    roots: RootsResult | None
    branch: Branch | None


def fibering_report(triple: ReducedTriple, p: float, q: float,
                    lam: float | None = None) -> FiberingReport:
    """Fibering structure of one triple; roots/branch only when lam is given."""
    tn = float(t_max_n(triple, p, q))
    te = float(t_max_e(triple, p, q))
    Ln = float(lambda_n(triple, p, q))
    Le = float(lambda_e(triple, p, q))
    roots = branch = None
    if lam is not None:
        roots = nehari_roots(triple, lam, p, q)
        branch = classify(triple, lam, p, q)
    return FiberingReport(t_n=tn, t_e=te, lambda_n=Ln, lambda_e=Le, roots=roots, branch=branch)
