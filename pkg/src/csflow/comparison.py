"""The chord-comparison machinery: the barrier f, the ratio a, and Z.

The normalized flow keeps total length 2*pi, and chords of an embedded curve
are controlled from below by the barrier

    f(x, t) = 2 e^t arctan(e^{-t} sin(x/2)),

where x is the (shorter) arc separation of the two points. The implicit
ratio a >= 0 of a chord/arc pair (d, l) is defined by d = f(l, -log a); it
vanishes exactly when the chord is at least the round-circle chord
2 sin(l/2), and its supremum over all pairs of a curve (including the
diagonal limit sqrt(max(k^2 - 1, 0) / 2)) gives the time offset
t_bar = log a_bar. The comparison functional is Z = d - f(l, t - t_bar).

The check_* functions sweep the closed-form identities and inequalities this
construction rests on (the linearized operator annihilating f, convexity of
arccos^2, shape properties of f, and the small-separation Taylor limits) and
return IdentityReports with measured residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ellipeinc

from .errors import DomainError
from .geometry import CurveFrame, all_pairs_chord_arc

TWO_PI = 2.0 * math.pi

# Ratios are capped at exp(LOG_A_CAP); beyond this the root of d = f(l, -log a)
# is numerically indistinguishable from infinity.
LOG_A_CAP = 700.0
A_CAP = math.exp(LOG_A_CAP)

_BISECTION_STEPS = 48
_NEWTON_STEPS = 2

# Curvature measurement floor for the diagonal ratio family (see profile).
_DIAG_NOISE_FLOOR = 1e-10


def _maybe_scalar(arr: np.ndarray, scalar: bool) -> float | np.ndarray:
    return float(arr[()]) if scalar else arr


def _validate_x(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError("arc separation must be finite")
    if np.any(x < -1e-12) or np.any(x > TWO_PI + 1e-12):
        bad = x[(x < -1e-12) | (x > TWO_PI + 1e-12)]
        raise DomainError(
            "arc separation outside [0, 2*pi]", value=float(np.ravel(bad)[0])
        )


def _uz(x, t):
    """Common pieces sin(x/2) and z = e^{-t} sin(x/2), overflow-hardened."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    _validate_x(x)
    if not np.all(np.isfinite(t)):
        raise DomainError("time argument must be finite")
    u = np.sin(0.5 * x)
    with np.errstate(over="ignore"):
        z = np.exp(-t) * u
    # e^{-t} may overflow where u == 0; the product is 0 there
    z = np.where(u == 0.0, 0.0, z)
    return u, z


def f_eval(x, t):
    """Barrier value f(x, t) = 2 e^t arctan(e^{-t} sin(x/2)).

    Evaluated as 2 sin(x/2) * arctan(z)/z with z = e^{-t} sin(x/2), which is
    finite for every real t (the limits t -> +-inf are 2 sin(x/2) and 0).

    Parameters
    ----------
    x : float or array
        Arc separation in [0, 2*pi].
    t : float or array
        Time offset, any real; broadcast against x.

    Returns
    -------
    float or ndarray
    """
    scalar = np.isscalar(x) and np.isscalar(t)
    u, z = _uz(x, t)
    safe = np.where(z > 0.0, z, 1.0)
    ratio = np.where(z > 0.0, np.arctan(safe) / safe, 1.0)
    return _maybe_scalar(np.asarray(2.0 * u * ratio), scalar)


def f_x(x, t):
    """Closed-form df/dx = cos(x/2) / (1 + e^{-2t} sin^2(x/2))."""
    scalar = np.isscalar(x) and np.isscalar(t)
    _, z = _uz(x, t)
    c = np.cos(0.5 * np.asarray(x, dtype=float))
    with np.errstate(over="ignore"):
        out = c / (1.0 + z * z)
    return _maybe_scalar(np.asarray(out), scalar)


def f_xx(x, t):
    """Closed-form d2f/dx2; strictly negative on (0, 2*pi).

    Accurate for |t| <= 350 (beyond that e^{-2t} over/underflows; no caller
    needs such offsets for a second derivative).
    """
    scalar = np.isscalar(x) and np.isscalar(t)
    u, z = _uz(x, t)
    c = np.cos(0.5 * np.asarray(x, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        e2 = np.exp(-2.0 * np.asarray(t, dtype=float))
        d = 1.0 + z * z
        out = -u * (1.0 + e2 * (1.0 + c * c)) / (2.0 * d * d)
    out = np.where(u == 0.0, 0.0, out)
    return _maybe_scalar(np.asarray(out), scalar)


def f_t(x, t):
    """Closed-form df/dt = 2 e^t g(e^{-t} sin(x/2)); positive on (0, 2*pi)."""
    scalar = np.isscalar(x) and np.isscalar(t)
    _, z = _uz(x, t)
    gz = g_eval(z)
    with np.errstate(over="ignore", invalid="ignore"):
        out = 2.0 * np.exp(np.asarray(t, dtype=float)) * gz
    # e^t may overflow only where g underflowed to 0; the product is 0
    out = np.where(gz == 0.0, 0.0, out)
    return _maybe_scalar(np.asarray(out), scalar)


def g_eval(z):
    """g(z) = arctan(z) - z/(1 + z^2), the monotonicity kernel of f.

    Positive for z > 0 and odd. The direct difference cancels badly for
    small z, so |z| < 0.01 switches to the alternating series
    (2/3)z^3 - (4/5)z^5 + ..., exact to double precision there.
    """
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        z2 = z * z
        direct = np.arctan(z) - z / (1.0 + z2)
        direct = np.where(np.isinf(z), np.sign(z) * (0.5 * math.pi), direct)
        series = z * z2 * (
            2.0 / 3.0
            - z2
            * (4.0 / 5.0 - z2 * (6.0 / 7.0 - z2 * (8.0 / 9.0 - z2 * (10.0 / 11.0))))
        )
    out = np.where(np.abs(z) < 0.01, series, direct)
    return _maybe_scalar(out, scalar)


def g_prime(z):
    """g'(z) = 2 z^2 / (1 + z^2)^2."""
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore"):
        d = 1.0 + z * z
        out = 2.0 * z * z / (d * d)
    out = np.where(np.isinf(z * z), 0.0, out)
    return _maybe_scalar(out, scalar)


def h_eval(v):
    """h(v) = arccos(v)^2 on [0, 1]; convex, which makes L dominate L-tilde."""
    scalar = np.isscalar(v)
    out = np.arccos(np.asarray(v, dtype=float)) ** 2
    return _maybe_scalar(out, scalar)


def h_second(v):
    """h''(v) = 2/(1-v^2) - 2 v arccos(v)/(1-v^2)^{3/2}, for v in [0, 1)."""
    scalar = np.isscalar(v)
    v = np.asarray(v, dtype=float)
    s = 1.0 - v * v
    out = 2.0 / s - 2.0 * v * np.arccos(v) / s**1.5
    return _maybe_scalar(out, scalar)


# -- the implicit ratio a ----------------------------------------------------

def _phi(a: np.ndarray, u: np.ndarray) -> np.ndarray:
    """phi(a) = f(l, log(1/a)) = 2 arctan(a u)/a, strictly decreasing in a."""
    return 2.0 * np.arctan(a * u) / a


def _a_root(d: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Solve phi(a) = d for a > 0, elementwise; requires d < 2u.

    Bracket: arctan(z) >= z - z^3/3 puts the root above
    sqrt(1.5 (2u - d)/u^3), and phi(pi/d) < d puts it below pi/d. Bisection
    runs in log a (the root spans many decades near the round-circle limit),
    then two Newton steps polish to ~1e-15 relative.
    """
    lo = np.sqrt(1.5 * (2.0 * u - d) / u**3)
    hi = np.minimum(np.pi / d, A_CAP)
    th_lo = np.log(lo)
    th_hi = np.maximum(np.log(hi), th_lo)
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (th_lo + th_hi)
        above = _phi(np.exp(mid), u) > d  # still left of the root
        th_lo = np.where(above, mid, th_lo)
        th_hi = np.where(above, th_hi, mid)
    th = 0.5 * (th_lo + th_hi)
    for _ in range(_NEWTON_STEPS):
        a = np.exp(th)
        resid = _phi(a, u) - d
        slope = 2.0 * g_eval(a * u) / a  # = -d phi/d(log a)
        with np.errstate(invalid="ignore", divide="ignore"):
            step = resid / slope
        th = np.clip(np.where(np.isfinite(step), th + step, th), th_lo, th_hi)
    return np.exp(th)


def a_solve(d, ell):
    """Ratio a >= 0 solving d = f(ell, -log a) for a chord/arc pair.

    Returns 0 when d >= 2 sin(ell/2) (the chord already clears the
    round-circle chord, so the infimum defining a is attained at its floor).
    Otherwise the unique positive root, to 1e-12 relative, capped at
    exp(700).

    Parameters
    ----------
    d : float or array
        Chord length, 0 < d <= ell (a hair of slack for rounding).
    ell : float or array
        Arc length in (0, pi].

    Raises
    ------
    DomainError
        If d <= 0, d > ell*(1 + 1e-9), or ell outside (0, pi].
    """
    scalar = np.isscalar(d) and np.isscalar(ell)
    d_arr, ell_arr = np.broadcast_arrays(
        np.asarray(d, dtype=float), np.asarray(ell, dtype=float)
    )
    if np.any(d_arr <= 0.0):
        raise DomainError("chord length must be positive")
    if np.any(ell_arr <= 0.0) or np.any(ell_arr > math.pi * (1.0 + 1e-9)):
        raise DomainError("arc length must lie in (0, pi]")
    if np.any(d_arr > ell_arr * (1.0 + 1e-9)):
        i = int(np.argmax(d_arr - ell_arr))
        raise DomainError(
            "chord exceeds arc", d=float(d_arr.flat[i]), ell=float(ell_arr.flat[i])
        )
    u = np.sin(0.5 * ell_arr)
    out = np.zeros_like(d_arr)
    active = d_arr < 2.0 * u
    if np.any(active):
        out[active] = _a_root(d_arr[active], u[active])
    return _maybe_scalar(out, scalar)


def a_diagonal(k):
    """Diagonal (coincident-point) limit of the ratio: sqrt(max(k^2-1, 0)/2)."""
    scalar = np.isscalar(k)
    k = np.asarray(k, dtype=float)
    out = np.sqrt(np.maximum(k * k - 1.0, 0.0) / 2.0)
    return _maybe_scalar(out, scalar)


@dataclass(frozen=True)
class ComparisonOffset:
    """The time offset t_bar = log(sup a) of a curve.

    ``round_circle`` marks the degenerate sup a = 0 (every chord at or above
    the round-circle chord); the comparison then reads d >= 2 sin(l/2) and
    t_bar is -inf.
    """

    t_bar: float
    round_circle: bool = False

    def __post_init__(self):
        if not self.round_circle and not math.isfinite(self.t_bar):
            raise DomainError("offset must be finite unless flagged round")

    @classmethod
    def from_a_bar(cls, a_bar: float) -> "ComparisonOffset":
        if a_bar <= 0.0:
            return cls(t_bar=-math.inf, round_circle=True)
        return cls(t_bar=math.log(a_bar))


def z_eval(d, ell, t, offset: ComparisonOffset):
    """Comparison functional Z = d - f(ell, t - t_bar) (>= 0 when the
    comparison holds). In the round-circle case Z = d - 2 sin(ell/2)."""
    if offset.round_circle:
        scalar = np.isscalar(d) and np.isscalar(ell)
        out = np.asarray(d, dtype=float) - 2.0 * np.sin(
            0.5 * np.asarray(ell, dtype=float)
        )
        return _maybe_scalar(out, scalar)
    return np.asarray(d) - f_eval(ell, t - offset.t_bar)


@dataclass(frozen=True)
class ProfileSummary:
    """Supremal ratio of one curve and where it is attained.

    ``attained`` is a vertex pair (i, j), with i == j when the diagonal
    family wins. ``min_z`` is filled only when an offset was supplied.
    """

    a_bar: float
    t_bar: float
    round_circle: bool
    attained: tuple[int, int]
    diagonal_max: float
    offdiagonal_max: float
    n_active: int
    saturated: bool
    min_z: float | None = None
    min_z_pair: tuple[int, int] | None = None

    @property
    def offset(self) -> ComparisonOffset:
        return ComparisonOffset(t_bar=self.t_bar, round_circle=self.round_circle)


def profile(
    frame: CurveFrame,
    offset: ComparisonOffset | None = None,
    t: float = 0.0,
) -> ProfileSummary:
    """Supremum of the ratio a over all vertex pairs and diagonal values.

    The frame must come from an embedded curve scaled to length 2*pi. When
    ``offset`` is given, also evaluates Z over all pairs at time ``t`` and
    records the minimum.

    Returns
    -------
    ProfileSummary
    """
    if abs(frame.length - TWO_PI) > 1e-6 * TWO_PI:
        raise DomainError(
            "profile requires a curve of length 2*pi", length=frame.length
        )
    i_idx, j_idx, d, ell = all_pairs_chord_arc(frame)
    ell = np.minimum(ell, math.pi)  # shorter arc; clip the L/2 rounding hair
    a_off = a_solve(d, ell)
    # Discrete curvature carries rounding noise of order 1e-12 around k = 1,
    # which sqrt(k^2 - 1) would inflate to ~1e-6; values of k^2 - 1 below the
    # measurement floor read as exactly round (a circle must profile to 0).
    k = frame.curvature
    a_diag = np.where(k * k - 1.0 <= _DIAG_NOISE_FLOOR, 0.0, a_diagonal(k))

    im_off = int(np.argmax(a_off))
    im_diag = int(np.argmax(a_diag))
    off_max = float(a_off[im_off])
    diag_max = float(a_diag[im_diag])
    if diag_max >= off_max:
        a_bar, attained = diag_max, (im_diag, im_diag)
    else:
        a_bar, attained = off_max, (int(i_idx[im_off]), int(j_idx[im_off]))

    min_z = None
    min_z_pair = None
    if offset is not None:
        z = z_eval(d, ell, t, offset)
        im_z = int(np.argmin(z))
        min_z = float(z[im_z])
        min_z_pair = (int(i_idx[im_z]), int(j_idx[im_z]))

    own = ComparisonOffset.from_a_bar(a_bar)
    return ProfileSummary(
        a_bar=a_bar,
        t_bar=own.t_bar,
        round_circle=own.round_circle,
        attained=attained,
        diagonal_max=diag_max,
        offdiagonal_max=off_max,
        n_active=int(np.count_nonzero(a_off)),
        saturated=bool(a_bar >= 0.999 * A_CAP),
        min_z=min_z,
        min_z_pair=min_z_pair,
    )


# -- identity and inequality sweeps ------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    """Outcome of one analytic check on a grid.

    ``max_residual`` measures equalities (should be ~0), ``max_violation``
    measures inequalities (positive means violated). A check passes iff both
    are at or below ``tolerance``.
    """

    name: str
    grid: str
    max_residual: float
    max_violation: float
    tolerance: float
    passed: bool

    def to_json_dict(self) -> dict:
        def clean(x: float):
            return float(x) if math.isfinite(x) else None

        return {
            "name": self.name,
            "grid": self.grid,
            "max_residual": clean(self.max_residual),
            "max_violation": clean(self.max_violation),
            "tolerance": clean(self.tolerance),
            "pass": self.passed,
        }


def _report(name, grid, residual, violation, tol) -> IdentityReport:
    return IdentityReport(
        name=name,
        grid=grid,
        max_residual=float(residual),
        max_violation=float(violation),
        tolerance=float(tol),
        passed=bool(residual <= tol and violation <= tol),
    )


def _ltilde(x, t, perturb=None):
    """Residual of the linearized operator that f annihilates:

        4 f'' + f - (4 f'/sin(x/2)) (f' - cos(x/2)) - df/dt.

    ``perturb`` (a callable (x, t) -> array) is added to the zeroth-order
    term, a hook for mutation-testing the harness.
    """
    u = np.sin(0.5 * x)
    c = np.cos(0.5 * x)
    fv = f_eval(x, t)
    if perturb is not None:
        fv = fv + perturb(x, t)
    fp = f_x(x, t)
    return 4.0 * f_xx(x, t) + fv - (4.0 * fp / u) * (fp - c) - f_t(x, t)


def _l_full(x, t, perturb=None):
    """The full comparison operator 4 f'' + f - f' x + 4 (f'/x) arccos(f')^2
    - df/dt, defined where f' in [0, 1] (x in (0, pi])."""
    fv = f_eval(x, t)
    if perturb is not None:
        fv = fv + perturb(x, t)
    fp = f_x(x, t)
    acos2 = np.arccos(np.clip(fp, -1.0, 1.0)) ** 2
    return 4.0 * f_xx(x, t) + fv - fp * x + 4.0 * (fp / x) * acos2 - f_t(x, t)


def _grid(nx, nt, x_lo, x_hi, t_span):
    x = np.linspace(x_lo, x_hi, nx)
    t = np.linspace(t_span[0], t_span[1], nt)
    return np.meshgrid(x, t, indexing="ij")


def check_Ltilde(
    nx: int = 400,
    nt: int = 101,
    t_span: tuple[float, float] = (-5.0, 5.0),
    margin: float = 0.01,
    perturb=None,
) -> IdentityReport:
    """Sweep |L-tilde f| over x in (0, 2*pi), t in t_span.

    The operator has a removable 1/sin(x/2) factor at both ends, so the grid
    keeps a ``margin`` band away from 0 and 2*pi. Closed-form derivatives
    throughout; tolerance 1e-9.
    """
    X, T = _grid(nx, nt, margin, TWO_PI - margin, t_span)
    resid = np.max(np.abs(_ltilde(X, T, perturb)))
    grid = (
        f"x in [{margin:.3g}, 2*pi - {margin:.3g}] x {nx}, "
        f"t in [{t_span[0]:g}, {t_span[1]:g}] x {nt}"
    )
    return _report("L-tilde annihilates f", grid, resid, 0.0, 1e-9)


def check_L_dominates(
    nx: int = 400,
    nt: int = 101,
    t_span: tuple[float, float] = (-5.0, 5.0),
    perturb=None,
) -> IdentityReport:
    """Verify L f >= L-tilde f (hence L f >= 0) on x in (0, pi].

    The gap is the tangent-line estimate of the convex h(v) = arccos(v)^2 at
    v = cos(x/2); the sweep also checks h'' >= 0 on [0, 1 - 1e-6] directly.
    """
    X, T = _grid(nx, nt, 0.01, math.pi, t_span)
    lf = _l_full(X, T, perturb)
    gap = lf - _ltilde(X, T, perturb)
    hv = h_second(np.linspace(0.0, 1.0 - 1e-6, 10_000))
    violation = max(-float(np.min(gap)), -float(np.min(lf)), -float(np.min(hv)))
    grid = f"x in (0, pi] x {nx}, t in [{t_span[0]:g}, {t_span[1]:g}] x {nt}"
    return _report("L dominates L-tilde", grid, 0.0, violation, 1e-10)


def check_f_shape(
    nx: int = 400,
    nt: int = 101,
    t_span: tuple[float, float] = (-5.0, 5.0),
    perturb=None,
) -> IdentityReport:
    """Shape of the barrier: increasing in t, concave in x, symmetric about
    pi, and vanishing as t -> -inf (max f(x, -20) < 1.6e-8)."""
    X, T = _grid(nx, nt, 0.01, TWO_PI - 0.01, t_span)
    x_line = X[:, 0]
    fv = f_eval(X, T)
    mirror = f_eval(TWO_PI - X, T)
    if perturb is not None:
        fv = fv + perturb(X, T)
    sym = np.max(np.abs(fv - mirror))
    violation = max(
        -float(np.min(f_t(X, T))),  # df/dt must be > 0
        float(np.max(f_xx(X, T))),  # f'' must be < 0
        float(np.max(f_eval(x_line, -20.0))) - 1.6e-8,
    )
    grid = f"x in (0, 2*pi) x {nx}, t in [{t_span[0]:g}, {t_span[1]:g}] x {nt}"
    return _report("f shape (monotone/concave/symmetric)", grid, sym, violation, 1e-12)


def check_g_positive(n: int = 10000) -> IdentityReport:
    """g(z) > 0 for z > 0, anchored by the exact value g(1) = pi/4 - 1/2.

    Sweeps a log-spaced grid spanning the series branch, the direct branch,
    and the saturation regime.
    """
    z = np.logspace(-8.0, 3.0, n)
    residual = abs(g_eval(1.0) - (math.pi / 4.0 - 0.5))
    violation = -float(np.min(g_eval(z)))
    return _report("g positivity", f"z in [1e-8, 1e3] log x {n}", residual, violation, 1e-12)


def check_h_convex(n: int = 10000) -> IdentityReport:
    """h(v) = arccos(v)^2 is convex on [0, 1): h'' >= 0, with h''(0) = 2.

    Near v = 1 the closed form cancels to its finite limit 2/3; the sweep
    stops at 1 - 1e-6 where roundoff still leaves a positive value.
    """
    v = np.linspace(0.0, 1.0 - 1e-6, n)
    residual = abs(h_second(0.0) - 2.0)
    violation = -float(np.min(h_second(v)))
    return _report("h convexity", f"v in [0, 1-1e-6] x {n}", residual, violation, 1e-12)


# -- analytic test curves and the small-separation limit ---------------------

class AnalyticEllipse:
    """Axis-aligned ellipse (a cos phi, b sin phi) with exact arclength.

    Arclength comes from the incomplete elliptic integral of the second
    kind, so chords and arcs of nearby points carry full double precision;
    that is what the small-separation Taylor checks need. Requires a >= b.
    """

    def __init__(self, a: float, b: float):
        if not (a >= b > 0.0):
            raise DomainError("AnalyticEllipse needs a >= b > 0", a=a, b=b)
        self.a = float(a)
        self.b = float(b)
        self.m = 1.0 - (b / a) ** 2  # elliptic modulus

    def point(self, phi: float) -> np.ndarray:
        return np.array([self.a * math.cos(phi), self.b * math.sin(phi)])

    def curvature(self, phi: float) -> float:
        w = (self.a * math.sin(phi)) ** 2 + (self.b * math.cos(phi)) ** 2
        return self.a * self.b / w**1.5

    def arclength(self, phi0: float, phi1: float) -> float:
        # d s/d phi = a sqrt(1 - m cos^2 phi) = a sqrt(1 - m sin^2(pi/2 - phi))
        s = lambda p: -self.a * float(ellipeinc(0.5 * math.pi - p, self.m))
        return s(phi1) - s(phi0)

    @property
    def perimeter(self) -> float:
        return self.arclength(0.0, TWO_PI)

    def param_at_arc(self, phi0: float, ds: float) -> float:
        """Parameter phi with arclength(phi0, phi) = ds (signed)."""
        if ds == 0.0:
            return phi0
        lo, hi = sorted((phi0 + ds / self.a, phi0 + ds / self.b))
        pad = 1e-9 * (1.0 + abs(ds))
        return brentq(
            lambda p: self.arclength(phi0, p) - ds,
            lo - pad,
            hi + pad,
            xtol=1e-14,
            rtol=4 * np.finfo(float).eps,
        )


def check_small_sep_taylor(
    curve: AnalyticEllipse,
    center: float,
    eps_values: np.ndarray | None = None,
) -> IdentityReport:
    """Small-separation limits at one point of an analytic curve.

    For arc windows of length eps centered (in arclength) at ``center``,
    the chord d and arc l = eps must satisfy (l - d)/l^3 -> k^2/24 with
    observed order >= 1 in eps, and a_solve(d, l) -> a_diagonal(k). Windows
    default to eps = 2^-3 ... 2^-10. Points whose Taylor gap sits below the
    double-precision floor of the chord computation are excluded from the
    order fit.
    """
    if eps_values is None:
        eps_values = 2.0 ** -np.arange(3, 11)
    eps_values = np.asarray(eps_values, dtype=float)
    k0 = curve.curvature(center)
    target = k0 * k0 / 24.0

    gaps = []
    a_vals = []
    for eps in eps_values:
        p = curve.point(curve.param_at_arc(center, +0.5 * eps))
        q = curve.point(curve.param_at_arc(center, -0.5 * eps))
        d = float(np.hypot(*(p - q)))
        gaps.append(abs((eps - d) / eps**3 - target))
        a_vals.append(a_solve(d, eps))
    gaps = np.asarray(gaps)

    a_err = abs(a_vals[-1] - a_diagonal(k0))
    floor = 100.0 * 1e-15 / eps_values**3  # chord roundoff over l^3
    usable = gaps > floor
    if np.count_nonzero(usable) >= 3:
        slope = np.polyfit(np.log(eps_values[usable]), np.log(gaps[usable]), 1)[0]
        order = float(slope)
    else:
        order = math.inf  # gap already at roundoff: converged faster than fit
    grid = (
        f"eps in [{eps_values.min():.3g}, {eps_values.max():.3g}] x "
        f"{eps_values.size}, center={center:.4g}, k={k0:.6g}"
    )
    return _report(
        "small-separation Taylor limit", grid, a_err, 1.0 - order, 1e-2
    )
