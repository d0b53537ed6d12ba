"""Closed-form dynamics, success-probability bound, and measurement planning.

The marked and unmarked average amplitudes obey a coupled linear
recurrence whose solution is a pure rotation with angle

    omega = 2*arcsin(sqrt(r/n)),   i.e.  cos(omega) = 1 - 2r/n,

so any time step can be evaluated in O(1) from the initial averages
alone.  Per-state amplitudes differ from the averages by deviations
that the dynamics never change (up to a sign alternation on the
unmarked side), which gives an O(n) reconstruction of the full vector
at any time.

The probability of measuring a marked state is capped by

    p_max = 1 - (n - r) * sigma_l^2(0),

and when the ratio kbar(0)/lbar(0) is real the cap is reached exactly
at the real-valued times where the unmarked average crosses zero.  For
a complex ratio the unmarked average may never vanish and planning
falls back to an exhaustive scan over one period.

Solutions are immutable after construction; every function here is
pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import AmplitudeState, SearchConfig, SummaryStats, summary_stats
from .errors import (
    ComplexRatioError,
    InvariantError,
    ScalarOnlyError,
    ValidationError,
)

# Relative tolerance on Im(kbar0 * conj(lbar0)) / |kbar0 * lbar0| below
# which the average ratio is treated as real.
REAL_RATIO_RTOL = 1e-9

# Probability values may stray this far outside [0, 1] before the
# invariant check trips.
PROBABILITY_SLACK = 1e-10

CLOSED_FORM = "closed-form"
NUMERIC_SCAN = "numeric-scan"

_SCAN_CHUNK = 1 << 20


@dataclass(frozen=True)
class MeasurementPlan:
    """A chosen measurement step and its predicted success probability."""

    t_real: float
    t_step: int
    j: int
    predicted_success: float
    method: str

    def __post_init__(self) -> None:
        if self.method not in (CLOSED_FORM, NUMERIC_SCAN):
            raise ValidationError(f"unknown planning method {self.method!r}")
        if self.t_real < 0 or self.t_step < 0 or self.j < 0:
            raise ValidationError("measurement plan fields must be non-negative")


@dataclass(frozen=True, eq=False)
class ClosedFormSolution:
    """Everything needed to evaluate the dynamics at any time in O(1).

    ``alpha``, ``beta``, ``phi`` give the single-phase sinusoidal form
    kbar(t) = alpha*sin(omega*t + phi), lbar(t) = beta*cos(omega*t + phi);
    they are None when the average ratio is complex (no single real
    phase exists).  ``dev_marked``/``dev_unmarked`` are the per-state
    deviations from the averages at time zero; they are None in
    scalar-only mode, where the solution was built from summary
    statistics alone and only planning operations are available.
    """

    n: int
    r: int
    omega: float
    kbar0: complex
    lbar0: complex
    sigma_l_sq: float
    p_max: float
    alpha: Optional[complex]
    beta: Optional[complex]
    phi: Optional[float]
    dev_marked: Optional[np.ndarray] = None
    dev_unmarked: Optional[np.ndarray] = None
    config: Optional[SearchConfig] = None

    @property
    def real_ratio(self) -> bool:
        """Whether the sinusoidal phase form and the closed-form planner apply."""
        return self.phi is not None

    @property
    def scalar_only(self) -> bool:
        return self.dev_marked is None

    @property
    def period(self) -> float:
        """Steps per full oscillation of the averages."""
        return 2.0 * math.pi / self.omega


def _rotation_angle(n: int, r: int) -> float:
    # better conditioned than acos(1 - 2r/n) when r/n is tiny
    return 2.0 * math.asin(math.sqrt(r / n))


def _is_real_ratio(kbar0: complex, lbar0: complex) -> bool:
    cross = kbar0 * lbar0.conjugate()
    scale = abs(kbar0) * abs(lbar0)
    if scale == 0.0:
        return True
    return abs(cross.imag) <= REAL_RATIO_RTOL * scale


def _phase_parameters(
    n: int, r: int, kbar0: complex, lbar0: complex
) -> tuple[complex, complex, float]:
    """(alpha, beta, phi) for the sinusoidal form of the averages.

    Only valid for a real average ratio.  A common complex phase is
    factored out first so phi is fixed by a real two-argument
    arctangent, which resolves the branch so the form already matches
    the averages at t = 0.
    """
    ref = lbar0 if abs(lbar0) >= abs(kbar0) else kbar0
    if abs(ref) == 0.0:
        return 0j, 0j, 0.0
    unit = ref / abs(ref)
    x = (kbar0 / unit).real
    y = (lbar0 / unit).real
    ratio = math.sqrt(r / (n - r))
    phi = math.atan2(x * ratio, y)
    beta_mag = math.hypot(x * ratio, y)
    alpha_mag = beta_mag / ratio
    return unit * alpha_mag, unit * beta_mag, phi


def _build_solution(
    n: int,
    r: int,
    kbar0: complex,
    lbar0: complex,
    sigma_l_sq: float,
    dev_marked: Optional[np.ndarray],
    dev_unmarked: Optional[np.ndarray],
    config: Optional[SearchConfig],
) -> ClosedFormSolution:
    if r < 1 or r > n - 1:
        raise ValidationError(f"marked count must satisfy 1 <= r <= n-1, got r={r}")
    if not math.isfinite(sigma_l_sq) or sigma_l_sq < 0:
        raise ValidationError(f"unmarked variance must be >= 0, got {sigma_l_sq!r}")
    omega = _rotation_angle(n, r)
    p_max = 1.0 - (n - r) * sigma_l_sq
    if _is_real_ratio(kbar0, lbar0):
        alpha, beta, phi = _phase_parameters(n, r, kbar0, lbar0)
    else:
        alpha = beta = phi = None
    return ClosedFormSolution(
        n=n,
        r=r,
        omega=omega,
        kbar0=complex(kbar0),
        lbar0=complex(lbar0),
        sigma_l_sq=float(sigma_l_sq),
        p_max=p_max,
        alpha=alpha,
        beta=beta,
        phi=phi,
        dev_marked=dev_marked,
        dev_unmarked=dev_unmarked,
        config=config,
    )


def solve(initial: AmplitudeState) -> ClosedFormSolution:
    """Solve the dynamics exactly for the given initial state.

    The state is taken as the time origin.  The result carries the
    deviation vectors, so per-state reconstruction is available.
    Assumes a unit-norm state; planning invariants are checked against
    a 1e-10 probability slack downstream.
    """
    stats = summary_stats(initial)
    cfg = initial.config
    amps = initial.amplitudes
    dev_marked = amps[cfg.marked_idx] - stats.kbar
    dev_unmarked = amps[cfg.unmarked_idx] - stats.lbar
    return _build_solution(
        cfg.n,
        cfg.r,
        stats.kbar,
        stats.lbar,
        stats.sigma_l_sq,
        dev_marked,
        dev_unmarked,
        cfg,
    )


def solve_summary(
    n: int,
    r: int,
    stats: SummaryStats,
) -> ClosedFormSolution:
    """Solve in scalar-only mode from summary statistics.

    No statevector is ever allocated, so ``n`` may be as large as 2**53
    (the exact-integer range of a double).  The marked variance is not
    needed for planning; instead it is derived from the unit-norm
    identity and used as a consistency check: statistics that could not
    come from a normalized state are rejected.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValidationError(f"database size must be an integer >= 2, got {n!r}")
    if not isinstance(r, (int, np.integer)):
        raise ValidationError(f"marked count must be an integer, got {r!r}")
    n, r = int(n), int(r)
    if r < 1 or r > n - 1:
        raise ValidationError(f"marked count must satisfy 1 <= r <= n-1, got r={r}")
    implied_sigma_k_sq = (
        1.0
        - (n - r) * (stats.sigma_l_sq + abs(stats.lbar) ** 2)
        - r * abs(stats.kbar) ** 2
    ) / r
    if implied_sigma_k_sq < -1e-10:
        raise ValidationError(
            "summary statistics are inconsistent with a normalized state "
            f"(implied marked variance {implied_sigma_k_sq:.3e} < 0)"
        )
    return _build_solution(
        n, r, stats.kbar, stats.lbar, stats.sigma_l_sq, None, None, None
    )


def average_amplitudes(sol: ClosedFormSolution, t: float) -> tuple[complex, complex]:
    """(kbar(t), lbar(t)) evaluated directly from the rotation form.

    Valid for complex initial averages and for real-valued t.
    """
    wt = sol.omega * t
    c = math.cos(wt)
    s = math.sin(wt)
    q = math.sqrt((sol.n - sol.r) / sol.r)
    kbar = sol.kbar0 * c + sol.lbar0 * q * s
    lbar = sol.lbar0 * c - sol.kbar0 / q * s
    return kbar, lbar


def phase_form(sol: ClosedFormSolution, t: float) -> tuple[complex, complex]:
    """(alpha*sin(wt+phi), beta*cos(wt+phi)); equals :func:`average_amplitudes`.

    Raises :class:`ComplexRatioError` when the average ratio is complex,
    since no single real phase describes both averages then.
    """
    if not sol.real_ratio:
        raise ComplexRatioError(
            "phase form needs a real kbar(0)/lbar(0) ratio; "
            "evaluate average_amplitudes instead"
        )
    arg = sol.omega * t + sol.phi
    return sol.alpha * math.sin(arg), sol.beta * math.cos(arg)


def reconstruct(sol: ClosedFormSolution, t: int) -> AmplitudeState:
    """Full statevector at integer time t from averages plus deviations.

    k_i(t) = kbar(t) + dk_i and l_i(t) = lbar(t) + (-1)^t * dl_i, with
    the deviations frozen at time zero.
    """
    if sol.scalar_only:
        raise ScalarOnlyError(
            "reconstruction needs deviation vectors; this solution was built "
            "from summary statistics only"
        )
    if not isinstance(t, (int, np.integer)) or t < 0:
        raise ValidationError(f"time step must be a non-negative integer, got {t!r}")
    kbar_t, lbar_t = average_amplitudes(sol, t)
    parity = 1.0 if t % 2 == 0 else -1.0
    cfg = sol.config
    amps = np.empty(sol.n, dtype=np.complex128)
    amps[cfg.marked_idx] = kbar_t + sol.dev_marked
    amps[cfg.unmarked_idx] = lbar_t + parity * sol.dev_unmarked
    return AmplitudeState(cfg, amps, step=int(t))


def _success_probability_raw(sol: ClosedFormSolution, lbar_t: complex) -> float:
    return sol.p_max - (sol.n - sol.r) * abs(lbar_t) ** 2


def success_probability_analytic(sol: ClosedFormSolution, t: float) -> float:
    """p_max - (n-r)|lbar(t)|^2, the marked-measurement probability at t.

    Works in scalar-only mode and for real-valued t.  The value is
    asserted to lie in [0, 1] up to a 1e-10 slack and only then clipped;
    a violation raises instead of being silently hidden.
    """
    _, lbar_t = average_amplitudes(sol, t)
    p = _success_probability_raw(sol, lbar_t)
    if not (-PROBABILITY_SLACK <= p <= 1.0 + PROBABILITY_SLACK):
        raise InvariantError(
            f"success probability {p!r} at t={t} falls outside [0, 1] "
            "beyond tolerance; the solution scalars are inconsistent"
        )
    return min(max(p, 0.0), 1.0)


def _pick_integer_step(sol: ClosedFormSolution, t_real: float) -> tuple[int, float]:
    # evaluate both neighbours, keep the better; ties go to the earlier step
    lo = max(int(math.floor(t_real)), 0)
    hi = int(math.ceil(t_real))
    p_lo = success_probability_analytic(sol, lo)
    p_hi = success_probability_analytic(sol, hi)
    if p_hi > p_lo:
        return hi, p_hi
    return lo, p_lo


def optimal_time(sol: ClosedFormSolution, j: int = 0) -> MeasurementPlan:
    """Closed-form optimal measurement time for branch index j.

    The unmarked average vanishes when omega*t + phi hits an odd
    multiple of pi/2; the j-th such crossing (counted from the first
    non-negative one) is returned as t_real, together with the better
    of its two neighbouring integer steps.  Requires a real average
    ratio; complex-ratio solutions must use :func:`optimal_time_numeric`.
    """
    if not isinstance(j, (int, np.integer)) or j < 0:
        raise ValidationError(f"branch index must be a non-negative integer, got {j!r}")
    if not sol.real_ratio:
        raise ComplexRatioError(
            "closed-form planning needs a real kbar(0)/lbar(0) ratio; "
            "use optimal_time_numeric"
        )
    half_period = math.pi / sol.omega
    base = (0.5 * math.pi - sol.phi) / sol.omega
    if base < 0.0:
        base += half_period
    t_real = base + j * half_period
    t_step, p = _pick_integer_step(sol, t_real)
    return MeasurementPlan(
        t_real=t_real, t_step=t_step, j=int(j), predicted_success=p, method=CLOSED_FORM
    )


def optimal_time_numeric(sol: ClosedFormSolution) -> MeasurementPlan:
    """Exhaustive scan for the best integer step within one full period.

    Works for complex initial averages, where the unmarked average may
    never vanish and the p_max cap is generally not reached.
    """
    t_max = int(math.ceil(sol.period))
    q = math.sqrt((sol.n - sol.r) / sol.r)
    nr = float(sol.n - sol.r)
    best_t = 0
    best_p = -math.inf
    for start in range(0, t_max + 1, _SCAN_CHUNK):
        ts = np.arange(start, min(start + _SCAN_CHUNK, t_max + 1), dtype=np.float64)
        wt = sol.omega * ts
        lbar = sol.lbar0 * np.cos(wt) - (sol.kbar0 / q) * np.sin(wt)
        p = sol.p_max - nr * np.abs(lbar) ** 2
        hi = float(p.max())
        lo = float(p.min())
        if not (-PROBABILITY_SLACK <= lo and hi <= 1.0 + PROBABILITY_SLACK):
            raise InvariantError(
                "success probability left [0, 1] during the scan; "
                "the solution scalars are inconsistent"
            )
        if hi > best_p:
            best_p = hi
            best_t = int(ts[int(np.argmax(p))])
    return MeasurementPlan(
        t_real=float(best_t),
        t_step=best_t,
        j=0,
        predicted_success=min(max(best_p, 0.0), 1.0),
        method=NUMERIC_SCAN,
    )


def optimal_time_approx(sol: ClosedFormSolution) -> float:
    """Small-r/n expansion of the first optimal time:

        t = -kbar0/(2*lbar0) + (pi/4)*sqrt(n/r) - (pi/24)*sqrt(r/n)

    Documented for r/n << 1; no hard cutoff is applied.  Undefined when
    the unmarked average vanishes (the leading offset divides by it).
    """
    if not sol.real_ratio:
        raise ComplexRatioError(
            "the expansion needs a real kbar(0)/lbar(0) ratio"
        )
    if sol.lbar0 == 0:
        raise ValidationError(
            "expansion undefined: unmarked average is zero (offset term divides by it)"
        )
    ratio = (sol.kbar0 / sol.lbar0).real
    return (
        -0.5 * ratio
        + (math.pi / 4.0) * math.sqrt(sol.n / sol.r)
        - (math.pi / 24.0) * math.sqrt(sol.r / sol.n)
    )


# ---------------------------------------------------------------------------
# Diagnostic check of the underlying 2x2 recurrence diagonalization.
# ---------------------------------------------------------------------------

# default (kbar0, lbar0) probe for the evolution check; any generic
# complex pair exercises the full recurrence
_DEFAULT_PROBE = (0.62 + 0.17j, 0.33 - 0.45j)


@dataclass(frozen=True)
class DiagonalizationReport:
    """Numerical audit of the averages' one-step update matrix.

    The update is v(t+1) = A v(t) with A = [[a, b], [-c, a]], where
    a = (n-2r)/n, b = 2(n-r)/n, c = 2r/n.  Its eigenvalues are
    exp(+-i*omega): unit modulus (a^2 + bc = 1) with phase omega.
    """

    n: int
    r: int
    a: float
    b: float
    c: float
    gamma: float
    omega: float
    gamma_error: float
    modulus_error: float
    phase_error: float
    basis_error: float
    evolution_error: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_diagonalization(
    config: SearchConfig,
    t_max: int = 100,
    probe: tuple[complex, complex] = _DEFAULT_PROBE,
) -> DiagonalizationReport:
    """Check the diagonalization of the averages' update matrix.

    Verifies that (i) gamma = a^2 + bc is 1 within 1e-12, (ii) the
    numerical eigenvalues have unit modulus and phase omega within
    1e-12 and the eigenvector basis reassembles A, and (iii) repeated
    multiplication by A reproduces the closed-form averages within
    1e-10 for all t <= t_max, starting from the probe averages.
    """
    n, r = config.n, config.r
    a = (n - 2 * r) / n
    b = 2 * (n - r) / n
    c = 2 * r / n
    gamma = a * a + b * c
    omega = _rotation_angle(n, r)
    matrix = np.array([[a, b], [-c, a]])

    eigenvalues = np.linalg.eigvals(matrix)
    modulus_error = float(np.max(np.abs(np.abs(eigenvalues) - 1.0)))
    phase_error = float(np.max(np.abs(np.sort(np.angle(eigenvalues)) - [-omega, omega])))

    # reassemble A from its eigenvector basis and the unit-circle spectrum
    q = math.sqrt(n / r - 1.0)
    basis = np.array([[1j * q, -1j * q], [1.0, 1.0]])
    basis_inv = np.array([[-0.5j / q, 0.5], [0.5j / q, 0.5]])
    spectrum = np.diag([np.exp(-1j * omega), np.exp(1j * omega)])
    basis_error = float(np.max(np.abs(basis @ spectrum @ basis_inv - matrix)))

    sol = _build_solution(n, r, probe[0], probe[1], 0.0, None, None, None)
    v = np.array(probe, dtype=np.complex128)
    evolution_error = 0.0
    for t in range(1, t_max + 1):
        v = matrix @ v
        kbar_t, lbar_t = average_amplitudes(sol, t)
        err = max(abs(v[0] - kbar_t), abs(v[1] - lbar_t))
        evolution_error = max(evolution_error, float(err))

    violations = []
    if abs(gamma - 1.0) > 1e-12:
        violations.append("gamma")
    if modulus_error > 1e-12:
        violations.append("eigenvalue-modulus")
    if phase_error > 1e-12:
        violations.append("eigenvalue-phase")
    if basis_error > 1e-12:
        violations.append("eigenvector-basis")
    if evolution_error > 1e-10:
        violations.append("evolution")

    return DiagonalizationReport(
        n=n,
        r=r,
        a=a,
        b=b,
        c=c,
        gamma=gamma,
        omega=omega,
        gamma_error=abs(gamma - 1.0),
        modulus_error=modulus_error,
        phase_error=phase_error,
        basis_error=basis_error,
        evolution_error=evolution_error,
        violations=tuple(violations),
    )
