"""Bound states outside the propagating band and the detachment transition.

Energies are obtained two independent ways and cross-validated:

* roots of the transcendental self-consistency equations

      E - omega_a = (J^2/pi) Int dk (1 + cos kN) / (E - omega_c + 2 xi cos k)

  for the two-contact layout and

      E - omega_a = (2 J^2 / ((N+1)^2 pi))
                    Int dk |sum_j e^{ikj}|^2 / (E - omega_c + 2 xi cos k)

  for the uniform layout (the Dirichlet-kernel numerator is evaluated as a
  complex geometric sum, which is finite everywhere, so the removable
  singularity at k = 0 never appears);

* full diagonalization of the real-space Hamiltonian on a periodic chain.

A participation-ratio/detachment classifier separates true bound states
from the edge-hugging extended state of the uniform layout, and a bisection
over J locates the critical coupling where the topmost state switches
character.  For odd spans an infinite-lattice criterion exists in closed
form: evaluating the uniform-layout equation at the upper band edge gives
``J_c^2 = (omega_c + 2 xi - omega_a) / C(N)`` with a convergent edge
integral C(N); for even spans that integral diverges and only the
finite-lattice route applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import scipy.sparse.linalg

from .model import (
    Boundary,
    CouplingCase,
    Lattice,
    ModelParams,
    build_real_space_hamiltonian,
)
from .numerics import (
    NumericalError,
    QuadratureSpec,
    RootSpec,
    find_root_bracketed,
    integrate,
    symmetric_eigen,
)

# Offset of the first root-search probe from a band edge, in units of xi.
EDGE_PROBE_OFFSET = 1e-8
# Roots closer to an edge than this (units of xi) carry the near-edge flag.
NEAR_EDGE_WINDOW = 1e-12
# Innermost probe of the refinement ladder; roots hiding below this offset
# are reported as near-edge sentinels when the edge analysis guarantees
# their existence, and omitted otherwise.
EDGE_RESOLUTION_FLOOR = 1e-13
# How far beyond a band edge the outward ladder searches, in units of xi.
SEARCH_CEILING = 50.0


class NoTransitionError(NumericalError):
    """The topmost-state classification does not flip on the given J range."""


class DivergentEdgeIntegralError(NumericalError):
    """The band-edge integral diverges (even span), no closed-form J_c."""


class NoDetachedStateError(NumericalError):
    """No real-space state with the requested character was found."""


class NoBracketBeyondCeiling(NumericalError):
    """A bound-state root escaped the geometric search ceiling."""

    def __init__(self, side: "Side", ceiling: float):
        super().__init__(
            f"no {side.value}-band root within {ceiling} of the band edge"
        )


class Side(Enum):
    BELOW = "below"
    ABOVE = "above"


class BoundStateSource(Enum):
    TRANSCENDENTAL = "transcendental"
    REAL_SPACE = "real-space"


class StateLabel(Enum):
    BOUND = "bound"
    EXTENDED = "extended"


class CriticalMethod(Enum):
    REAL_SPACE_BISECTION = "real-space-bisection"
    EDGE_CRITERION = "edge-criterion"


@dataclass(frozen=True)
class BoundState:
    """An energy level outside the band, with optional amplitudes.

    Transcendental roots carry only the energy; real-space states also hold
    the emitter amplitude and the photon amplitudes per site.  A near-edge
    state (root within ``NEAR_EDGE_WINDOW`` of an edge, or guaranteed to
    exist closer to the edge than the search can resolve) is flagged; for an
    unresolved sentinel the stored energy is the innermost probe, an upper
    bound on the detachment rather than a solved root.
    """

    energy: float
    side: Side
    source: BoundStateSource
    atom_amp: float | None = None
    photon_amps: np.ndarray | None = None
    near_edge: bool = False


@dataclass(frozen=True)
class Thresholds:
    """Classifier knobs: a state is bound iff its site participation ratio
    is below ``pr_threshold * n_sites`` and its detachment from the nearest
    band edge exceeds ``detach_threshold`` edge-level spacings."""

    pr_threshold: float = 0.25
    detach_threshold: float = 3.0


@dataclass(frozen=True)
class StateClassification:
    participation_ratio: float
    detachment: float
    label: StateLabel


@dataclass(frozen=True)
class CriticalPoint:
    """Critical coupling for one span size.

    ``j_c`` from the finite-lattice bisection depends on the classifier and
    on ``n_sites``, which is therefore reported alongside; the edge
    criterion is lattice-independent and stores ``n_sites = None``.
    """

    n_span: int
    j_c: float
    method: CriticalMethod
    n_sites: int | None = None
    flags: tuple[str, ...] = ()


_BOUND_QUAD = QuadratureSpec(abs_tol=1e-11, max_depth=45)


def _band_denominator(energy: float, k, params: ModelParams):
    """E - omega_c + 2 xi cos k in a cancellation-free form.

    Written relative to the nearer band edge so the small difference is
    carried by the energy offset, not by ``1 +/- cos k`` round-off.
    """
    if energy >= params.omega_c:
        return (energy - params.omega_c - 2.0 * params.xi) \
            + 4.0 * params.xi * np.cos(0.5 * k) ** 2
    return (energy - params.omega_c + 2.0 * params.xi) \
        - 4.0 * params.xi * np.sin(0.5 * k) ** 2


def _span_kernel(k, n_span: int):
    """|sum_{j=0..N} e^{ikj}|^2, finite for all k (equals the Dirichlet
    ratio sin^2(k(N+1)/2)/sin^2(k/2) away from k = 0)."""
    j = np.arange(n_span + 1)
    return np.abs(np.exp(1j * np.multiply.outer(np.asarray(k, dtype=float), j)).sum(axis=-1)) ** 2


def transcendental_residual(energy: float, params: ModelParams) -> float:
    """Self-consistency mismatch whose roots are the bound-state energies.

    Positive slope everywhere outside the band; diverges to -inf (below
    band) and +inf (far above), so each side holds at most one root.
    """
    n = params.n_span
    j2 = params.j_coupling**2
    if params.case is CouplingCase.TWO_POINT:
        def integrand(k):
            return (1.0 + np.cos(k * n)) / _band_denominator(energy, k, params)
        prefactor = j2 / np.pi
    else:
        def integrand(k):
            return _span_kernel(k, n) / _band_denominator(energy, k, params)
        prefactor = 2.0 * j2 / ((n + 1) ** 2 * np.pi)
    value = integrate(integrand, -np.pi, np.pi, _BOUND_QUAD)
    return energy - params.omega_a - prefactor * value


def _edge_kernel_diverges(params: ModelParams, side: Side) -> bool:
    """Whether the transcendental integrand diverges at the band edge.

    The integrand numerator at the edge momentum is >= 1 when the contacts
    interfere constructively there (guaranteeing a root on that side for any
    J > 0) and vanishes identically otherwise; round-off puts the vanishing
    cases at ~1e-30, so a 0.5 cut separates them cleanly.
    """
    n = params.n_span
    k_edge = 0.0 if side is Side.BELOW else np.pi
    if params.case is CouplingCase.TWO_POINT:
        value = 1.0 + math.cos(k_edge * n)
    else:
        value = float(_span_kernel(k_edge, n))
    return value > 0.5


def _edge_residual_coefficient(params: ModelParams) -> float:
    """Coefficient C with RHS(E=upper edge) = J^2 * C, for convergent cases.

    At the upper edge the integrand reduces to sin^2(k(N+1)/2)/sin^2(k)
    (uniform layout) or cos^2(kN/2)/(2 cos^2(k/2)) (two contacts), both of
    which are evaluated through everywhere-finite trigonometric sums.

    Raises:
        DivergentEdgeIntegralError: for even spans, where the edge momentum
            carries nonzero kernel weight.
    """
    n = params.n_span
    if _edge_kernel_value(params, Side.ABOVE) != 0.0:
        raise DivergentEdgeIntegralError(
            f"edge integral diverges for even span n_span={n}"
        )
    if params.case is CouplingCase.MULTI_POINT:
        m = (n + 1) // 2
        exponents = 2 * np.arange(m) - m + 1

        def integrand(k):
            ratio = np.exp(1j * np.multiply.outer(np.asarray(k, dtype=float), exponents)).sum(axis=-1)
            return np.abs(ratio) ** 2 / params.xi
        return 2.0 / ((n + 1) ** 2 * np.pi) * integrate(integrand, -np.pi, np.pi, _BOUND_QUAD)

    p = (n - 1) // 2
    signs = (-1.0) ** np.arange(n)
    exponents = np.arange(n) - p

    def integrand(k):
        half_k = 0.5 * np.asarray(k, dtype=float)
        ratio = (signs * np.exp(1j * np.multiply.outer(half_k, 2 * exponents))).sum(axis=-1)
        return np.abs(ratio) ** 2 / (2.0 * params.xi)
    return 1.0 / np.pi * integrate(integrand, -np.pi, np.pi, _BOUND_QUAD)


def _search_side(params: ModelParams, side: Side) -> BoundState | None:
    """Locate the (unique) transcendental root on one side of the band.

    Probes walk away from the edge on a geometric ladder starting at
    ``EDGE_PROBE_OFFSET * xi``; if the root sits closer to the edge than the
    first probe, the ladder is refined inward down to
    ``EDGE_RESOLUTION_FLOOR * xi``.  When even that cannot resolve it but
    the edge analysis shows a root must exist (divergent edge kernel, or a
    convergent edge residual of crossing sign), a flagged sentinel at the
    innermost probe is returned instead of silently dropping the state.
    """
    xi = params.xi
    lo_edge, hi_edge = params.band_edges()
    edge = lo_edge if side is Side.BELOW else hi_edge
    sign = -1.0 if side is Side.BELOW else 1.0
    # Residual sign at the far end of the search direction.
    far_sign = -1.0 if side is Side.BELOW else 1.0

    def f(energy):
        return transcendental_residual(energy, params)

    def make_state(root: float) -> BoundState:
        return BoundState(
            energy=float(root), side=side, source=BoundStateSource.TRANSCENDENTAL,
            near_edge=abs(root - edge) < NEAR_EDGE_WINDOW * xi,
        )

    eps0 = EDGE_PROBE_OFFSET * xi
    x_prev = edge + sign * eps0
    f_prev = f(x_prev)

    if f_prev == 0.0:
        return make_state(x_prev)

    if np.sign(f_prev) != far_sign:
        # Root lies further out: geometric ladder toward the ceiling.
        offset = 2.0 * eps0
        ceiling = SEARCH_CEILING * xi
        while offset <= ceiling:
            x = edge + sign * offset
            fx = f(x)
            if fx == 0.0:
                return make_state(x)
            if np.sign(fx) != np.sign(f_prev):
                lo, hi = sorted((x_prev, x))
                return make_state(find_root_bracketed(f, lo, hi, RootSpec()))
            x_prev, f_prev = x, fx
            offset *= 2.0
        raise NoBracketBeyondCeiling(side, ceiling)

    # Root (if any) hides between the edge and the first probe.
    floor = EDGE_RESOLUTION_FLOOR * xi
    offset = 0.5 * eps0
    while offset >= floor:
        x = edge + sign * offset
        fx = f(x)
        if fx == 0.0:
            return make_state(x)
        if np.sign(fx) != np.sign(f_prev):
            lo, hi = sorted((x_prev, x))
            return make_state(find_root_bracketed(f, lo, hi, RootSpec()))
        x_prev, f_prev = x, fx
        offset *= 0.5

    # Unresolvably close to the edge: decide existence analytically.
    if _edge_kernel_value(params, side) != 0.0:
        root_exists = True  # integral diverges at the edge, residual crosses
    elif side is Side.ABOVE:
        coeff = _edge_residual_coefficient(params)
        root_exists = (edge - params.omega_a) - params.j_coupling**2 * coeff < 0.0
    else:
        root_exists = False
    if root_exists:
        return BoundState(
            energy=float(edge + sign * floor), side=side,
            source=BoundStateSource.TRANSCENDENTAL, near_edge=True,
        )
    return None


def _transcendental_states(params: ModelParams) -> list[BoundState]:
    if params.j_coupling <= 0:
        raise ValueError("bound-state search requires J > 0")
    states = []
    for side in (Side.BELOW, Side.ABOVE):
        state = _search_side(params, side)
        if state is not None:
            states.append(state)
    return states


def bound_energies_two_point(params: ModelParams) -> list[BoundState]:
    """Transcendental bound-state energies for the two-contact layout."""
    if params.case is not CouplingCase.TWO_POINT:
        raise ValueError("bound_energies_two_point expects TWO_POINT params")
    return _transcendental_states(params)


def bound_energies_multi_point(params: ModelParams) -> list[BoundState]:
    """Transcendental bound-state energies for the uniform layout.

    The below-band level exists for every J > 0 (and is reported, flagged
    near-edge when it cannot be resolved away from the edge); the above-band
    level appears only beyond a span-dependent coupling for odd spans, and
    for any J > 0 on an infinite lattice for even spans.
    """
    if params.case is not CouplingCase.MULTI_POINT:
        raise ValueError("bound_energies_multi_point expects MULTI_POINT params")
    return _transcendental_states(params)


def bound_energies(params: ModelParams) -> list[BoundState]:
    """Dispatch to the layout-specific transcendental solver."""
    if params.case is CouplingCase.TWO_POINT:
        return bound_energies_two_point(params)
    return bound_energies_multi_point(params)


def real_space_spectrum(params: ModelParams,
                        lattice: Lattice) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of the periodic-chain Hamiltonian.

    Returns eigenvalues ascending and the matching eigenvector columns.
    """
    if lattice.boundary is not Boundary.PERIODIC:
        raise ValueError("real_space_spectrum expects a periodic lattice")
    h = build_real_space_hamiltonian(params, lattice)
    return symmetric_eigen(h)


def photon_distribution(state: np.ndarray, lattice: Lattice,
                        n_span: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-site photon probabilities of an eigenvector.

    Returns (offsets, probabilities) with offsets counted from the first
    covered resonator, so distributions for different lattice sizes overlay.
    The probabilities sum to 1 minus the emitter weight.
    """
    state = np.asarray(state)
    if state.shape != (lattice.n_sites + 1,):
        raise ValueError(
            f"state length {state.shape} does not match lattice of {lattice.n_sites} sites"
        )
    anchor = lattice.resolve_anchor(n_span)
    offsets = np.arange(lattice.n_sites) - anchor
    return offsets, np.abs(state[:-1]) ** 2


def edge_level_spacing(params: ModelParams, lattice: Lattice, side: Side) -> float:
    """Spacing of the two free-chain levels nearest the given band edge.

    This is the natural resolution scale for deciding whether an eigenvalue
    has detached from the band on a chain of ``lattice.n_sites`` resonators.
    """
    comb = params.omega_c - 2.0 * params.xi * np.cos(
        2.0 * np.pi * np.arange(lattice.n_sites) / lattice.n_sites
    )
    comb = np.unique(np.sort(comb))
    if side is Side.BELOW:
        return float(comb[1] - comb[0])
    return float(comb[-1] - comb[-2])


def classify_state(energy: float, state: np.ndarray, params: ModelParams,
                   lattice: Lattice,
                   thresholds: Thresholds | None = None) -> StateClassification:
    """Label an eigenstate as bound or extended.

    The participation ratio ``1 / sum p_i^2`` of the renormalized site
    probabilities measures localization; the detachment is the distance of
    the energy from the nearest band edge in units of the local finite-size
    level spacing.  Bound requires both localization (PR below
    ``pr_threshold * n_sites``) and detachment above ``detach_threshold``.
    """
    thresholds = thresholds or Thresholds()
    state = np.asarray(state)
    site_probs = np.abs(state[:-1]) ** 2
    photon_weight = site_probs.sum()
    if photon_weight <= 0:
        raise ValueError("state carries no photon weight")
    p = site_probs / photon_weight
    pr = float(1.0 / np.sum(p**2))

    lo_edge, hi_edge = params.band_edges()
    if abs(energy - lo_edge) <= abs(energy - hi_edge):
        side, edge = Side.BELOW, lo_edge
    else:
        side, edge = Side.ABOVE, hi_edge
    spacing = edge_level_spacing(params, lattice, side)
    detachment = float(abs(energy - edge) / spacing)

    bound = (pr < thresholds.pr_threshold * lattice.n_sites) \
        and (detachment > thresholds.detach_threshold)
    return StateClassification(
        participation_ratio=pr, detachment=detachment,
        label=StateLabel.BOUND if bound else StateLabel.EXTENDED,
    )


def detached_real_space_states(params: ModelParams, lattice: Lattice,
                               thresholds: Thresholds | None = None) -> list[BoundState]:
    """Real-space eigenstates classified as bound, with their amplitudes.

    A single emitter can detach at most one level per band edge, so only the
    extremal eigenpairs are candidates.
    """
    w, v = real_space_spectrum(params, lattice)
    states = []
    for idx, side in ((0, Side.BELOW), (len(w) - 1, Side.ABOVE)):
        cls = classify_state(w[idx], v[:, idx], params, lattice, thresholds)
        if cls.label is StateLabel.BOUND:
            states.append(BoundState(
                energy=float(w[idx]), side=side,
                source=BoundStateSource.REAL_SPACE,
                atom_amp=float(v[-1, idx]), photon_amps=v[:-1, idx].copy(),
            ))
    return states


def _extremal_eigenpair(h: np.ndarray, which: str) -> tuple[float, np.ndarray]:
    """Topmost ('LA') or bottommost ('SA') eigenpair, Lanczos with a dense
    fallback."""
    try:
        w, v = scipy.sparse.linalg.eigsh(h, k=1, which=which)
        return float(w[0]), v[:, 0]
    except (scipy.sparse.linalg.ArpackNoConvergence, RuntimeError):
        w, v = symmetric_eigen(h)
        idx = -1 if which == "LA" else 0
        return float(w[idx]), v[:, idx]


def extremal_state(params: ModelParams, lattice: Lattice,
                   side: Side) -> tuple[float, np.ndarray]:
    """Energy and eigenvector of the topmost or bottommost eigenstate."""
    h = build_real_space_hamiltonian(params, lattice)
    return _extremal_eigenpair(h, "SA" if side is Side.BELOW else "LA")


def critical_coupling_real_space(n_span: int, params: ModelParams,
                                 lattice: Lattice, j_hi: float,
                                 thresholds: Thresholds | None = None,
                                 bracket_tol: float = 1e-3) -> CriticalPoint:
    """Critical coupling from bisection of the topmost-state label.

    Bisects J between 0 and ``j_hi`` on the classification of the topmost
    eigenstate of the periodic chain, to a bracket narrower than
    ``bracket_tol * xi``.  If the label is not monotone across the final
    bracket the midpoint is reported with an ``oscillating`` flag.

    Raises:
        NoTransitionError: if the topmost state is not extended at J -> 0
            or not bound at ``j_hi``.
    """
    thresholds = thresholds or Thresholds()

    def top_is_bound(j: float) -> bool:
        p = replace(params, n_span=n_span, j_coupling=j)
        energy, vec = extremal_state(p, lattice, Side.ABOVE)
        cls = classify_state(energy, vec, p, lattice, thresholds)
        return cls.label is StateLabel.BOUND

    if top_is_bound(1e-9 * params.xi):
        raise NoTransitionError("topmost state already bound at J -> 0")
    if not top_is_bound(j_hi):
        raise NoTransitionError(f"topmost state still extended at J = {j_hi}")

    lo, hi = 1e-9 * params.xi, float(j_hi)
    while hi - lo > bracket_tol * params.xi:
        mid = 0.5 * (lo + hi)
        if top_is_bound(mid):
            hi = mid
        else:
            lo = mid

    flags: tuple[str, ...] = ()
    quarter = 0.25 * (hi - lo)
    labels = [top_is_bound(lo + quarter), top_is_bound(lo + 2 * quarter),
              top_is_bound(lo + 3 * quarter)]
    if labels != sorted(labels):
        flags = ("oscillating",)
    return CriticalPoint(
        n_span=n_span, j_c=0.5 * (lo + hi),
        method=CriticalMethod.REAL_SPACE_BISECTION,
        n_sites=lattice.n_sites, flags=flags,
    )


def critical_coupling_edge_criterion(n_span: int,
                                     params: ModelParams) -> CriticalPoint:
    """Critical coupling from the infinite-lattice band-edge criterion.

    An above-band root exists once the edge residual turns negative, i.e.
    for ``J^2 > (omega_c + 2 xi - omega_a) / C(N)`` with C(N) the convergent
    edge integral of odd spans.  If the emitter frequency already sits at or
    above the upper edge the threshold is zero.

    Raises:
        DivergentEdgeIntegralError: for even spans.
    """
    p = replace(params, n_span=n_span)
    coeff = _edge_residual_coefficient(p)
    gap = p.omega_c + 2.0 * p.xi - p.omega_a
    j_c = math.sqrt(max(gap, 0.0) / coeff)
    return CriticalPoint(
        n_span=n_span, j_c=j_c, method=CriticalMethod.EDGE_CRITERION,
        n_sites=None,
    )


def critical_coupling_sweep(n_values, params: ModelParams, lattice: Lattice,
                            thresholds: Thresholds | None = None,
                            j_hi: float | None = None,
                            j_cap: float = 64.0) -> list[CriticalPoint]:
    """Bisection critical couplings over a range of span sizes.

    The upper bracket is escalated (doubled, up to ``j_cap * xi``) until the
    topmost state is bound there, so callers need not guess a per-span
    bracket.  Spans where no transition occurs below the cap come back as a
    flagged zero-J point rather than raising.
    """
    points = []
    for n in n_values:
        j = j_hi if j_hi is not None else max(4.0, 0.25 * n + 3.0) * params.xi
        while True:
            try:
                points.append(critical_coupling_real_space(
                    n, params, lattice, j, thresholds))
                break
            except NoTransitionError:
                j *= 2.0
                if j > j_cap * params.xi:
                    points.append(CriticalPoint(
                        n_span=n, j_c=float("nan"),
                        method=CriticalMethod.REAL_SPACE_BISECTION,
                        n_sites=lattice.n_sites, flags=("no-transition",),
                    ))
                    break
    return points
