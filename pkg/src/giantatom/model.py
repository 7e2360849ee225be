"""Lattice model of a two-level emitter coupled to a coupled-resonator waveguide.

The waveguide is an infinite 1-D tight-binding chain of identical resonators
(frequency ``omega_c``, nearest-neighbor hopping ``xi``) supporting the cosine
band ``E_k = omega_c - 2*xi*cos(k)`` of total width ``4*xi``.  The emitter
(transition frequency ``omega_a``) attaches either at the two end resonators
of its span with strength ``j_coupling`` per contact, or uniformly at all
``n_span + 1`` covered resonators with strength ``2*j_coupling/(n_span + 1)``
per contact, so the total coupling is ``2*j_coupling`` in both layouts.

Everything lives in the single-excitation subspace: one quantum shared
between the emitter and the photon field.  This module builds the real-space
Hamiltonian in the basis {photon at site 0, ..., photon at site n_sites-1,
emitter excited} and provides the dispersion relation shared by the
scattering and bound-state solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class CouplingCase(Enum):
    """How the emitter attaches to its span of resonators."""

    TWO_POINT = "two"
    MULTI_POINT = "multi"


class Boundary(Enum):
    """Boundary condition of a finite lattice.

    OUTGOING_WAVE adds the complex self-energy ``-xi*exp(i*k)`` to both end
    sites, which makes the truncated chain an exact stand-in for semi-infinite
    leads at energy ``E_k`` (used by the scattering oracle).
    """

    PERIODIC = "periodic"
    OPEN = "open"
    OUTGOING_WAVE = "outgoing"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters, all energies in units of the hopping ``xi``.

    Attributes:
        case: coupling layout (two end contacts vs. uniform span coverage).
        n_span: index of the last covered resonator; the emitter span is
            sites 0..n_span, so a point-like emitter has ``n_span = 0``.
        j_coupling: total half-coupling J >= 0; per-contact strengths are
            derived from it (see ``per_link_coupling``).
        omega_a: emitter transition frequency.
        omega_c: resonator frequency (band center).
        xi: nearest-neighbor hopping, the energy unit; must be positive.
    """

    case: CouplingCase
    n_span: int
    j_coupling: float
    omega_a: float
    omega_c: float
    xi: float = 1.0

    def __post_init__(self) -> None:
        if self.xi <= 0:
            raise ValueError(f"hopping xi must be positive, got {self.xi}")
        if self.j_coupling < 0:
            raise ValueError(f"coupling J must be >= 0, got {self.j_coupling}")
        if self.n_span < 0 or int(self.n_span) != self.n_span:
            raise ValueError(f"n_span must be a non-negative integer, got {self.n_span}")

    @property
    def per_link_coupling(self) -> float:
        """Coupling strength of each emitter-resonator contact."""
        if self.case is CouplingCase.TWO_POINT:
            return self.j_coupling
        return 2.0 * self.j_coupling / (self.n_span + 1)

    @property
    def coupled_offsets(self) -> tuple[int, ...]:
        """Site offsets (relative to the span start) carrying a contact.

        For TWO_POINT with ``n_span = 0`` both contacts land on the same
        site and their strengths add, giving the point-emitter coupling 2J.
        """
        if self.case is CouplingCase.TWO_POINT:
            return (0, self.n_span)
        return tuple(range(self.n_span + 1))

    def band_edges(self) -> tuple[float, float]:
        """(lower, upper) edge of the propagating band."""
        return self.omega_c - 2.0 * self.xi, self.omega_c + 2.0 * self.xi


@dataclass(frozen=True)
class Lattice:
    """A finite chain used for real-space computations.

    Attributes:
        n_sites: number of resonators.
        boundary: boundary condition; OUTGOING_WAVE requires ``boundary_k``.
        atom_anchor: global index of the first covered resonator, or None to
            center the span in the chain.
        boundary_k: wave vector entering the outgoing-wave self-energy.
    """

    n_sites: int
    boundary: Boundary = Boundary.PERIODIC
    atom_anchor: int | None = None
    boundary_k: float | None = None

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be positive, got {self.n_sites}")
        if self.boundary is Boundary.OUTGOING_WAVE and self.boundary_k is None:
            raise ValueError("OUTGOING_WAVE boundary requires boundary_k")
        if self.boundary is not Boundary.OUTGOING_WAVE and self.boundary_k is not None:
            raise ValueError("boundary_k is only meaningful for OUTGOING_WAVE")

    def resolve_anchor(self, n_span: int) -> int:
        """Global index of span site 0 (centered by default)."""
        if self.atom_anchor is not None:
            return self.atom_anchor
        return (self.n_sites - n_span) // 2


def dispersion(k, params: ModelParams):
    """Photon energy ``E_k = omega_c - 2*xi*cos(k)`` (vectorized in k)."""
    return params.omega_c - 2.0 * params.xi * np.cos(k)


def detuning(k, params: ModelParams):
    """Photon-emitter energy mismatch ``E_k - omega_a`` (vectorized in k)."""
    return dispersion(k, params) - params.omega_a


def build_real_space_hamiltonian(params: ModelParams, lattice: Lattice) -> np.ndarray:
    """Assemble the single-excitation Hamiltonian on a finite chain.

    Basis ordering: photon on site 0..n_sites-1, then the emitter excitation
    as the last row/column.  Diagonal entries are ``omega_c`` on photon rows
    and ``omega_a`` on the emitter row; photon sites couple to their nearest
    neighbors with ``-xi`` (wrapping for PERIODIC); the emitter row carries
    the per-contact coupling on each covered site.

    Returns a real symmetric matrix for PERIODIC/OPEN boundaries and a
    complex symmetric one for OUTGOING_WAVE (the end-site self-energies are
    ``-xi*exp(i*boundary_k)``).

    Raises:
        ValueError: if the emitter span does not fit with at least one free
            site on each side.
    """
    n0 = lattice.n_sites
    n = params.n_span
    if n0 < n + 3:
        raise ValueError(
            f"lattice of {n0} sites cannot hold a span of {n + 1} resonators "
            "with one free site per side"
        )
    anchor = lattice.resolve_anchor(n)
    if anchor < 1 or anchor + n > n0 - 2:
        raise ValueError(
            f"emitter span [{anchor}, {anchor + n}] leaves no free site on "
            f"some side of a {n0}-site lattice"
        )

    dtype = complex if lattice.boundary is Boundary.OUTGOING_WAVE else float
    h = np.zeros((n0 + 1, n0 + 1), dtype=dtype)

    h[np.arange(n0), np.arange(n0)] = params.omega_c
    h[n0, n0] = params.omega_a
    for i in range(n0 - 1):
        h[i, i + 1] = h[i + 1, i] = -params.xi
    if lattice.boundary is Boundary.PERIODIC and n0 > 2:
        h[0, n0 - 1] = h[n0 - 1, 0] = -params.xi
    if lattice.boundary is Boundary.OUTGOING_WAVE:
        sigma = -params.xi * np.exp(1j * lattice.boundary_k)
        h[0, 0] += sigma
        h[n0 - 1, n0 - 1] += sigma

    g = params.per_link_coupling
    for off in params.coupled_offsets:
        h[anchor + off, n0] += g
        h[n0, anchor + off] += g
    return h
