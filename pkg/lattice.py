"""Planar surface-code geometry and the mass-field term table.

Plaquettes sit on an nx x ny grid; plaquette p = y * nx + x occupies the unit
square [x, x+1] x [y, y+1] with y = 0 the bottom row. Qubits live on edges:

- vertical interior edges between horizontally adjacent plaquettes
- horizontal interior edges between vertically adjacent plaquettes
- one dangling edge on top of every top-row plaquette
- one dangling edge below every bottom-row plaquette

Each qubit variable is a product of two mass-field variables (one per
adjacent plaquette, or a plaquette and a boundary field), so every
constraint at a star is satisfied identically.

Mass-field variables are numbered mu_p -> p, nu_p -> P + p, then alpha_t,
alpha_b, beta_t, beta_b.
"""

import itertools
import logging
import re
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import cache, cached_property

import numpy as np

from constants import DISTANCE_DECIMALS
from errors import InvalidSize, UnknownVariable
from models import MassFieldConfig

logger = logging.getLogger(__name__)

BOUNDARY_NAMES = ("alpha_t", "alpha_b", "beta_t", "beta_b")
MAX_TERM_VARIABLES = 4
_VARIABLE_PATTERN = re.compile(r"^(mu|nu)[:\s]*(\d+)\s*,\s*(\d+)$")


class QubitKind(str, Enum):
    """Edge type a qubit sits on."""

    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"
    TOP = "top"
    BOTTOM = "bottom"

    @property
    def is_vertical(self) -> bool:
        return self is QubitKind.VERTICAL


class TermChannel(IntEnum):
    """Which coupling multiplies a mass-field term."""

    ONSITE = 0  # constant
    SIGMA_PAIR = 1  # conj(J), sigma-sigma
    TAU_PAIR = 2  # J, tau-tau
    CROSS = 3  # Re J, sigma-tau


class Region(IntEnum):
    """Where a term lives; boundary regions involve the boundary fields."""

    BULK = 0
    TOP = 1
    BOTTOM = 2


@dataclass(frozen=True)
class Qubit:
    """A physical qubit on an edge of the plaquette grid."""

    index: int
    kind: QubitKind
    plaquettes: tuple[int, ...]  # two for interior edges, one for dangling ones
    position: tuple[float, float]  # edge midpoint, units of a
    endpoints: tuple[tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class TermTable:
    """
    Energy of a mass-field state as constant + sum_t coef_t * prod(vars_t).

    Coefficients depend on the nearest-neighbour coupling J only through the
    channel of each term, so one table serves every J.
    """

    variables: np.ndarray  # (T, 4) int64, padded with -1
    weights: np.ndarray  # (T,) float64
    channels: np.ndarray  # (T,) int8
    regions: np.ndarray  # (T,) int8
    constant: float
    n_variables: int
    var_offsets: np.ndarray  # CSR incidence: terms of variable v are
    var_terms: np.ndarray  # var_terms[var_offsets[v]:var_offsets[v + 1]]

    @property
    def n_terms(self) -> int:
        return int(self.weights.size)

    @property
    def padded_variables(self) -> np.ndarray:
        """Variables with padding pointing at slot n_variables (held at +1)."""
        padded = self.variables.copy()
        padded[padded < 0] = self.n_variables
        return padded

    def coefficients(self, coupling: complex) -> np.ndarray:
        """Per-term coefficients at nearest-neighbour coupling J."""
        coupling = complex(coupling)
        factors = np.array(
            [1.0, coupling.conjugate(), coupling, coupling.real], dtype=np.complex128
        )
        return self.weights * factors[self.channels]

    def products(self, states: np.ndarray) -> np.ndarray:
        """Term products for a batch of states, shape (S, T)."""
        states = np.atleast_2d(states).astype(np.int8)
        extended = np.concatenate(
            [states, np.ones((states.shape[0], 1), dtype=np.int8)], axis=1
        )
        return extended[:, self.padded_variables].prod(axis=2, dtype=np.int8)

    def energies(
        self, states: np.ndarray, coupling: complex, regions: tuple[Region, ...] | None = None
    ) -> np.ndarray:
        """Complex energies of a batch of states (constant included in the bulk)."""
        coef = self.coefficients(coupling)
        constant = self.constant
        if regions is not None:
            mask = np.isin(self.regions, [int(r) for r in regions])
            coef = np.where(mask, coef, 0.0)
            if Region.BULK not in regions:
                constant = 0.0
        return constant + self.products(states) @ coef


class SurfaceGeometry:
    """
    Planar surface code with rough top/bottom and smooth left/right boundaries.

    Usage:
        geom = SurfaceGeometry(3, 3)
        geom.n_qubits  # 2 * nx * ny + nx - ny
        geom.terms.energies(states, coupling=0.1j)
    """

    def __init__(self, nx: int, ny: int):
        if nx < 1 or ny < 1:
            raise InvalidSize(f"lattice must be at least 1 x 1, got {nx} x {ny}")
        self.nx = nx
        self.ny = ny
        self.qubits = self._build_qubits()
        self._incident = self._vertex_incidence()
        self.stars = [
            tuple(edges) for _, edges in sorted(self._incident.items()) if len(edges) >= 3
        ]
        self.nn_pairs = self._nearest_neighbor_pairs()
        self.gamma_path = [
            q.index
            for q in self.qubits
            if q.kind is not QubitKind.VERTICAL and q.position[0] == 0.5
        ]
        self.sigma_vars = np.array(
            [self._factor_vars(q, layer=0) for q in self.qubits], dtype=np.int64
        )
        self.tau_vars = np.array(
            [self._factor_vars(q, layer=1) for q in self.qubits], dtype=np.int64
        )

    def __repr__(self) -> str:
        return f"SurfaceGeometry({self.nx}, {self.ny})"

    # =========================================================================
    # Sizes and indexing
    # =========================================================================

    @property
    def size(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def n_plaquettes(self) -> int:
        return self.nx * self.ny

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @property
    def n_variables(self) -> int:
        return 2 * self.n_plaquettes + 4

    def plaquette(self, x: int, y: int) -> int:
        return y * self.nx + x

    def coords(self, p: int) -> tuple[int, int]:
        return (p % self.nx, p // self.nx)

    @property
    def alpha_t(self) -> int:
        return 2 * self.n_plaquettes

    @property
    def alpha_b(self) -> int:
        return 2 * self.n_plaquettes + 1

    @property
    def beta_t(self) -> int:
        return 2 * self.n_plaquettes + 2

    @property
    def beta_b(self) -> int:
        return 2 * self.n_plaquettes + 3

    def variable_layer(self, var: int) -> int:
        """0 for variables building sigma (mu, alpha), 1 for tau (nu, beta)."""
        p = self.n_plaquettes
        if var < p or var in (self.alpha_t, self.alpha_b):
            return 0
        return 1

    def variable_name(self, var: int) -> str:
        p = self.n_plaquettes
        if var < 2 * p:
            x, y = self.coords(var % p)
            return f"{'mu' if var < p else 'nu'}:{x},{y}"
        return BOUNDARY_NAMES[var - 2 * p]

    def parse_variable(self, identifier: int | str | tuple) -> int:
        """
        Resolve a variable identifier to its index.

        Accepts an index, a boundary name ("alpha_t"), "mu:x,y" / "nu:x,y",
        or a tuple ("mu", x, y).

        Raises:
            UnknownVariable: if the identifier names nothing on this lattice
        """
        if isinstance(identifier, (int, np.integer)) and not isinstance(identifier, bool):
            if 0 <= identifier < self.n_variables:
                return int(identifier)
            raise UnknownVariable(f"variable index {identifier} out of range")
        if isinstance(identifier, tuple) and len(identifier) == 3:
            layer, x, y = identifier
            identifier = f"{layer}:{x},{y}"
        if isinstance(identifier, str):
            name = identifier.strip().lower()
            if name in BOUNDARY_NAMES:
                return 2 * self.n_plaquettes + BOUNDARY_NAMES.index(name)
            match = _VARIABLE_PATTERN.match(name)
            if match:
                layer, x, y = match.group(1), int(match.group(2)), int(match.group(3))
                if x < self.nx and y < self.ny:
                    offset = 0 if layer == "mu" else self.n_plaquettes
                    return offset + self.plaquette(x, y)
        raise UnknownVariable(f"no variable '{identifier}' on a {self.nx}x{self.ny} lattice")

    # =========================================================================
    # Construction
    # =========================================================================

    def _build_qubits(self) -> list[Qubit]:
        nx, ny = self.nx, self.ny
        qubits: list[Qubit] = []

        def add(kind, plaquettes, position, endpoints):
            qubits.append(Qubit(len(qubits), kind, plaquettes, position, endpoints))

        for y in range(ny):
            for x in range(nx - 1):
                add(
                    QubitKind.VERTICAL,
                    (self.plaquette(x, y), self.plaquette(x + 1, y)),
                    (x + 1.0, y + 0.5),
                    ((x + 1, y), (x + 1, y + 1)),
                )
        for y in range(ny - 1):
            for x in range(nx):
                add(
                    QubitKind.HORIZONTAL,
                    (self.plaquette(x, y), self.plaquette(x, y + 1)),
                    (x + 0.5, y + 1.0),
                    ((x, y + 1), (x + 1, y + 1)),
                )
        for x in range(nx):
            add(QubitKind.TOP, (self.plaquette(x, ny - 1),), (x + 0.5, float(ny)), ((x, ny), (x + 1, ny)))
        for x in range(nx):
            add(QubitKind.BOTTOM, (self.plaquette(x, 0),), (x + 0.5, 0.0), ((x, 0), (x + 1, 0)))
        return qubits

    def _vertex_incidence(self) -> dict[tuple[int, int], list[int]]:
        incident: dict[tuple[int, int], list[int]] = defaultdict(list)
        for q in self.qubits:
            for vertex in q.endpoints:
                incident[vertex].append(q.index)
        return incident

    def _nearest_neighbor_pairs(self) -> np.ndarray:
        """Unordered pairs of perpendicular edges sharing a vertex."""
        pairs = set()
        for edges in self._incident.values():
            for r, s in itertools.combinations(edges, 2):
                if self.qubits[r].kind.is_vertical != self.qubits[s].kind.is_vertical:
                    pairs.add((min(r, s), max(r, s)))
        return np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)

    def _factor_vars(self, qubit: Qubit, layer: int) -> tuple[int, int]:
        offset = layer * self.n_plaquettes
        first = offset + qubit.plaquettes[0]
        if qubit.kind is QubitKind.TOP:
            return (first, self.beta_t if layer else self.alpha_t)
        if qubit.kind is QubitKind.BOTTOM:
            return (first, self.beta_b if layer else self.alpha_b)
        return (first, offset + qubit.plaquettes[1])

    # =========================================================================
    # Derived structure
    # =========================================================================

    @cached_property
    def ordered_nn_pairs(self) -> np.ndarray:
        """Nearest-neighbour pairs in both orders, shape (2M, 2)."""
        return np.concatenate([self.nn_pairs, self.nn_pairs[:, ::-1]])

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([q.position for q in self.qubits], dtype=np.float64)

    @cached_property
    def distances(self) -> np.ndarray:
        """Pairwise qubit distances in units of a, rounded for table lookups."""
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.round(np.sqrt((diff**2).sum(axis=2)), DISTANCE_DECIMALS)

    def unique_distances(self) -> list[float]:
        return sorted({float(d) for d in np.unique(self.distances)})

    @cached_property
    def qubit_incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR lists of qubits whose sigma (or tau) contains each variable."""
        members: list[list[int]] = [[] for _ in range(self.n_variables)]
        for layer_vars in (self.sigma_vars, self.tau_vars):
            for q, pair in enumerate(layer_vars):
                for var in pair:
                    members[int(var)].append(q)
        offsets = np.zeros(self.n_variables + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(m) for m in members])
        flat = np.array([q for m in members for q in m], dtype=np.int64)
        return offsets, flat

    def spins_from_vector(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """sigma and tau of every qubit for a mass-field vector."""
        values = np.asarray(values, dtype=np.int8)
        return values[self.sigma_vars].prod(axis=1), values[self.tau_vars].prod(axis=1)

    def state_vector(self, config: MassFieldConfig) -> np.ndarray:
        if config.n_plaquettes != self.n_plaquettes:
            raise InvalidSize(
                f"configuration has {config.n_plaquettes} plaquettes, lattice has "
                f"{self.n_plaquettes}"
            )
        return config.to_vector()

    @cached_property
    def terms(self) -> TermTable:
        """Mass-field energy at unit coupling, generated from the qubit pairs."""
        accumulated: dict[tuple[tuple[int, ...], int], float] = defaultdict(float)

        def add(first, second, channel: TermChannel, weight: float) -> None:
            key = tuple(sorted(set(first) ^ set(second)))
            accumulated[(key, int(channel))] += weight

        for q in range(self.n_qubits):
            add(self.sigma_vars[q], self.tau_vars[q], TermChannel.ONSITE, -0.5)
        for r, s in self.nn_pairs:
            add(self.sigma_vars[r], self.sigma_vars[s], TermChannel.SIGMA_PAIR, 0.5)
            add(self.tau_vars[r], self.tau_vars[s], TermChannel.TAU_PAIR, 0.5)
            add(self.sigma_vars[r], self.tau_vars[s], TermChannel.CROSS, -0.5)
            add(self.tau_vars[r], self.sigma_vars[s], TermChannel.CROSS, -0.5)

        entries = [(k, c, w) for (k, c), w in sorted(accumulated.items()) if w != 0.0]
        variables = np.full((len(entries), MAX_TERM_VARIABLES), -1, dtype=np.int64)
        top = {self.alpha_t, self.beta_t}
        bottom = {self.alpha_b, self.beta_b}
        regions = np.zeros(len(entries), dtype=np.int8)
        for t, (key, _, _) in enumerate(entries):
            if len(key) == 0 or len(key) > MAX_TERM_VARIABLES:
                raise RuntimeError(f"unexpected term over variables {key}")
            variables[t, : len(key)] = key
            if top & set(key):
                regions[t] = Region.TOP
            elif bottom & set(key):
                regions[t] = Region.BOTTOM

        incidence: list[list[int]] = [[] for _ in range(self.n_variables)]
        for t, (key, _, _) in enumerate(entries):
            for var in key:
                incidence[var].append(t)
        offsets = np.zeros(self.n_variables + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(i) for i in incidence])

        table = TermTable(
            variables=variables,
            weights=np.array([w for _, _, w in entries], dtype=np.float64),
            channels=np.array([c for _, c, _ in entries], dtype=np.int8),
            regions=regions,
            constant=0.5 * self.n_qubits,
            n_variables=self.n_variables,
            var_offsets=offsets,
            var_terms=np.array([t for i in incidence for t in i], dtype=np.int64),
        )
        logger.debug(f"{self!r}: {table.n_terms} mass-field terms")
        return table


@cache
def build_lattice(nx: int, ny: int) -> SurfaceGeometry:
    """Shared geometry for one size; geometries are never mutated after construction."""
    return SurfaceGeometry(nx, ny)
