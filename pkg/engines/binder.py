"""Row-by-row transfer of complex amplitudes for the boundary-pattern sums.

Each column of a row carries one of four site states v = 2 * bit(mu) + bit(nu)
(bit 0 means +1). A table over the 4**nx states of one row is carried from the
bottom row to the top. Moving to the next row replaces the old sites one
column at a time; between steps the table holds one extra axis for the old
site that still has terms to collect before it is summed.

Every term of the mass-field energy is applied exactly once: at its row if
it stays within one row, otherwise at the earliest step where all of its
variables are present.
"""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from constants import BINDER_MAX_WIDTH
from engines.base import ALL_PATTERNS, REDUCED_PATTERNS, ExactEngine, assemble_amplitudes
from errors import EngineError, WidthTooLarge
from lattice import SurfaceGeometry
from models import (
    AmplitudePair,
    BoundaryPattern,
    EngineKind,
    ModelCouplings,
    ModelVariant,
    ObservableReport,
)
from utils import config_section

SITE_STATES = 4


# mu (row 0) and nu (row 1) of site states 0..3
_SPINS = np.array([[1, 1, -1, -1], [1, -1, 1, -1]], dtype=np.int8)


@dataclass
class _StepTerms:
    """Term indices applied while introducing new site k."""

    pair: list[int] = field(default_factory=list)  # (n_{k-1}, n_k, o_{k-1}, o_k)
    carry: list[int] = field(default_factory=list)  # (n_k, o_{k+1}, o_k)
    closure: list[int] = field(default_factory=list)  # (n_k, o_k), last column


@dataclass
class _TransferPlan:
    """Assignment of every term to a row or a transfer step."""

    row_terms: list[list[int]]  # within-row terms without boundary fields
    top_terms: list[int]
    bottom_terms: list[int]
    steps: list[list[_StepTerms]]  # steps[y][k] for the y -> y + 1 transfer


class BinderEngine(ExactEngine):
    """
    Exact complex amplitudes for strips of width up to max_width.

    Usage:
        engine = BinderEngine(config)
        pair = engine.amplitudes(SurfaceGeometry(6, 6), model, xi=0.88)
    """

    kind = EngineKind.BINDER

    def __init__(self, config: dict[str, Any] | None = None):
        super().__init__(config)
        self.max_width = config_section(self.config, "engines", "binder").get(
            "max_width", BINDER_MAX_WIDTH
        )
        self._plans: dict[tuple[int, int], _TransferPlan] = {}

    # =========================================================================
    # Planning
    # =========================================================================

    def _locate(self, geom: SurfaceGeometry, var: int) -> tuple[int, int, int]:
        """(row, column, layer) of a plaquette variable."""
        p = var % geom.n_plaquettes
        x, y = geom.coords(p)
        return y, x, var // geom.n_plaquettes

    def _plan(self, geom: SurfaceGeometry) -> _TransferPlan:
        if geom.size in self._plans:
            return self._plans[geom.size]

        nx, ny = geom.nx, geom.ny
        terms = geom.terms
        boundary_top = {geom.alpha_t, geom.beta_t}
        boundary_bottom = {geom.alpha_b, geom.beta_b}
        plan = _TransferPlan(
            row_terms=[[] for _ in range(ny)],
            top_terms=[],
            bottom_terms=[],
            steps=[[_StepTerms() for _ in range(nx)] for _ in range(ny - 1)],
        )

        for t, row in enumerate(terms.variables):
            variables = [int(v) for v in row if v >= 0]
            if boundary_top & set(variables):
                plan.top_terms.append(t)
                continue
            if boundary_bottom & set(variables):
                plan.bottom_terms.append(t)
                continue
            located = [self._locate(geom, v) for v in variables]
            rows = {r for r, _, _ in located}
            if len(rows) == 1:
                plan.row_terms[rows.pop()].append(t)
                continue
            old_row = min(rows)
            if rows != {old_row, old_row + 1}:
                raise RuntimeError(f"term {t} spans rows {sorted(rows)}")
            new_cols = {c for r, c, _ in located if r == old_row + 1}
            old_cols = {c for r, c, _ in located if r == old_row}
            k = max(new_cols)
            step = plan.steps[old_row][k]
            if new_cols == {k} and k == nx - 1 and old_cols <= {k}:
                step.closure.append(t)
            elif new_cols == {k} and k < nx - 1 and old_cols <= {k, k + 1}:
                step.carry.append(t)
            elif k >= 1 and new_cols <= {k - 1, k} and old_cols <= {k - 1, k}:
                step.pair.append(t)
            else:
                raise RuntimeError(f"term {t} fits no transfer step")

        self._plans[geom.size] = plan
        return plan

    # =========================================================================
    # Weights
    # =========================================================================

    def _log_weights(
        self,
        geom: SurfaceGeometry,
        term_ids: list[int],
        coef: np.ndarray,
        axes: list[tuple[int, int]],
        xi: float,
        row_offset: int,
        fixed: dict[int, int] | None = None,
    ) -> np.ndarray:
        """
        -xi * sum of the given terms over every combination of site states.

        axes lists the (relative row, column) of every tensor axis; relative
        row 0 is row_offset (old), 1 is the row above it (new). Boundary
        variables take their values from fixed.
        """
        ndim = len(axes)
        position = {axis: i for i, axis in enumerate(axes)}
        energy = np.zeros((SITE_STATES,) * ndim, dtype=np.complex128)
        fixed = fixed or {}

        for t in term_ids:
            product = np.ones((1,) * ndim, dtype=np.int8)
            for var in geom.terms.variables[t]:
                var = int(var)
                if var < 0:
                    continue
                if var in fixed:
                    product = product * np.int8(fixed[var])
                    continue
                row, col, layer = self._locate(geom, var)
                shape = [1] * ndim
                shape[position[(row - row_offset, col)]] = SITE_STATES
                product = product * _SPINS[layer].reshape(shape)
            energy += coef[t] * product
        return -xi * energy

    @staticmethod
    def _exp_shifted(log_weight: np.ndarray) -> tuple[np.ndarray, float]:
        shift = float(log_weight.real.max()) if log_weight.size else 0.0
        return np.exp(log_weight - shift), shift

    # =========================================================================
    # Transfer
    # =========================================================================

    def _transfer(
        self, table: np.ndarray, steps: list[tuple[np.ndarray | None, np.ndarray]]
    ) -> np.ndarray:
        """
        Replace the old row by the new one, column by column.

        steps[k] holds (pair_k, carry_k) for k < nx - 1 and (pair_k, closure)
        for the last column; pair_0 is None.
        """
        nx = table.ndim
        new, extra = nx, nx + 1
        cols = list(range(nx))

        if nx == 1:
            _, closure = steps[0]
            return np.einsum(table, [0], closure, [new, 0], [new])

        _, carry = steps[0]
        table = np.einsum(table, cols, carry, [new, 1, 0], [new, *cols[1:], 0])

        for k in range(1, nx):
            pair, last = steps[k]
            before = cols[:k]
            if k < nx - 1:
                out = [*before, new, *cols[k + 1 :], k]
                table = np.einsum(
                    table, [*before, *cols[k:], extra], pair, [k - 1, new, extra, k], out
                )
                table = np.einsum(table, out, last, [new, k + 1, k], out)
            else:
                table = np.einsum(
                    table,
                    [*before, k, extra],
                    pair,
                    [k - 1, new, extra, k],
                    last,
                    [new, k],
                    [*before, new],
                    optimize=True,
                )
        return table

    def _pattern_amplitude(
        self,
        geom: SurfaceGeometry,
        plan: _TransferPlan,
        coef: np.ndarray,
        xi: float,
        pattern: BoundaryPattern,
        row_logs: list[np.ndarray],
        step_weights: list[list[tuple[np.ndarray | None, np.ndarray]]],
        step_shift: float,
    ) -> tuple[complex, float]:
        nx, ny = geom.nx, geom.ny
        fixed = dict(zip((geom.alpha_t, geom.alpha_b, geom.beta_t, geom.beta_b), pattern, strict=True))
        row_axes = [(0, c) for c in range(nx)]
        top = self._log_weights(geom, plan.top_terms, coef, row_axes, xi, ny - 1, fixed)
        bottom = self._log_weights(geom, plan.bottom_terms, coef, row_axes, xi, 0, fixed)

        log_scale = -xi * geom.terms.constant + step_shift
        weight, shift = self._exp_shifted(row_logs[0] + bottom + (top if ny == 1 else 0))
        table = weight
        log_scale += shift

        for y in range(ny - 1):
            table = self._transfer(table, step_weights[y])
            row_log = row_logs[y + 1] + (top if y + 1 == ny - 1 else 0)
            weight, shift = self._exp_shifted(row_log)
            table = table * weight
            log_scale += shift
            norm = float(np.abs(table).max())
            if norm == 0.0:
                return 0j, log_scale
            table /= norm
            log_scale += math.log(norm)

        return complex(table.sum()), log_scale

    def boundary_amplitudes(
        self,
        geom: SurfaceGeometry,
        model: ModelCouplings,
        xi: float,
        patterns: list[BoundaryPattern] | None = None,
    ) -> tuple[dict[BoundaryPattern, complex], float]:
        """
        Amplitudes c(alpha_t, alpha_b, beta_t, beta_b) on a common scale.

        Raises:
            WidthTooLarge: nx exceeds the width budget
            EngineError: long-range couplings do not factor over rows
        """
        if geom.nx > self.max_width:
            raise WidthTooLarge(
                f"width {geom.nx} exceeds the Binder budget of {self.max_width}"
            )
        if model.variant.is_long_range:
            raise EngineError("long-range couplings do not factor over rows")
        patterns = patterns or list(REDUCED_PATTERNS)

        plan = self._plan(geom)
        coef = geom.terms.coefficients(model.coupling)
        nx, ny = geom.nx, geom.ny
        row_axes = [(0, c) for c in range(nx)]
        row_logs = [
            self._log_weights(geom, plan.row_terms[y], coef, row_axes, xi, y) for y in range(ny)
        ]

        step_shift = 0.0
        step_weights = []
        for y in range(ny - 1):
            weights = []
            for k, step in enumerate(plan.steps[y]):
                pair = None
                if k >= 1:
                    log_pair = self._log_weights(
                        geom, step.pair, coef,
                        [(1, k - 1), (1, k), (0, k - 1), (0, k)], xi, y,
                    )
                    pair, shift = self._exp_shifted(log_pair)
                    step_shift += shift
                if k < nx - 1:
                    log_last = self._log_weights(
                        geom, step.carry, coef, [(1, k), (0, k + 1), (0, k)], xi, y
                    )
                else:
                    log_last = self._log_weights(geom, step.closure, coef, [(1, k), (0, k)], xi, y)
                last, shift = self._exp_shifted(log_last)
                step_shift += shift
                weights.append((pair, last))
            step_weights.append(weights)

        results = {
            p: self._pattern_amplitude(geom, plan, coef, xi, p, row_logs, step_weights, step_shift)
            for p in patterns
        }
        finite = [s for v, s in results.values() if v != 0]
        common = max(finite) if finite else 0.0
        c_table = {p: v * math.exp(s - common) if v != 0 else 0j for p, (v, s) in results.items()}
        return c_table, common

    def amplitudes(self, geom: SurfaceGeometry, model: ModelCouplings, xi: float) -> AmplitudePair:
        c_table, log_scale = self.boundary_amplitudes(geom, model, xi)
        return assemble_amplitudes(c_table, log_scale)

    def all_amplitudes(
        self, geom: SurfaceGeometry, model: ModelCouplings, xi: float
    ) -> tuple[dict[BoundaryPattern, complex], float]:
        """All sixteen boundary-pattern amplitudes."""
        return self.boundary_amplitudes(geom, model, xi, ALL_PATTERNS)


def binder_partition(
    geom: SurfaceGeometry, coupling: complex, xi: float, boundary: BoundaryPattern
) -> tuple[complex, float]:
    """
    Amplitude of one boundary pattern for nearest-neighbour coupling J.

    Returns:
        (value, log_scale) with amplitude = value * exp(log_scale)
    """
    BinderEngine._check_xi(xi)
    variant = ModelVariant.GENERAL_KERNEL if coupling else ModelVariant.SUPER_LOCAL
    model = ModelCouplings(variant, j_complex=coupling)
    c_table, log_scale = BinderEngine().boundary_amplitudes(geom, model, xi, [boundary])
    return c_table[boundary], log_scale


def binder_fidelity(geom: SurfaceGeometry, coupling: complex, xi: float) -> ObservableReport:
    """Fidelity, energy and heat capacity for nearest-neighbour coupling J."""
    variant = ModelVariant.GENERAL_KERNEL if coupling else ModelVariant.SUPER_LOCAL
    model = ModelCouplings(variant, j_complex=coupling)
    return BinderEngine().observables(geom, model, xi)
