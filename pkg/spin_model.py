"""Classical two-layer spin models equivalent to the surface-code fidelity.

Spin-level energies are written on BilayerSpinConfig; the mass-field energy
is evaluated from the geometry's term table, so it holds for any
nearest-neighbour coupling J. Energies are stored at unit coupling: engines
multiply them by the fictitious inverse temperature xi.
"""

import logging
import re

import numpy as np

from errors import CacheMismatch, InvalidSize, MissingKernelEntry
from lattice import BOUNDARY_NAMES, Region, SurfaceGeometry
from models import (
    BilayerSpinConfig,
    ComplexEnergy,
    KernelTable,
    MagnetizationCache,
    MassFieldConfig,
    ModelCouplings,
)

logger = logging.getLogger(__name__)

_DUMP_LINE = re.compile(r"^(mu|nu)\s+(\d+)\s+(\d+)\s+([+-]1)$|^(alpha_[tb]|beta_[tb])\s+([+-]1)$")


def _check_spins(geom: SurfaceGeometry, config: BilayerSpinConfig) -> None:
    if config.n_qubits != geom.n_qubits:
        raise InvalidSize(
            f"configuration has {config.n_qubits} qubits, lattice has {geom.n_qubits}"
        )


# =============================================================================
# Spin-level energies
# =============================================================================


def energy_super_local(geom: SurfaceGeometry, config: BilayerSpinConfig) -> float:
    """-1/2 sum_r sigma_r tau_r."""
    _check_spins(geom, config)
    return -0.5 * float(np.dot(config.sigma.astype(np.int64), config.tau))


def energy_super_imag(
    geom: SurfaceGeometry, config: BilayerSpinConfig, model: ModelCouplings
) -> ComplexEnergy:
    """Local term plus i eta/4 sum over ordered nearest-neighbour pairs."""
    re = energy_super_local(geom, config)
    sigma = config.sigma.astype(np.int64)
    tau = config.tau.astype(np.int64)
    r, s = geom.ordered_nn_pairs[:, 0], geom.ordered_nn_pairs[:, 1]
    im = 0.25 * model.eta * float(np.sum((tau[s] - sigma[s]) * (tau[r] + sigma[r])))
    return ComplexEnergy(re, im)


def energy_general(
    geom: SurfaceGeometry, config: BilayerSpinConfig, table: KernelTable
) -> ComplexEnergy:
    """
    Full pairwise energy with tabulated kernels.

    H = N/2 F(0;0) - 1/2 F(0;beta) sum sigma tau
        + 1/4 sum_{r != s} [F(r-s;0)(tau tau + sigma sigma)
                            - F(r-s;beta)(sigma_r tau_s + tau_r sigma_s)
                            + i Phi(r-s)(tau_s - sigma_s)(tau_r + sigma_r)]

    Raises:
        MissingKernelEntry: a lattice distance has no table entry
    """
    _check_spins(geom, config)
    distances = geom.distances
    try:
        lookup = {d: table[d] for d in geom.unique_distances()}
    except KeyError as e:
        raise MissingKernelEntry(f"kernel table has no entry for distance {e.args[0]}") from None

    f_vac = np.vectorize(lambda d: lookup[d].f_vacuum)(distances)
    f_th = np.vectorize(lambda d: lookup[d].f_thermal)(distances)
    phi = np.vectorize(lambda d: lookup[d].phi)(distances)
    for matrix in (f_vac, f_th, phi):
        np.fill_diagonal(matrix, 0.0)

    sigma = config.sigma.astype(np.float64)
    tau = config.tau.astype(np.float64)
    onsite = lookup[0.0]
    re = 0.5 * config.n_qubits * onsite.f_vacuum - 0.5 * onsite.f_thermal * float(sigma @ tau)
    re += 0.25 * float(tau @ f_vac @ tau + sigma @ f_vac @ sigma)
    re -= 0.25 * float(sigma @ f_th @ tau + tau @ f_th @ sigma)
    im = 0.25 * float((tau + sigma) @ phi @ (tau - sigma))
    return ComplexEnergy(re, im)


def energy_ohmic_longrange(
    geom: SurfaceGeometry,
    config: BilayerSpinConfig,
    cache: MagnetizationCache,
    model: ModelCouplings,
    debug: bool = False,
) -> ComplexEnergy:
    """
    -1/2 Delta F sum sigma tau + F_bar/4 (m_s - m_t)^2 + i Phi_bar/4 (m_s - m_t)(m_s + m_t).

    Raises:
        CacheMismatch: with debug on, when the cache disagrees with the spins
    """
    if debug:
        verify_cache(config, cache)
    re = model.delta_f * energy_super_local(geom, config)
    diff = cache.m_sigma - cache.m_tau
    re += 0.25 * model.f_bar * diff * diff
    im = 0.25 * model.phi_bar * diff * (cache.m_sigma + cache.m_tau)
    return ComplexEnergy(re, im)


def verify_cache(config: BilayerSpinConfig, cache: MagnetizationCache) -> None:
    fresh = MagnetizationCache.from_spins(config)
    if (fresh.m_sigma, fresh.m_tau) != (cache.m_sigma, cache.m_tau):
        raise CacheMismatch(
            f"cached magnetizations ({cache.m_sigma}, {cache.m_tau}) != "
            f"recount ({fresh.m_sigma}, {fresh.m_tau})"
        )


# =============================================================================
# Mass fields
# =============================================================================


def mass_to_spin(geom: SurfaceGeometry, config: MassFieldConfig) -> BilayerSpinConfig:
    """Qubit variables induced by a mass-field configuration."""
    sigma, tau = geom.spins_from_vector(geom.state_vector(config))
    return BilayerSpinConfig(sigma, tau)


def star_products(geom: SurfaceGeometry, config: BilayerSpinConfig) -> np.ndarray:
    """Product of sigma (row 0) and tau (row 1) around every star."""
    _check_spins(geom, config)
    return np.array(
        [[int(np.prod(layer[list(star)])) for star in geom.stars] for layer in (config.sigma, config.tau)],
        dtype=np.int8,
    ).reshape(2, len(geom.stars))


def logical_products(geom: SurfaceGeometry, config: BilayerSpinConfig) -> tuple[int, int]:
    """Products of sigma and tau along the top-to-bottom path Gamma."""
    path = geom.gamma_path
    return int(np.prod(config.sigma[path])), int(np.prod(config.tau[path]))


def massfield_energy(
    geom: SurfaceGeometry, config: MassFieldConfig, coupling: complex
) -> ComplexEnergy:
    """Mass-field energy at nearest-neighbour coupling J (constant N/2 included)."""
    state = geom.state_vector(config)
    return ComplexEnergy.from_complex(geom.terms.energies(state, coupling)[0])


def massfield_energy_parts(
    geom: SurfaceGeometry, config: MassFieldConfig, coupling: complex
) -> dict[str, ComplexEnergy]:
    """Bulk, top and bottom contributions; their sum is massfield_energy."""
    state = geom.state_vector(config)
    return {
        region.name.lower(): ComplexEnergy.from_complex(
            geom.terms.energies(state, coupling, regions=(region,))[0]
        )
        for region in Region
    }


def delta_energy(
    geom: SurfaceGeometry,
    config: MassFieldConfig,
    coupling: complex | ModelCouplings,
    flip: int | str | tuple,
    cache: MagnetizationCache | None = None,
) -> ComplexEnergy:
    """
    Energy change from flipping one mass-field variable, touching only its terms.

    For the Ohmic model pass ModelCouplings and the layer magnetizations of
    the current state; the long-range part then costs O(1) per flipped qubit.

    Raises:
        UnknownVariable: if flip names no variable of the lattice
    """
    var = geom.parse_variable(flip)
    state = geom.state_vector(config)
    terms = geom.terms
    model = coupling if isinstance(coupling, ModelCouplings) else None
    j = model.coupling if model else complex(coupling)

    mine = terms.var_terms[terms.var_offsets[var] : terms.var_offsets[var + 1]]
    coef = terms.coefficients(j)[mine]
    products = terms.products(state)[0, mine]
    delta = complex(-2.0 * np.dot(coef, products))

    if model is not None and model.variant.is_long_range:
        delta *= model.delta_f
        if cache is None:
            sigma, tau = geom.spins_from_vector(state)
            cache = MagnetizationCache.from_spins(BilayerSpinConfig(sigma, tau))
        delta += _longrange_delta(geom, state, var, cache, model)
    return ComplexEnergy.from_complex(delta)


def _longrange_delta(
    geom: SurfaceGeometry,
    state: np.ndarray,
    var: int,
    cache: MagnetizationCache,
    model: ModelCouplings,
) -> complex:
    offsets, qubits = geom.qubit_incidence
    affected = qubits[offsets[var] : offsets[var + 1]]
    layer_vars = geom.tau_vars if geom.variable_layer(var) else geom.sigma_vars
    change = -2 * int(state[layer_vars[affected]].prod(axis=1).sum())

    m_s, m_t = cache.m_sigma, cache.m_tau
    new_s, new_t = (m_s, m_t + change) if geom.variable_layer(var) else (m_s + change, m_t)

    def lr(ms: int, mt: int) -> complex:
        diff = ms - mt
        return complex(0.25 * model.f_bar * diff * diff, 0.25 * model.phi_bar * diff * (ms + mt))

    return lr(new_s, new_t) - lr(m_s, m_t)


# =============================================================================
# Configuration dumps
# =============================================================================


def dump_config(geom: SurfaceGeometry, config: MassFieldConfig) -> str:
    """Human-readable dump, one variable per line ("mu x y +1", "alpha_t -1")."""
    lines = []
    for layer, values in (("mu", config.mu), ("nu", config.nu)):
        for p, value in enumerate(values):
            x, y = geom.coords(p)
            lines.append(f"{layer} {x} {y} {int(value):+d}")
    for name, value in zip(BOUNDARY_NAMES, config.boundary, strict=True):
        lines.append(f"{name} {int(value):+d}")
    return "\n".join(lines) + "\n"


def load_config_dump(geom: SurfaceGeometry, text: str) -> MassFieldConfig:
    """Inverse of dump_config; every variable must appear exactly once."""
    values = np.zeros(geom.n_variables, dtype=np.int8)
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        match = _DUMP_LINE.match(line)
        if not match:
            raise ValueError(f"malformed configuration line '{line}'")
        if match.group(1):
            var = geom.parse_variable((match.group(1), int(match.group(2)), int(match.group(3))))
            value = int(match.group(4))
        else:
            var = geom.parse_variable(match.group(5))
            value = int(match.group(6))
        if values[var]:
            raise ValueError(f"variable '{geom.variable_name(var)}' listed twice")
        values[var] = value
    if not np.all(values):
        missing = [geom.variable_name(v) for v in np.flatnonzero(values == 0)]
        raise ValueError(f"configuration dump misses {', '.join(missing[:5])}")
    return MassFieldConfig.from_vector(values)
