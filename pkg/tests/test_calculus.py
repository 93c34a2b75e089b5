import math

import numpy as np
import pytest

from heisenphase.core import Params
from heisenphase.fsb import fsb_gaussian, fsb_project, gaussian_vacuum, hermite_vector, intertwine, lattice_vector, LatticeIndex, vacuum_overlap
from heisenphase.grid import ConfigFn, PhaseFn, inner_product, relative_residual
from heisenphase.reps import RepTag, phase_mesh, reflect
from heisenphase.transforms import contravariant, covariant, symplectic_fourier
from heisenphase.calculus import (
    DenseOperator,
    PDOSymbol,
    cross_toeplitz_apply,
    guillemin_calibration,
    guillemin_symbol,
    integrated,
    localisation_op,
    moyal_compose,
    pdo_apply,
    pdo_kernel,
    toeplitz_conv_kernel,
    toeplitz_matrix_element,
    twisted_convolution,
    weyl_symbol_from_kernel,
)
from heisenphase.twosided import delta_spike

TAU_SIGMA = [(1.0, 1.0), (1.0, 2.0), (0.5, 2.0), (2.0, 0.5)]


@pytest.fixture(scope="module")
def kernels(phase):
    x, y = phase_mesh(phase)
    return [
        PhaseFn(phase, np.exp(-(x**2 + y**2))),
        PhaseFn(phase, np.exp(-((x - 0.5) ** 2 + 2 * y**2))),
        PhaseFn(phase, (2 * x**2 - 1) * np.exp(-1.5 * (x**2 + y**2)) * (1 + 0.2j * y)),
    ]


@pytest.fixture(scope="module")
def psis(phase):
    x, y = phase_mesh(phase)
    return {
        "one": PhaseFn(phase, np.ones(phase.shape)),
        "bump": PhaseFn(phase, np.exp(-((x - 0.3) ** 2) - 0.5 * y**2)),
        "coordinate": PhaseFn(phase, x * np.exp(-0.7 * (x**2 + y**2))),
    }


def test_twisted_with_gaussian_is_projection(params, bump):
    g = fsb_gaussian(1.0, params, bump.spec)
    assert relative_residual(twisted_convolution(bump, g, params) * abs(params.hbar), fsb_project(bump, 1.0, params, method="integral")) <= 1e-8


def test_twisted_with_spike_is_unit(params, kernels):
    spike = delta_spike(kernels[0].spec)
    for k in kernels:
        assert relative_residual(twisted_convolution(k, spike, params), k) <= 1e-6
        assert relative_residual(twisted_convolution(spike, k, params), k) <= 1e-6


@pytest.mark.parametrize("i, j", [(0, 1), (1, 2), (2, 0), (1, 1)])
def test_twisted_is_representation(i, j, params, config, kernels):
    f = hermite_vector(1, 1.0, params, config)
    k1, k2 = kernels[i], kernels[j]
    lhs = integrated(RepTag.Schrodinger, twisted_convolution(k1, k2, params), f, params)
    rhs = integrated(RepTag.Schrodinger, k1, integrated(RepTag.Schrodinger, k2, f, params), params)
    assert relative_residual(lhs, rhs) <= 1e-6


def test_twisted_associative(params, kernels):
    a, b, c = kernels
    lhs = twisted_convolution(twisted_convolution(a, b, params), c, params)
    rhs = twisted_convolution(a, twisted_convolution(b, c, params), params)
    assert relative_residual(lhs, rhs) <= 1e-6


@pytest.mark.parametrize("tag", [RepTag.LeftPulled, RepTag.RightPulled])
def test_integrated_spike_is_identity(tag, params, bump):
    spike = delta_spike(bump.spec)
    assert relative_residual(integrated(tag, spike, bump, params), bump) <= 1e-12


def test_integrated_schrodinger_spike(params, config, phase):
    f = hermite_vector(2, 1.0, params, config)
    spike = delta_spike(phase)
    assert relative_residual(integrated(RepTag.Schrodinger, spike, f, params), f) <= 1e-12


def test_integrated_constant_is_symplectic_fourier(params, phase):
    x, y = phase_mesh(phase)
    F = PhaseFn(phase, np.exp(-2 * ((x - 0.2) ** 2 + y**2)) * (1 + 0.3j * y))
    one = PhaseFn(phase, np.ones(phase.shape))
    sf = symplectic_fourier(F, params) * (2 / abs(params.hbar))
    assert relative_residual(integrated(RepTag.RightPulled, one, F, params), sf) <= 1e-6
    assert relative_residual(integrated(RepTag.LeftPulled, one, F, params), reflect(sf)) <= 1e-6


def test_left_integrated_through_right(params, kernels, bump):
    k = kernels[2]
    lhs = integrated(RepTag.LeftPulled, k, bump, params)
    rhs = integrated(RepTag.RightPulled, reflect(bump), k, params)
    assert relative_residual(lhs, rhs) <= 1e-6


@pytest.fixture(scope="module")
def herm(params, config):
    return [hermite_vector(i, 1.0, params, config) for i in range(4)]


def test_unit_symbol_is_identity(params, config, herm):
    one = PDOSymbol.from_function(lambda xi, m: np.ones_like(xi), config)
    for f in herm:
        assert relative_residual(pdo_apply(one, f, params), f) <= 1e-5


def test_position_symbol_multiplies(params, config, herm):
    pos = PDOSymbol.from_function(lambda xi, m: m + 0 * xi, config)
    for f in herm:
        assert relative_residual(pdo_apply(pos, f, params), f.like(config.axis * f.values)) <= 1e-6


def test_pdo_paths_agree(params, config, herm):
    a = PDOSymbol.from_function(lambda xi, m: np.exp(-2 * (xi**2 + m**2)) * (1 + m), config)
    assert relative_residual(pdo_apply(a, herm[2], params, "integrated"), pdo_apply(a, herm[2], params)) <= 1e-8


def test_weyl_symbol_of_identity(params, config):
    K = DenseOperator(np.eye(config.points) / config.spacing, config)
    a = weyl_symbol_from_kernel(K, params)
    n = a.values.spec.points
    q = n // 4
    inner = a.values.values[q + n // 8 : 3 * q - n // 8, q + n // 8 : 3 * q - n // 8]
    assert np.abs(inner - 1).max() <= 1e-4


@pytest.mark.parametrize("diag", ["identity", "position"])
def test_weyl_symbol_of_diagonal_requantizes(diag, params, config):
    d = np.ones(config.points) if diag == "identity" else config.axis
    K = DenseOperator(np.diag(d) / config.spacing, config)
    assert np.abs(pdo_kernel(weyl_symbol_from_kernel(K, params), params).matrix - K.matrix).max() * config.spacing <= 1e-12


def test_weyl_symbol_of_position(params, config):
    K = DenseOperator(np.diag(config.axis) / config.spacing, config)
    a = weyl_symbol_from_kernel(K, params)
    spec = a.values.spec
    n = spec.points
    sl = slice(3 * n // 8, 5 * n // 8)
    xi, m = np.meshgrid(spec.axis, spec.axis, indexing="ij")
    assert np.abs(a.values.values[sl, sl] - m[sl, sl]).max() <= 1e-5


def test_weyl_round_trip_rank4(params, config):
    rng = np.random.default_rng(4)
    t = config.axis
    mat = np.zeros((config.points, config.points), dtype=complex)
    for _ in range(4):
        c1, c2 = rng.uniform(-1, 1, 2)
        u = np.exp(-2 * (t - c1) ** 2) * (1 + 0.3j * t)
        v = np.exp(-1.5 * (t - c2) ** 2)
        mat += rng.normal() * np.outer(u, v.conj())
    K = DenseOperator(mat, config)
    back = pdo_kernel(weyl_symbol_from_kernel(K, params), params)
    assert relative_residual(back.matrix, K.matrix) <= 1e-5


@pytest.fixture(scope="module")
def moyal_pair(params, config):
    a1 = PDOSymbol.from_function(lambda xi, m: np.exp(-0.3 * (xi**2 + m**2)) * (1 + 0.5 * m), config)
    a2 = PDOSymbol.from_function(lambda xi, m: np.exp(-0.3 * ((xi - 0.3) ** 2 + m**2)) * (0.3 + xi), config)
    exact = weyl_symbol_from_kernel(pdo_kernel(a1, params).compose(pdo_kernel(a2, params)), params)
    return a1, a2, exact


def test_moyal_order_zero_is_product(params, moyal_pair):
    a1, a2, _ = moyal_pair
    assert np.array_equal(moyal_compose(a1, a2, 0, params).values.values, a1.values.values * a2.values.values)


@pytest.mark.parametrize("order", [0, 2, 4])
def test_moyal_with_unit_symbol(order, params, config, moyal_pair):
    a1 = moyal_pair[0]
    one = PDOSymbol.from_function(lambda xi, m: np.ones_like(xi), config)
    assert relative_residual(moyal_compose(a1, one, order, params).values, a1.values) <= 1e-12


def test_moyal_converges(params, moyal_pair):
    a1, a2, exact = moyal_pair
    errs = [relative_residual(moyal_compose(a1, a2, k, params).values, exact.values) for k in (0, 2, 4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-4


def test_moyal_order_bounds(params, moyal_pair):
    with pytest.raises(ValueError):
        moyal_compose(moyal_pair[0], moyal_pair[1], 7, params)


def test_localisation_constant_symbol(params, config, psis):
    vac = gaussian_vacuum(1.0, params, config)
    M = localisation_op(psis["one"], vac, vac, params).matrix
    off = M - np.diag(np.diag(M))
    assert np.abs(off).max() <= 1e-6
    assert np.allclose(np.diag(M) * config.spacing, 1.0, atol=1e-6)


def test_localisation_zero_and_selfadjoint(params, config, phase, psis):
    vac = gaussian_vacuum(1.0, params, config)
    assert np.abs(localisation_op(PhaseFn.zeros(phase), vac, vac, params).matrix).max() == 0
    M = localisation_op(psis["bump"], vac, vac, params).matrix
    assert np.abs(M - M.conj().T).max() <= 1e-10


def test_localisation_is_conjugated_toeplitz(params, config, phase, psis, herm):
    vac = gaussian_vacuum(1.0, params, config)
    psi = psis["bump"]
    f = herm[1] + herm[2] * 0.5
    direct = localisation_op(psi, vac, vac, params).apply(f)
    via = contravariant(cross_toeplitz_apply(psi, covariant(f, vac, params, phase), 1.0, 1.0, params), vac, params)
    assert relative_residual(direct, via) <= 1e-5


def test_cross_toeplitz_constant_symbol(params, phase, psis):
    g = fsb_gaussian(1.0, params, phase)
    assert relative_residual(cross_toeplitz_apply(psis["one"], g, 1.0, 1.0, params), g) <= 1e-6
    out = cross_toeplitz_apply(psis["one"], g, 1.0, 2.0, params)
    ref = intertwine(g, 1.0, 2.0, params)
    scale = np.vdot(ref.values, out.values) / np.vdot(ref.values, ref.values)
    assert relative_residual(out, ref * scale) <= 1e-5


def test_cross_toeplitz_coordinate_symbol(params, phase):
    x, _ = phase_mesh(phase)
    px = PhaseFn(phase, x.astype(complex))
    g = fsb_gaussian(1.0, params, phase)
    brute = fsb_project(px * g, 2.0, params, method="integral")
    assert relative_residual(cross_toeplitz_apply(px, g, 1.0, 2.0, params), brute) <= 1e-8


@pytest.mark.parametrize("tau, sigma", TAU_SIGMA)
def test_guillemin_constant_symbol(tau, sigma, params, phase):
    cal = guillemin_calibration(tau, sigma, params, phase)
    assert cal.measured == pytest.approx(cal.expected, rel=1e-8)
    assert cal.expected == pytest.approx(vacuum_overlap(tau, sigma))


@pytest.mark.parametrize("tau, sigma", TAU_SIGMA)
@pytest.mark.parametrize("name", ["one", "bump", "coordinate"])
def test_guillemin_matrix_elements(name, tau, sigma, params, psis, herm):
    psi = psis[name]
    a = guillemin_symbol(psi, tau, sigma, params)
    K = pdo_kernel(a, params)
    worst = 0.0
    for f in herm:
        af = K.apply(f)
        for g in herm:
            lhs = toeplitz_matrix_element(psi, f, g, tau, sigma, params)
            worst = max(worst, abs(lhs - inner_product(af, g)) / max(abs(lhs), 1e-3))
    assert worst <= 1e-5


def test_guillemin_of_gaussian_closed_form(params, phase):
    # Gaussian smoothing of Phi_1 by Phi_11, done by hand at hbar = tau = sigma = 1
    a = guillemin_symbol(fsb_gaussian(1.0, params, phase), 1.0, 1.0, params).values
    xi, m = np.meshgrid(a.spec.axis, a.spec.axis, indexing="ij")
    closed = 0.8 * np.exp(-2 * math.pi / 5 * m**2 - math.pi / 10 * xi**2)
    inner = (np.abs(xi) < phase.extent) & (np.abs(m) < phase.extent / 2)
    assert np.abs(a.values - closed)[inner].max() <= 1e-6 * 0.8


def test_toeplitz_conv_kernel_acts_as_toeplitz(params, phase):
    g = fsb_gaussian(1.0, params, phase)
    x, y = phase_mesh(phase)
    psi = PhaseFn(phase, np.exp(-6 * ((x - 0.3) ** 2 + y**2)))
    k = toeplitz_conv_kernel(psi, 1.0, params)
    for F in (g, lattice_vector(LatticeIndex(1, 0), 1.0, params, phase)):
        lhs = integrated(RepTag.LeftPulled, k, F, params)
        assert relative_residual(lhs, cross_toeplitz_apply(psi, F, 1.0, 1.0, params)) <= 1e-5


def test_toeplitz_conv_kernel_linear(params, psis):
    a = toeplitz_conv_kernel(psis["bump"] * 2 + psis["coordinate"] * 1j, 1.0, params)
    b = toeplitz_conv_kernel(psis["bump"], 1.0, params) * 2 + toeplitz_conv_kernel(psis["coordinate"], 1.0, params) * 1j
    assert relative_residual(a, b) <= 1e-12
