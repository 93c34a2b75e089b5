import math

import numpy as np
import pytest

from heisenphase.core import GroupElement, Params
from heisenphase.fsb import fsb_gaussian, fsb_project, gaussian_vacuum, hermite_vector, mixed_gaussian_closed
from heisenphase.grid import ConfigFn, PhaseFn, inner_product, relative_residual
from heisenphase.reps import RepTag, act, euclidean_shift, modulation, phase_mesh
from heisenphase.transforms import (
    PeelOverflowError,
    Window,
    _calibrate,
    calibrate,
    cauchy_riemann_residual,
    contravariant,
    contravariant_left,
    covariant,
    covariant_left,
    fourier_wigner,
    fsb_transform,
    peel,
    pre_fsb_transform,
    symplectic_fourier,
    twisted_convolution,
    unpeel,
)


@pytest.fixture(scope="module")
def herm(params, config):
    return [hermite_vector(i, 1.0, params, config) for i in range(4)]


def test_vacuum_matrix_coefficient_is_gaussian(params, config, phase):
    for tau in (0.5, 1.0, 2.0):
        vac = gaussian_vacuum(tau, params, config)
        g = fsb_gaussian(tau, params, phase)
        assert np.abs(fourier_wigner(vac, vac, params, phase).values - g.values).max() <= 1e-8


def test_zero_input(params, config, phase, herm):
    assert fourier_wigner(ConfigFn.zeros(config), herm[0], params, phase).norm() == 0
    assert contravariant(PhaseFn.zeros(phase), herm[0], params).norm() == 0


@pytest.mark.parametrize("i, j, k, l", [(0, 1, 0, 0), (1, 1, 0, 2), (2, 3, 1, 1), (3, 3, 2, 0), (0, 2, 3, 3)])
def test_sesqui_unitarity(i, j, k, l, params, phase, herm):
    f1, f2, p1, p2 = herm[i], herm[j], herm[k] + herm[0] * 0.5, herm[l] + herm[1] * 0.3j
    lhs = inner_product(covariant(f1, p1, params, phase), covariant(f2, p2, params, phase))
    rhs = inner_product(f1, f2) * np.conj(inner_product(p1, p2)) / abs(params.hbar)
    assert abs(lhs - rhs) <= 1e-6 * max(abs(rhs), 1.0)


def test_isometry_for_vacuum_window(params, phase, herm):
    for f in herm:
        assert covariant(f, herm[0], params, phase).norm() * math.sqrt(abs(params.hbar)) == pytest.approx(f.norm(), rel=1e-6)


def test_covariant_intertwines(params, phase, herm):
    rng = np.random.default_rng(2)
    f = herm[1] + herm[2] * 0.5
    for _ in range(5):
        steps = rng.integers(-6, 7, 2)
        g = GroupElement(0.0, [steps[0] * phase.spacing * 2], [0.0])
        lhs = covariant(act(RepTag.Schrodinger, g, f, params), herm[0], params, phase)
        rhs = act(RepTag.LeftPulled, g, covariant(f, herm[0], params, phase), params)
        assert relative_residual(lhs, rhs) <= 1e-6


@pytest.mark.parametrize("window", ["phi1", "phi2", "hermite1"])
def test_reconstruction(window, params, config, phase, herm):
    theta = gaussian_vacuum(1.0, params, config)
    psi = {"phi1": theta, "phi2": gaussian_vacuum(2.0, params, config), "hermite1": herm[1]}[window]
    f = herm[1] + herm[3] * 0.4j
    rec = contravariant(covariant(f, theta, params, phase), psi, params)
    assert (rec - f * inner_product(psi, theta)).norm() / f.norm() <= 1e-6


def test_contravariant_of_gaussian_returns_vacuum(params, phase, herm):
    assert relative_residual(contravariant(fsb_gaussian(1.0, params, phase), herm[0], params), herm[0]) <= 1e-8


def test_calibration_is_stable(params, config):
    a = calibrate(params, config)
    _calibrate.cache_clear()
    b = calibrate(params, config)
    assert a.reconstruction == pytest.approx(b.reconstruction, rel=1e-8)
    assert a.fsb_measure == pytest.approx(b.fsb_measure, rel=1e-8)


def test_covariant_left_matches_pairing(params, phase, bump):
    Psi = fsb_gaussian(1.0, params, phase)
    out = covariant_left(bump, Psi, params)
    for i, j in [(32, 32), (28, 35), (40, 30)]:
        g = GroupElement(0.0, [phase.axis[i]], [phase.axis[j]])
        direct = inner_product(bump, act(RepTag.LeftPulled, g, Psi, params))
        assert out.values[i, j] == pytest.approx(direct, abs=1e-6 * abs(direct) + 1e-14)


def test_covariant_left_of_gaussian_is_member(params, phase):
    g = fsb_gaussian(1.0, params, phase)
    out = covariant_left(g, g, params)
    assert relative_residual(fsb_project(out, 1.0, params), out) <= 1e-6


def test_left_transforms_vanish_on_zero(params, phase, bump):
    zero = PhaseFn.zeros(phase)
    assert covariant_left(bump, zero, params).norm() == 0
    assert contravariant_left(bump, zero, params).norm() == 0


def test_fsb_transform_of_vacuum_is_flat(params, config, phase):
    out = fsb_transform(gaussian_vacuum(1.0, params, config), 1.0, params, phase)
    q = phase.points // 4
    assert np.abs(out.values[q : 3 * q, q : 3 * q] - 1).max() <= 1e-6


def test_fsb_transform_linear(params, phase, herm):
    a = fsb_transform(herm[1] * 2 + herm[2] * 1j, 1.0, params, phase)
    b = fsb_transform(herm[1], 1.0, params, phase) * 2 + fsb_transform(herm[2], 1.0, params, phase) * 1j
    assert relative_residual(unpeel(a, 1.0, params), unpeel(b, 1.0, params)) <= 1e-12


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_pre_fsb_is_antiholomorphic_after_peeling(m, params, phase, herm):
    assert cauchy_riemann_residual(pre_fsb_transform(herm[m], 1.0, params, phase), 1.0, params) <= 1e-5


def test_peel_gaussian_is_one(params, phase):
    assert np.abs(peel(fsb_gaussian(1.0, params, phase), 1.0, params).values - 1).max() <= 1e-10


def test_peel_unpeel_round_trip(params, phase, bump):
    assert relative_residual(peel(unpeel(bump, 1.0, params), 1.0, params), bump) <= 1e-12


def test_peel_overflow_raises(params):
    from heisenphase.grid import GridSpec

    wide = GridSpec(2, 40.0, 16)
    with pytest.warns(RuntimeWarning), pytest.raises(PeelOverflowError):
        peel(PhaseFn.zeros(wide), 1.0, params)


def test_symplectic_fourier_involution(params, bump):
    assert relative_residual(symplectic_fourier(symplectic_fourier(bump, params), params), bump) <= 1e-12


@pytest.mark.parametrize("tau, sigma", [(0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (1.0, 2.0), (0.5, 1.0), (2.0, 0.5)])
def test_symplectic_fourier_fixes_gaussians(tau, sigma, params, phase):
    g = mixed_gaussian_closed(tau, sigma, params, phase)
    assert relative_residual(symplectic_fourier(g, params), g) <= 1e-8


V = (4 * 0.1767766952966369, -2 * 0.1767766952966369)


def test_fourier_commutes_with_left(params, phase, bump):
    g = GroupElement(0.0, [V[0]], [V[1]])
    lhs = symplectic_fourier(act(RepTag.LeftPulled, g, bump, params), params)
    rhs = act(RepTag.LeftPulled, g, symplectic_fourier(bump, params), params)
    assert relative_residual(lhs, rhs) <= 1e-8


def test_fourier_flips_right(params, phase, bump):
    g = GroupElement(0.0, [V[0]], [V[1]])
    neg = GroupElement(0.0, [-V[0]], [-V[1]])
    lhs = symplectic_fourier(act(RepTag.RightPulled, g, bump, params), params)
    rhs = act(RepTag.RightPulled, neg, symplectic_fourier(bump, params), params)
    assert relative_residual(lhs, rhs) <= 1e-8


def test_fourier_swaps_shift_and_modulation(params, phase, bump):
    v = (2 * V[0], 2 * V[1])
    lhs = symplectic_fourier(euclidean_shift(v, bump, params), params)
    rhs = modulation(v, symplectic_fourier(bump, params), params)
    assert relative_residual(lhs, rhs) <= 1e-8
    lhs = symplectic_fourier(modulation(v, bump, params), params)
    rhs = euclidean_shift(v, symplectic_fourier(bump, params), params)
    assert relative_residual(lhs, rhs) <= 1e-8


@pytest.mark.parametrize("window", [0, 1])
def test_image_fixed_by_window_projection(window, params, phase, herm):
    theta = herm[window]
    image = covariant(herm[2] + herm[3] * 0.5j, theta, params, phase)
    proj = twisted_convolution(image, covariant(theta, theta, params, phase), params) * abs(params.hbar)
    assert relative_residual(proj, image) <= 1e-6


def test_distinct_window_overlap(params, config, phase, herm):
    psi = gaussian_vacuum(2.0, params, config)
    f, g = herm[1], herm[1] + herm[2]
    lhs = abs(inner_product(covariant(f, herm[0], params, phase), covariant(g, psi, params, phase)))
    rhs = abs(inner_product(f, g) * inner_product(psi, herm[0])) / abs(params.hbar)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_twisted_convolution_of_transforms(params, config, phase, herm):
    phi2 = gaussian_vacuum(2.0, params, config)
    f1, f2 = herm[1], herm[0] + herm[2]
    lhs = twisted_convolution(covariant(f1, herm[0], params, phase), covariant(f2, phi2, params, phase), params) * abs(params.hbar)
    rhs = covariant(f1, phi2, params, phase) * inner_product(f2, herm[0])
    assert relative_residual(lhs, rhs) <= 1e-5


def test_window_rejects_zero(config):
    with pytest.raises(ValueError):
        Window(ConfigFn.zeros(config))
