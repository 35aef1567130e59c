"""Helicity frames, angular quadrature, intensity maps and waveforms."""

import numpy as np
import pytest

from arraylight.core import AmplitudeState, LaserDrive, build_lattice
from arraylight.dynamics import propagate_eigen
from arraylight.errors import InvalidArgumentError
from arraylight.farfield import (AngularGrid, angular_map, helicity_frame,
                                 integrate_flux, intensity, intensity_map,
                                 waveform)
from arraylight.hamiltonian import assemble

K0 = 2.0 * np.pi
NORM = 3.0 / (8.0 * np.pi)


def _single_excited(nu=2):
    arr = build_lattice(1, 1, 1, 0.5)
    beta = np.zeros((1, 3), dtype=complex)
    beta[0, nu] = 1.0
    return arr, AmplitudeState(np.zeros(1, dtype=complex), beta)


def _random_unit(rng, m):
    v = rng.normal(size=(m, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


def test_frame_orthonormal_transverse():
    rng = np.random.default_rng(1)
    for r_hat in _random_unit(rng, 1000):
        fr = helicity_frame(r_hat)
        for eps in (fr.eps_plus, fr.eps_minus):
            assert abs(np.vdot(eps, eps) - 1.0) < 1e-12
            assert abs(eps @ r_hat) < 1e-12
        assert abs(np.vdot(fr.eps_plus, fr.eps_minus)) < 1e-12


def test_frame_pole_convention():
    # at the north pole e_theta -> x, e_phi -> y
    fr = helicity_frame(np.array([0.0, 0.0, 1.0]))
    assert np.allclose(fr.eps_plus, np.array([1.0, 1j, 0.0]) / np.sqrt(2))
    assert np.allclose(fr.eps_minus, np.array([1.0, -1j, 0.0]) / np.sqrt(2))


def test_frame_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        helicity_frame(np.zeros(3))
    with pytest.raises(InvalidArgumentError):
        helicity_frame(np.array([0.0, 0.0, 2.0]))


def test_grid_weights_cover_sphere():
    grid = AngularGrid(48, 96)
    assert np.isclose(grid.weights.sum(), 4.0 * np.pi, atol=1e-12)
    assert len(grid) == 48 * 96
    # directions are unit vectors
    assert np.allclose(np.linalg.norm(grid.dirs, axis=1), 1.0, atol=1e-14)
    assert grid.theta.min() > 0.0 and grid.theta.max() < np.pi


def test_single_atom_dipole_pattern():
    arr, psi0 = _single_excited()
    H = assemble(arr, LaserDrive(0.0, 0.0))
    traj = propagate_eigen(H, psi0, np.linspace(0.0, 1.0, 11))
    grid = AngularGrid(32, 64)
    amap = angular_map(traj, 0.0, grid=grid)
    pred = NORM * 0.5 * (1.0 + np.cos(grid.theta) ** 2)
    assert np.max(np.abs(amap.total - pred)) < 1e-10


def test_pi_emission_helicity_balanced():
    # a nu = 0 (z) dipole radiates equal helicity components everywhere
    arr, psi0 = _single_excited(nu=1)
    H = assemble(arr, LaserDrive(0.0, 0.0))
    traj = propagate_eigen(H, psi0, np.linspace(0.0, 1.0, 11))
    amap = angular_map(traj, 0.0, grid=AngularGrid(24, 48))
    assert np.max(np.abs(amap.I_plus - amap.I_minus)) < 1e-14


def test_global_phase_gauge_invariance():
    arr = build_lattice(2, 1, 2, 0.5)
    rng = np.random.default_rng(12)
    beta = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    fr = helicity_frame(np.array([0.3, -0.4, np.sqrt(1 - 0.25)]))
    i0 = intensity(beta, arr, fr)
    i1 = intensity(beta * np.exp(0.77j), arr, fr)
    assert np.allclose(i0, i1, rtol=1e-12)


def test_phi_independence_for_z_chain():
    # chain along z driven into nu = +1: intensity independent of phi
    arr = build_lattice(1, 1, 4, 0.4)
    rng = np.random.default_rng(3)
    beta = np.zeros((4, 3), dtype=complex)
    beta[:, 2] = rng.normal(size=4) + 1j * rng.normal(size=4)
    theta = 1.1
    vals = []
    for phi in np.linspace(0.0, 2 * np.pi, 17):
        r_hat = np.array([np.sin(theta) * np.cos(phi),
                          np.sin(theta) * np.sin(phi), np.cos(theta)])
        vals.append(intensity(beta, arr, helicity_frame(r_hat)))
    vals = np.array(vals)
    assert np.max(np.abs(vals - vals[0])) < 1e-12


def test_quadrature_converged():
    arr = build_lattice(2, 2, 2, 0.7)
    rng = np.random.default_rng(10)
    beta = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    f1 = sum(integrate_flux(intensity_map(beta, arr, AngularGrid(64, 128))))
    f2 = sum(integrate_flux(intensity_map(beta, arr, AngularGrid(128, 256))))
    assert abs(f1 - f2) < 1e-8 * abs(f2)


def test_single_atom_total_flux_is_population():
    # integrated intensity over the sphere = Gamma * excited population
    arr, psi0 = _single_excited()
    beta = psi0.beta
    for grid in (AngularGrid(32, 64), AngularGrid(64, 128)):
        fp, fm = integrate_flux(intensity_map(beta, arr, grid))
        assert abs(fp + fm - 1.0) < 1e-12


def test_waveform_matches_per_time_maps():
    # the quadratic-form fast path must agree with explicit maps
    arr = build_lattice(1, 1, 3, 0.45)
    H = assemble(arr, LaserDrive(1.5, 3.0))
    psi0 = AmplitudeState(np.full(3, 1 / np.sqrt(3), dtype=complex))
    t = np.linspace(0.0, 6.0, 31)
    traj = propagate_eigen(H, psi0, t)
    grid = AngularGrid(24, 48)
    wave = waveform(traj, grid=grid, allow_truncation=True)
    for k in (0, 7, 19, 30):
        amap = angular_map(traj, t[k], grid=grid)
        assert np.isclose(wave.flux_plus[k], grid.weights @ amap.I_plus,
                          rtol=1e-12, atol=1e-15)
        assert np.isclose(wave.flux_minus[k], grid.weights @ amap.I_minus,
                          rtol=1e-12, atol=1e-15)


def test_waveform_single_atom_decay():
    arr, psi0 = _single_excited()
    H = assemble(arr, LaserDrive(0.0, 0.0))
    t = np.linspace(0.0, 30.0, 3001)  # trapezoid error ~ dt^2/12
    traj = propagate_eigen(H, psi0, t)
    wave = waveform(traj, grid=AngularGrid(32, 64))
    assert np.max(np.abs(wave.flux_total - np.exp(-t))) < 1e-10
    assert abs(wave.cumulative[-1] - 1.0) < 1e-4
    # state-side and field-side photon counts agree
    assert np.max(np.abs(wave.cumulative - wave.state_side)) < 1e-4


def test_waveform_truncation_guard():
    arr, psi0 = _single_excited()
    H = assemble(arr, LaserDrive(0.0, 0.0))
    t = np.linspace(0.0, 1.0, 11)  # barely decayed
    traj = propagate_eigen(H, psi0, t)
    with pytest.raises(InvalidArgumentError):
        waveform(traj, grid=AngularGrid(16, 32))
    wave = waveform(traj, grid=AngularGrid(16, 32), allow_truncation=True)
    assert wave.u_grid.shape == t.shape


def test_waveform_custom_u_grid():
    arr, psi0 = _single_excited()
    H = assemble(arr, LaserDrive(0.0, 0.0))
    t = np.linspace(0.0, 20.0, 2001)
    traj = propagate_eigen(H, psi0, t)
    u = np.linspace(0.0, 20.0, 41)
    wave = waveform(traj, grid=AngularGrid(16, 32), u_grid=u)
    assert np.allclose(wave.flux_total, np.exp(-u), atol=1e-9)


def test_angular_map_csv(tmp_path):
    arr, psi0 = _single_excited()
    H = assemble(arr, LaserDrive(0.0, 0.0))
    traj = propagate_eigen(H, psi0, np.linspace(0.0, 1.0, 3))
    amap = angular_map(traj, 0.5, grid=AngularGrid(8, 16))
    path = tmp_path / "map.csv"
    amap.to_csv(path, header_lines=["v 1"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# v 1"
    assert lines[1] == "theta,phi,I_plus,I_minus,weight"
    assert len(lines) == 2 + 8 * 16


def test_intensity_against_direct_formula():
    # brute-force the defining sum for random states and directions
    arr = build_lattice(2, 2, 1, 0.6)
    rng = np.random.default_rng(44)
    beta = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    E = np.column_stack([
        np.array([1.0, -1j, 0.0]) / np.sqrt(2),
        np.array([0.0, 0.0, 1.0]),
        -np.array([1.0, 1j, 0.0]) / np.sqrt(2),
    ])
    for r_hat in _random_unit(rng, 20):
        fr = helicity_frame(r_hat)
        ip, im = intensity(beta, arr, fr)
        for eps, got in ((fr.eps_plus, ip), (fr.eps_minus, im)):
            amp = 0.0
            for j in range(4):
                phase = np.exp(1j * K0 * (r_hat @ arr.positions[j]))
                amp += phase * (eps.conj() @ (E @ beta[j]))
            assert np.isclose(got, NORM * abs(amp) ** 2, rtol=1e-12)
