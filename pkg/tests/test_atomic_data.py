"""Atom specification, transition strengths and the Doppler distribution."""

import json

import numpy as np
import pytest
from scipy.constants import k as k_boltzmann

from vaporfilter import (
    AtomSpec,
    VelocityGrid,
    doppler_sigma,
    load_atoms,
    maxwell_boltzmann_pdf,
    transition_strengths,
)
from vaporfilter.atomic_data import hyperfine_offsets, line_offset


def test_atom_spec_invariants(rb87):
    assert rb87.mass > 0 and rb87.wavelength > 0 and rb87.natural_linewidth > 0
    with pytest.raises(ValueError):
        AtomSpec(mass=-1, wavelength=795e-9, natural_linewidth=6,
                 nuclear_spin=1.5, ground_splitting=6834.68, excited_splitting=814.5)
    with pytest.raises(ValueError):
        AtomSpec(mass=1.44e-25, wavelength=795e-9, natural_linewidth=6,
                 nuclear_spin=1.3, ground_splitting=6834.68, excited_splitting=814.5)


def test_doppler_sigma_reference_point(rb87):
    # independent recomputation from physical constants
    sigma_v = np.sqrt(k_boltzmann * 338.15 / rb87.mass)
    want = sigma_v / rb87.wavelength / 1e6
    got = doppler_sigma(rb87, 338.15)
    assert got == pytest.approx(want, rel=1e-9)
    assert got == pytest.approx(226.3, abs=0.2)
    fwhm = 2 * np.sqrt(2 * np.log(2)) * got
    assert fwhm == pytest.approx(532.8, abs=0.5)


def test_doppler_sigma_scaling(rb87):
    base = doppler_sigma(rb87, 300.0)
    assert doppler_sigma(rb87, 1200.0) == pytest.approx(2 * base, rel=1e-12)
    heavy = AtomSpec(mass=4 * rb87.mass, wavelength=rb87.wavelength,
                     natural_linewidth=rb87.natural_linewidth,
                     nuclear_spin=rb87.nuclear_spin,
                     ground_splitting=rb87.ground_splitting,
                     excited_splitting=rb87.excited_splitting)
    assert doppler_sigma(heavy, 300.0) == pytest.approx(0.5 * base, rel=1e-12)


def test_maxwell_boltzmann_pdf(rb87):
    sigma_v = np.sqrt(k_boltzmann * 338.15 / rb87.mass)
    assert maxwell_boltzmann_pdf(0.0, rb87, 338.15) == pytest.approx(
        1 / (sigma_v * np.sqrt(2 * np.pi)), rel=1e-12)
    v = np.linspace(-300, 300, 7)
    np.testing.assert_allclose(maxwell_boltzmann_pdf(v, rb87, 338.15),
                               maxwell_boltzmann_pdf(-v, rb87, 338.15))
    # quadrature oracle on a +-5 sigma grid
    grid = np.linspace(-5 * sigma_v, 5 * sigma_v, 4001)
    integral = np.trapezoid(maxwell_boltzmann_pdf(grid, rb87, 338.15), grid)
    assert 0.99999 <= integral <= 1.0 + 1e-12


def test_velocity_grid(rb87):
    grid = VelocityGrid.build(rb87, 338.15)
    assert np.all(np.diff(grid.points) > 0)
    np.testing.assert_allclose(grid.points, -grid.points[::-1], atol=1e-9)
    assert grid.points[-1] >= 4 * grid.sigma_v
    span = grid.points[-1] - grid.points[0]
    assert grid.weights.sum() == pytest.approx(span, rel=1e-12)
    integral = float(grid.weights @ grid.pdf(rb87))
    assert integral >= 0.9999
    with pytest.raises(ValueError):
        VelocityGrid.build(rb87, 338.15, span_sigmas=3.0)


def test_stretched_state_is_dark(rb87):
    line = transition_strengths(rb87, 2, 1)
    assert line.strength(2, +1) == 0.0
    assert line.strength(1, +1) == 0.0   # m'=2 does not exist in F'=1


def test_strength_sum_rule(rb87, rb85):
    for atom in (rb87, rb85):
        for fg in atom.ground_f_values():
            lines = [transition_strengths(atom, fg, fe)
                     for fe in atom.excited_f_values()]
            for m in range(-fg, fg + 1):
                total = sum(line.strength(m, q) for line in lines for q in (-1, 0, 1))
                assert total == pytest.approx(1.0, abs=1e-12)


def test_strength_selection_rule(rb87):
    line = transition_strengths(rb87, 2, 1)
    for (m, q), value in line.strengths.items():
        if abs(m + q) > line.f_excited:
            assert value == 0.0
        assert value >= 0.0


def test_known_relative_strengths(rb87):
    # F=2 couples to each excited level with half its total strength
    for fe in (1, 2):
        line = transition_strengths(rb87, 2, fe)
        for m in range(-2, 3):
            per_level = sum(line.strength(m, q) for q in (-1, 0, 1))
            assert per_level == pytest.approx(0.5, abs=1e-12)
    # the stretched sigma- transition carries the full F'=1 share
    assert transition_strengths(rb87, 2, 1).strength(2, -1) == pytest.approx(0.5, abs=1e-12)


def test_disallowed_f_values(rb87):
    with pytest.raises(ValueError):
        transition_strengths(rb87, 3, 1)
    with pytest.raises(ValueError):
        transition_strengths(rb87, 2, 0)


def test_line_offsets(rb87, rb85):
    assert line_offset(rb87, 2, 1) == 0.0
    assert line_offset(rb87, 2, 2) == pytest.approx(rb87.excited_splitting, abs=1e-9)
    assert line_offset(rb87, 1, 1) == pytest.approx(rb87.ground_splitting, abs=1e-9)
    # background isotope lands between the two main lines' Doppler profiles
    off = line_offset(rb85, 3, 2, reference=rb87)
    assert 1400 < off < 1800


def test_hyperfine_offsets_center_of_gravity():
    offs = hyperfine_offsets(1.5, 6834.68)
    weights = {f: 2 * f + 1 for f in offs}
    cog = sum(weights[f] * offs[f] for f in offs) / sum(weights.values())
    assert cog == pytest.approx(0.0, abs=1e-9)
    assert offs[2] - offs[1] == pytest.approx(6834.68)


def test_atoms_file_schema_errors(tmp_path):
    good = {"atoms": [{"label": "X", "mass_kg": 1e-25, "wavelength_m": 795e-9,
                       "gamma_mhz": 6.0, "nuclear_spin_x2": 3,
                       "ground_splitting_mhz": 1000.0,
                       "excited_splitting_mhz": 100.0, "abundance": 1.0}]}
    path = tmp_path / "atoms.json"
    path.write_text(json.dumps(good))
    atoms = load_atoms(path)
    assert atoms["X"].nuclear_spin == 1.5

    bad = {"atoms": [dict(good["atoms"][0])]}
    del bad["atoms"][0]["mass_kg"]
    path.write_text(json.dumps(bad))
    with pytest.raises(ValueError, match="mass_kg"):
        load_atoms(path)

    bad = {"atoms": [dict(good["atoms"][0], extra_field=1)]}
    path.write_text(json.dumps(bad))
    with pytest.raises(ValueError, match="extra_field"):
        load_atoms(path)

    bad = {"atoms": [dict(good["atoms"][0], nuclear_spin_x2=1.5)]}
    path.write_text(json.dumps(bad))
    with pytest.raises(ValueError, match="nuclear_spin_x2"):
        load_atoms(path)
