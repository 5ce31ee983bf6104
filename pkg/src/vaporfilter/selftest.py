"""Built-in invariant checks, runnable without a test framework.

Covers the fast structural invariants: angular-momentum identities, strength
sum rules, population conservation and mirror symmetry, interferometer energy
identities, and output determinism.  One PASS/FAIL line per check.
"""

from __future__ import annotations

import numpy as np

from .atomic_data import VelocityGrid, wigner3j
from .polarization import InterferometerConfig, filter_outputs
from .pumping import PumpConfig, RelaxationConfig, steady_state_populations
from .scan import run_pipeline


def _half_range(maximum):
    return [k / 2.0 for k in range(0, int(2 * maximum) + 1)]


def check_wigner_orthogonality(tol=1e-12):
    worst = 0.0
    for j1 in _half_range(4):
        for j2 in _half_range(4):
            lo, hi = abs(j1 - j2), j1 + j2
            j3 = lo
            while j3 <= hi + 1e-9:
                if j3 <= 4 + 1e-9:
                    m3 = -j3
                    while m3 <= j3 + 1e-9:
                        total = 0.0
                        m1 = -j1
                        while m1 <= j1 + 1e-9:
                            m2 = -m1 - m3
                            if abs(m2) <= j2 + 1e-9:
                                total += (2 * j3 + 1) * wigner3j(j1, j2, j3, m1, m2, m3) ** 2
                            m1 += 1.0
                        worst = max(worst, abs(total - 1.0))
                        m3 += 1.0
                j3 += 1.0
    return worst < tol, f"3j orthogonality worst deviation {worst:.2e}"


def check_wigner_symmetry(tol=1e-12):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        j1, j2 = rng.integers(0, 7, 2) / 2.0
        j3_choices = np.arange(abs(j1 - j2), j1 + j2 + 0.5)
        j3 = float(rng.choice(j3_choices))
        m1 = float(rng.integers(-int(2 * j1), int(2 * j1) + 1)) / 2.0
        if (2 * j1 - 2 * m1) % 2:
            continue
        m2_choices = [m for m in np.arange(-j2, j2 + 0.5) if abs(-m1 - m) <= j3]
        if not m2_choices:
            continue
        m2 = float(rng.choice(m2_choices))
        m3 = -m1 - m2
        base = wigner3j(j1, j2, j3, m1, m2, m3)
        even = wigner3j(j2, j3, j1, m2, m3, m1)
        odd = wigner3j(j2, j1, j3, m2, m1, m3)
        phase = (-1.0) ** int(round(j1 + j2 + j3))
        worst = max(worst, abs(even - base), abs(odd - phase * base))
    return worst < tol, f"3j symmetry worst deviation {worst:.2e}"


def check_sum_rules(tol=1e-12):
    worst = 0.0
    for i2 in (3, 5):
        from .atomic_data import _strength_system
        _, _, absorb, branch = _strength_system(i2)
        worst = max(worst, np.abs(absorb.sum(axis=1) - 1.0).max())
        worst = max(worst, np.abs(branch.sum(axis=1) - 1.0).max())
    return worst < tol, f"strength sum rules worst deviation {worst:.2e}"


def check_populations(cfg):
    grid = VelocityGrid.build(cfg.atom, cfg.cell.temperature, 4.5, 401)
    pump = PumpConfig(detuning=80.0, saturation_parameter=25.0)
    relax = cfg.relaxation
    pops = steady_state_populations(grid, pump, relax, cfg.atom)
    sums = np.abs(pops.fractions.sum(axis=1) - 1.0).max()
    neg = pops.fractions.min()
    mirrored = steady_state_populations(
        grid, PumpConfig(detuning=80.0, saturation_parameter=25.0, polarization=-1),
        relax, cfg.atom)
    idx = [pops.sublevels.index((f, -m)) for (f, m) in pops.sublevels]
    mirror_dev = np.abs(pops.fractions - mirrored.fractions[:, idx]).max()
    ok = sums < 1e-10 and neg > -1e-12 and mirror_dev < 1e-12
    return ok, (f"conservation {sums:.2e}, min population {neg:.2e}, "
                f"mirror asymmetry {mirror_dev:.2e}")


def check_energy_identity(tol=1e-12):
    rng = np.random.default_rng(11)
    a_r = rng.uniform(0, 10, 1000)
    a_l = rng.uniform(0, 10, 1000)
    cfg = InterferometerConfig(polarizer_extinction=0.0, window_transmission=0.83)
    i_h, i_v = filter_outputs(a_r, a_l, cfg)
    target = 0.83 * 0.5 * (np.exp(-a_r) + np.exp(-a_l))
    worst = np.abs(i_h + i_v - target).max()
    return worst < tol, f"energy split identity worst deviation {worst:.2e}"


def check_determinism(cfg):
    grid = np.arange(-120.0, 121.0, 4.0)
    a = run_pipeline(cfg, probe_grid=grid).spectrum
    b = run_pipeline(cfg, probe_grid=grid).spectrum
    same = (np.array_equal(a.t_v, b.t_v) and np.array_equal(a.t_h, b.t_h))
    return same, "repeated pipeline runs bit-identical" if same else "pipeline not deterministic"


def run(cfg, verbose=True) -> int:
    checks = [
        ("wigner-3j-orthogonality", check_wigner_orthogonality),
        ("wigner-3j-symmetry", check_wigner_symmetry),
        ("strength-sum-rules", check_sum_rules),
        ("pumping-invariants", lambda: check_populations(cfg)),
        ("energy-split-identity", check_energy_identity),
        ("determinism", lambda: check_determinism(cfg)),
    ]
    failures = 0
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        if not ok:
            failures += 1
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return failures
