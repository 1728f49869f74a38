"""One test per acceptance criterion, each reporting a PASS/FAIL line in the terminal summary."""

import csv
import io
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import constants
from scipy.integrate import quad

import conftest
from cavityforce import cli
from cavityforce.dielectric import polarizability_at
from cavityforce.forces import VACUUM, VdwScenario, vdw_potential
from cavityforce.greens import bulk_nonretarded, onaxis_transmission_integral
from cavityforce.multilayer import (cavity_transmission, generalized_reflection_closed,
                                    generalized_reflection_iterative, symmetric_cavity_stack)
from cavityforce.profiles import ProfileSpec
from cavityforce.riccati import RiccatiProblem, compute_surrogate, solve_riccati_nonretarded

TARGETS = {"linear": (-0.555, 2.028), "thomas-fermi": (-2.067, 1.452)}
SOFT = ("linear", "thomas-fermi")
NM = 1e-9


def record(n: int, ok: bool, detail: str) -> None:
    conftest.ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def _table(path: Path) -> dict:
    out = {}
    for row in csv.DictReader(io.StringIO(path.read_text())):
        out.setdefault(row["model"], []).append((float(row["l_nm"]), float(row["absolute"]),
                                                 float(row["relative"])))
    return out


@pytest.fixture(scope="module")
def shipped_runs(tmp_path_factory):
    """Both shipped helium-in-water scenarios, run twice each through the CLI."""
    runs = {}
    for name in ("helium_water_vdw", "helium_water_casimir"):
        outs = []
        for rep in range(2):
            out = tmp_path_factory.mktemp(f"{name}_{rep}")
            assert cli.main(["run", name, "--out", str(out)]) == 0
            outs.append(out)
        runs[name] = outs
    return runs


def test_criterion_1_fresnel_limit():
    worst = 0.0
    for kind in SOFT:
        for ratio in (1.5, 2.0, 4.0, 9.0, 81.0):
            spec = ProfileSpec(kind, 1.0, 1.0, ratio)
            R = solve_riccati_nonretarded(RiccatiProblem(spec, 1e-6))
            worst = max(worst, abs(R - (ratio - 1.0) / (ratio + 1.0)))
    record(1, worst < 1e-4, f"max |R - fresnel| = {worst:.2e} (tol 1e-4)")


def test_criterion_2_surrogate_table():
    parts, ok = [], True
    for kind in SOFT:
        fit = compute_surrogate(kind)
        t1, t2 = TARGETS[kind]
        d1, d2 = fit.lambda1 / t1 - 1.0, fit.lambda2 / t2 - 1.0
        good = abs(d1) <= 0.10 and abs(d2) <= 0.10 and fit.fit_rms <= 0.01
        ok &= good
        parts.append(f"{kind}: lambda=({fit.lambda1:.3f}, {fit.lambda2:.3f}) dev=({d1:+.1%}, {d2:+.1%}) "
                     f"rms={fit.fit_rms:.2%}")
    record(2, ok, "; ".join(parts) + " (tol 10%, rms 1%)")


def test_criterion_3_bulk_green():
    worst = 0.0
    for dz in np.geomspace(0.1 * NM, 100 * NM, 13):
        for eps, xi in ((1.0, 1e14), (1.777, 1e16), (78.0, 1e11)):
            G = onaxis_transmission_integral(lambda k: 1.0, eps, eps, xi, dz)
            B = bulk_nonretarded(eps, xi, dz)
            worst = max(worst, float(np.max(np.abs(G - B) / np.abs(np.diag(B)).max())))
    record(3, worst < 1e-8, f"max relative deviation {worst:.2e} (tol 1e-8)")


def test_criterion_4_london_limit(helium, cavity):
    # eps = 1 and t = 1: U = -3 hbar / (16 pi^3 eps0^2 l^6) int alpha^2 dxi
    scn = VdwScenario(helium, helium, VACUUM, cavity, boundary="no-cavity", axis="center")
    ls = np.geomspace(0.3 * NM, 30 * NM, 9)
    U = np.array([vdw_potential(scn, l) for l in ls])
    w0 = helium.omega0
    a2 = w0 * quad(lambda x: polarizability_at(helium, w0 * x) ** 2, 0.0, np.inf, epsabs=0, epsrel=1e-12)[0]
    pre = -3.0 * constants.hbar / (16.0 * math.pi**3 * constants.epsilon_0**2)
    ref = pre * a2 / ls**6
    dev = float(np.max(np.abs(U / ref - 1.0)))
    slope = float(np.polyfit(np.log(ls), np.log(-U), 1)[0])
    ok = dev < 1e-6 and abs(slope + 6.0) < 1e-3
    record(4, ok, f"max |U/U_London - 1| = {dev:.2e} (tol 1e-6), exponent {slope:.6f} (tol 1e-3)")


def test_criterion_5_long_range_coincidence(shipped_runs):
    tab = _table(shipped_runs["helium_water_vdw"][0] / "helium_water_vdw.csv")
    at = {m: next(r for l, _, r in rows if abs(l - 30.0) < 1e-9) for m, rows in tab.items()}
    cav = [at["hard"], at["linear"], at["thomas-fermi"]]
    spread = max(cav) / min(cav) - 1.0
    off = max(abs(c / at["no-cavity"] - 1.0) for c in cav)
    ok = spread <= 0.05 and off <= 0.05
    record(5, ok, f"at 30 nm relative hard/linear/tf = {cav[0]:.4f}/{cav[1]:.4f}/{cav[2]:.4f}, "
                  f"spread {spread:.1%}, vs no-cavity {at['no-cavity']:.4f} off by {off:.1%} (tol 5%)")


def test_criterion_6_water_screening(shipped_runs):
    tab = _table(shipped_runs["helium_water_vdw"][0] / "helium_water_vdw.csv")
    ratio = tab["no-cavity"][-1][2]
    ok = 1.0 / 30.0 <= ratio <= 1.0 / 10.0
    record(6, ok, f"no-cavity relative vdW at {tab['no-cavity'][-1][0]:g} nm = {ratio:.4f} "
                  f"(1/{1.0 / ratio:.2f}), band [1/30, 1/10]")


def test_criterion_7_short_range_orderings(shipped_runs):
    vdw = _table(shipped_runs["helium_water_vdw"][0] / "helium_water_vdw.csv")
    cas = _table(shipped_runs["helium_water_casimir"][0] / "helium_water_casimir.csv")

    def short(tab, model):
        return [abs(a) for l, a, _ in tab[model] if l <= 1.0]

    vh, vl, vt = short(vdw, "hard"), short(vdw, "linear"), short(vdw, "thomas-fermi")
    ch, cl, ct = short(cas, "hard"), short(cas, "linear"), short(cas, "thomas-fermi")
    vdw_order = all(t >= lin >= h for h, lin, t in zip(vh, vl, vt))
    cas_order = all(h >= lin >= t for h, lin, t in zip(ch, cl, ct))
    ratio = vt[0] / vh[0]
    ok = vdw_order and cas_order and 1.3 <= ratio <= 2.5
    record(7, ok, f"{len(vh)} points <= 1 nm: vdW TF>=lin>=hard {vdw_order}, Casimir hard>=lin>=TF {cas_order}, "
                  f"vdW TF/hard at {vdw['hard'][0][0]:g} nm = {ratio:.3f} (band [1.3, 2.5])")


def test_criterion_8_reflection_forms():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(10_000):
        eps, eps_s = rng.uniform(1.0, 100.0, 2)
        R_C, d = rng.uniform(0.0, 5e-10, 2)
        k = rng.uniform(0.0, 2e10)
        f = rng.uniform(0.0, 1.0)
        r, r1 = (eps - 1) / (eps + 1) * f, (eps_s - 1) / (eps_s + 1)
        it = generalized_reflection_iterative(symmetric_cavity_stack(eps, eps_s, R_C, d, k, f))
        worst = max(worst, abs(it - generalized_reflection_closed(r, r1, k, R_C, k, d)))
    limit = max(abs(cavity_transmission((e - 1) / (e + 1), 1e9, 0.0) / e - 1.0)
                for e in (1.0001, 1.777, 4.0, 78.0, 100.0))
    ok = worst < 1e-9 and limit <= 1e-12
    record(8, ok, f"max |iterative - closed| over 1e4 draws = {worst:.2e} (tol 1e-9), "
                  f"t(d=0)/eps - 1 = {limit:.1e} (tol 1e-12)")


def test_criterion_9_determinism(shipped_runs):
    same = []
    for name, (a, b) in shipped_runs.items():
        for suffix in (".csv", ".manifest.json"):
            same.append((a / f"{name}{suffix}").read_bytes() == (b / f"{name}{suffix}").read_bytes())
    record(9, all(same), f"{sum(same)} of {len(same)} output files byte-identical across repeated runs")
