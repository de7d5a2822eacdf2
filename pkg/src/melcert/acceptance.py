"""End-to-end acceptance checks, each returning a pass/fail row with the numbers behind it."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import coupled_oscillators, lookup, pendulum_torque
from .certificate import (CERTIFIED, INCONCLUSIVE, certify, certify_family,
                          place_loop_center, _loop_for, _unchecked_I_hat)
from .contour import default_contour, integrate_loop
from .elliptic import (EllipticModulus, PoleError, complete_elliptic_K,
                       jacobi_sn_cn_dn, pole_lattice)
from .melnikov import (closed_form_I_hat, closed_form_J, melnikov_quadrature,
                       resonance_at, solve_resonance)
from .orbits import (NoSimpleZeroError, StroboscopicMap, energy_drift,
                     find_subharmonic, pendulum_first_integrals, return_time)

__all__ = ["Row", "CRITERIA", "run_all", "format_table", "DUFFING_CASES"]

# (selector, resonant parameter) for the four families, both inner branches
DUFFING_CASES = (
    ("duffing:a=1", 0.5),
    ("duffing:a=0", 1.3),
    ("duffing:a=-1:inner+", 0.6),
    ("duffing:a=-1:inner-", 0.6),
    ("duffing:a=-1:outer", 0.85),
)
LN_CASES = ((1, 1), (3, 1), (1, 2))


@dataclass
class Row:
    number: int
    title: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {self.detail}"


def _shifted_loop(fam, spec):
    center, window = place_loop_center(fam.pole(spec.param_star), spec.T_star)
    return _loop_for(center, fam.neighbours(spec.param_star, center), window, None, 1e-10)


def _I_hat(fam, spec, delta, beta, phis, contour):
    return _unchecked_I_hat(fam, spec, delta, beta, np.asarray(phis, dtype=float), contour)


def elliptic_identities(samples: int = 1000, seed: int = 20240917) -> Row:
    rng = np.random.default_rng(seed)
    worst = 0.0
    used = 0
    while used < samples:
        k = float(rng.uniform(0.01, 0.99))
        u = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
        try:
            sn, cn, dn = jacobi_sn_cn_dn(u, k)
        except PoleError:
            continue
        scale = max(1.0, abs(sn) ** 2, abs(cn) ** 2, abs(dn) ** 2)
        e1 = abs(sn * sn + cn * cn - 1) / scale
        e2 = abs(dn * dn + k * k * sn * sn - 1) / scale
        worst = max(worst, e1, e2)
        used += 1
    K = complete_elliptic_K(1 / math.sqrt(2))
    printed = f"{math.floor(K * 1000) / 1000:.3f}"
    ok = worst < 1e-10 and printed == "1.854"
    return Row(1, "elliptic identities and K(1/sqrt2)", ok,
               f"max identity error {worst:.2e} over {samples} complex (u, k) (tol 1e-10); K = {K:.15f} -> {printed}",
               {"max_error": worst, "K": K})


def _zero_loop(k, kind):
    mod = EllipticModulus.from_k(k)
    K = complete_elliptic_K(mod)
    Kp = complete_elliptic_K(mod.complement())
    pole = 1j * Kp
    near = pole_lattice(mod, (pole - 3 * (K + 1j * Kp), pole + 3 * (K + 1j * Kp)))
    spec = default_contour(pole, near)

    def f(z):
        sn, cn, dn = jacobi_sn_cn_dn(z, k)
        return sn ** 2 * (dn ** 2 if kind == "dn" else cn ** 2)

    return abs(integrate_loop(f, spec).value)


def vanishing_loop_integrals() -> Row:
    vals = {f"sn2dn2 k={k}": _zero_loop(k, "dn") for k in (0.3, 0.5, 0.69)}
    vals.update({f"sn2cn2 k={k}": _zero_loop(k, "cn") for k in (0.75, 0.9)})
    worst = max(vals.values())
    return Row(2, "vanishing loop integrals of sn^2 dn^2 and sn^2 cn^2", worst < 1e-8,
               f"max |loop| = {worst:.2e} (tol 1e-8)", vals)


def closed_form_contours(grid: int = 32) -> Row:
    phis = 2 * math.pi * np.arange(grid) / grid
    worst = worst_upper = worst_conj = 0.0
    branch = 0.0
    per_case = {}
    inner = {}
    for name, p in DUFFING_CASES:
        fam = lookup(name).family
        for l, n in LN_CASES:
            spec = resonance_at(fam, p, l, n)
            loop = _shifted_loop(fam, spec)
            num = _I_hat(fam, spec, 0.1, 1.0, phis, loop)
            printed = closed_form_I_hat(fam, spec, 1.0, phis)
            upper = closed_form_I_hat(fam, spec, 1.0, phis, upper=True)
            conj = _I_hat(fam, spec, 0.1, 1.0, phis, loop.mirrored())
            e = float(np.max(np.abs(num - printed) / np.abs(printed)))
            worst = max(worst, e)
            worst_upper = max(worst_upper, float(np.max(np.abs(num - upper) / np.abs(upper))))
            worst_conj = max(worst_conj, float(np.max(np.abs(conj - printed) / np.abs(printed))))
            per_case[f"{name} l={l} n={n}"] = e
            if "inner" in name:
                inner.setdefault((l, n), []).append(num)
    for vals in inner.values():
        plus, minus = vals
        branch = max(branch, float(np.max(np.abs(plus + minus) / np.abs(plus))))
    ok = worst < 1e-6
    detail = (f"max rel. error vs printed forms at the stated pole {worst:.2e} (tol 1e-6); "
              f"printed forms reproduced by the loop around the conjugate pole to {worst_conj:.1e}, "
              f"equivalently stated pole with phi -> -phi to {worst_upper:.1e}; "
              f"branch sign inner- = -inner+ holds to {branch:.1e}")
    return Row(3, "closed-form loop integrals", ok, detail,
               {"max_rel_error": worst, "conjugate_pole_error": worst_conj,
                "upper_pole_error": worst_upper, "branch_error": branch, "cases": per_case})


def melnikov_closed_forms(grid: int = 32) -> Row:
    phis = 2 * math.pi * np.arange(grid) / grid
    worst = 0.0
    amp_worst = 0.0
    design = np.column_stack([np.ones(grid), np.sin(phis), np.cos(phis)])
    for name, p in DUFFING_CASES:
        fam = lookup(name).family
        for l, n in ((1, 1), (3, 1), (1, 2), (2, 1), (3, 2)):
            spec = resonance_at(fam, p, l, n)
            cf = closed_form_J(fam, spec)
            quad = melnikov_quadrature(fam, spec, 0.1, 1.0, phis)
            ref = cf(0.1, 1.0, phis)
            worst = max(worst, float(np.max(np.abs(quad - ref)) / np.max(np.abs(ref))))
            if cf.J2 == 0.0:
                coef, *_ = np.linalg.lstsq(design, quad, rcond=None)
                amp_worst = max(amp_worst, float(math.hypot(coef[1], coef[2])))
    ok = worst < 1e-6 and amp_worst < 1e-8
    return Row(4, "Melnikov quadrature vs J1/J2 closed forms", ok,
               f"max rel. error {worst:.2e} (tol 1e-6); vanishing cases sinusoidal amplitude {amp_worst:.2e} (tol 1e-8)",
               {"max_rel_error": worst, "max_vanishing_amplitude": amp_worst})


def contour_independence() -> Row:
    phis = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    diffs = {}
    for name, p in DUFFING_CASES:
        fam = lookup(name).family
        spec = resonance_at(fam, p, 1, 1)
        loop = _shifted_loop(fam, spec)
        a = _I_hat(fam, spec, 0.1, 1.0, phis, loop)
        b = _I_hat(fam, spec, 0.1, 1.0, phis, loop.with_radius(loop.radius / 2))
        diffs[name] = float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(a)))))
    for system, I_star in ((pendulum_torque(0.5), [1.0]), (coupled_oscillators(), [1.0, 2.0, 2.0])):
        c1 = certify(system, I_star=I_star)
        c2 = certify(system, I_star=I_star, radius=c1.contour["radius"] / 2)
        a = np.asarray(c1.I_hat_values[0])
        b = np.asarray(c2.I_hat_values[0])
        diffs[system.name] = float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(a)))))
    worst = max(diffs.values())
    return Row(5, "contour independence (radius r vs r/2)", worst < 1e-8,
               f"max difference {worst:.2e} relative to max(1, |I|) (tol 1e-8)", diffs)


def _residue_oracle(kappa, rate):
    # residue of sin z / (1 - kappa cos z) at z0 = i arccosh(1/kappa), mapped to tau = z / rate
    z0 = 1j * math.acosh(1 / kappa)
    return 2j * math.pi * cmath.sin(z0) / (kappa * cmath.sin(z0)) / rate


def residue_examples() -> Row:
    kappa = 0.5
    out = {}
    worst = 0.0
    notes_ok = True
    nonzero = True
    for I in (1.0, 3.0):
        c = certify(pendulum_torque(kappa), I_star=[I])
        val = complex(c.I_hat_values[0][0])
        oracle = _residue_oracle(kappa, I)
        out[f"pendulum I={I}"] = (val, oracle)
        worst = max(worst, abs(val - oracle) / abs(oracle))
        notes_ok &= any("differ" in s for s in c.notes)
        nonzero &= c.verdict == CERTIFIED
    beta = 1.0
    c = certify(coupled_oscillators(ell=4, beta=beta, kappa=kappa), I_star=[1.0, 2.0, 2.0, 2.0])
    vec = np.asarray([complex(v) for v in c.I_hat_values[0]])
    oracle = beta * _residue_oracle(kappa, 1.0)
    worst = max(worst, abs(vec[0] - oracle) / abs(oracle), abs(vec[1] + oracle) / abs(oracle))
    rest = float(np.max(np.abs(vec[2:])))
    notes_ok &= any("differ" in s for s in c.notes)
    nonzero &= c.verdict == CERTIFIED
    ok = worst < 1e-8 and rest < 1e-10 and notes_ok and nonzero
    return Row(6, "residue examples (pendulum, coupled oscillators)", ok,
               f"max rel. error vs residue oracle {worst:.2e} (tol 1e-8); components j>=3 {rest:.1e} (tol 1e-10); "
               f"pendulum I=1 gives {out['pendulum I=1.0'][0].imag:.6f}i (printed value {2 * math.pi * kappa:.6f}i); "
               f"discrepancy noted: {notes_ok}; nonzero: {nonzero}",
               {"max_rel_error": worst, "other_components": rest})


def certificates() -> Row:
    verdicts = {}
    bound_gap = 0.0
    for name, p in DUFFING_CASES:
        if name.endswith("inner-"):
            continue
        fam = lookup(name).family
        c = certify_family(fam, 1, 1, param=p, delta=0.1, beta=1.0)
        verdicts[name] = c.verdict
        bound = c.checks["closed_form_min_abs"]
        # the grid contains phi = 0, where |I_hat| attains the sinh lower bound
        bound_gap = max(bound_gap, abs(c.min_abs_I_hat - bound) / bound)
        c0 = certify_family(fam, 1, 1, param=p, delta=0.1, beta=0.0)
        verdicts[name + " beta=0"] = c0.verdict
    verdicts["pendulum_torque"] = certify(pendulum_torque(0.5), I_star=[1.0]).verdict
    verdicts["coupled 2I1=I2=I3"] = certify(coupled_oscillators(), I_star=[1.0, 2.0, 2.0]).verdict
    ok = all((v == INCONCLUSIVE) == k.endswith("beta=0") for k, v in verdicts.items()) and bound_gap < 1e-6
    summary = ", ".join(f"{k}: {'certified' if v == CERTIFIED else 'inconclusive'}" for k, v in verdicts.items())
    return Row(7, "certificates", ok, f"{summary}; min|I_hat| vs sinh bound rel. gap {bound_gap:.1e} (tol 1e-6)",
               {"verdicts": verdicts, "bound_gap": bound_gap})


def orbit_prediction() -> Row:
    fam = lookup("duffing:a=0").family
    spec = solve_resonance(fam, 1, 1, 1.0)
    smap = StroboscopicMap.for_family(fam, spec)
    eps = 0.01
    results = [find_subharmonic(smap, fam, spec, 0.0, 1.0, eps, seed) for seed in (0.0, math.pi)]
    res = max(r.residual for r in results)
    target = math.exp(-eps * 0.0 * spec.T_star)
    prod_err = max(abs(complex(np.prod(r.floquet_multipliers)) - target) for r in results)
    kinds = sorted(r.stability for r in results)
    cf = closed_form_J(fam, spec)
    delta_big = 1.5 * cf.J2 / cf.J1
    try:
        find_subharmonic(smap, fam, spec, delta_big, 1.0, eps, 0.0)
        refused = False
    except NoSimpleZeroError:
        refused = True
    ok = res < 1e-10 and prod_err < 1e-6 and refused and kinds == ["elliptic", "hyperbolic_saddle"]
    return Row(8, "subharmonic orbits from Melnikov zeros", ok,
               f"alpha* = {spec.param_star:.10f}; residuals {results[0].residual:.1e}, {results[1].residual:.1e} "
               f"(tol 1e-10); multiplier product error {prod_err:.1e} (tol 1e-6); stabilities {kinds}; "
               f"delta = {delta_big:.4f} (delta J1 > beta J2) refused: {refused}",
               {"residual": res, "product_error": prod_err})


def unperturbed_consistency() -> Row:
    t_err = {}
    drift = {}
    for name, p in DUFFING_CASES:
        fam = lookup(name).family
        t_err[name] = abs(return_time(fam, p) - fam.period(p))
        drift[name] = energy_drift(fam, p, periods=100)
    wt, wd = max(t_err.values()), max(drift.values())
    return Row(9, "unperturbed return times and energy drift", wt < 1e-8 and wd < 1e-10,
               f"max |T_num - T| = {wt:.1e} (tol 1e-8); max energy drift over 100 periods {wd:.1e} (tol 1e-10)",
               {"period_error": t_err, "energy_drift": drift})


def first_integral_audit() -> Row:
    r = pendulum_first_integrals(kappa=0.5, eps=0.05)
    ok = r["corrected_drift"] < 1e-8 and r["printed_drift"] > 1e-4
    return Row(10, "pendulum first-integral audit", ok,
               f"corrected F1 drift {r['corrected_drift']:.2e} (tol 1e-8); printed F1 drift "
               f"{r['printed_drift']:.2e} (must exceed 1e-4) over {r['revolutions']} revolutions", r)


CRITERIA = (
    elliptic_identities,
    vanishing_loop_integrals,
    closed_form_contours,
    melnikov_closed_forms,
    contour_independence,
    residue_examples,
    certificates,
    orbit_prediction,
    unperturbed_consistency,
    first_integral_audit,
)


def run_all(selected=None) -> list:
    rows = []
    for i, fn in enumerate(CRITERIA, start=1):
        if selected and i not in selected:
            continue
        try:
            rows.append(fn())
        except Exception as exc:  # a crash is a failed row, not a crashed report
            rows.append(Row(i, fn.__name__.replace("_", " "), False, f"raised {type(exc).__name__}: {exc}"))
    return rows


def format_table(rows) -> str:
    lines = [r.line() for r in rows]
    passed = sum(r.passed for r in rows)
    lines.append(f"{passed}/{len(rows)} criteria passed")
    return "\n".join(lines)
