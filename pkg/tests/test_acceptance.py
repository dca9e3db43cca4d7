"""End-to-end acceptance checks at desk resolution (dx=0.01, dt=1e-3, t_end=200).

Each test prints a single ``PASS``/``FAIL`` line listing every sub-check with
the measured numbers; the lines are repeated in the terminal summary.  Checks
are stated exactly as required, so a regime the scheme does not reproduce
shows up red instead of being tuned away.
"""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import DEFAULT, cached_simulate, cached_stefan, par1, two_sided
from kppfront import (
    KernelParams,
    NumericsConfig,
    SampledFunction,
    a_priori_bounds,
    boundary_functional,
    delta_seq_w,
    eval_kernel,
    kernel_integral,
    kernel_root,
    simulate_scaled,
)
from kppfront import diagnostics as dg
from kppfront.cli.config import parse_config
from kppfront.problem import critical_length
from kppfront.steady import (
    cosine_mode_functional,
    find_balanced_h,
    scan_F,
    solve_elliptic,
    stefan_wave_speed,
)
from kppfront.stefanlimit import convergence_study, wn_functional

pytestmark = pytest.mark.slow

RESULTS = {}
_RUNS = set()


def run(cfg, num=DEFAULT):
    _RUNS.add((cfg, num))
    return cached_simulate(cfg, num)


def outcome(cfg, num=DEFAULT):
    return dg.classify(run(cfg, num), cfg, num)


class Report:
    def __init__(self, number, title):
        self.number, self.title, self.items = number, title, []

    def check(self, name, ok, detail=""):
        self.items.append((name, bool(ok), detail))
        return ok

    def finish(self):
        ok = all(good for _, good, _ in self.items)
        parts = [f"{name} {'ok' if good else 'FAILED'}" + (f" [{d}]" if d else "")
                 for name, good, d in self.items]
        line = f"{'PASS' if ok else 'FAIL'} {self.number:2d} {self.title}: " + "; ".join(parts)
        RESULTS[self.number] = line
        print(line)
        assert ok, line


def fmt(v):
    return "None" if v is None else f"{v:.5g}"


def tail_slope(t, y, frac=0.25):
    k = int(len(t) * (1 - frac))
    return float(np.polyfit(t[k:], y[k:], 1)[0])


# ------------------------------------------------------------------ 1


def test_01_trichotomy():
    rep = Report(1, "trichotomy")
    expect = ((1.5, dg.VANISHING, 0.7613), (1.6, dg.BALANCING, 0.9216),
              (2.8, dg.BALANCING, None), (2.9, dg.SPREADING, None))
    for c1, cls, lim in expect:
        out = outcome(par1(c1))
        rep.check(f"c1={c1} is {cls}", out.cls == cls,
                  f"got {out.cls}, h_end={fmt(out.h_limit)}, umax={fmt(out.umax)}")
        if lim is not None:
            got = out.h_limit
            rep.check(f"c1={c1} limit {lim}+-0.05", got is not None and abs(got - lim) <= 0.05,
                      f"h_limit={fmt(got)}")
    rep.finish()


# ------------------------------------------------------------------ 2


def test_02_thresholds():
    rep = Report(2, "thresholds")

    def search(name, base, knob, lo, hi, pair, accept):
        try:
            value = dg.find_threshold(base, DEFAULT, knob, lo, hi, pair, runner=run)
        except dg.ThresholdError as exc:
            lo_c = exc.lo_outcome.cls if exc.lo_outcome else "?"
            hi_c = exc.hi_outcome.cls if exc.hi_outcome else "?"
            rep.check(name, False, f"no bracket: {lo_c} at {lo}, {hi_c} at {hi}")
            return
        rep.check(name, accept(value), f"threshold={value:.5g}")

    search("c1* in (1.50,1.60)", par1(1.5), "c1", 1.5, 1.6, (dg.VANISHING, dg.BALANCING),
           lambda v: 1.5 < v < 1.6)
    search("c1** in (2.80,2.90)", par1(2.8), "c1", 2.8, 2.9, (dg.BALANCING, dg.SPREADING),
           lambda v: 2.8 < v < 2.9)
    search("h0 threshold 0.682+-0.015", par1(2.9, h0=0.67, beta=0.3), "h0", 0.67, 0.69,
           (dg.VANISHING, dg.SPREADING), lambda v: abs(v - 0.682) <= 0.015)
    rep.finish()


# ------------------------------------------------------------------ 3


def test_03_initial_density():
    rep = Report(3, "initial-density dichotomy")
    for beta, cls in ((0.3, dg.VANISHING), (0.6, dg.SPREADING)):
        out = outcome(par1(2.9, h0=0.67, beta=beta))
        rep.check(f"beta={beta} is {cls}", out.cls == cls,
                  f"got {out.cls}, umax={fmt(out.umax)}, rho={fmt(out.rho_right)}")
    rep.finish()


# ------------------------------------------------------------------ 4

SWEEPS = {
    "c1": ((2.9, 3.2, 3.5), +1),
    "c2": ((0.9, 1.0, 1.1), -1),
    "alpha1": ((1.7, 1.8, 1.9), -1),
    "alpha2": ((1.0, 1.05, 1.1), +1),
}


def spread_speed(cfg):
    out = outcome(cfg)
    return out.rho_right if out.cls == dg.SPREADING else None


def test_04_speed_structure():
    rep = Report(4, "speed structure")
    base = par1(2.9)
    kpp = 2 * math.sqrt(base.reaction.r * base.D)
    for knob, (values, direction) in SWEEPS.items():
        rhos = [spread_speed(base.with_knob(knob, v)) for v in values]
        desc = ", ".join(f"{v:g}:{fmt(r)}" for v, r in zip(values, rhos))
        if any(r is None for r in rhos):
            rep.check(f"{knob} sweep spreading", False, desc)
            continue
        rep.check(f"{knob} speeds in (0,2)", all(0 < r < kpp for r in rhos), desc)
        steps = np.diff(rhos) * direction
        word = "nondecreasing" if direction > 0 else "nonincreasing"
        rep.check(f"rho {word} in {knob}", np.all(steps >= 0), desc)
    ref = spread_speed(base)
    for label, cfg in (("h0=4", par1(2.9, h0=4.0)), ("beta=0.02", par1(2.9, beta=0.02))):
        rho = spread_speed(cfg)
        ok = rho is not None and abs(rho - ref) <= 0.03 * ref
        rep.check(f"rho unchanged under {label}", ok, f"{fmt(rho)} vs {fmt(ref)}")
    rep.finish()


# ------------------------------------------------------------------ 5


def test_05_stefan_comparison():
    rep = Report(5, "Stefan comparison")
    k = stefan_wave_speed(1.0, 1.0, 1.0)
    rep.check("wave speed < 2", k < 2, f"k0={k:.7g}")
    cfg, num = parse_config("stefan.cfg")
    assert (cfg.D, cfg.mu, cfg.reaction.r, cfg.reaction.a) == (1.0, 1.0, 1.0, 1.0)
    fit = dg.fit_speed(cached_stefan(cfg, num)).slope
    rep.check("simulated Stefan front within 10%", abs(fit - k) <= 0.1 * k,
              f"fitted {fit:.5g} vs {k:.5g}")
    for c1 in (2.9, 3.2):
        rho = spread_speed(par1(c1))
        rep.check(f"nonlocal rho(c1={c1}) <= k0+0.05",
                  rho is not None and rho <= k + 0.05, f"rho={fmt(rho)}, bound={k + 0.05:.5g}")
    rep.finish()


# ------------------------------------------------------------------ 6


def test_06_steady_state():
    rep = Report(6, "steady-state cross-validation")
    D, a, mu = 1.0, 5.0, 1.0
    hc = critical_length(D, a)
    kp = KernelParams(1.6, 1.0, 1.9, 1.0)
    root = find_balanced_h(D, a, mu, kp)
    dyn = outcome(par1(1.6)).h_limit
    rep.check("root matches dynamic limit within 0.05",
              dyn is not None and abs(root - dyn) <= 0.05, f"root={root:.5g}, dynamic={fmt(dyn)}")
    rep.check("root exceeds kernel root", root > kernel_root(kp),
              f"{root:.5g} > {kernel_root(kp):.5g}")
    # at c1=1.6 the kernel root lies below hc, so (hc, kernel root) is empty there;
    # the positivity scan runs at kernels where the interval is nonempty
    c16 = kernel_root(kp)
    for c1 in (2.0, 2.4, 2.8):
        kq = KernelParams(c1, 1.0, 1.9, 1.0)
        hs = np.linspace(hc, kernel_root(kq), 12)[1:-1]
        F = scan_F(hs, D, a, mu, kq)
        rep.check(f"F>0 on 10 points of (hc, c) at c1={c1}", np.all(F > 0),
                  f"min F={F.min():.3g}; c1=1.6 interval empty, c={c16:.4g} < hc={hc:.4g}"
                  if c1 == 2.0 else f"min F={F.min():.3g}")
    rep.finish()


# ------------------------------------------------------------------ 7


def simpson(f, lo, hi, panels):
    x = np.linspace(lo, hi, panels + 1)
    y = f(x)
    dx = (hi - lo) / panels
    return dx / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def test_07_closed_forms():
    rep = Report(7, "closed-form oracles")
    rng = np.random.default_rng(7)
    worst = 0.0
    for kp, h, mu in ((KernelParams(1.6, 1, 1.9, 1), 0.9216, 1.0),
                      (KernelParams(2.9, 1, 1.9, 1), 2.5, 0.7),
                      (KernelParams(3.5, 1.2, 2.4, 0.8), 4.0, 1.3)):
        ref = mu * quad(lambda x: math.cos(math.pi * x / (2 * h)) * eval_kernel(kp, h - x),
                        0, h, epsabs=1e-14, epsrel=1e-14, limit=200)[0]
        worst = max(worst, abs(cosine_mode_functional(h, mu, kp) - ref))
    rep.check("cosine-mode functional to 1e-9", worst <= 1e-9, f"max err {worst:.2e}")

    worst = 0.0
    for _ in range(20):
        c2, a2 = rng.uniform(0.2, 2), rng.uniform(0.2, 2)
        kp = KernelParams(c2 + rng.uniform(0.1, 2), c2, a2 + rng.uniform(0.1, 2), a2)
        lo = rng.uniform(0, 3)
        hi = lo + rng.uniform(0.1, 5)
        ref = quad(lambda z: eval_kernel(kp, z), lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
        worst = max(worst, abs(kernel_integral(kp, lo, hi) - ref))
    rep.check("kernel integral to 1e-10", worst <= 1e-10, f"max err {worst:.2e}")

    worst = 0.0
    kp = KernelParams(1.5, 1.0, 1.9, 1.0)
    for _ in range(4):
        g = rng.uniform(-2, 0)
        h = g + rng.uniform(1, 4)
        vals = rng.uniform(0, 5, 51)
        vals[0] = vals[-1] = 0.0
        u = SampledFunction.on_interval(g, h, vals)
        right = simpson(lambda s: u(s) * eval_kernel(kp, np.maximum(h - s, 0)), g, h, 10**6)
        left = simpson(lambda s: u(s) * eval_kernel(kp, np.maximum(s - g, 0)), g, h, 10**6)
        worst = max(worst, abs(boundary_functional(u, kp, "right", 1.0) - right),
                    abs(boundary_functional(u, kp, "left", 1.0) + left))
    rep.check("boundary functional vs Simpson to 1e-9", worst <= 1e-9, f"max err {worst:.2e}")
    rep.finish()


# ------------------------------------------------------------------ 8


def test_08_stefan_limit():
    rep = Report(8, "delta-kernel limit")
    ns = (10, 100, 1000)
    x = np.linspace(0, 1, 20001)
    k = math.pi / 2
    cases = (
        ("linear", SampledFunction.on_interval(0, 1, x), lambda z: 1.0),
        ("cosine", SampledFunction.on_interval(0, 1, np.cos(k * x)), lambda z: -k * math.sin(k * z)),
    )
    for name, f, fp in cases:
        slope = abs(fp(1.0))
        rows = convergence_study(f, 1.0, ns, fprime=fp)  # target -f'(h)
        errs = [r.abs_error for r in rows]
        bound = 0.01 * slope + 1e-6
        rep.check(f"{name}: errors decrease to target -f'", errs[0] > errs[1] > errs[2],
                  "errors " + ", ".join(f"{e:.3g}" for e in errs))
        rep.check(f"{name}: final error <= 0.01|f'|+1e-6", errs[-1] <= bound,
                  f"value {rows[-1].value:.6g}, target {rows[-1].target:.6g}")
        plus = convergence_study(f, 1.0, ns, fprime=fp, sign=+1.0)
        rep.check(f"{name}: limit is +f' (reference)", plus[-1].abs_error <= bound,
                  f"error vs +f' {plus[-1].abs_error:.3g}")
    f = cases[1][1]
    rep.check("n=1 functional is 0", wn_functional(1, f, 1.0) == 0.0)
    worst = 0.0
    z = np.linspace(0, 2, 401)
    for n in (2, 10, 100, 1000):
        ref = delta_seq_w(n, z)
        got = eval_kernel(KernelParams.delta_family(n), z)
        worst = max(worst, float(np.max(np.abs(got - ref)) / max(1.0, np.max(np.abs(ref)))))
    rep.check("kernel substitution reproduces w_n to 1e-12", worst <= 1e-12, f"{worst:.1e}")
    rep.finish()


# ------------------------------------------------------------------ 9


def test_09_large_capacity():
    rep = Report(9, "large-capacity elliptic profile")
    ratios = [solve_elliptic(1.0, a, 1.0).u_at_0 / a for a in (20.0, 50.0, 100.0)]
    desc = ", ".join(f"{r:.6f}" for r in ratios)
    rep.check("u(0)/a increasing", ratios[0] < ratios[1] < ratios[2], desc)
    rep.check("u(0)/a >= 0.99 at a=100", ratios[2] >= 0.99, desc)
    rep.finish()


# ----------------------------------------------------------------- 10


def two_sided_run(c1):
    tr = run(two_sided(c1))
    left = dg.fit_speed(tr, "left").slope
    right = dg.fit_speed(tr, "right").slope
    return tr, left, right


def test_10_two_boundary_regimes():
    rep = Report(10, "two-boundary regimes")
    runs = {c1: two_sided_run(c1) for c1 in (3.5, 3.3, 3.1, 2.8, 2.4, 1.0)}

    def speeds(c1):
        _, left, right = runs[c1]
        return f"rho_left={left:.4g}, rho_right={right:.4g}"

    _, l35, r35 = runs[3.5]
    rep.check("(a) |rho_left|>|rho_right| at 3.5", abs(l35) > abs(r35), speeds(3.5))
    _, l33, r33 = runs[3.3]
    rep.check("(b) symmetric at 3.3", abs(abs(l33) - abs(r33)) <= 0.02 * abs(r33), speeds(3.3))
    _, l31, r31 = runs[3.1]
    rep.check("(c) left still at 3.1", abs(l31) <= 0.01, speeds(3.1))
    rep.check("(c) rho_right unchanged at 3.1", abs(r31 - r33) <= 0.03 * abs(r33), speeds(3.1))

    tr, l28, r28 = runs[2.8]
    w_slope = tail_slope(tr.t, tr.width)
    rep.check("(d) both ends move right at 2.8", l28 > 0 and r28 > 0, speeds(2.8))
    rep.check("(d) width increasing at 2.8", w_slope > 0, f"width slope {w_slope:.4g}")

    tr, l24, r24 = runs[2.4]
    k = int(len(tr.t) * 0.75)
    w = tr.width[k:]
    spread = float((w.max() - w.min()) / w.mean())
    rep.check("(e) width constant +-3% at 2.4", spread <= 0.03,
              f"width {tr.width[k]:.4g} -> {tr.width[-1]:.4g}")
    rep.check("(e) rightward drift at 2.4", l24 > 0 and r24 > 0, speeds(2.4))

    tr, _, _ = runs[1.0]
    a = two_sided(1.0).reaction.a
    rep.check("(f) width -> 0 at 1.0", tr.width[-1] <= 0.01 * tr.width[0],
              f"width {tr.width[0]:.4g} -> {tr.width[-1]:.4g}, g={tr.g[-1]:.5g}, h={tr.h[-1]:.5g}")
    rep.check("(f) umax -> 0 at 1.0", tr.umax[-1] <= dg.VANISH_UMAX * a,
              f"umax={tr.umax[-1]:.4g}")
    rep.finish()


# ----------------------------------------------------------------- 11


def test_11_no_growth():
    rep = Report(11, "no-growth behaviour")
    tr = run(par1(3.6, r=0.0, h0=5.0))
    slope = tail_slope(tr.t, tr.h)
    rep.check("h0=5: h increases", np.all(np.diff(tr.h) >= -1e-12) and tr.h[-1] > 5.0,
              f"h(t_end)={tr.h[-1]:.6g}")
    rep.check("h0=5: h settles", abs(slope) < 1e-4, f"tail slope {slope:.2e}")
    tr = run(par1(3.6, r=0.0, h0=20.0))
    slope = tail_slope(tr.t, tr.h)
    rep.check("h0=20: h decreases", tr.h[-1] < 20.0 and slope < 0,
              f"h(t_end)={tr.h[-1]:.6g}, tail slope {slope:.2e}")
    rep.finish()


# ----------------------------------------------------------------- 12

FINE = NumericsConfig(dx=0.005, dt=1e-4, t_end=200.0, sample_every=1000)
LADDER = ((0.04, 4e-3), (0.02, 2e-3), (0.01, 1e-3))


def test_12_scheme_invariants():
    rep = Report(12, "scheme invariants")
    for cfg in (par1(1.5), par1(1.6), par1(2.9), two_sided(3.3), par1(3.6, r=0.0, h0=5.0)):
        run(cfg)
    worst_m = worst_k = -math.inf
    neg = 0
    for cfg, num in sorted(_RUNS, key=repr):
        tr = cached_simulate(cfg, num)
        b = a_priori_bounds(cfg)
        neg += int(np.any(tr.final.u < 0) or np.any(tr.mass < 0))
        worst_m = max(worst_m, float(tr.umax.max() - b.M))
        dt = np.diff(tr.t)
        worst_k = max(worst_k, float(np.max(np.diff(tr.h) / dt) - b.K))
        if cfg.two_sided:
            worst_k = max(worst_k, float(np.max(-np.diff(tr.g) / dt) - b.K_left))
    rep.check(f"positivity over {len(_RUNS)} runs", neg == 0, f"{neg} runs with negative values")
    rep.check("sup bound M", worst_m <= 1e-8, f"max(umax-M)={worst_m:.3g}")
    rep.check("speed bound K", worst_k <= 1e-8, f"max(speed-K)={worst_k:.3g}")

    tr = run(two_sided(3.3))
    sym = max(float(np.max(np.abs(tr.g + tr.h))), float(np.max(np.abs(tr.final.u - tr.final.u[::-1]))))
    rep.check("mirror symmetry to 1e-10", sym <= 1e-10, f"{sym:.2e}")

    cfg = par1(1.6)
    moving = run(cfg, FINE)
    scaled = simulate_scaled(cfg, FINE)
    dh = abs(moving.h[-1] - scaled.h[-1])
    rep.check("scaled vs moving grid |dh| <= 0.02", dh <= 0.02,
              f"{moving.h[-1]:.6g} vs {scaled.h[-1]:.6g}")

    hs = [run(cfg, NumericsConfig(dx=dx, dt=dt)).h[-1] for dx, dt in LADDER]
    d1, d2 = abs(hs[1] - hs[0]), abs(hs[2] - hs[1])
    rep.check("refinement |d2| < 4|d1|", d2 < 4 * d1,
              f"h_end {', '.join(f'{h:.6g}' for h in hs)}; ratio d1/d2={d1 / d2:.3g}")
    rep.finish()


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
