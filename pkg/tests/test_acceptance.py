"""End-to-end acceptance checks; each one records a PASS/FAIL line in the terminal summary."""
import math
import time

import numpy as np
import pytest
from scipy import integrate
from scipy.special import log_ndtr

from uniform_extremes import (
    CovarianceModel,
    DesignMeasure,
    DiscretizedField,
    FunctionClassBounds,
    MixturePriors,
    Polynomial,
    TrendModel,
    brute_force_small,
    build_lattice,
    ell,
    evaluate_many_trends,
    oracle_iid_max,
    r_of_s,
    simulate,
)
from uniform_extremes.cli import main
from uniform_extremes.gaussian import log_phi_bar, phi_bar_value, sample_truncated_std_normal
from uniform_extremes.results import read_rows

TARGETS = ("1", "2", "3", "4", "fig1", "fig2")


@pytest.fixture(scope="module")
def reproduced(tmp_path_factory):
    """Run every reproduction target once at its configured size, single worker."""
    root = tmp_path_factory.mktemp("reproduce")
    out = {}
    for t in TARGETS:
        path = root / f"{t}.csv"
        start = time.perf_counter()
        code = main(["reproduce", "--table", t, "--workers", "1", "--out", str(path)])
        assert code == 0
        out[t] = (read_rows(path), time.perf_counter() - start, path)
    return out


def _row(rows, **params):
    for r in rows:
        if all(abs(r.params[k] - v) < 1e-9 for k, v in params.items()):
            return r
    raise KeyError(params)


# -- IID lattice, uniform mixture estimator ------------------------------------------------

IID_REFERENCE = {0.3: 7.62e-22, 0.6: 2.87e-05, 1.0: 1.26e-01}


@pytest.mark.parametrize("sigma", [0.3, 0.6, 1.0])
def test_iid_uniform_estimate_within_five_se(reproduced, acceptance, sigma):
    r = _row(reproduced["2"][0], sigma=sigma)
    ok = (r.theoretical == pytest.approx(IID_REFERENCE[sigma], rel=5e-3)
          and r.n == 10_000 and abs(r.est - r.theoretical) <= 5 * r.sd / 100)
    acceptance(f"[1] iid uniform sigma={sigma}: est within 5 se",
               ok, f"est={r.est:.4g} exact={r.theoretical:.4g} se={r.se:.3g}")
    assert ok


@pytest.mark.parametrize("sigma", [0.3, 0.6, 1.0])
def test_iid_uniform_cv_at_most_ten(reproduced, acceptance, sigma):
    r = _row(reproduced["2"][0], sigma=sigma)
    ok = r.cv is not None and r.cv <= 10
    acceptance(f"[1] iid uniform sigma={sigma}: CV <= 10", ok, f"CV={r.cv}")
    assert ok


def test_iid_uniform_runtime(reproduced, acceptance):
    secs = reproduced["2"][1]
    acceptance("[1] iid uniform runtime <= 120 s", secs <= 120, f"{secs:.1f} s")
    assert secs <= 120


# -- IID lattice, single-trend design ------------------------------------------------------

def test_design_misses_smaller_scale(reproduced, acceptance):
    r = _row(reproduced["1"][0], sigma=0.3)
    ok = r.est == 0.0
    acceptance("[2] design at sigma=1, sigma'=0.3: est = 0", ok, f"est={r.est}")
    assert ok


def test_design_unstable_at_intermediate_scale(reproduced, acceptance):
    r = _row(reproduced["1"][0], sigma=0.6)
    ok = r.cv is not None and r.cv >= 30
    acceptance("[2] design at sigma=1, sigma'=0.6: CV >= 30", ok, f"CV={r.cv}")
    assert ok


def test_design_efficient_at_own_scale(reproduced, acceptance):
    r = _row(reproduced["1"][0], sigma=1.0)
    ok = r.cv is not None and r.cv <= 0.5 and abs(r.est - r.theoretical) <= 5 * r.se
    acceptance("[2] design at sigma=1, sigma'=1: CV <= 0.5, est within 5 se", ok,
               f"CV={r.cv:.3g} est={r.est:.4g} exact={r.theoretical:.4g}")
    assert ok


# -- cosine field ------------------------------------------------------------------------

def test_cosine_rows(reproduced, acceptance):
    rows, secs, _ = reproduced["3"]
    bad = [r.params for r in rows
           if not (abs(r.est - r.theoretical) <= 5 * r.se and r.cv is not None and r.cv <= 10)]
    ok = len(rows) == 6 and not bad
    acceptance("[3] cosine field: 6 rows within 5 se, CV <= 10", ok,
               f"max CV={max(r.cv for r in rows):.2f} failing={bad}")
    assert ok


def test_cosine_runtime(reproduced, acceptance):
    secs = reproduced["3"][1]
    acceptance("[3] cosine field runtime <= 180 s", secs <= 180, f"{secs:.1f} s")
    assert secs <= 180


# -- sweeps over the trend class ---------------------------------------------------------

def test_mean_slope_sweep_monotone(reproduced, acceptance):
    rows = sorted(reproduced["fig1"][0], key=lambda r: r.params["beta1"])
    drops = [
        (a.params["beta1"], b.params["beta1"]) for a, b in zip(rows, rows[1:])
        if b.est < a.est - 2 * math.hypot(a.se, b.se)
    ]
    ok = len(rows) == 21 and not drops
    acceptance("[4] beta1 sweep: estimate nondecreasing up to 2 se", ok, f"drops={drops}")
    assert ok


def test_mean_slope_sweep_cv(reproduced, acceptance):
    cv = max(r.cv for r in reproduced["fig1"][0])
    acceptance("[4] beta1 sweep: max CV <= 5", cv <= 5, f"max CV={cv:.2f}")
    assert cv <= 5


def test_scale_centre_sweep_cv(reproduced, acceptance):
    cv = max(r.cv for r in reproduced["fig2"][0])
    acceptance("[4] beta2 sweep: max CV <= 15", cv <= 15, f"max CV={cv:.2f}")
    assert cv <= 15


# -- combined trend, no closed form --------------------------------------------------------

REFERENCE_COMBINED = {
    (-0.50, 0.00): 4.20e-12, (-0.33, 0.17): 5.60e-12, (-0.17, 0.33): 5.69e-12,
    (0.00, 0.50): 8.78e-12, (0.17, 0.67): 2.09e-11, (0.33, 0.83): 5.82e-11, (0.50, 1.00): 1.16e-10,
}


def test_combined_trend_cv(reproduced, acceptance):
    rows = reproduced["4"][0]
    cv = max(r.cv for r in rows)
    ok = len(rows) == 7 and cv <= 15
    acceptance("[5] combined trend: all CV <= 15", ok, f"max CV={cv:.2f}")
    assert ok


def test_combined_trend_magnitudes(reproduced, acceptance):
    rows = reproduced["4"][0]
    ratios = {k: _row(rows, beta1=k[0], beta2=k[1]).est / v for k, v in REFERENCE_COMBINED.items()}
    ok = all(1 / 3 <= x <= 3 for x in ratios.values())
    acceptance("[5] combined trend: est within factor 3 of reference values", ok,
               f"ratios {min(ratios.values()):.2f}..{max(ratios.values()):.2f}")
    assert ok


# -- unbiasedness on small exactly solvable instances -------------------------------------

def _field(kind, m, bounds=(0.0, 1.0), scale=1.0, matrix=None):
    model = {
        "iid": CovarianceModel.iid(),
        "exp": CovarianceModel.exponential(scale),
        "cos": CovarianceModel.cosine(),
        "explicit": CovarianceModel.explicit(matrix) if matrix is not None else None,
    }[kind]
    return DiscretizedField.from_model(model, build_lattice(bounds, m))


SMALL = [
    ("iid M=1", lambda: _field("iid", 1), TrendModel.constant(1.0), 2.0),
    ("iid M=2", lambda: _field("iid", 2), TrendModel.constant(1.0), 2.0),
    ("iid M=3 shifted", lambda: _field("iid", 3), TrendModel.constant(0.9, -0.1), 2.2),
    ("iid M=4", lambda: _field("iid", 4), TrendModel.constant(0.8, 0.1), 2.5),
    ("iid M=5", lambda: _field("iid", 5), TrendModel.constant(1.0), 2.0),
    ("exp close pair", lambda: _field("exp", 2, (0.0, 1 / 39)), TrendModel.constant(1.0), 2.0),
    ("exp M=3 short scale", lambda: _field("exp", 3, scale=0.5), TrendModel.constant(0.8, 0.3), 2.0),
    ("exp M=3", lambda: _field("exp", 3), TrendModel.constant(1.0), 2.5),
    ("exp M=2 linear trend", lambda: _field("exp", 2, scale=0.2),
     TrendModel(Polynomial((0.0, 0.2)), Polynomial((1.0, -0.2))), 2.5),
    ("cosine M=3", lambda: _field("cos", 3, (0.0, 0.75)), TrendModel.constant(1.0), 2.0),
    ("equicorrelated M=3", lambda: _field("explicit", 3, matrix=0.5 + 0.5 * np.eye(3)),
     TrendModel.constant(1.0, 0.2), 2.2),
]
SMALL_BOUNDS = FunctionClassBounds(mu_l=-0.2, mu_u=0.4, sigma_l=0.5, sigma_u=1.0)


def _exact(field, trend, b):
    if field.size <= 3:
        return brute_force_small(field, trend, b).value
    sigma, mu = trend.on(field.points)
    return oracle_iid_max(sigma[0], mu[0], b, field.size).value


@pytest.mark.parametrize("estimator", ["uniform", "abl09"])
@pytest.mark.parametrize("case", SMALL, ids=[c[0] for c in SMALL])
def test_unbiased_on_small_instances(acceptance, case, estimator):
    name, make, trend, b = case
    field = make()
    exact = _exact(field, trend, b)
    if estimator == "uniform":
        spec = MixturePriors(SMALL_BOUNDS, b=b)
    else:
        spec = DesignMeasure.build(trend, b, field.points)
    samples = simulate(estimator, field, spec, 100_000, seed=31)
    (s,) = evaluate_many_trends(samples, [trend])
    # the single-point design has zero variance, so allow for rounding in the mean
    ok = abs(s.est - exact) <= 4 * s.se + 1e-12 * exact and s.n_errors == 0
    acceptance(f"[6] {estimator} unbiased on {name}", ok,
               f"est={s.est:.5g} exact={exact:.5g} z={(s.est - exact) / s.se:+.2f}")
    assert ok


# -- weight-function quadrature ------------------------------------------------------------

def _composite_gauss(lo, hi, panels, order=10):
    """Nodes and weights of a composite Gauss-Legendre rule on [lo, hi] (broadcast over lo)."""
    x, w = np.polynomial.legendre.leggauss(order)
    lo = np.asarray(lo, dtype=float)[..., None]
    width = (np.asarray(hi, dtype=float)[..., None] - lo) / panels
    left = lo + width * np.arange(panels)
    nodes = (left[..., None] + 0.5 * width[..., None] * (x + 1)).reshape(*lo.shape[:-1], -1)
    weights = np.broadcast_to(0.5 * width[..., None] * w, left.shape + (order,)).reshape(nodes.shape)
    return nodes, weights


def _ell_grid(z, priors, panels=100):
    """Tensor-product grid over (scale, level), 1000 x 1000 nodes.

    The level range at each scale is cut exactly at ``b - z * scale`` and the
    scale range is split where that cut enters or leaves the level interval,
    so every cell sees a smooth integrand.
    """
    (m_lo, m_hi), (v_lo, v_hi) = priors.I1, priors.I2
    cuts = [(priors.b - m_hi) / z, (priors.b - m_lo) / z] if z > 0 else []
    edges = np.unique(np.clip([v_lo, *cuts, v_hi], v_lo, v_hi))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        v, wv = _composite_gauss(a, b, panels)
        lo = np.clip(priors.b - z * v, m_lo, m_hi)
        m, wm = _composite_gauss(lo, np.full_like(lo, m_hi), panels)
        c = (priors.b - m) / v[:, None]
        total += float(np.sum(wv * np.sum(wm * np.exp(-log_ndtr(-c)), axis=1)))
    return total / ((m_hi - m_lo) * (v_hi - v_lo))


def _random_priors(rng):
    while True:
        sl = rng.uniform(0.3, 1.0)
        ml = rng.uniform(-1.0, 0.5)
        bounds = FunctionClassBounds(ml, ml + rng.uniform(0, 1), sl, sl + rng.uniform(0, 1))
        try:
            return MixturePriors(bounds, b=rng.uniform(2.5, 8.0), a=rng.uniform(0.5, 2.0))
        except ValueError:
            continue


def test_weight_function_against_grid(acceptance):
    rng = np.random.default_rng(2718)
    worst = 0.0
    for _ in range(50):
        p = _random_priors(rng)
        z = rng.uniform(p.s_min, p.s_max + 0.5)
        ref = _ell_grid(z, p)
        if ref == 0.0:
            continue
        worst = max(worst, abs(ell(z, p) - ref) / ref)
    ok = worst <= 1e-4
    acceptance("[7] weight function vs 2-D grid, 50 configs: rel err <= 1e-4", ok, f"worst={worst:.2e}")
    assert ok


def test_inner_integral_against_quadrature(acceptance):
    rng = np.random.default_rng(1414)
    worst = 0.0
    for _ in range(50):
        p = _random_priors(rng)
        (m_lo, m_hi), (v_lo, v_hi) = p.I1, p.I2
        s = rng.uniform(p.s_min, p.s_max)
        f = lambda v: v * float(m_lo <= p.b - s * v <= m_hi)
        ref = integrate.quad(f, v_lo, v_hi, points=[(p.b - m_hi) / s, (p.b - m_lo) / s],
                             epsabs=1e-15, epsrel=1e-13, limit=200)[0] / ((m_hi - m_lo) * (v_hi - v_lo))
        worst = max(worst, abs(r_of_s(s, p) - ref) / max(ref, 1e-300))
    ok = worst <= 1e-10
    acceptance("[7] inner integral vs 1-D quadrature: rel err <= 1e-10", ok, f"worst={worst:.2e}")
    assert ok


# -- Gaussian numerics ------------------------------------------------------------------

def test_tail_function_properties(acceptance):
    x = np.linspace(-8, 8, 16001)
    sym = np.max(np.abs(phi_bar_value(x) + phi_bar_value(-x) - 1))
    wide = np.linspace(-30, 30, 60001)
    mono = bool(np.all(np.diff(log_phi_bar(wide)) < 0))
    gaps = [abs(float(log_phi_bar(t)) + t * t / 2 + math.log(t) + 0.5 * math.log(2 * math.pi))
            for t in (10.0, 20.0, 30.0)]
    ok = sym <= 1e-12 and mono and max(gaps) <= 0.02
    acceptance("[8] tail function symmetry, monotonicity, Mills asymptotic", ok,
               f"sym={sym:.1e} gaps={[f'{g:.4f}' for g in gaps]}")
    assert ok


def test_truncated_sampler_means(acceptance):
    rng = np.random.default_rng(99)
    m3 = np.mean([sample_truncated_std_normal(3.0, rng) for _ in range(1_000_000)])
    x20 = np.array([sample_truncated_std_normal(20.0, rng) for _ in range(100_000)])
    mills3 = math.exp(-4.5 - 0.5 * math.log(2 * math.pi) - float(log_phi_bar(3.0)))
    mills20 = math.exp(-200 - 0.5 * math.log(2 * math.pi) - float(log_phi_bar(20.0)))
    ok = abs(m3 - mills3) <= 0.01 and bool(np.all(x20 > 20)) and abs(x20.mean() - mills20) <= 0.001
    acceptance("[8] truncated sampler means at c=3 and c=20", ok,
               f"c=3 {m3:.4f} vs {mills3:.4f}; c=20 {x20.mean():.5f} vs {mills20:.5f}")
    assert ok


# -- determinism --------------------------------------------------------------------------

@pytest.mark.parametrize("target", TARGETS)
def test_reproduction_is_byte_identical(reproduced, tmp_path, acceptance, target):
    _, _, first = reproduced[target]
    files = [first]
    for tag, workers in (("again", "1"), ("w8", "8")):
        path = tmp_path / f"{target}-{tag}.csv"
        assert main(["reproduce", "--table", target, "--workers", workers, "--out", str(path)]) == 0
        files.append(path)
    same = all(f.read_bytes() == first.read_bytes() for f in files[1:])
    pngs = [f.with_suffix(".png") for f in files]
    if target.startswith("fig"):
        same = same and all(p.exists() for p in pngs) and all(
            p.read_bytes() == pngs[0].read_bytes() for p in pngs[1:])
    acceptance(f"[9] reproduce {target}: identical bytes at 1, 1 and 8 workers", same)
    assert same
