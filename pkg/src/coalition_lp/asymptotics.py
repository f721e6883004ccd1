"""Limiting behaviour of coalition sizes under impartial culture.

As n grows, the minimum coalition size divided by sqrt(n) converges to

    V_w = max over scale*M_w of  lam*(rho1(Z) - Zbar) + mu*(Zbar - rho2(Z))

where Z is a vector of m iid standard normals, rho1 >= rho2 are its two
largest coordinates, and scale = sigma_w * sqrt(m/(m-1)).  This module
estimates g_w(v) = P(V_w <= v) by Monte Carlo, evaluates the closed
coefficient form V_w = c_w*(rho1 - rho2) when the polytope admits it, and
decides the dominance partial order between rules.

Sampling is chunked: chunk i draws from a generator seeded with
SeedSequence((*seed, i)), so estimates do not depend on the worker count
and are reproducible for a fixed seed.
"""

from __future__ import annotations

import enum
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .election import ScoreVector, all_rankings, score_matrix
from .reduction import MarginPair, Polytope2D, cone_optimal_vertices, mw_polytope

CHUNK = 1 << 18
Z95 = 1.959963984540054


class GridTooCoarse(Exception):
    pass


@dataclass(frozen=True)
class LimitModel:
    """Everything needed to sample the limiting coalition-size variable."""

    m: int
    mean: float
    sigma: float
    scale: float
    polytope: Polytope2D
    scaled_vertices: np.ndarray  # (V, 2) float, already multiplied by scale
    has_ray: bool
    dots: tuple  # vertices optimal on a positive measure of margins
    diag: tuple  # the diagonal vertex (b_w, b_w) of M_w
    diag_coeff_sq: object  # exact Fraction for rational rules
    c_w: float | None  # set when V_w = c_w * (rho1 - rho2)


def limit_model(rule: ScoreVector) -> LimitModel:
    poly = mw_polytope(rule)
    m = rule.m
    w = rule.weights
    if rule.is_rational:
        coefs = [1 - Fraction(w[i]) + Fraction(w[i + 1]) for i in range(m - 1)]
        b_w = 1 / max(coefs)
        var = Fraction(rule.variance)
        diag_sq = var * Fraction(m, m - 1) * b_w * b_w
    else:
        coefs = [1 - w[i] + w[i + 1] for i in range(m - 1)]
        b_w = 1.0 / max(coefs)
        diag_sq = float(rule.variance) * m / (m - 1) * b_w * b_w
    scale = math.sqrt(float(rule.variance) * m / (m - 1))
    dots = cone_optimal_vertices(poly)
    diag = (b_w, b_w)
    is_c_form = not poly.rays and len(dots) == 1 and dots[0] == diag
    verts = np.array([[float(x), float(y)] for x, y in poly.vertices]) * scale
    return LimitModel(
        m=m,
        mean=float(rule.mean),
        sigma=rule.sigma,
        scale=scale,
        polytope=poly,
        scaled_vertices=verts,
        has_ray=bool(poly.rays),
        dots=dots,
        diag=diag,
        diag_coeff_sq=diag_sq,
        c_w=math.sqrt(float(diag_sq)) if is_c_form else None,
    )


def sample_vw_batch(model: LimitModel, rng, size: int) -> np.ndarray:
    """Draw `size` independent copies of the limit variable (inf allowed)."""
    z = rng.standard_normal((size, model.m))
    z.sort(axis=1)
    zbar = z.mean(axis=1)
    a_gain = z[:, -1] - zbar
    b_lift = zbar - z[:, -2]
    vals = np.max(
        np.outer(a_gain, model.scaled_vertices[:, 0])
        + np.outer(b_lift, model.scaled_vertices[:, 1]),
        axis=1,
    )
    if model.has_ray:
        vals[b_lift > 0] = np.inf
    return vals


def sample_vw(model: LimitModel, seed):
    """One draw of the limit variable; math.inf on the unbounded branch."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return float(sample_vw_batch(model, rng, 1)[0])


def vw_from_z(model: LimitModel, z):
    """Evaluate the limit variable at an explicit normal vector (for checks)."""
    z = sorted(float(v) for v in z)
    zbar = sum(z) / len(z)
    a_gain, b_lift = z[-1] - zbar, zbar - z[-2]
    if model.has_ray and b_lift > 0:
        return math.inf
    return max(float(vx) * a_gain + float(vy) * b_lift for vx, vy in model.scaled_vertices)


# --------------------------------------------------------------------- #
# Curve estimation
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class GwCurve:
    grid: tuple
    g_hat: tuple
    ci_half_width: tuple
    samples: int
    plateau: float


def _seed_tuple(seed) -> tuple:
    return tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)


def _wilson_half_width(p: float, n: int) -> float:
    z = Z95
    return z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)


def isotonic(values):
    """Pool-adjacent-violators for an equal-weight sequence."""
    blocks = []
    for v in values:
        s, c = float(v), 1
        while blocks and blocks[-1][0] * c > s * blocks[-1][1]:
            ps, pc = blocks.pop()
            s += ps
            c += pc
        blocks.append((s, c))
    out = []
    for s, c in blocks:
        out.extend([s / c] * c)
    return out


def resolve_threads(threads=None) -> int:
    import os

    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("COALITION_LP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def gw_curve(model: LimitModel, grid, samples: int, seed, threads=None) -> GwCurve:
    """Monte Carlo estimate of g_w on the grid, with 95% Wilson half-widths."""
    grid = [float(v) for v in grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be non-decreasing")
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples for a stable curve")
    base = _seed_tuple(seed)
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    garr = np.asarray(grid)

    def one_chunk(idx_size):
        idx, size = idx_size
        rng = np.random.default_rng(np.random.SeedSequence(base + (idx,)))
        vals = sample_vw_batch(model, rng, size)
        vals.sort()
        le_counts = np.searchsorted(vals, garr, side="right")
        return le_counts.astype(np.int64), int(np.isfinite(vals).sum())

    counts = np.zeros(len(grid), dtype=np.int64)
    finite = 0
    workers = resolve_threads(threads)
    if workers == 1 or len(sizes) == 1:
        results = map(one_chunk, enumerate(sizes))
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        results = pool.map(one_chunk, list(enumerate(sizes)))
    for le_counts, fin in results:
        counts += le_counts
        finite += fin

    g = isotonic(counts / samples)
    ci = tuple(_wilson_half_width(p, samples) for p in g)
    return GwCurve(tuple(grid), tuple(g), ci, samples, finite / samples)


def curve_to_csv(curve: GwCurve, rule_label: str, m: int, seed) -> str:
    lines = [
        f"# rule={rule_label} m={m} seed={_seed_tuple(seed)[0]} "
        f"samples={curve.samples} plateau={curve.plateau:.6f}",
        "v,g_hat,ci_half_width,samples",
    ]
    for v, g, h in zip(curve.grid, curve.g_hat, curve.ci_half_width):
        lines.append(f"{v:.6f},{g:.6f},{h:.6f},{curve.samples}")
    return "\n".join(lines) + "\n"


def curve_from_csv(text: str):
    """Parse a curve CSV; returns (meta dict, GwCurve)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = re.match(
        r"#\s*rule=(\S+)\s+m=(\d+)\s+seed=(-?\d+)\s+samples=(\d+)\s+plateau=([\d.eE+-]+)",
        lines[0],
    )
    if not header:
        raise ValueError("curve CSV lacks the metadata header")
    meta = {
        "rule": header.group(1),
        "m": int(header.group(2)),
        "seed": int(header.group(3)),
        "samples": int(header.group(4)),
        "plateau": float(header.group(5)),
    }
    if lines[1].strip() != "v,g_hat,ci_half_width,samples":
        raise ValueError("unexpected curve CSV columns")
    grid, g, ci = [], [], []
    for ln in lines[2:]:
        v, gh, hw, _s = ln.split(",")
        grid.append(float(v))
        g.append(float(gh))
        ci.append(float(hw))
    curve = GwCurve(tuple(grid), tuple(g), tuple(ci), meta["samples"], meta["plateau"])
    return meta, curve


def gap_cdf(x, m: int):
    """P(top-two gap of m iid standard normals <= x), by quadrature.

    The tail is m * integral of phi(s) * Phi(s - x)^(m-1) ds: the maximum
    sits at s and the other m-1 draws stay below s - x.  For a rule with a
    coefficient form, g_w(v) = gap_cdf(v / c_w, m) exactly, which makes
    this an independent check on the Monte Carlo curves.
    """
    from scipy.special import ndtr

    s = np.linspace(-12.0, 12.0, 20001)
    phi = np.exp(-0.5 * s * s) / math.sqrt(2 * math.pi)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.shape)
    for i, xi in enumerate(xs):
        out[i] = 1.0 - m * np.trapezoid(phi * ndtr(s - xi) ** (m - 1), s)
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def plateau_probability(m: int, samples: int = 1_000_000, seed=0, threads=None):
    """P(the second-largest of m iid normals falls below their mean), with CI.

    This is the limiting probability that an anti-plurality election is not
    manipulable by any coalition.
    """
    if m < 3:
        raise ValueError("need m >= 3")
    base = _seed_tuple(seed)
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    hits = 0
    for idx, size in enumerate(sizes):
        rng = np.random.default_rng(np.random.SeedSequence(base + (idx,)))
        z = rng.standard_normal((size, m))
        z.sort(axis=1)
        hits += int((z[:, -2] < z.mean(axis=1)).sum())
    p = hits / samples
    return p, _wilson_half_width(p, samples)


# --------------------------------------------------------------------- #
# Dominance
# --------------------------------------------------------------------- #

class Verdict(enum.Enum):
    DOMINATES = "dominates"
    DOMINATED_BY = "dominated_by"
    INCOMPARABLE = "incomparable"
    INDISTINGUISHABLE = "indistinguishable"


@dataclass(frozen=True)
class DominanceReport:
    verdict: Verdict
    method: str
    coefficient_a: float | None
    coefficient_b: float | None
    notes: str


DEFAULT_GRID = tuple(round(0.05 * i, 10) for i in range(51))


def dominates(
    rule_a: ScoreVector,
    rule_b: ScoreVector,
    grid=None,
    samples: int = 200_000,
    seed=0,
    threads=None,
) -> DominanceReport:
    """Decide whether rule_a is everywhere (weakly) less manipulable than rule_b.

    Analytic routes: two coefficient-form rules compare exactly by c_w; the
    anti-plurality shape compares against any bounded rule through its
    diagonal coefficient (equal or larger means anti-plurality wins
    pathwise, smaller leaves the two curves crossing).  Everything else is
    settled by CI-separated Monte Carlo curves on the grid.
    """
    if rule_a.m != rule_b.m:
        raise ValueError("dominance only compares rules on the same candidate set")
    if rule_a.weights == rule_b.weights:
        return DominanceReport(Verdict.INDISTINGUISHABLE, "identical", None, None, "same rule")

    a = limit_model(rule_a)
    b = limit_model(rule_b)

    if a.c_w is not None and b.c_w is not None:
        if a.diag_coeff_sq > b.diag_coeff_sq:
            verdict = Verdict.DOMINATES
        elif a.diag_coeff_sq < b.diag_coeff_sq:
            verdict = Verdict.DOMINATED_BY
        else:
            verdict = Verdict.INDISTINGUISHABLE
        return DominanceReport(
            verdict,
            "analytic-coefficient",
            a.c_w,
            b.c_w,
            "both curves are the top-two-gap law rescaled by the coefficient; "
            "the larger coefficient is everywhere less manipulable",
        )

    if a.has_ray != b.has_ray:
        ray_model, flat_model = (a, b) if a.has_ray else (b, a)
        ray_wins = flat_model.diag_coeff_sq <= ray_model.diag_coeff_sq
        if ray_wins:
            verdict = Verdict.DOMINATES if a.has_ray else Verdict.DOMINATED_BY
            notes = (
                "the unbounded rule matches or beats the other pathwise: equal-or-larger "
                "diagonal coefficient where the value is finite, infinite value elsewhere"
            )
        else:
            verdict = Verdict.INCOMPARABLE
            notes = (
                "the bounded rule is less manipulable by small coalitions (larger diagonal "
                "coefficient) but its curve reaches 1 while the unbounded rule plateaus below 1; "
                "no rule with a full-mass curve can dominate one with an unreachable branch"
            )
        return DominanceReport(
            verdict,
            "analytic-plateau",
            math.sqrt(float(a.diag_coeff_sq)),
            math.sqrt(float(b.diag_coeff_sq)),
            notes,
        )

    if grid is None:
        grid = DEFAULT_GRID
    if len(grid) < 20:
        raise GridTooCoarse(f"need at least 20 grid points, got {len(grid)}")
    base = _seed_tuple(seed)
    curve_a = gw_curve(a, grid, samples, base + (271,), threads)
    curve_b = gw_curve(b, grid, samples, base + (577,), threads)
    below = above = 0
    for ga, ha, gb, hb in zip(curve_a.g_hat, curve_a.ci_half_width, curve_b.g_hat, curve_b.ci_half_width):
        if ga + ha < gb - hb:
            below += 1
        elif ga - ha > gb + hb:
            above += 1
    if below and not above:
        verdict = Verdict.DOMINATES
    elif above and not below:
        verdict = Verdict.DOMINATED_BY
    elif above and below:
        verdict = Verdict.INCOMPARABLE
    else:
        verdict = Verdict.INDISTINGUISHABLE
    return DominanceReport(
        verdict,
        "monte-carlo",
        None,
        None,
        f"CI-separated at {below} grid points below and {above} above "
        f"({samples} samples per rule)",
    )


# --------------------------------------------------------------------- #
# Finite-n convergence
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    ks: float
    trials_used: int
    unreachable_fraction: float


def convergence_to_csv(points, rule_label: str, m: int, seed, trials: int) -> str:
    lines = [
        f"# rule={rule_label} m={m} seed={_seed_tuple(seed)[0]} trials={trials}",
        "n,ks,trials_used,unreachable_fraction",
    ]
    for p in points:
        lines.append(f"{p.n},{p.ks:.6f},{p.trials_used},{p.unreachable_fraction:.6f}")
    return "\n".join(lines) + "\n"


def convergence_from_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = re.match(r"#\s*rule=(\S+)\s+m=(\d+)\s+seed=(-?\d+)\s+trials=(\d+)", lines[0])
    if not header:
        raise ValueError("convergence CSV lacks the metadata header")
    meta = {
        "rule": header.group(1),
        "m": int(header.group(2)),
        "seed": int(header.group(3)),
        "trials": int(header.group(4)),
    }
    if lines[1].strip() != "n,ks,trials_used,unreachable_fraction":
        raise ValueError("unexpected convergence CSV columns")
    points = []
    for ln in lines[2:]:
        n, ks, used, frac = ln.split(",")
        points.append(ConvergencePoint(int(n), float(ks), int(used), float(frac)))
    return meta, points


def convergence_experiment(
    rule: ScoreVector,
    n_list,
    trials: int,
    seed=0,
    grid=None,
    limit_samples: int = 1_000_000,
    threads=None,
):
    """Compare finite-n laws of q_dual/sqrt(n) with the limit curve.

    For each n, draws IC profiles, skips ties for first place, evaluates the
    two-variable dual on the margins, and reports the sup distance between
    the empirical CDF on the grid and the Monte Carlo limit curve.
    """
    model = limit_model(rule)
    if grid is None:
        grid = DEFAULT_GRID
    grid = [float(v) for v in grid]
    limit = gw_curve(model, grid, limit_samples, seed, threads)
    garr = np.asarray(grid)
    verts = np.array([[float(x), float(y)] for x, y in model.polytope.vertices])
    fact = len(all_rankings(rule.m))
    mat = score_matrix(rule)
    wbar = float(rule.mean)
    out = []
    for j, n in enumerate(n_list):
        rng = np.random.default_rng(np.random.SeedSequence(_seed_tuple(seed) + (7919, j)))
        used = 0
        unreachable = 0
        counts = np.zeros(len(grid), dtype=np.int64)
        remaining = trials
        while remaining > 0:
            batch = min(remaining, 200_000)
            remaining -= batch
            scores = rng.multinomial(n, [1.0 / fact] * fact, size=batch).astype(float) @ mat
            scores.sort(axis=1)
            top, second = scores[:, -1], scores[:, -2]
            strict = top - second > 1e-9
            a_margin = top[strict] - n * wbar
            b_deficit = n * wbar - second[strict]
            used += int(strict.sum())
            q = np.max(
                np.outer(a_margin, verts[:, 0]) + np.outer(b_deficit, verts[:, 1]), axis=1
            )
            if model.has_ray:
                hit = b_deficit > 0
                unreachable += int(hit.sum())
                q[hit] = np.inf
            scaled = q / math.sqrt(n)
            scaled.sort()
            counts += np.searchsorted(scaled, garr, side="right")
        ecdf = counts / used if used else counts.astype(float)
        ks = float(np.max(np.abs(ecdf - np.asarray(limit.g_hat)))) if used else math.nan
        out.append(ConvergencePoint(int(n), ks, used, unreachable / used if used else math.nan))
    return out
