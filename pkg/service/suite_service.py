"""
The acceptance suite.

Every criterion is a function registered with ``@criterion``; it measures,
writes its details under ``suite/`` and returns a CriterionResult. The
determinism criterion re-runs a cheap subset into two scratch directories
with different thread counts and compares the bytes.
"""

import logging
import math
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from ball.distance import default_ball_samples, estimate_omega2
from ball.geometry import BallIntegration, be1_ratio, be2_ratio, radial_point, reproduce_ball
from ball.montecarlo import seeds_for
from catalog.functions import TestFunction
from core.errors import BergdistError
from core.params import validate_ball, validate_halfplane
from core.schemas.report import ConvergenceVerdict, CriterionResult, DistanceEstimate, SuiteReport
from halfplane.bergman import lemma3_constant, lemma3_ratio, norm_inf, norm_p_alpha, reproduce
from halfplane.distance import check_decomposition, default_samples, estimate_l2, phi_functional
from quadrature.ladder import linear_fit_r2
from service.storage_service import ArtifactStorageService
from whitney.decomposition import overlap_counts, square_indices

logger = logging.getLogger(__name__)

EPS_TOL = 2.0**-7
SCALES = (0.5, 2.0, 5.0)
DETERMINISM_SUBSET = (2, 4, 10)

POWER_SHIFT = TestFunction(kind="power_shift", a=2.0)
PURE_POWER = TestFunction(kind="pure_power", t=1.0)
BALL_POLE_HALF = TestFunction(kind="ball_pole", s=0.5)
BALL_POLE_ONE = TestFunction(kind="ball_pole", s=1.0)


@dataclass
class SuiteContext:
    store: ArtifactStorageService
    seed: int
    threads: int = 1
    cache: Dict[str, Any] = field(default_factory=dict)

    def remember(self, key: str, compute: Callable[[], Any]) -> Any:
        if key not in self.cache:
            self.cache[key] = compute()
        return self.cache[key]


Criterion = Callable[[SuiteContext], Tuple[bool, bool, Dict[str, Any]]]
CRITERIA: Dict[int, Tuple[str, Criterion]] = {}


def criterion(number: int, name: str):
    def register(fn: Criterion) -> Criterion:
        CRITERIA[number] = (name, fn)
        return fn

    return register


def _inconclusive(*verdicts: ConvergenceVerdict) -> bool:
    return any(v == ConvergenceVerdict.INCONCLUSIVE for v in verdicts)


def _halfplane_params():
    return validate_halfplane(2.0, 0.0, 1.0)


def _ball_params():
    return validate_ball(1, 2.0, 1.0, 2.0)


def _l2(ctx: SuiteContext, f: TestFunction) -> DistanceEstimate:
    return ctx.remember(f"l2:{f.label}", lambda: estimate_l2(f, _halfplane_params(), eps_tol=EPS_TOL, threads=ctx.threads))


def _omega2(ctx: SuiteContext, f: TestFunction) -> DistanceEstimate:
    setup = BallIntegration(seed=ctx.seed, threads=ctx.threads)
    return ctx.remember(f"omega2:{f.label}", lambda: estimate_omega2(f, _ball_params(), setup, eps_tol=EPS_TOL))


# ---------------------------------------------------------------------- half-plane


@criterion(1, "reproducing formula")
def reproducing_formula(ctx: SuiteContext):
    errors = []
    for z in default_samples():
        exact = complex(POWER_SHIFT.values(z))
        value = reproduce(POWER_SHIFT, z, 1.0, p=2.0, alpha=0.0, threads=ctx.threads)
        errors.append(abs(value - exact) / abs(exact))
    worst = max(errors)
    return worst <= 1e-3, False, {"max_rel_error": worst, "points": len(errors)}


@criterion(2, "integral estimate scale invariance")
def scale_invariance(ctx: SuiteContext):
    exact = lemma3_constant(0.0, 4.0)
    points = (1j, 2j, 1 + 1j, 0.1j)
    ratios = [lemma3_ratio(w, 0.0, 4.0, threads=ctx.threads) for w in points]
    err = max(abs(r - exact) / exact for r in ratios)
    spread = (max(ratios) - min(ratios)) / min(ratios)
    details = {"closed_form": exact, "ratios": ratios, "max_rel_error": err, "spread": spread}
    return err <= 1e-3 and spread <= 5e-3, False, details


@criterion(3, "Whitney overlap and partition")
def whitney_overlap(ctx: SuiteContext):
    rng = np.random.default_rng([ctx.seed, 3])

    def sample(count: int) -> np.ndarray:
        x = rng.uniform(-64.0, 64.0, count)
        y = 2.0 ** rng.uniform(-10.0, 6.0, count)
        return x + 1j * y

    multiplicity = int(overlap_counts(sample(100_000), 1.5).max())
    z = sample(10_000)
    j, k = square_indices(z)
    hits = np.zeros(len(z), dtype=np.int64)
    for dk in (-1, 0, 1):
        side = np.ldexp(1.0, k + dk)
        base = np.floor(z.real / side)
        for dj in (-1, 0, 1):
            jj = base + dj
            inside = (z.real >= jj * side) & (z.real < (jj + 1) * side) & (z.imag >= side) & (z.imag < 2 * side)
            hits += inside
    own = (z.real >= j * np.ldexp(1.0, k)) & (z.real < (j + 1) * np.ldexp(1.0, k))
    violations = int(np.count_nonzero((hits != 1) | ~own))
    details = {"overlap_multiplicity": multiplicity, "partition_violations": violations}
    return multiplicity <= 9 and violations == 0, False, details


@criterion(4, "norm oracle")
def norm_oracle(ctx: SuiteContext):
    member = norm_p_alpha(POWER_SHIFT, 2.0, 0.0, threads=ctx.threads)
    outside = norm_p_alpha(PURE_POWER, 2.0, 0.0, threads=ctx.threads)
    err = abs(member.value - math.sqrt(math.pi) / 2.0)
    ok = err <= 1e-3 and outside.verdict == ConvergenceVerdict.DIVERGENT
    details = {
        "power_shift_norm": member.value,
        "abs_error": err,
        "pure_power_verdict": outside.verdict.value,
    }
    return ok, _inconclusive(member.verdict, outside.verdict), details


@criterion(5, "distance, homogeneous case")
def homogeneous_distance(ctx: SuiteContext):
    est = _l2(ctx, PURE_POWER)
    phi = phi_functional(PURE_POWER, 0.5, _halfplane_params(), threads=ctx.threads)
    slope, r2 = linear_fit_r2(phi.values[-5:])
    ok = est.eps_lo >= 0.85 and est.eps_hi <= 1.05 and r2 >= 0.99
    details = {"eps_lo": est.eps_lo, "eps_hi": est.eps_hi, "phi_slope": slope, "phi_r2": r2}
    return ok, False, details


@criterion(6, "distance, membership case")
def membership_distance(ctx: SuiteContext):
    est = _l2(ctx, POWER_SHIFT)
    ok = est.eps_lo == 0.0 and est.eps_hi <= 0.1 * est.norm_inf
    inconclusive = any(p.verdict == ConvergenceVerdict.INCONCLUSIVE for p in est.steps)
    return ok, inconclusive, {"eps_lo": est.eps_lo, "eps_hi": est.eps_hi, "norm_inf": est.norm_inf}


def _scaled_within(base: DistanceEstimate, scaled: DistanceEstimate, lam: float) -> bool:
    slack = 2.0 * EPS_TOL * lam * base.norm_inf
    return abs(scaled.eps_lo - lam * base.eps_lo) <= slack and abs(scaled.eps_hi - lam * base.eps_hi) <= slack


@criterion(7, "scaling equivariance")
def scaling(ctx: SuiteContext):
    rows: List[Dict[str, Any]] = []
    ok = True
    for domain, estimate, f in (("halfplane", _l2, PURE_POWER), ("ball", _omega2, BALL_POLE_ONE)):
        base = estimate(ctx, f)
        for lam in SCALES:
            scaled = estimate(ctx, f.scaled(lam))
            good = _scaled_within(base, scaled, lam)
            ok &= good
            rows.append({"domain": domain, "lambda": lam, "eps_lo": scaled.eps_lo, "eps_hi": scaled.eps_hi, "ok": good})
    return ok, False, {"rows": rows}


@criterion(8, "decomposition")
def decomposition(ctx: SuiteContext):
    params = _halfplane_params()
    sup = norm_inf(POWER_SHIFT, params.t).value
    reports = [check_decomposition(POWER_SHIFT, c * sup, params) for c in (0.05, 0.1, 0.2, 0.4)]
    ratios = [r.f1_sup_over_eps for r in reports]
    residual = max(r.residual for r in reports)
    stable = max(ratios) / min(ratios) <= 10.0 if min(ratios) > 0 else False
    verdicts = [r.f2_verdict for r in reports]
    ok = residual <= 2e-3 and stable and all(v == ConvergenceVerdict.CONVERGENT for v in verdicts)
    details = {"residual": residual, "f1_ratios": ratios, "f2_verdicts": [v.value for v in verdicts]}
    return ok, _inconclusive(*verdicts), details


# ---------------------------------------------------------------------- ball


def _monomials(n: int) -> Iterable[TestFunction]:
    if n == 1:
        exps = [(0,), (1,), (2,)]
    else:
        exps = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    return [TestFunction(kind="monomial", exponents=e, n=n) for e in exps]


def _reproduction_error(n: int, setup: BallIntegration, points) -> float:
    worst = 0.0
    for f in _monomials(n):
        for z in points:
            exact = complex(f.values(np.asarray(z)[None, ...])[0])
            worst = max(worst, abs(reproduce_ball(f, z, 1.0, n, setup) - exact))
    return worst


@criterion(9, "ball reproduction")
def ball_reproduction(ctx: SuiteContext):
    disk = _reproduction_error(1, BallIntegration(threads=ctx.threads), default_ball_samples(1))
    seeds = seeds_for(ctx.seed)
    ball = [_reproduction_error(2, BallIntegration(seed=s), default_ball_samples(2, radius=0.5)) for s in seeds]
    ok = disk <= 1e-3 and all(e <= 1e-2 for e in ball)
    return ok, False, {"disk_error": disk, "ball_errors": ball, "seeds": seeds}


@criterion(10, "Forelli-Rudin growth")
def forelli_rudin(ctx: SuiteContext):
    setup = BallIntegration(threads=ctx.threads)
    ratios = [be2_ratio(radial_point(m), 4.0, 1.0, 1, setup) for m in (5, 6, 7, 8)]
    origin = be2_ratio(0j, 4.0, 1.0, 1, setup)
    plateau = max(ratios) / min(ratios)
    ok = plateau <= 2.0 and abs(origin - math.pi) <= 1e-3
    return ok, False, {"ratios": ratios, "plateau": plateau, "origin": origin}


@criterion(11, "p <= 1 integral inequality")
def small_p_inequality(ctx: SuiteContext):
    setup = BallIntegration(threads=ctx.threads)
    ratios = [be1_ratio(BALL_POLE_ONE, 2.0, 1.0, 0.5, radial_point(m), 1, setup) for m in range(1, 9)]
    mid = float(np.median(ratios))
    finite = all(math.isfinite(r) for r in ratios)
    ok = finite and all(abs(r - mid) <= 0.3 * mid for r in ratios)
    return ok, False, {"ratios": ratios, "median": mid}


@criterion(12, "ball distance")
def ball_distance(ctx: SuiteContext):
    member = _omega2(ctx, BALL_POLE_HALF)
    outside = _omega2(ctx, BALL_POLE_ONE)
    ok = member.eps_lo == 0.0 and outside.eps_lo >= 0.2
    details = {
        "member": {"eps_lo": member.eps_lo, "eps_hi": member.eps_hi},
        "outside": {"eps_lo": outside.eps_lo, "eps_hi": outside.eps_hi},
    }
    inconclusive = any(p.verdict == ConvergenceVerdict.INCONCLUSIVE for p in member.steps + outside.steps)
    return ok, inconclusive, details


# ---------------------------------------------------------------------- runner


def run_criterion(number: int, ctx: SuiteContext) -> CriterionResult:
    name, fn = CRITERIA[number]
    try:
        ok, inconclusive, details = fn(ctx)
    except BergdistError as exc:
        logger.warning("criterion %d (%s) raised %s", number, name, type(exc).__name__)
        ok, inconclusive, details = False, exc.exit_code == 4, {"error": exc.to_dict()}
    result = CriterionResult(id=number, name=name, passed=bool(ok), inconclusive=bool(inconclusive) and not ok, details=details)
    ctx.store.write_json(f"suite/criterion_{number:02d}.json", result.model_dump(mode="json"))
    logger.info("criterion %d %s: %s", number, name, "pass" if result.passed else "FAIL")
    return result


def _determinism(ctx: SuiteContext) -> CriterionResult:
    outputs = []
    with tempfile.TemporaryDirectory() as scratch:
        for threads in (1, 2):
            store = ArtifactStorageService(Path(scratch) / f"t{threads}", ctx.store.config_hash, ctx.seed)
            sub = SuiteContext(store=store, seed=ctx.seed, threads=threads)
            for number in DETERMINISM_SUBSET:
                run_criterion(number, sub)
            outputs.append({name: store.read(name) for name in store.list_files()})
    identical = outputs[0] == outputs[1]
    differing = sorted(k for k in set(outputs[0]) | set(outputs[1]) if outputs[0].get(k) != outputs[1].get(k))
    result = CriterionResult(
        id=13,
        name="determinism",
        passed=identical,
        details={"criteria": list(DETERMINISM_SUBSET), "threads": [1, 2], "differing": differing},
    )
    ctx.store.write_json("suite/criterion_13.json", result.model_dump(mode="json"))
    return result


class SuiteService:
    """Runs the selected criteria in order and writes suite.json"""

    def __init__(self, store: ArtifactStorageService, seed: int, threads: int = 1):
        self.ctx = SuiteContext(store=store, seed=seed, threads=threads)

    def run(self, selected: Optional[List[int]] = None) -> SuiteReport:
        numbers = sorted(selected) if selected else sorted(CRITERIA) + [13]
        report = SuiteReport()
        for number in tqdm(numbers, desc="suite", disable=not sys.stderr.isatty()):
            if number == 13:
                report.criteria.append(_determinism(self.ctx))
            elif number in CRITERIA:
                report.criteria.append(run_criterion(number, self.ctx))
            else:
                logger.warning("no acceptance criterion %d", number)
        self.ctx.store.write_json(
            "suite.json",
            {
                "passed": report.passed,
                "exit_code": report.exit_code,
                "criteria": [{"id": c.id, "name": c.name, "passed": c.passed} for c in report.criteria],
            },
        )
        return report
