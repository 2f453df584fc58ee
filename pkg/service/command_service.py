"""
Command implementations behind the CLI.

Each command reads what it needs from the run configuration, writes its
artifacts through the storage service and returns a JSON-able summary. The
caller is expected to run it inside ``settings_scope(config.effective_settings())``.
"""

import logging
import math
from typing import Any, Dict, List

import numpy as np

from ball.distance import (
    check_contradiction_chain,
    check_decomposition_ball,
    default_ball_samples,
    estimate_omega2,
    psi_classify,
)
from ball.geometry import (
    BallIntegration,
    be1_ratio,
    be2_ratio,
    embedding_ratio_ball,
    f1_kernel_bound_ratio,
    norm_ball,
    norm_inf_ball,
    radial_point,
    reproduce_ball,
)
from catalog.functions import TestFunction
from core.errors import ConfigurationError
from core.schemas.report import DistanceEstimate, LadderReport
from core.schemas.run_config import RunConfig
from halfplane.bergman import (
    kernel_majorant_ratio,
    lemma3_constant,
    lemma3_ratio,
    norm_inf,
    norm_p_alpha,
    reproduce,
)
from halfplane.distance import check_decomposition, default_samples, estimate_l2, phi_functional
from quadrature.ladder import TruncationLadder
from quadrature.regions import RectRegion
from service.heatmap import members_to_csv, render_heatmap
from service.storage_service import ArtifactStorageService
from whitney.decomposition import (
    comparability_range,
    overlap_multiplicity,
    squares_meeting,
    squares_to_csv,
    subharmonic_bound_ratio,
)

logger = logging.getLogger(__name__)

DEFAULT_WHITNEY_REGION = (-1.0, 1.0, 0.25, 2.0)
DEFAULT_LEMMA3_POINTS = (1j, 2j, 1 + 1j, 0.1j)


class CommandService:
    """Runs one command of a run configuration"""

    COMMANDS = (
        "norm", "kernel-verify", "whitney", "lemma3", "levelset", "phi", "psi", "dist", "decompose", "fr-check",
    )

    def __init__(self, config: RunConfig, store: ArtifactStorageService, threads: int = 1):
        self.config = config
        self.store = store
        self.threads = threads
        self.payload = config.command

    def run(self, command: str) -> Dict[str, Any]:
        handler = getattr(self, command.replace("-", "_"), None)
        if command not in self.COMMANDS or handler is None:
            raise ConfigurationError(f"unknown command {command!r}", command=command)
        self.config.validate_params()
        logger.info("running %s (config %s)", command, self.config.config_hash()[:12])
        return {"command": command, **handler()}

    # ------------------------------------------------------------------ helpers

    @property
    def ball(self) -> bool:
        return self.config.domain == "ball"

    def _ladder(self) -> TruncationLadder:
        return TruncationLadder.from_settings(self.config.domain)

    def _setup(self) -> BallIntegration:
        return BallIntegration(samples=self.config.quad.samples, threads=self.threads)

    def _need_domain(self, domain: str, command: str) -> None:
        if self.config.domain != domain:
            raise ConfigurationError(f"{command} runs on the {domain} only", domain=self.config.domain)

    def _eps(self) -> float:
        if self.payload.eps is None:
            raise ConfigurationError("command.eps is required for this command", field="eps")
        return self.payload.eps

    def _points(self) -> List:
        """Sample points from the payload, or the fixed defaults of the domain"""
        if not self.payload.points:
            return default_ball_samples(self.config.n) if self.ball else default_samples()
        out = []
        for p in self.payload.points:
            if self.ball and self.config.n == 2:
                if len(p) != 4:
                    raise ConfigurationError("points in C^2 need four coordinates", point=list(p))
                out.append(np.array([complex(p[0], p[1]), complex(p[2], p[3])]))
            else:
                out.append(complex(p[0], p[1]) if not self.ball else np.asarray(complex(p[0], p[1])))
        return out

    def _write_ladder(self, name: str, report: LadderReport) -> str:
        return self.store.write_csv(name, report.to_csv())

    def _weight(self) -> float:
        p = self.config.params
        if self.ball:
            if p.s is None:
                raise ConfigurationError("params.s is required for this command", field="s")
            return p.s
        if p.t is not None:
            return p.t
        return self.config.halfplane_params().t

    # ------------------------------------------------------------------ commands

    def norm(self) -> Dict[str, Any]:
        f = self.config.test_function()
        p = self.config.params
        if self.ball:
            q, s = p.q if p.q is not None else p.p, p.s
            if q is None or s is None:
                raise ConfigurationError("ball norms need params.q (or p) and params.s")
            result = norm_ball(f, q, s, self.config.n, self._setup())
            sup = norm_inf_ball(f, s, self.config.n)
            out = {"q": q, "s": s}
        else:
            if p.p is None or p.alpha is None:
                raise ConfigurationError("half-plane norms need params.p and params.alpha")
            result = norm_p_alpha(f, p.p, p.alpha, self._ladder(), threads=self.threads)
            sup = norm_inf(f, p.nu) if p.nu is not None and p.nu > 0 else None
            out = {"p": p.p, "alpha": p.alpha}
        ref = self._write_ladder("norm_ladder.csv", result.ladder)
        out.update(
            {
                "function": f.label,
                "value": result.value,
                "verdict": result.verdict.value,
                "ladder_csv_ref": ref,
                "sup": sup.model_dump() if sup is not None else None,
            }
        )
        if self.ball and result.ladder.convergent and sup.value > 0:
            out["embedding_ratio"] = embedding_ratio_ball(f, out["q"], out["s"], self.config.n, self._setup())
        self.store.write_json("norm.json", out)
        return out

    def kernel_verify(self) -> Dict[str, Any]:
        f = self.config.test_function()
        p = self.config.params
        rows = ["point,exact_re,exact_im,reproduced_re,reproduced_im,abs_error,rel_error"]
        worst = 0.0
        for z in self._points():
            if self.ball:
                if p.t is None:
                    raise ConfigurationError("params.t is required for kernel-verify on the ball", field="t")
                value = reproduce_ball(f, z, p.t, self.config.n, self._setup())
                exact = complex(f.values(np.asarray(z)[None, ...])[0])
                label = " ".join(repr(float(c)) for v in np.atleast_1d(z) for c in (v.real, v.imag))
            else:
                if p.beta is None:
                    raise ConfigurationError("params.beta is required for kernel-verify", field="beta")
                value = reproduce(f, z, p.beta, self._ladder(), p=p.p, alpha=p.alpha, threads=self.threads)
                exact = complex(f.values(z))
                label = f"{z.real!r} {z.imag!r}"
            err = abs(value - exact)
            rel = err / abs(exact) if exact != 0 else err
            worst = max(worst, rel)
            rows.append(f"{label},{exact.real!r},{exact.imag!r},{value.real!r},{value.imag!r},{err!r},{rel!r}")
        ref = self.store.write_csv("kernel_verify.csv", "\n".join(rows) + "\n")
        out = {"function": f.label, "points": len(rows) - 1, "max_rel_error": worst, "table_csv_ref": ref}
        self.store.write_json("kernel_verify.json", out)
        return out

    def whitney(self) -> Dict[str, Any]:
        self._need_domain("halfplane", "whitney")
        region = RectRegion(*(self.payload.region or DEFAULT_WHITNEY_REGION))
        squares = squares_meeting(region)
        lam = self.payload.lam
        f = self.config.test_function() if self.config.function is not None else None
        p = self.config.params
        with_ratio = f is not None and p.p is not None and p.alpha is not None
        extra = {}
        if with_ratio:
            extra["subharmonic_ratio"] = [subharmonic_bound_ratio(f, p.p, p.alpha, sq, lam) for sq in squares]
        worst = max(extra["subharmonic_ratio"], default=0.0) if with_ratio else None
        comparability = comparability_range(squares, lam)
        ref = self.store.write_csv("whitney_squares.csv", squares_to_csv(squares, extra))
        out = {
            "region": list(self.payload.region or DEFAULT_WHITNEY_REGION),
            "squares": len(squares),
            "lam": lam,
            "overlap_multiplicity": overlap_multiplicity(region, lam),
            "max_subharmonic_ratio": worst,
            "comparability": list(comparability),
            "squares_csv_ref": ref,
        }
        self.store.write_json("whitney.json", out)
        return out

    def lemma3(self) -> Dict[str, Any]:
        self._need_domain("halfplane", "lemma3")
        alpha, lam = self.payload.alpha, self.payload.lambda_exp
        points = [complex(*p[:2]) for p in self.payload.points] or list(DEFAULT_LEMMA3_POINTS)
        exact = lemma3_constant(alpha, lam)
        rows = ["w_re,w_im,ratio,closed_form,rel_error"]
        ratios = []
        for w in points:
            ratio = lemma3_ratio(w, alpha, lam, threads=self.threads)
            ratios.append(ratio)
            rows.append(f"{w.real!r},{w.imag!r},{ratio!r},{exact!r},{abs(ratio - exact) / exact!r}")
        ref = self.store.write_csv("lemma3.csv", "\n".join(rows) + "\n")
        out = {
            "alpha": alpha,
            "lambda_exp": lam,
            "closed_form": exact,
            "max_rel_error": max(abs(r - exact) / exact for r in ratios),
            "spread": (max(ratios) - min(ratios)) / min(ratios),
            "table_csv_ref": ref,
        }
        self.store.write_json("lemma3.json", out)
        return out

    def levelset(self) -> Dict[str, Any]:
        f = self.config.test_function()
        eps, weight = self._eps(), self._weight()
        viewport = self.payload.viewport
        image, z, member = render_heatmap(f, weight, eps, viewport, self.payload.resolution, self.config.n)
        png = self.store.write_png("levelset.png", image)
        csv = self.store.write_csv("levelset.csv", members_to_csv(z, member))
        out = {
            "function": f.label,
            "eps": eps,
            "weight": weight,
            "member_pixels": int(member.sum()),
            "heatmap_png_ref": png,
            "members_csv_ref": csv,
        }
        self.store.write_json("levelset.json", out)
        return out

    def phi(self) -> Dict[str, Any]:
        self._need_domain("halfplane", "phi")
        f, eps = self.config.test_function(), self._eps()
        report = phi_functional(f, eps, self.config.halfplane_params(), self._ladder(), threads=self.threads)
        return self._functional_summary("phi", f, eps, report)

    def psi(self) -> Dict[str, Any]:
        self._need_domain("ball", "psi")
        f, eps = self.config.test_function(), self._eps()
        _, report, seeds = psi_classify(f, eps, self.config.ball_params(), self._setup())
        return self._functional_summary("psi", f, eps, report, seeds)

    def _functional_summary(self, name: str, f, eps: float, report: LadderReport, seeds=None) -> Dict[str, Any]:
        ref = self._write_ladder(f"{name}_ladder.csv", report)
        out = {
            "function": f.label,
            "eps": eps,
            "verdict": report.verdict.value,
            "last": report.last,
            "tail_estimate": report.tail_estimate,
            "seeds": seeds,
            "ladder_csv_ref": ref,
        }
        self.store.write_json(f"{name}.json", out)
        return out

    def dist(self) -> Dict[str, Any]:
        f = self.config.test_function()
        c = self.payload
        if self.ball:
            estimate = estimate_omega2(
                f, self.config.ball_params(), self._setup(),
                eps_tol=c.eps_tol, margin=c.margin, coerce_inconclusive=c.coerce_inconclusive,
            )
        else:
            estimate = estimate_l2(
                f, self.config.halfplane_params(), self._ladder(),
                eps_tol=c.eps_tol, margin=c.margin, coerce_inconclusive=c.coerce_inconclusive, threads=self.threads,
            )
        return self._write_estimate(f, estimate)

    def _write_estimate(self, f: TestFunction, estimate: DistanceEstimate, prefix: str = "dist") -> Dict[str, Any]:
        refs = [self._write_ladder(f"{prefix}_step_{i:02d}.csv", p.ladder) for i, p in enumerate(estimate.steps)]
        out = {"function": f.label, **estimate.to_json_dict(refs)}
        self.store.write_json(f"{prefix}.json", out)
        return out

    def decompose(self) -> Dict[str, Any]:
        f = self.config.test_function()
        levels = self.payload.eps_grid or [self._eps()]
        reports = []
        for eps in levels:
            if self.ball:
                reports.append(check_decomposition_ball(f, eps, self.config.ball_params(), self._setup()))
            else:
                reports.append(check_decomposition(f, eps, self.config.halfplane_params(), self._ladder()))
        ratios = [r.f1_sup_over_eps for r in reports if math.isfinite(r.f1_sup_over_eps) and r.f1_sup_over_eps > 0]
        out: Dict[str, Any] = {
            "function": f.label,
            "reports": [r.model_dump(mode="json") for r in reports],
            "f1_ratio_spread": max(ratios) / min(ratios) if ratios else None,
        }
        if self.ball:
            chain = check_contradiction_chain(f, levels[-1], self.config.ball_params(), self._setup())
            out["contradiction_chain"] = chain.model_dump(mode="json")
        self.store.write_json("decompose.json", out)
        return out

    def fr_check(self) -> Dict[str, Any]:
        if not self.ball:
            return self._majorant_check()
        c, n, setup = self.payload, self.config.n, self._setup()
        rows = ["table,m,ratio"]
        be2 = [be2_ratio(radial_point(m, n), c.fr_beta, c.fr_sigma, n, setup) for m in c.radial]
        origin = be2_ratio(np.zeros(n) if n == 2 else np.asarray(0j), c.fr_beta, c.fr_sigma, n, setup)
        rows += [f"be2,{m},{r!r}" for m, r in zip(c.radial, be2)]
        out: Dict[str, Any] = {
            "be2": {"beta": c.fr_beta, "sigma": c.fr_sigma, "origin": origin, "plateau": max(be2) / min(be2)},
        }
        if self.config.function is not None:
            f = self.config.test_function()
            s = self.config.params.s if self.config.params.s is not None else 1.0
            be1 = [be1_ratio(f, c.fr_r, s, c.fr_p, radial_point(m, n), n, setup) for m in c.radial]
            rows += [f"be1,{m},{r!r}" for m, r in zip(c.radial, be1)]
            out["be1"] = {"function": f.label, "r": c.fr_r, "p": c.fr_p, "s": s, "spread": _spread(be1)}
        p = self.config.params
        if p.t is not None and p.s is not None:
            bound = [f1_kernel_bound_ratio(radial_point(m, n), p.t, p.s, n, setup) for m in c.radial]
            rows += [f"f1_bound,{m},{r!r}" for m, r in zip(c.radial, bound)]
            out["f1_bound"] = {"t": p.t, "s": p.s, "max": max(bound)}
        out["table_csv_ref"] = self.store.write_csv("fr_check.csv", "\n".join(rows) + "\n")
        self.store.write_json("fr_check.json", out)
        return out

    def _majorant_check(self) -> Dict[str, Any]:
        params = self.config.halfplane_params()
        points = [complex(*p[:2]) for p in self.payload.points] or list(DEFAULT_LEMMA3_POINTS)
        ratios = [kernel_majorant_ratio(z, params.t, params.beta) for z in points]
        rows = ["z_re,z_im,ratio"] + [f"{z.real!r},{z.imag!r},{r!r}" for z, r in zip(points, ratios)]
        out = {
            "t": params.t,
            "beta": params.beta,
            "constant": lemma3_constant(params.beta - params.t, 2.0 + params.beta),
            "spread": _spread(ratios),
            "table_csv_ref": self.store.write_csv("fr_check.csv", "\n".join(rows) + "\n"),
        }
        self.store.write_json("fr_check.json", out)
        return out


def _spread(values: List[float]) -> float:
    """Largest relative deviation from the median"""
    mid = float(np.median(values))
    return max(abs(v - mid) for v in values) / mid if mid else math.inf
