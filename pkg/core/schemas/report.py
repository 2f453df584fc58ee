from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ConvergenceVerdict(str, Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"


class LadderReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    levels: List[int] = Field(..., description="Ladder exponents m")
    values: List[float] = Field(..., description="Truncated integral Phi_m per level")
    increments: List[float] = Field(..., description="d_m = Phi_{m+1} - Phi_m")
    ratios: List[Optional[float]] = Field(..., description="r_m = d_{m+1} / d_m")
    reliable: List[bool] = Field(..., description="False where the level exhausted its cell budget")
    verdict: ConvergenceVerdict = Field(..., description="Classifier verdict")
    tail_estimate: float = Field(0.0, description="Geometric tail beyond the last level (Convergent only)")

    @property
    def last(self) -> float:
        return self.values[-1] if self.values else 0.0

    @property
    def total(self) -> float:
        """Last level plus the geometric tail when Convergent"""
        if self.verdict != ConvergenceVerdict.CONVERGENT:
            return float("inf")
        return self.last + self.tail_estimate

    @property
    def convergent(self) -> bool:
        return self.verdict == ConvergenceVerdict.CONVERGENT

    def to_csv(self) -> str:
        """Columns m,value,increment,ratio,reliable; floats in round-trip precision"""
        lines = ["m,value,increment,ratio,reliable"]
        for i, m in enumerate(self.levels):
            inc = repr(self.increments[i]) if i < len(self.increments) else ""
            ratio = self.ratios[i] if i < len(self.ratios) else None
            lines.append(
                f"{m},{self.values[i]!r},{inc},{'' if ratio is None else repr(ratio)},{str(self.reliable[i]).lower()}"
            )
        return "\n".join(lines) + "\n"


class NormInfResult(BaseModel):
    value: float = Field(..., description="Grid maximum, a lower bound of the supremum")
    unbounded: bool = Field(False, description="Maximum kept growing with the grid extent")
    analytic: Optional[float] = Field(None, description="Catalog value when known")
    relative_gap: Optional[float] = Field(None, description="(analytic - value) / analytic")
    argmax: Optional[List[float]] = Field(None, description="Grid point of the maximum (x, y) or (Re, Im)")


class NormResult(BaseModel):
    value: float = Field(..., description="Norm (infinite when not Convergent)")
    ladder: LadderReport = Field(..., description="Ladder of the p-th power integral")

    @property
    def verdict(self) -> ConvergenceVerdict:
        return self.ladder.verdict


class BisectionStep(BaseModel):
    eps: float = Field(..., description="Level tried by the bisection")
    verdict: ConvergenceVerdict = Field(..., description="Raw verdict of the functional")
    coerced: ConvergenceVerdict = Field(..., description="Verdict used by the bisection")
    ladder: LadderReport = Field(..., description="Ladder of the functional at eps")
    seeds: Optional[List[int]] = Field(None, description="Monte Carlo seeds for statistical verdicts")


class DistanceEstimate(BaseModel):
    eps_lo: float = Field(..., description="Largest level shown non-Convergent (or 0)")
    eps_hi: float = Field(..., description="Smallest level shown Convergent")
    norm_inf: float = Field(..., description="Weighted sup-norm used to scale the search")
    steps: List[BisectionStep] = Field(default_factory=list, description="Audit trail in evaluation order")
    policy: Dict[str, Any] = Field(default_factory=dict, description="How Inconclusive verdicts were coerced")
    domain: str = Field("halfplane", description="halfplane or ball")
    n: Optional[int] = Field(None, description="Complex dimension for ball runs")

    def to_json_dict(self, ladder_refs: Optional[List[str]] = None) -> Dict[str, Any]:
        steps = []
        for i, p in enumerate(self.steps):
            steps.append(
                {
                    "eps": p.eps,
                    "verdict": p.verdict.value,
                    "coerced": p.coerced.value,
                    "ladder_csv_ref": ladder_refs[i] if ladder_refs else None,
                }
            )
        out: Dict[str, Any] = {
            "eps_lo": self.eps_lo,
            "eps_hi": self.eps_hi,
            "norm_inf": self.norm_inf,
            "steps": steps,
            "policy": self.policy,
        }
        if self.domain == "ball":
            out["domain"] = "ball"
            out["n"] = self.n
        return out


class DecompositionReport(BaseModel):
    eps: float = Field(..., description="Level used for the split")
    f1_sup_over_eps: float = Field(..., description="Grid sup of |f1| * weight / eps")
    f1_sup: float = Field(..., description="Grid sup of |f1| * weight (upper bound of the distance)")
    f2_norm: float = Field(..., description="Norm of f2 in the target Bergman space")
    f2_verdict: ConvergenceVerdict = Field(..., description="Verdict of the f2 norm ladder")
    residual: float = Field(..., description="max |f1 + f2 - f| over the sample points")
    cells: int = Field(0, description="Discretisation cells meeting the level set")
    sample_points: int = Field(0, description="Number of residual sample points")


class ChainCheck(BaseModel):
    eps: float = Field(..., description="Level above the measured candidate gap")
    verdict: ConvergenceVerdict = Field(..., description="Verdict of the ball functional at eps")


class ContradictionChainReport(BaseModel):
    eps: float = Field(..., description="Level used to build the candidate")
    candidate_gap: float = Field(..., description="Weighted sup distance from f to the candidate")
    candidate_norm: float = Field(..., description="Bergman norm of the candidate")
    candidate_verdict: ConvergenceVerdict = Field(..., description="Verdict of the candidate norm ladder")
    checks: List[ChainCheck] = Field(default_factory=list, description="Functional verdicts above the gap")
    holds: bool = Field(..., description="A Convergent candidate norm implies Convergent functionals")


class CriterionResult(BaseModel):
    id: int = Field(..., description="Acceptance criterion number")
    name: str = Field(..., description="Short name")
    passed: bool = Field(..., description="Whether every check of the criterion held")
    inconclusive: bool = Field(False, description="Failed only because a verdict was Inconclusive")
    details: Dict[str, Any] = Field(default_factory=dict, description="Measured quantities")


class SuiteReport(BaseModel):
    criteria: List[CriterionResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    @property
    def exit_code(self) -> int:
        """0 all passed, 1 a criterion failed, 4 only Inconclusive verdicts failed"""
        failed = [c for c in self.criteria if not c.passed]
        if not failed:
            return 0
        return 4 if all(c.inconclusive for c in failed) else 1
