import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from catalog.functions import TestFunction
from core.config import Settings, env_settings
from core.errors import ConfigurationError, UnsupportedDimension
from core.params import SUPPORTED_DIMENSIONS, BallParams, HalfPlaneParams, validate_ball, validate_halfplane, validate_norm


# Function schema
class FunctionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(..., description="Catalog kind, e.g. 'power_shift'")
    a: Optional[float] = Field(None, description="power_shift exponent")
    t: Optional[float] = Field(None, description="pure_power exponent")
    s: Optional[float] = Field(None, description="ball_pole exponent")
    c: Optional[float] = Field(None, description="Constant value")
    exponents: Optional[List[int]] = Field(None, description="Monomial multi-index")
    coeff: float = Field(1.0, description="Monomial coefficient")
    scale: float = Field(1.0, description="Scalar multiple lambda")

    def build(self, domain: str, n: int) -> TestFunction:
        data = self.model_dump(exclude_none=True)
        if "exponents" in data:
            data["exponents"] = tuple(data["exponents"])
        return TestFunction(**data, domain=domain, n=n if domain == "ball" else 1)


# Parameter schemas
class ParamsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    q: Optional[float] = Field(None, description="Target space exponent")
    nu: Optional[float] = Field(None, description="Half-plane target weight")
    beta: Optional[float] = Field(None, description="Half-plane kernel order")
    s: Optional[float] = Field(None, description="Ball weight")
    t: Optional[float] = Field(None, description="Ball kernel weight, or the half-plane level-set weight")
    p: Optional[float] = Field(None, description="Norm exponent (norm and kernel-verify commands)")
    alpha: Optional[float] = Field(None, description="Norm weight (norm and kernel-verify commands)")


class LadderSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    base: Optional[float] = Field(None, description="Geometric base (default from settings)")
    min_exp: Optional[int] = Field(None, description="First level")
    max_exp: Optional[int] = Field(None, description="Last level")


class QuadSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tol: Optional[float] = Field(None, description="Adaptive quadrature relative tolerance")
    max_cells: Optional[int] = Field(None, description="Cell budget per integration")
    rho: Optional[float] = Field(None, description="Convergence ratio threshold")
    divergence: Optional[float] = Field(None, description="Divergence ratio threshold")
    tol_tail: Optional[float] = Field(None, description="Admissible relative tail")
    samples: int = Field(2048, description="Sobol points per shell in C^2")


class CommandPayload(BaseModel):
    """Command-specific inputs; every command reads only the fields it needs"""

    model_config = ConfigDict(extra="forbid")

    eps: Optional[float] = Field(None, description="Level of level-set commands")
    eps_grid: List[float] = Field(default_factory=list, description="Levels for decompose stability checks")
    eps_tol: float = Field(2.0**-7, description="Relative bracket width of the distance search")
    margin: float = Field(0.05, description="Upper bisection end is (1+margin) times the sup-norm")
    coerce_inconclusive: Literal["divergent", "convergent"] = Field("divergent")
    points: List[Union[Tuple[float, float], Tuple[float, float, float, float]]] = Field(
        default_factory=list,
        description="Sample points as (re, im) or, in C^2, (re1, im1, re2, im2)",
    )
    viewport: Optional[Tuple[float, float, float, float]] = Field(None, description="(x0, x1, y0, y1)")
    resolution: Tuple[int, int] = Field((256, 256), description="Heatmap (width, height)")
    lam: float = Field(1.5, description="Whitney enlargement factor")
    region: Optional[Tuple[float, float, float, float]] = Field(None, description="Rectangle (x0, x1, y0, y1)")
    alpha: float = Field(0.0, description="Weight of the integral-estimate ratio")
    lambda_exp: float = Field(4.0, description="Kernel exponent of the integral-estimate ratio")
    fr_beta: float = Field(4.0, description="Exponent beta of the Forelli-Rudin integral")
    fr_sigma: float = Field(1.0, description="Weight sigma of the Forelli-Rudin integral")
    fr_r: float = Field(2.0, description="Kernel power r of the p <= 1 inequality")
    fr_p: float = Field(0.5, description="Exponent p of the p <= 1 inequality")
    radial: List[int] = Field(default_factory=lambda: [5, 6, 7, 8], description="Radial ladder exponents m")
    criteria: List[int] = Field(default_factory=list, description="Suite criteria to run (all when empty)")


# Run schema
class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: Literal["halfplane", "ball"] = Field("halfplane", description="Domain of the run")
    n: int = Field(1, description="Complex dimension (ball)")
    function: Optional[FunctionSpec] = Field(None, description="Test function")
    params: ParamsSpec = Field(default_factory=ParamsSpec)
    ladder: LadderSpec = Field(default_factory=LadderSpec)
    quad: QuadSpec = Field(default_factory=QuadSpec)
    command: CommandPayload = Field(default_factory=CommandPayload)
    seed: Optional[int] = Field(None, ge=0, lt=2**64, description="Monte Carlo seed")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def test_function(self) -> TestFunction:
        if self.function is None:
            raise ConfigurationError("this command needs a 'function' entry")
        return self.function.build(self.domain, self.n)

    def effective_settings(self) -> Settings:
        """Environment settings with this run's ladder, quadrature and seed entries applied"""
        update = {
            "quad_tol": self.quad.tol,
            "max_cells": self.quad.max_cells,
            "rho": self.quad.rho,
            "divergence": self.quad.divergence,
            "tol_tail": self.quad.tol_tail,
            "seed": self.seed,
            "ladder_base": self.ladder.base,
            f"{self.domain}_min_exp": self.ladder.min_exp,
            f"{self.domain}_max_exp": self.ladder.max_exp,
        }
        return env_settings().model_copy(update={k: v for k, v in update.items() if v is not None})

    def halfplane_params(self) -> HalfPlaneParams:
        p = self.params
        return validate_halfplane(_need(p.q, "q"), _need(p.nu, "nu"), _need(p.beta, "beta"))

    def ball_params(self) -> BallParams:
        p = self.params
        return validate_ball(self.n, _need(p.q, "q"), _need(p.s, "s"), _need(p.t, "t"))

    def validate_params(self) -> Optional[Union[HalfPlaneParams, BallParams]]:
        """Run every hypothesis check the given parameters allow"""
        p = self.params
        if self.domain == "ball" and self.n not in SUPPORTED_DIMENSIONS:
            raise UnsupportedDimension(self.n)
        if p.p is not None:
            validate_norm(p.p, alpha=p.alpha)
        if self.domain == "halfplane" and None not in (p.q, p.nu, p.beta):
            return self.halfplane_params()
        if self.domain == "ball" and None not in (p.q, p.s, p.t):
            return self.ball_params()
        return None


def _need(value, name: str):
    if value is None:
        raise ConfigurationError(f"params.{name} is required for this command", field=name)
    return value
