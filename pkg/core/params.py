"""
Validated parameter bundles for the half-plane and ball distance theorems.

Every hypothesis is an open condition, so equality is rejected with no slack.
Models are frozen; constructing one runs the checks, so any instance that
exists is legal for downstream code.
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from core.errors import HypothesisViolation, UnsupportedDimension

SUPPORTED_DIMENSIONS = (1, 2)


class HalfPlaneParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: float = Field(..., description="Exponent of the target Bergman space A^q_nu")
    nu: float = Field(..., description="Weight nu of A^q_nu")
    beta: float = Field(..., description="Kernel order beta")

    @computed_field
    @property
    def t(self) -> float:
        return (self.nu + 2.0) / self.q

    @model_validator(mode="after")
    def _check(self) -> "HalfPlaneParams":
        if not self.q > 0:
            raise HypothesisViolation("q > 0", q=self.q)
        if not self.nu > -1:
            raise HypothesisViolation("nu > -1", nu=self.nu)
        t = self.t
        if self.q > 1:
            bound = max(self.nu / self.q, t - 1.0)
            if not self.beta > bound:
                raise HypothesisViolation(
                    "beta > max(nu/q, (nu+2)/q - 1)", beta=self.beta, bound=bound
                )
        else:
            bound = t - 2.0
            if not self.beta > bound:
                raise HypothesisViolation("beta > (nu+2)/q - 2", beta=self.beta, bound=bound)
        # the weighted kernel integral with alpha = nu must converge
        if not (self.beta + 2.0) * self.q - 2.0 > self.nu:
            raise HypothesisViolation("(beta+2)q - 2 > nu", beta=self.beta, q=self.q, nu=self.nu)
        return self

    @property
    def majorant_integrable(self) -> bool:
        """(Im w)^(beta-t) |w-bar - z|^-(2+beta) is integrable iff beta - t > -1"""
        return self.beta - self.t > -1.0


class BallParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., description="Complex dimension")
    q: float = Field(..., description="Exponent of the target space A^q_s")
    s: float = Field(..., description="Weight s of A^q_s and A^infinity_s")
    t: float = Field(..., description="Kernel weight t (kernel of type n+t+1)")

    @model_validator(mode="after")
    def _check(self) -> "BallParams":
        if self.n not in SUPPORTED_DIMENSIONS:
            raise UnsupportedDimension(self.n)
        if not self.q > 0:
            raise HypothesisViolation("q > 0", q=self.q)
        if not self.s * self.q > self.n:
            raise HypothesisViolation("s*q > n", s=self.s, q=self.q, n=self.n)
        if not self.t > self.s:
            raise HypothesisViolation("t > s", t=self.t, s=self.s)
        if self.q <= 1:
            lhs = self.q * (self.t + self.n + 1) - (self.n + 1)
            if not lhs > -1:
                raise HypothesisViolation("q(t+n+1) - (n+1) > -1", value=lhs)
        else:
            bound = (self.s + self.n + 1) / self.q
            if not self.t > bound:
                raise HypothesisViolation("t > (s+n+1)/q", t=self.t, bound=bound)
        return self

    @property
    def outer_exponent(self) -> float:
        """Exponent of delta(z) in the A^q_s quasi-norm"""
        return self.s * self.q - self.n - 1


class NormParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: float = Field(..., description="Integrability exponent")
    alpha: Optional[float] = Field(None, description="Weight of ||.||_{p,alpha}")
    nu: Optional[float] = Field(None, description="Weight of A^infinity_nu")

    @model_validator(mode="after")
    def _check(self) -> "NormParams":
        if not self.p > 0:
            raise HypothesisViolation("p > 0", p=self.p)
        if self.alpha is not None and not self.alpha > -1:
            raise HypothesisViolation("alpha > -1", alpha=self.alpha)
        if self.nu is not None and not self.nu > 0:
            raise HypothesisViolation("nu > 0", nu=self.nu)
        return self


def validate_halfplane(q: float, nu: float, beta: float) -> HalfPlaneParams:
    """Check the hypotheses of the half-plane distance theorems and compute t"""
    return HalfPlaneParams(q=q, nu=nu, beta=beta)


def validate_ball(n: int, q: float, s: float, t: float) -> BallParams:
    """Check the hypotheses of the ball distance theorems"""
    return BallParams(n=n, q=q, s=s, t=t)


def validate_norm(p: float, alpha: Optional[float] = None, nu: Optional[float] = None) -> NormParams:
    return NormParams(p=p, alpha=alpha, nu=nu)
