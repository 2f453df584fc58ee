"""
Closed-form holomorphic test functions.

The catalog is a closed enumeration so every experiment has an auditable
ground truth. Functions are described by a small JSON-able model, e.g.
``{"kind": "power_shift", "a": 2.0}``; ``scale`` multiplies the function.

Point conventions: half-plane and disk points are complex numbers (or complex
arrays); points of the ball in C^2 are complex arrays whose last axis has
length 2.
"""

import math
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import OutOfDomain

Kind = Literal["power_shift", "pure_power", "ball_pole", "monomial", "constant", "zero"]
Domain = Literal["halfplane", "ball"]

_HALFPLANE_KINDS = ("power_shift", "pure_power")
_BALL_KINDS = ("ball_pole", "monomial")


class TestFunction(BaseModel):
    """A catalog entry together with its closed-form evaluator"""

    model_config = ConfigDict(frozen=True)
    __test__ = False  # not a pytest class

    kind: Kind = Field(..., description="Catalog kind")
    a: Optional[float] = Field(None, description="Exponent of (z+i)^-a")
    t: Optional[float] = Field(None, description="Exponent of z^-t")
    s: Optional[float] = Field(None, description="Exponent of (1 - <z,e1>)^-s")
    c: Optional[float] = Field(None, description="Value of a constant function")
    exponents: Optional[Tuple[int, ...]] = Field(None, description="Multi-index of a monomial")
    coeff: float = Field(1.0, description="Coefficient of a monomial")
    scale: float = Field(1.0, description="Scalar multiple lambda applied to the function")
    domain: Domain = Field("halfplane", description="Domain tag (inferred from kind when omitted)")
    n: int = Field(1, description="Complex dimension for ball functions")

    @model_validator(mode="before")
    @classmethod
    def _infer_domain(cls, data):
        if isinstance(data, dict) and data.get("domain") is None:
            kind = data.get("kind")
            data = {**data, "domain": "ball" if kind in _BALL_KINDS else "halfplane"}
        return data

    @model_validator(mode="after")
    def _check(self) -> "TestFunction":
        required = {"power_shift": "a", "pure_power": "t", "ball_pole": "s", "constant": "c", "monomial": "exponents"}
        field = required.get(self.kind)
        if field is not None and getattr(self, field) is None:
            raise ValueError(f"{self.kind} requires '{field}'")
        if self.kind in _HALFPLANE_KINDS and self.domain != "halfplane":
            raise ValueError(f"{self.kind} lives on the half-plane")
        if self.kind in _BALL_KINDS and self.domain != "ball":
            raise ValueError(f"{self.kind} lives on the ball")
        if self.kind == "monomial" and len(self.exponents) != self.n:
            raise ValueError("monomial exponents must have one entry per complex dimension")
        return self

    # ------------------------------------------------------------------ evaluation

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        if self.domain == "halfplane":
            return z.imag > 0
        return _ball_sqnorm(z, self.n) < 1.0

    def values(self, z) -> np.ndarray:
        """Vectorised evaluator; points are assumed to lie in the domain"""
        z = np.asarray(z, dtype=complex)
        if self.kind == "power_shift":
            out = np.exp(-self.a * np.log(z + 1j))
        elif self.kind == "pure_power":
            # principal branch, arg z in (0, pi) on the half-plane
            out = np.exp(-self.t * np.log(z))
        elif self.kind == "ball_pole":
            # Re(1 - z1) > 0 on the ball, so the principal log is holomorphic there
            out = np.exp(-self.s * np.log(1.0 - _first_coordinate(z, self.n)))
        elif self.kind == "monomial":
            out = np.full(_point_shape(z, self.n), self.coeff, dtype=complex)
            coords = [z] if self.n == 1 else [z[..., k] for k in range(self.n)]
            for zk, ak in zip(coords, self.exponents):
                out = out * zk**ak
        elif self.kind == "constant":
            out = np.full(_point_shape(z, self.n if self.domain == "ball" else 1), self.c, dtype=complex)
        else:
            out = np.zeros(_point_shape(z, self.n if self.domain == "ball" else 1), dtype=complex)
        return self.scale * out

    def __call__(self, z) -> complex:
        """Checked scalar evaluation"""
        if not bool(np.all(self.contains(z))):
            raise OutOfDomain(z, self.domain)
        value = self.values(z)
        return complex(value) if np.ndim(value) == 0 else value

    def scaled(self, factor: float) -> "TestFunction":
        return self.model_copy(update={"scale": self.scale * factor})

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.scale == 0.0 or (self.kind == "constant" and self.c == 0.0)

    @property
    def label(self) -> str:
        arg = {"power_shift": self.a, "pure_power": self.t, "ball_pole": self.s, "constant": self.c}.get(self.kind)
        if self.kind == "monomial":
            arg = ",".join(str(e) for e in self.exponents)
        core = self.kind if arg is None else f"{self.kind}({arg})"
        return core if self.scale == 1.0 else f"{self.scale:g}*{core}"

    # ------------------------------------------------------------------ analytic facts

    def analytic_sup_norm(self, weight: float) -> Optional[float]:
        """Exact sup of |f| * (boundary weight)^weight when known; inf when provably unbounded"""
        lam = abs(self.scale)
        if self.is_zero:
            return 0.0
        if self.domain == "halfplane":
            return _halfplane_sup(self, weight, lam)
        return _ball_sup(self, weight, lam)

    def membership(self, p: float, weight: float) -> Optional[bool]:
        """
        Whether f lies in the weighted Bergman space.

        On the half-plane ``weight`` is alpha in ||f||_{p,alpha}; on the ball it
        is s in A^p_s with density delta^(sp-n-1).
        """
        if self.is_zero:
            return True
        if self.kind == "power_shift":
            return self.a * p > weight + 2.0
        if self.kind == "pure_power":
            return False
        if self.kind == "constant":
            return False if self.domain == "halfplane" else weight * p > self.n
        if self.kind == "ball_pole":
            return weight * p > self.n and weight > self.s
        if self.kind == "monomial":
            return weight * p > self.n
        return None


def _halfplane_sup(f: TestFunction, weight: float, lam: float) -> Optional[float]:
    if f.kind == "pure_power":
        # |z^-t| y^t = (sin arg z)^t <= 1, attained on the imaginary axis
        return lam if weight == f.t else math.inf
    if f.kind == "power_shift":
        a = f.a
        if weight == a:
            return lam
        if weight > a:
            return math.inf
        if weight <= 0:
            return lam if weight == 0 else math.inf
        # sup over x=0 of y^w / (1+y)^a, attained at y = w/(a-w)
        return lam * weight**weight * (a - weight) ** (a - weight) / a**a
    if f.kind == "constant":
        return math.inf if weight > 0 else lam * abs(f.c)
    return None


def _ball_sup(f: TestFunction, weight: float, lam: float) -> Optional[float]:
    if f.kind == "constant":
        return lam * abs(f.c) if weight >= 0 else math.inf
    if f.kind == "ball_pole":
        s = f.s
        if weight < s:
            return math.inf
        if weight == s:
            # (1-|xi|^2)^s / |1-xi|^s <= (1+|xi|)^s, limit 2^s along the real radius
            return lam * 2.0**s
        r = s / (2.0 * weight - s)
        return lam * (1.0 + r) ** weight * (1.0 - r) ** (weight - s)
    if f.kind == "monomial":
        if weight < 0:
            return math.inf
        halves = [e / 2.0 for e in f.exponents]
        total = sum(halves) + weight
        if total == 0:
            return lam * abs(f.coeff)
        value = abs(f.coeff)
        for h in halves:
            if h > 0:
                value *= (h / total) ** h
        if weight > 0:
            value *= (weight / total) ** weight
        return lam * value
    return None


def _ball_sqnorm(z: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.abs(z) ** 2
    return np.sum(np.abs(z) ** 2, axis=-1)


def _first_coordinate(z: np.ndarray, n: int) -> np.ndarray:
    return z if n == 1 else z[..., 0]


def _point_shape(z: np.ndarray, n: int) -> Tuple[int, ...]:
    return z.shape if n == 1 else z.shape[:-1]


def eval_function(f: TestFunction, z) -> complex:
    """Exact closed-form value of f at a point of its open domain"""
    return f(z)


def analytic_sup_norm(f: TestFunction, weight: float) -> Optional[float]:
    return f.analytic_sup_norm(weight)
