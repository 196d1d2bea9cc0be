"""Sharp Sobolev-type constants and their moment-constrained improvements.

The gradient constant is the classical extremal value

    S(n, p) = (1/n) * (n(p-1)/(n-p))^(1-1/p)
              * ( n! / (Gamma(n/p) Gamma(n+1-n/p) |S^{n-1}|) )^(1/n)

for 1 < p < n.  Under vanishing moments of order m on S^n the usable
coefficient of the gradient term improves from S^p to S^p / T(m, (n-p)/n, n),
where T is the discrete extremal value with closed forms for m in {1, 2, 3}
and on the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .solver import closed_form_theta
from .sphere import check_dimension, surface_area


@dataclass(frozen=True)
class SobolevParams:
    """Exponent bookkeeping for the subcritical range 1 < p < n."""

    n: int
    p: float

    def __post_init__(self):
        check_dimension(self.n)
        if not 1.0 < self.p < self.n:
            raise ValueError(f"need 1 < p < n, got p={self.p}, n={self.n}")

    @property
    def p_conj(self) -> float:
        """Hoelder conjugate p' = p/(p-1)."""
        return self.p / (self.p - 1.0)

    @property
    def p_star(self) -> float:
        """Critical exponent p* = pn/(n-p)."""
        return self.p * self.n / (self.n - self.p)

    @property
    def theta(self) -> float:
        """The concavity exponent p/p* = (n-p)/n."""
        return (self.n - self.p) / self.n


def sharp_sobolev(params: SobolevParams) -> float:
    """Best constant in the L^{p*} against gradient-L^p inequality."""
    n, p = params.n, params.p
    # n! through the Gamma function keeps one code path for all factors
    log_inner = (
        math.lgamma(n + 1.0)
        - math.lgamma(n / p)
        - math.lgamma(n + 1.0 - n / p)
        - math.log(surface_area(n - 1))
    )
    return (1.0 / n) * (n * (p - 1.0) / (n - p)) ** (1.0 - 1.0 / p) * math.exp(log_inner / n)


def sharp_biharmonic(n: int) -> float:
    """Best constant for the second-order (bilaplacian) inequality, n >= 5.

    Equals 4 / sqrt(n (n+2) (n-2) (n-4)) * |S^n|^(-2/n); the factor (n-4)
    vanishes at n = 4, so the constant only exists from dimension 5 up.
    """
    check_dimension(n)
    if n <= 4:
        raise ValueError(f"the bilaplacian sharp constant requires n >= 5, got {n}")
    return 4.0 / math.sqrt(n * (n + 2) * (n - 2) * (n - 4)) * surface_area(n) ** (-2.0 / n)


def improved_constant(params: SobolevParams, m: int) -> float:
    """Gradient-term coefficient S^p / T(m, (n-p)/n, n) under m-th order moments.

    Only defined where the discrete extremal value has a closed form
    (m in {1,2,3}, or any m when n=1); otherwise raises and points the caller
    at the numerical solver, whose output is conjectural.
    """
    cf = closed_form_theta(m, params.theta, params.n)
    if cf is None:
        raise ValueError(
            f"no closed form for (m={m}, n={params.n}); run the theta solver "
            "for a conjectural value"
        )
    return sharp_sobolev(params) ** params.p / cf


@dataclass(frozen=True)
class HigherOrderConstant:
    """Symbolic record of the order-s sharp constant (no numeric value).

    Apart from the bilaplacian case s=2, p=2 there is no closed form; the
    definition string is echoed into reports and `value` stays None.
    """

    n: int
    s: int
    p: float
    definition: str
    value: None = None


def higher_order_constant(n: int, s: int, p: float) -> HigherOrderConstant:
    """Symbolic pass-through for the order-s constants, s >= 1."""
    check_dimension(n)
    if s < 1:
        raise ValueError(f"order must be >= 1, got {s}")
    if not 1.0 < p < n / s:
        raise ValueError(f"need 1 < p < n/s, got p={p}, n={n}, s={s}")
    if s % 2 == 0:
        op = f"Delta^{s // 2} u"
    else:
        op = f"grad Delta^{(s - 1) // 2} u"
    definition = (
        f"sup ||u||_L^({n}p/({n}-{s}p)) / ||{op}||_L^p over nonzero u on R^{n}"
    )
    return HigherOrderConstant(n=n, s=s, p=p, definition=definition)
