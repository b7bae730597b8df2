"""Analytic oracle for the random kernel.

Everything here works on truncated power series: generating functions
F(z) = sum_l f(l) z^l carried as coefficient arrays a_0..a_L.  The closed
forms for the evolved generating functions are evaluated by exact
coefficient recurrences (no quadrature), so coefficient l of the result
equals the mathematically exact f(l, t) to machine rounding as long as
l <= L.  A sampled-contour winding-number routine provides the numeric
pole check for the asymmetric solution.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import (
    AsymmetricCounts,
    ContourThroughZero,
    NoRealRoot,
    ZeroConstantTerm,
)

_RECIP_FLOOR = 1e-300


class PowerSeries:
    """Coefficients a_0..a_L of a series truncated after order L.

    Arithmetic keeps the truncation order, and every operation is exact
    for the retained coefficients: coefficient n of a product, reciprocal
    or exponential depends only on input coefficients up to n.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        a = np.asarray(coeffs)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d sequence")
        if np.iscomplexobj(a):
            a = a.astype(np.complex128)
        else:
            a = a.astype(np.float64)
        self.coeffs = a

    @property
    def L(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zero(cls, L: int) -> "PowerSeries":
        return cls(np.zeros(L + 1))

    @classmethod
    def constant(cls, value: float, L: int) -> "PowerSeries":
        c = np.zeros(L + 1, dtype=np.complex128 if isinstance(value, complex) else np.float64)
        c[0] = value
        return cls(c)

    @classmethod
    def from_support(cls, weights: dict, L: int) -> "PowerSeries":
        """Series with coefficient weights[n] at order n, zero elsewhere."""
        c = np.zeros(L + 1)
        for n, w in weights.items():
            if not 0 <= int(n) <= L:
                raise ValueError(f"order {n} outside truncation L={L}")
            c[int(n)] = w
        return cls(c)

    def copy(self) -> "PowerSeries":
        return PowerSeries(self.coeffs.copy())

    def __call__(self, z):
        """Evaluate the truncated polynomial by Horner's rule."""
        z = np.asarray(z)
        acc = np.zeros_like(z, dtype=np.result_type(z.dtype, self.coeffs.dtype))
        for a in self.coeffs[::-1]:
            acc = acc * z + a
        return acc if acc.ndim else acc[()]

    def derivative_at_one(self) -> float:
        n = np.arange(self.coeffs.size)
        return float(np.real_if_close(np.sum(n * self.coeffs)))

    def total(self) -> float:
        """Sum of coefficients, i.e. the value at z=1."""
        return complex(self.coeffs.sum()).real if np.iscomplexobj(self.coeffs) else float(self.coeffs.sum())

    def __eq__(self, other):
        return isinstance(other, PowerSeries) and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"PowerSeries(L={self.L}, coeffs={self.coeffs!r})"


def _check_same_L(a: PowerSeries, b: PowerSeries):
    if a.L != b.L:
        raise ValueError(f"truncation mismatch: {a.L} vs {b.L}")


def multiply(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """Truncated Cauchy product."""
    _check_same_L(a, b)
    return PowerSeries(np.convolve(a.coeffs, b.coeffs)[: a.L + 1])


def scale_add(alpha: float, a: PowerSeries, beta: float = 0.0, b: PowerSeries | None = None) -> PowerSeries:
    """alpha*a, or alpha*a + beta*b when b is given."""
    if b is None:
        return PowerSeries(alpha * a.coeffs)
    _check_same_L(a, b)
    return PowerSeries(alpha * a.coeffs + beta * b.coeffs)


def reciprocal(a: PowerSeries) -> PowerSeries:
    """Series b with a*b = 1 + O(z^{L+1}); requires a_0 != 0."""
    a0 = a.coeffs[0]
    if abs(a0) < _RECIP_FLOOR:
        raise ZeroConstantTerm(f"reciprocal undefined: |a_0| = {abs(a0):.3e}")
    L = a.L
    b = np.zeros(L + 1, dtype=a.coeffs.dtype)
    b[0] = 1.0 / a0
    ac = a.coeffs
    for n in range(1, L + 1):
        # b_n = -(sum_{k=1..n} a_k b_{n-k}) / a_0
        b[n] = -np.dot(ac[1 : n + 1], b[n - 1 :: -1]) / a0
    return PowerSeries(b)


def exponential(a: PowerSeries) -> PowerSeries:
    """exp(a) as a truncated series; defined for any a."""
    L = a.L
    c = np.zeros(L + 1, dtype=np.result_type(a.coeffs.dtype, np.float64))
    c[0] = np.exp(a.coeffs[0])
    w = np.arange(L + 1) * a.coeffs  # w_k = k a_k
    for n in range(1, L + 1):
        # n c_n = sum_{k=1..n} k a_k c_{n-k}
        c[n] = np.dot(w[1 : n + 1], c[n - 1 :: -1]) / n
    return PowerSeries(c)


def _require_initial(F0: PowerSeries, normalized: bool = True):
    if F0.coeffs[0] != 0.0:
        raise ValueError("initial generating function must have zero constant term")
    if np.iscomplexobj(F0.coeffs):
        if np.any(np.abs(F0.coeffs.imag) > 0):
            raise ValueError("initial generating function must be real")
    if np.any(np.real(F0.coeffs) < 0):
        raise ValueError("initial generating function must have coefficients >= 0")
    if normalized and abs(F0.total() - 1.0) > 1e-12:
        raise ValueError(f"initial series must be normalized to N(0)=1, got {F0.total()}")


def exact_symmetric(F0: PowerSeries, t: float) -> PowerSeries:
    """Evolved per-direction spectrum for identical initial data, N(0)=1.

    The symmetric mean-field solution is

        F(z,t) = F0(z) / [ (1 + t/2)^2 (1 - (t/(2+t)) F0(z)) ],

    expanded here by exact series algebra.  Callers with N(0) != 1 should
    use :func:`evolve_symmetric`, which rescales in and out.
    """
    _require_initial(F0)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return F0.copy()
    c = t / (2.0 + t)
    inner = PowerSeries(-c * F0.coeffs)
    inner.coeffs[0] += 1.0  # 1 - c F0, constant term exactly 1
    out = multiply(F0, reciprocal(inner))
    out.coeffs *= 1.0 / (1.0 + 0.5 * t) ** 2
    return out


def evolve_symmetric(F0: PowerSeries, t: float) -> PowerSeries:
    """exact_symmetric for arbitrary N(0): rescale to N=1, evolve, restore."""
    n0 = F0.total()
    if n0 <= 0:
        raise ValueError("initial series must have positive total count")
    unit = PowerSeries(F0.coeffs / n0)
    out = exact_symmetric(unit, n0 * t)
    out.coeffs *= n0
    return out


def _expm1_over_g(G0: PowerSeries, sigma: float) -> PowerSeries:
    """(exp(-sigma*G0) - 1) / G0 as a series, safe where G0 vanishes.

    Evaluated through the entire function u(w) = (e^{-sigma w} - 1)/w
    composed with G0, i.e. sum_{m>=1} (-sigma)^m G0^{m-1} / m!, never by
    division, so zero coefficients of G0 are harmless.  G0 must have zero
    constant term, which makes the sum finite at any truncation.
    """
    L = G0.L
    acc = PowerSeries.zero(L)
    if np.iscomplexobj(G0.coeffs):
        acc = PowerSeries(acc.coeffs.astype(np.complex128))
    power = PowerSeries.constant(1.0, L)  # G0^{m-1}
    coef = 1.0
    for m in range(1, L + 2):
        coef *= -sigma / m  # (-sigma)^m / m!
        acc = scale_add(1.0, acc, coef, power)
        power = multiply(power, G0)
        if not power.coeffs.any():
            break
    return acc


def exact_asymmetric(F0_plus: PowerSeries, F0_minus: PowerSeries, t: float):
    """Evolved pair (F+, F-) for equal counts but different initial shapes.

    With G0 = F0+ - F0- and N0 the common initial count, the minus-side
    solution is

        F-(z,t) = (1 + N0 t/2)^{-2} /
                  { (1/G0)[E - 1] + E / F-(z,0) },   E = exp(-(G0/2) s),

    where s = t / (1 + N0 t/2).  The pole of the denominator at z = 0 is
    cleared by multiplying through by F-(z,0), which keeps everything a
    power series:  F- = scale * F0- / (F0- * (E-1)/G0 + E).  The plus side
    follows from F+ = G + F- with G(z,t) = G0 / (1 + N0 t/2)^2.
    """
    _check_same_L(F0_plus, F0_minus)
    _require_initial(F0_plus, normalized=False)
    _require_initial(F0_minus, normalized=False)
    if t < 0:
        raise ValueError("t must be >= 0")
    n_plus, n_minus = F0_plus.total(), F0_minus.total()
    if abs(n_plus - n_minus) > 1e-12:
        raise AsymmetricCounts(
            f"initial counts differ: N+(0)={n_plus}, N-(0)={n_minus}"
        )
    if t == 0.0:
        return F0_plus.copy(), F0_minus.copy()
    n0 = n_minus
    growth = 1.0 + 0.5 * n0 * t
    sigma = 0.5 * t / growth  # exponent is -sigma * G0
    G0 = scale_add(1.0, F0_plus, -1.0, F0_minus)
    E = exponential(PowerSeries(-sigma * G0.coeffs))
    U = _expm1_over_g(G0, sigma)
    W = scale_add(1.0, multiply(F0_minus, U), 1.0, E)
    f_minus = multiply(F0_minus, reciprocal(W))
    f_minus.coeffs *= 1.0 / growth**2
    f_plus = scale_add(1.0, f_minus, 1.0 / growth**2, G0)
    return f_plus, f_minus


def selfsim_profile(ell: int, t: float, ell0: float, d: int = 1) -> float:
    """Long-time profile value (8/(l0 t^2)) exp(-4 l/(l0 t)) on the comb.

    Returns 0 for sizes off the lattice (d does not divide ell).  Note:
    this is the literal comb-normalized formula; measured against the
    exact solution with gapped data, the converged values on the comb are
    a factor d larger (see tests), so per-direction mass sums to l0/(2d)
    here but to l0/2 in the exact solution.
    """
    if ell < 1 or t <= 0 or ell0 <= 0 or d < 1:
        raise ValueError("require ell >= 1, t > 0, ell0 > 0, d >= 1")
    if ell % d != 0:
        return 0.0
    return 8.0 / (ell0 * t * t) * math.exp(-4.0 * ell / (ell0 * t))


def pole_location(F0: PowerSeries, t: float, tol: float = 1e-12) -> float:
    """Real resonance root x > 1 of 1 - (t/(2+t)) F0(x) = 0.

    The root is the pole of the evolved symmetric generating function
    nearest z = 1; as t grows it approaches 1 + (2/t)/F0'(1).  Input must
    be normalized to N(0)=1 so that F0(1)=1.  Bracketed by doubling, then
    bisected to ``tol``.
    """
    _require_initial(F0)
    if t <= 0:
        raise ValueError("t must be > 0")
    if F0.derivative_at_one() <= 0:
        raise NoRealRoot("F0'(1) must be positive")
    target = (2.0 + t) / t

    def g(x):
        return float(F0(x).real if np.iscomplexobj(F0.coeffs) else F0(x)) - target

    lo, hi = 1.0, 2.0
    for _ in range(200):
        if g(hi) >= 0.0:
            break
        lo, hi = hi, hi * 2.0
        if hi > 1e12:
            raise NoRealRoot(f"F0 never reaches {target} on (1, 1e12)")
    else:
        raise NoRealRoot(f"F0 never reaches {target}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def winding_number(
    f: Callable[[np.ndarray], np.ndarray],
    radius: float,
    samples: int = 4096,
    max_samples: int = 1 << 20,
    zero_floor: float = 1e-12,
) -> int:
    """Winding number of f around 0 along the circle |z| = radius.

    ``f`` must accept a complex ndarray.  Sampling is refined until every
    consecutive phase step is below pi/2; by the argument principle the
    result counts zeros minus poles of f inside the contour.

    Raises
    ------
    ContourThroughZero
        If |f| < zero_floor at any sample point.
    """
    n = samples
    while True:
        theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        vals = np.asarray(f(radius * np.exp(1j * theta)), dtype=np.complex128)
        if np.any(np.abs(vals) < zero_floor):
            raise ContourThroughZero(f"|f| < {zero_floor} on the contour")
        ratios = np.roll(vals, -1) / vals
        steps = np.angle(ratios)
        if np.max(np.abs(steps)) < 0.5 * np.pi:
            total = steps.sum()
            return int(round(total / (2.0 * np.pi)))
        n *= 2
        if n > max_samples:
            raise ContourThroughZero(
                "phase steps did not settle below pi/2; contour is too close to a zero"
            )


def _asym_denominator_factory(F0_plus: PowerSeries, F0_minus: PowerSeries, t: float):
    """Pointwise evaluator of the pole-cleared denominator of F-(z,t).

    Evaluates W(z) = F0-(z) * (E-1)/G0(z) + E with E = exp(-sigma G0(z)).
    W is holomorphic on the closed unit disc and has exactly the zeros of
    the solution's denominator (the 1/F0- pole is cleared, and zeros of
    F0- are not zeros of W since W = E != 0 there).  Accepts t = inf.
    """
    _check_same_L(F0_plus, F0_minus)
    n_plus, n_minus = F0_plus.total(), F0_minus.total()
    if abs(n_plus - n_minus) > 1e-12:
        raise AsymmetricCounts(
            f"initial counts differ: N+(0)={n_plus}, N-(0)={n_minus}"
        )
    n0 = n_minus
    sigma = 1.0 / n0 if math.isinf(t) else 0.5 * t / (1.0 + 0.5 * n0 * t)

    def w(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        g0 = F0_plus(z) - F0_minus(z)
        f0m = F0_minus(z)
        e = np.exp(-sigma * g0)
        small = np.abs(g0) < 1e-6
        u = np.empty_like(e)
        safe = ~small
        u[safe] = (e[safe] - 1.0) / g0[safe]
        if small.any():
            # series of (e^{-sigma w}-1)/w around w=0
            gs = g0[small]
            acc = np.zeros_like(gs)
            term = np.ones_like(gs)
            coef = 1.0
            for m in range(1, 30):
                coef *= -sigma / m
                acc = acc + coef * term
                term = term * gs
            u[small] = acc
        return f0m * u + e

    return w


def winding_check(
    F0_plus: PowerSeries,
    F0_minus: PowerSeries,
    t: float,
    radius: float,
    samples: int = 4096,
) -> int:
    """Zero count of the asymmetric solution's denominator inside |z|=radius.

    A return of 0 certifies (numerically) that F-(z,t) has no poles inside
    the contour; works for finite t and t = inf.
    """
    if not 0.0 < radius <= 1.0:
        raise ValueError("radius must be in (0, 1]")
    return winding_number(_asym_denominator_factory(F0_plus, F0_minus, t), radius, samples)


def scaled_l1_profile_error(f: np.ndarray, t: float, ell0: float, d: int = 1) -> float:
    """t^2 * sum_l |f(l) - t^{-2} Phi(l/t)| for a coefficient array.

    ``f[l]`` is the per-direction count of size-l clusters at time t
    (index 0 ignored).  Bounded in t when the solution converges to the
    self-similar profile in the total-variation sense.
    """
    L = f.shape[0] - 1
    ell = np.arange(L + 1, dtype=float)
    phi = np.zeros(L + 1)
    on = (np.arange(L + 1) % d == 0) & (np.arange(L + 1) > 0)
    phi[on] = 8.0 / (ell0 * t * t) * np.exp(-4.0 * ell[on] / (ell0 * t))
    diff = np.abs(np.asarray(f) - phi)
    diff[0] = 0.0
    return float(t * t * np.sum(diff))


def scaled_sup_profile_error(f: np.ndarray, t: float, ell0: float, d: int = 1) -> float:
    """t * sup_l l * |f(l) - t^{-2} Phi(l/t)|; decays when convergence is o(1/t)."""
    L = f.shape[0] - 1
    ell = np.arange(L + 1, dtype=float)
    phi = np.zeros(L + 1)
    on = (np.arange(L + 1) % d == 0) & (np.arange(L + 1) > 0)
    phi[on] = 8.0 / (ell0 * t * t) * np.exp(-4.0 * ell[on] / (ell0 * t))
    return float(t * np.max(ell * np.abs(np.asarray(f) - phi)))


def geometric_initial(q: float, L: int) -> PowerSeries:
    """Normalized exponential-tail initial data f(l,0) = (1-q) q^{l-1}."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    ell = np.arange(L + 1, dtype=float)
    c = np.zeros(L + 1)
    c[1:] = (1.0 - q) * q ** (ell[1:] - 1.0)
    c[1:] /= c[1:].sum()  # renormalize the truncated tail to N=1 exactly
    return PowerSeries(c)
