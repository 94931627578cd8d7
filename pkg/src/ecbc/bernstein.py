"""Bernstein polynomial smoothing of the empirical checkerboard copula.

A fitted coefficient tensor holds checkerboard-copula values on an
equally spaced grid, one axis per variable with the covariate always
last. The smoothed CDF is the contraction of that tensor against
binomial (Bernstein) weights per axis:

    C(u) = sum_H theta[H] * prod_j P_{deg_j, H_j}(u_j),
    P_{l,h}(u) = C(l,h) u^h (1-u)^(l-h).

Differencing the tensor along the covariate axis gives the partial
derivative with respect to the covariate, which is the conditional-CDF
estimate everything downstream is built on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .checkerboard import CheckerboardFit, checkerboard_cdf_grid
from .data import PseudoSample
from .errors import InvariantError, ValidationError

__all__ = [
    "bernstein_pmf",
    "bernstein_basis",
    "DegreeConfig",
    "select_degrees",
    "draw_degree_triple",
    "draw_degree_pair",
    "EcbcCoefficients",
    "fit_ecbc",
    "ecbc_cdf",
    "ecbc_partial_v",
    "ecbc_partial_v_samples",
    "eta_grid",
]

POLICIES = ("fixed", "plugin", "prior-sample")

# Prior-sample averaging count offered alongside the deterministic plugin
# default; see README for the trade-off.
DEFAULT_PRIOR_DRAWS = 25


def bernstein_basis(degree: int, u) -> np.ndarray:
    """All binomial weights P_{degree,h}(u), h = 0..degree.

    Returns an array of shape ``(len(u), degree + 1)``. Binomial
    coefficients are computed in log-space so degrees up to ~10^3 do not
    overflow; endpoints use the exact limits (0^0 = 1 convention).
    """
    if degree < 0:
        raise ValidationError(f"degree must be >= 0, got {degree}")
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.isfinite(u_arr).all() or (u_arr < 0).any() or (u_arr > 1).any():
        raise ValidationError("evaluation points must lie in [0, 1]")
    h = np.arange(degree + 1)
    log_binom = gammaln(degree + 1) - gammaln(h + 1) - gammaln(degree - h + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = (
            log_binom[None, :]
            + h[None, :] * np.log(u_arr)[:, None]
            + (degree - h)[None, :] * np.log1p(-u_arr)[:, None]
        )
        out = np.exp(log_p)
    at0 = u_arr == 0.0
    at1 = u_arr == 1.0
    out[at0] = 0.0
    out[at0, 0] = 1.0
    out[at1] = 0.0
    out[at1, degree] = 1.0
    return out


def bernstein_pmf(l: int, h: int, u: float) -> float:
    """Single binomial weight C(l,h) u^h (1-u)^(l-h)."""
    if not 0 <= h <= l:
        raise ValidationError(f"index h={h} outside 0..{l}")
    return float(bernstein_basis(l, u)[0, h])


@dataclass(frozen=True)
class DegreeConfig:
    """Bernstein degrees for the two response axes and the covariate axis.

    `policy` records how the degrees were chosen:

    - ``fixed``: user-supplied (l1, l2, m).
    - ``plugin``: deterministic square-root rule from the sample size.
    - ``prior-sample``: `draws` independent draws from the hierarchical
      shifted-Poisson degree prior; each draw defines one fit and
      downstream estimates are averaged across draws. The drawn triples
      are stored in `draw_list`; (l1, l2, m) snapshot the first draw.
    """

    l1: int
    l2: int
    m: int
    policy: str = "fixed"
    draws: int = 1
    seed: int = 0
    draw_list: tuple[tuple[int, int, int], ...] | None = field(default=None)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValidationError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.l1 < 1 or self.l2 < 1:
            raise ValidationError(f"response degrees must be >= 1, got ({self.l1}, {self.l2})")
        if self.m < 2:
            raise ValidationError(f"covariate degree must be >= 2, got {self.m}")
        if self.draws < 1:
            raise ValidationError(f"draws must be >= 1, got {self.draws}")
        if self.draw_list is not None:
            if len(self.draw_list) != self.draws:
                raise ValidationError("draw_list length must equal draws")
            object.__setattr__(
                self, "draw_list", tuple(tuple(int(v) for v in t) for t in self.draw_list)
            )

    def member_triples(self) -> tuple[tuple[int, int, int], ...]:
        """Degree triples, one per fit member (a single one unless prior-sampled)."""
        if self.policy == "prior-sample" and self.draw_list is not None:
            return self.draw_list
        return ((self.l1, self.l2, self.m),)

    def to_dict(self) -> dict:
        return {
            "l1": self.l1,
            "l2": self.l2,
            "m": self.m,
            "policy": self.policy,
            "draws": self.draws,
            "seed": self.seed,
            "draw_list": None if self.draw_list is None else [list(t) for t in self.draw_list],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DegreeConfig":
        draw_list = payload.get("draw_list")
        return cls(
            l1=int(payload["l1"]),
            l2=int(payload["l2"]),
            m=int(payload["m"]),
            policy=payload.get("policy", "fixed"),
            draws=int(payload.get("draws", 1)),
            seed=int(payload.get("seed", 0)),
            draw_list=None if draw_list is None else tuple(tuple(t) for t in draw_list),
        )


def draw_degree_triple(n: int, rng: np.random.Generator) -> tuple[int, int, int]:
    """One draw (l1, l2, m) from the hierarchical shifted-Poisson prior.

    l_j | a_j ~ Poisson(n^a_j) + 1 with a_j ~ Unif(1/3, 2/3), and
    m | a ~ Poisson(n^a) + 2 with a ~ Unif(1/3, 2/3), all independent.
    """
    l1 = int(rng.poisson(n ** rng.uniform(1 / 3, 2 / 3))) + 1
    l2 = int(rng.poisson(n ** rng.uniform(1 / 3, 2 / 3))) + 1
    m = int(rng.poisson(n ** rng.uniform(1 / 3, 2 / 3))) + 2
    return l1, l2, m


def draw_degree_pair(n: int, rng: np.random.Generator) -> tuple[int, int]:
    """One draw (l, m) of bivariate-fit degrees from the same prior."""
    l = int(rng.poisson(n ** rng.uniform(1 / 3, 2 / 3))) + 1
    m = int(rng.poisson(n ** rng.uniform(1 / 3, 2 / 3))) + 2
    return l, m


def select_degrees(
    n: int,
    policy: str = "plugin",
    seed: int = 0,
    draws: int = DEFAULT_PRIOR_DRAWS,
    degrees: tuple[int, int, int] | None = None,
) -> DegreeConfig:
    """Choose Bernstein degrees for a sample of size `n`.

    ``plugin`` uses the deterministic midpoint rule l_j = round(sqrt(n)) + 1,
    m = round(sqrt(n)) + 2 (exponent 1/2 sits at the center of the prior
    support). ``prior-sample`` draws `draws` independent (l1, l2, m)
    triples from the shifted-Poisson hierarchy using seed-derived streams,
    so the draw list is reproducible. ``fixed`` requires explicit `degrees`.
    """
    if n < 2:
        raise ValidationError(f"need n >= 2, got {n}")
    if policy == "plugin":
        base = int(round(n**0.5))
        return DegreeConfig(l1=base + 1, l2=base + 1, m=base + 2, policy="plugin", seed=seed)
    if policy == "fixed":
        if degrees is None:
            raise ValidationError("fixed policy requires explicit degrees (l1, l2, m)")
        l1, l2, m = (int(v) for v in degrees)
        return DegreeConfig(l1=l1, l2=l2, m=m, policy="fixed", seed=seed)
    if policy == "prior-sample":
        children = np.random.SeedSequence(seed).spawn(draws)
        triples = tuple(
            draw_degree_triple(n, np.random.default_rng(child)) for child in children
        )
        l1, l2, m = triples[0]
        return DegreeConfig(
            l1=l1, l2=l2, m=m, policy="prior-sample", draws=draws, seed=seed,
            draw_list=triples,
        )
    raise ValidationError(f"unknown policy {policy!r}")


@dataclass(frozen=True)
class EcbcCoefficients:
    """Checkerboard-copula values on the Bernstein grid.

    `theta` is indexed (h1, ..., k) with the covariate axis last; entry
    ``theta[h1, h2, k]`` equals the checkerboard copula at
    ``(h1/l1, h2/l2, k/m)`` (bivariate fits analogously). The tensor is a
    copula restriction: grounded, nondecreasing per axis, 1 at the top
    corner, and 2-increasing across axis pairs.
    """

    theta: np.ndarray
    config: DegreeConfig | None = None

    def __post_init__(self):
        arr = np.asarray(self.theta, dtype=float)
        if arr.ndim not in (2, 3):
            raise ValidationError(f"theta must be 2-d or 3-d, got {arr.ndim}-d")
        object.__setattr__(self, "theta", arr)

    @property
    def d(self) -> int:
        return self.theta.ndim

    @property
    def axis_degrees(self) -> tuple[int, ...]:
        return tuple(s - 1 for s in self.theta.shape)

    @property
    def covariate_degree(self) -> int:
        return self.theta.shape[-1] - 1

    def derivative_coefficients(self) -> np.ndarray:
        """First differences along the covariate axis (all >= 0)."""
        return np.diff(self.theta, axis=-1)

    def validate(self, tol: float = 1e-12) -> None:
        """Check the copula-restriction invariants; raise on violation."""
        t = self.theta
        if (t < -tol).any() or (t > 1 + tol).any():
            raise InvariantError("coefficients outside [0, 1]")
        for ax in range(t.ndim):
            if (np.diff(t, axis=ax) < -tol).any():
                raise InvariantError(f"coefficients decrease along axis {ax}")
            zero_slice = np.take(t, 0, axis=ax)
            if (np.abs(zero_slice) > tol).any():
                raise InvariantError(f"grounding violated on axis {ax}")
        if abs(t.ravel()[-1] - 1.0) > tol:
            raise InvariantError("top-corner coefficient is not 1")
        for a in range(t.ndim):
            for b in range(a + 1, t.ndim):
                pair = t
                for other in reversed(range(t.ndim)):
                    if other not in (a, b):
                        pair = np.take(pair, -1, axis=other)
                box = np.diff(np.diff(pair, axis=0), axis=1)
                if (box < -tol).any():
                    raise InvariantError(f"2-increasing violated on axes ({a}, {b})")

    def to_dict(self) -> dict:
        return {
            "shape": list(self.theta.shape),
            "values": self.theta.ravel().tolist(),
            "config": None if self.config is None else self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EcbcCoefficients":
        theta = np.asarray(payload["values"], dtype=float).reshape(payload["shape"])
        config = payload.get("config")
        return cls(
            theta=theta,
            config=None if config is None else DegreeConfig.from_dict(config),
        )


def _resolve_axis_degrees(pseudo_d: int, degrees) -> tuple[int, ...]:
    if isinstance(degrees, DegreeConfig):
        if pseudo_d == 3:
            return (degrees.l1, degrees.l2, degrees.m)
        return (degrees.l1, degrees.m)
    degs = tuple(int(v) for v in degrees)
    if len(degs) != pseudo_d:
        raise ValidationError(f"{len(degs)} degrees for {pseudo_d} columns")
    return degs


def fit_ecbc(pseudo: PseudoSample, degrees) -> EcbcCoefficients:
    """Extract the coefficient tensor for a pseudo-observation sample.

    `degrees` is a :class:`DegreeConfig` (trivariate uses (l1, l2, m),
    bivariate (l1, m)) or an explicit per-axis tuple. The covariate axis
    must be the last pseudo-sample column.
    """
    if pseudo.d not in (2, 3):
        raise ValidationError(f"need 2 or 3 columns, got {pseudo.d}")
    axis_degrees = _resolve_axis_degrees(pseudo.d, degrees)
    if axis_degrees[-1] < 2:
        raise ValidationError(f"covariate degree must be >= 2, got {axis_degrees[-1]}")
    if any(deg < 1 for deg in axis_degrees):
        raise ValidationError(f"degrees must be >= 1, got {axis_degrees}")
    fit = CheckerboardFit.from_columns(*(pseudo.column(j) for j in range(pseudo.d)))
    axes = [np.arange(deg + 1) / deg for deg in axis_degrees]
    theta = checkerboard_cdf_grid(fit, axes)
    config = degrees if isinstance(degrees, DegreeConfig) else None
    coeffs = EcbcCoefficients(theta=theta, config=config)
    coeffs.validate()
    return coeffs


def _check_unit_scalar(value, name: str) -> float:
    v = float(value)
    if not np.isfinite(v) or v < 0.0 or v > 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")
    return v


def ecbc_cdf(coeffs: EcbcCoefficients, u) -> float:
    """Smoothed copula CDF at a point of the unit cube (covariate last)."""
    pt = np.asarray(u, dtype=float).reshape(-1)
    if pt.shape[0] != coeffs.d:
        raise ValidationError(f"point has {pt.shape[0]} coordinates, fit has {coeffs.d}")
    bases = [
        bernstein_basis(deg, pt[j])[0]
        for j, deg in enumerate(coeffs.axis_degrees)
    ]
    out = coeffs.theta
    for b in reversed(bases):
        out = out @ b
    return float(out)


def ecbc_partial_v(coeffs: EcbcCoefficients, u, v: float) -> float:
    """Partial derivative of the smoothed CDF with respect to the covariate.

    `u` holds the response coordinates (one value for bivariate fits, two
    for trivariate); `v` is the covariate coordinate. The result is the
    conditional-CDF estimate at (u | v), a value in [0, 1].
    """
    resp = np.asarray(u, dtype=float).reshape(-1)
    if resp.shape[0] != coeffs.d - 1:
        raise ValidationError(
            f"expected {coeffs.d - 1} response coordinates, got {resp.shape[0]}"
        )
    v = _check_unit_scalar(v, "v")
    m = coeffs.covariate_degree
    gamma = coeffs.derivative_coefficients()
    basis_v = m * bernstein_basis(m - 1, v)[0]
    out = gamma
    for j, deg in enumerate(coeffs.axis_degrees[:-1]):
        b = bernstein_basis(deg, resp[j])[0]
        out = np.tensordot(b, out, axes=(0, 0))
    return float(out @ basis_v)


def ecbc_partial_v_samples(coeffs: EcbcCoefficients, points, v_values) -> np.ndarray:
    """Row-wise conditional-CDF evaluation for paired samples.

    `points` has one row per observation (response coordinates), and
    `v_values` the matching covariate coordinates. Vectorizes what a loop
    over :func:`ecbc_partial_v` would compute.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    vs = np.asarray(v_values, dtype=float).reshape(-1)
    if pts.shape != (vs.shape[0], coeffs.d - 1):
        raise ValidationError(
            f"points shape {pts.shape} does not match {vs.shape[0]} rows x {coeffs.d - 1} responses"
        )
    m = coeffs.covariate_degree
    gamma = coeffs.derivative_coefficients()
    basis_v = m * bernstein_basis(m - 1, vs)
    if coeffs.d == 2:
        basis_w = bernstein_basis(coeffs.axis_degrees[0], pts[:, 0])
        return np.einsum("ih,hk,ik->i", basis_w, gamma, basis_v, optimize=True)
    basis_1 = bernstein_basis(coeffs.axis_degrees[0], pts[:, 0])
    basis_2 = bernstein_basis(coeffs.axis_degrees[1], pts[:, 1])
    return np.einsum("ia,ib,abk,ik->i", basis_1, basis_2, gamma, basis_v, optimize=True)


def eta_grid(coeffs: EcbcCoefficients, v: float) -> np.ndarray:
    """Bernstein coefficients of the conditional derivative at fixed v.

    For a trivariate fit returns the (l1+1) x (l2+1) matrix contracting
    the covariate-axis first differences against the degree-(m-1) basis
    scaled by m. Row/column at the top index give the conditional margins.
    """
    if coeffs.d != 3:
        raise ValidationError("eta grid requires a trivariate fit")
    v = _check_unit_scalar(v, "v")
    m = coeffs.covariate_degree
    gamma = coeffs.derivative_coefficients()
    basis_v = m * bernstein_basis(m - 1, v)[0]
    return np.einsum("abk,k->ab", gamma, basis_v, optimize=True)
