"""Two-stage estimation of a genuine conditional copula.

Stage 1 fits one bivariate smoothed copula per response against the
covariate and differentiates it to estimate the conditional marginal
CDFs; evaluating those at the data points yields covariate-adjusted
pseudo-observations with the covariate effect removed from the margins.
Stage 2 fits a trivariate smoothed copula to the adjusted sample and
differentiates with respect to the covariate. The resulting conditional
CDF is turned into a genuine copula by inverting its own conditional
margins (Sklar normalization), so margins are uniform for every fixed
covariate level, not just asymptotically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bernstein import (
    DegreeConfig,
    EcbcCoefficients,
    bernstein_basis,
    draw_degree_pair,
    draw_degree_triple,
    ecbc_partial_v,
    ecbc_partial_v_samples,
    eta_grid,
    fit_ecbc,
)
from .data import Dataset, PseudoSample, empirical_cdf_at, pseudo_observations
from .errors import InvariantError, ValidationError

__all__ = [
    "ConditionalCopulaFit",
    "ConditionalCopulaEnsemble",
    "covariate_adjust",
    "conditional_marginal_cdf",
    "fit_conditional_copula",
    "cond_copula_derivative",
    "cond_margin",
    "invert_cond_margin",
    "conditional_copula_cdf",
    "conditional_copula_grid",
    "conditional_copula_at_x",
    "save_fit",
    "load_fit",
]

# Adjusted pseudo-observations are clamped away from {0, 1}; downstream
# fitting only uses their ranks, so the exact epsilon is immaterial.
CLAMP_EPS = 1e-10

FIT_FORMAT = "ecbc-conditional-fit"
FIT_VERSION = 1


@dataclass(frozen=True)
class ConditionalCopulaFit:
    """Assembled two-stage fit.

    `stage1` holds the two bivariate coefficient tensors (response j vs
    covariate), `adjusted` the covariate-adjusted pseudo-observations fed
    to stage 2, and `stage2` the trivariate tensor. The raw samples are
    kept so new raw (y, x) points can be mapped through the empirical
    CDFs.
    """

    stage1: tuple[EcbcCoefficients, EcbcCoefficients]
    adjusted: PseudoSample
    stage2: EcbcCoefficients
    degrees: DegreeConfig
    covariate_sample: np.ndarray
    response_samples: tuple[np.ndarray, np.ndarray]

    @property
    def n(self) -> int:
        return self.covariate_sample.shape[0]


@dataclass(frozen=True)
class ConditionalCopulaEnsemble:
    """Collection of fits from prior-sampled degrees.

    Downstream estimates (copula values, dependence measures) are the
    average across members; a mixture of genuine copulas is itself a
    genuine copula.
    """

    members: tuple[ConditionalCopulaFit, ...]
    degrees: DegreeConfig

    @property
    def covariate_sample(self) -> np.ndarray:
        return self.members[0].covariate_sample

    @property
    def n(self) -> int:
        return self.members[0].n


def _check_dataset(dataset: Dataset) -> None:
    for name, col in zip(("y1", "y2", "x"), dataset.columns()):
        if np.unique(col).size < 2:
            raise ValidationError(f"column {name} is constant; cannot rank")


def _member_degrees(config: DegreeConfig, n: int):
    """Stage-1 and stage-2 degrees for every fit member.

    Plugin/fixed policies reuse the configured degrees for both stages.
    Under prior sampling each member draws its stage-2 triple and two
    independent stage-1 (degree, covariate-degree) pairs from one
    seed-derived stream, so the whole fit is reproducible from the config.
    """
    if config.policy != "prior-sample":
        stage1 = ((config.l1, config.m), (config.l2, config.m))
        return [(stage1, (config.l1, config.l2, config.m))]
    members = []
    children = np.random.SeedSequence(config.seed).spawn(config.draws)
    for k, child in enumerate(children):
        rng = np.random.default_rng(child)
        triple = draw_degree_triple(n, rng)
        if config.draw_list is not None and triple != config.draw_list[k]:
            raise InvariantError("degree draws do not reproduce the configured list")
        pair1 = draw_degree_pair(n, rng)
        pair2 = draw_degree_pair(n, rng)
        members.append(((pair1, pair2), triple))
    return members


def _stage1_fits(w1, w2, v, stage1_degrees):
    fits = []
    for w, (l, m) in zip((w1, w2), stage1_degrees):
        pseudo = PseudoSample(
            values=np.column_stack([w, v]), roles=("response", "covariate")
        )
        fits.append(fit_ecbc(pseudo, (l, m)))
    return tuple(fits)


def _adjusted_sample(stage1, w1, w2, v) -> PseudoSample:
    cols = []
    for coeffs, w in zip(stage1, (w1, w2)):
        u_hat = ecbc_partial_v_samples(coeffs, w, v)
        cols.append(np.clip(u_hat, CLAMP_EPS, 1.0 - CLAMP_EPS))
    cols.append(v)
    return PseudoSample(values=np.column_stack(cols))


def covariate_adjust(dataset: Dataset, degrees: DegreeConfig) -> PseudoSample:
    """Pseudo-observations with covariate effects removed from the margins.

    Each response value is mapped through its estimated conditional
    marginal CDF given the observation's own covariate value; the third
    column carries the covariate pseudo-observations. Under the
    prior-sample policy the configured snapshot degrees are used.
    """
    _check_dataset(dataset)
    w1 = pseudo_observations(dataset.y1)
    w2 = pseudo_observations(dataset.y2)
    v = pseudo_observations(dataset.x)
    stage1 = _stage1_fits(w1, w2, v, ((degrees.l1, degrees.m), (degrees.l2, degrees.m)))
    return _adjusted_sample(stage1, w1, w2, v)


def fit_conditional_copula(dataset: Dataset, degrees: DegreeConfig):
    """Run the full two-stage pipeline.

    Returns a :class:`ConditionalCopulaFit`, or a
    :class:`ConditionalCopulaEnsemble` when the degree policy is
    ``prior-sample`` with more than one draw. Deterministic given the
    dataset and config.
    """
    if dataset.n < 4:
        raise ValidationError(f"need n >= 4 observations, got {dataset.n}")
    _check_dataset(dataset)
    w1 = pseudo_observations(dataset.y1)
    w2 = pseudo_observations(dataset.y2)
    v = pseudo_observations(dataset.x)

    members = []
    for stage1_degrees, stage2_triple in _member_degrees(degrees, dataset.n):
        stage1 = _stage1_fits(w1, w2, v, stage1_degrees)
        adjusted = _adjusted_sample(stage1, w1, w2, v)
        stage2 = fit_ecbc(adjusted, stage2_triple)
        members.append(
            ConditionalCopulaFit(
                stage1=stage1,
                adjusted=adjusted,
                stage2=stage2,
                degrees=degrees,
                covariate_sample=np.array(dataset.x, copy=True),
                response_samples=(
                    np.array(dataset.y1, copy=True),
                    np.array(dataset.y2, copy=True),
                ),
            )
        )
    if len(members) == 1:
        return members[0]
    return ConditionalCopulaEnsemble(members=tuple(members), degrees=degrees)


def _single_members(fit) -> tuple[ConditionalCopulaFit, ...]:
    if isinstance(fit, ConditionalCopulaEnsemble):
        return fit.members
    return (fit,)


def conditional_marginal_cdf(fit, j: int, y: float, x: float) -> float:
    """Estimated conditional marginal CDF of response `j` given X = x.

    Maps the raw pair through the empirical marginal CDFs and evaluates
    the stage-1 derivative; nondecreasing in `y` for fixed `x`.
    """
    if j not in (1, 2):
        raise ValidationError(f"response index must be 1 or 2, got {j}")
    vals = []
    for member in _single_members(fit):
        w = empirical_cdf_at(member.response_samples[j - 1], y)
        v = empirical_cdf_at(member.covariate_sample, x)
        vals.append(ecbc_partial_v(member.stage1[j - 1], w, v))
    return float(np.mean(vals))


def cond_copula_derivative(fit, u1: float, u2: float, v: float) -> float:
    """Stage-2 conditional CDF estimate (unnormalized copula) at (u1, u2 | v)."""
    vals = [
        ecbc_partial_v(member.stage2, (u1, u2), v) for member in _single_members(fit)
    ]
    return float(np.mean(vals))


def _require_single(fit, what: str) -> ConditionalCopulaFit:
    if isinstance(fit, ConditionalCopulaEnsemble):
        raise ValidationError(f"{what} is defined per member; pass a single fit")
    return fit


def _margin_coefficients(fit: ConditionalCopulaFit, axis: int, v: float) -> np.ndarray:
    """Bernstein coefficients of the conditional margin along one response axis."""
    if axis not in (1, 2):
        raise ValidationError(f"axis must be 1 or 2, got {axis}")
    eta = eta_grid(fit.stage2, v)
    coeff = eta[:, -1] if axis == 1 else eta[-1, :]
    if (np.diff(coeff) < -1e-12).any():
        raise InvariantError("conditional margin coefficients decrease")
    return coeff


def cond_margin(fit, axis: int, u: float, v: float) -> float:
    """Conditional margin of the stage-2 derivative: grounded at 0, 1 at u=1."""
    fit = _require_single(fit, "conditional margin")
    coeff = _margin_coefficients(fit, axis, v)
    basis = bernstein_basis(coeff.shape[0] - 1, u)[0]
    return float(basis @ coeff)


def _invert_margin_vec(
    coeff: np.ndarray, p: np.ndarray, tol: float, max_iter: int = 60
) -> np.ndarray:
    """Bisection solve of the Bernstein margin for a vector of targets."""
    degree = coeff.shape[0] - 1
    lo = np.zeros_like(p)
    hi = np.ones_like(p)
    for _ in range(max_iter):
        if np.max(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = bernstein_basis(degree, mid) @ coeff
        below = f_mid < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out[p <= 0.0] = 0.0
    out[p >= 1.0] = 1.0
    return out


def invert_cond_margin(fit, axis: int, p, v: float, tol: float = 1e-10):
    """Inverse of :func:`cond_margin` in `u`, by bisection on [0, 1].

    The margin is continuous and nondecreasing with F(0)=0, F(1)=1, so
    bisection converges unconditionally; p = 0 and p = 1 return the exact
    boundary roots. `p` may be a scalar or an array.
    """
    if tol <= 0:
        raise ValidationError(f"tolerance must be positive, got {tol}")
    fit = _require_single(fit, "margin inversion")
    coeff = _margin_coefficients(fit, axis, v)
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if not np.isfinite(p_arr).all() or (p_arr < 0).any() or (p_arr > 1).any():
        raise ValidationError("targets must lie in [0, 1]")
    out = _invert_margin_vec(coeff, p_arr, tol)
    return float(out[0]) if np.isscalar(p) or np.ndim(p) == 0 else out


def conditional_copula_cdf(fit, u1: float, u2: float, v: float, tol: float = 1e-10) -> float:
    """Genuine conditional copula at (u1, u2 | v).

    Inverts the two conditional margins and evaluates the stage-2
    derivative there, which makes the margins uniform for every fixed v
    (up to inversion tolerance). Ensembles average member values.
    """
    members = _single_members(fit)
    vals = []
    for member in members:
        s1 = invert_cond_margin(member, 1, float(u1), v, tol)
        s2 = invert_cond_margin(member, 2, float(u2), v, tol)
        vals.append(ecbc_partial_v(member.stage2, (s1, s2), v))
    return float(np.mean(vals))


def conditional_copula_grid(fit, u1_grid, u2_grid, v: float, tol: float = 1e-10) -> np.ndarray:
    """Conditional copula on a tensor grid of (u1, u2) at fixed v."""
    u1_arr = np.asarray(u1_grid, dtype=float).reshape(-1)
    u2_arr = np.asarray(u2_grid, dtype=float).reshape(-1)
    total = np.zeros((u1_arr.shape[0], u2_arr.shape[0]))
    members = _single_members(fit)
    for member in members:
        c1 = _margin_coefficients(member, 1, v)
        c2 = _margin_coefficients(member, 2, v)
        s1 = _invert_margin_vec(c1, u1_arr, tol)
        s2 = _invert_margin_vec(c2, u2_arr, tol)
        eta = eta_grid(member.stage2, v)
        b1 = bernstein_basis(c1.shape[0] - 1, s1)
        b2 = bernstein_basis(c2.shape[0] - 1, s2)
        total += b1 @ eta @ b2.T
    return total / len(members)


def conditional_copula_at_x(fit, u1: float, u2: float, x: float, tol: float = 1e-10) -> float:
    """Conditional copula with the covariate given on its raw scale.

    The raw value is mapped to the unit interval through the modified
    empirical CDF of the stored covariate sample.
    """
    v = empirical_cdf_at(fit.covariate_sample, x)
    return conditional_copula_cdf(fit, u1, u2, float(v), tol)


def _fit_to_dict(fit: ConditionalCopulaFit) -> dict:
    return {
        "stage1": [c.to_dict() for c in fit.stage1],
        "adjusted": fit.adjusted.values.tolist(),
        "adjusted_roles": list(fit.adjusted.roles),
        "stage2": fit.stage2.to_dict(),
        "covariate_sample": fit.covariate_sample.tolist(),
        "response_samples": [s.tolist() for s in fit.response_samples],
    }


def _fit_from_dict(payload: dict, degrees: DegreeConfig) -> ConditionalCopulaFit:
    return ConditionalCopulaFit(
        stage1=tuple(EcbcCoefficients.from_dict(c) for c in payload["stage1"]),
        adjusted=PseudoSample(
            values=np.asarray(payload["adjusted"], dtype=float),
            roles=tuple(payload["adjusted_roles"]),
        ),
        stage2=EcbcCoefficients.from_dict(payload["stage2"]),
        degrees=degrees,
        covariate_sample=np.asarray(payload["covariate_sample"], dtype=float),
        response_samples=tuple(
            np.asarray(s, dtype=float) for s in payload["response_samples"]
        ),
    )


def save_fit(fit, path) -> None:
    """Write a fit (or ensemble) to a versioned JSON container."""
    members = _single_members(fit)
    degrees = members[0].degrees
    payload = {
        "format": FIT_FORMAT,
        "version": FIT_VERSION,
        "kind": "ensemble" if isinstance(fit, ConditionalCopulaEnsemble) else "single",
        "degrees": degrees.to_dict(),
        "members": [_fit_to_dict(m) for m in members],
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_fit(path):
    """Read back a fit container written by :func:`save_fit`."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read fit file {path}: {exc}") from exc
    if payload.get("format") != FIT_FORMAT:
        raise ValidationError(f"{path} is not a conditional-copula fit container")
    if payload.get("version") != FIT_VERSION:
        raise ValidationError(f"unsupported fit container version {payload.get('version')}")
    degrees = DegreeConfig.from_dict(payload["degrees"])
    members = [_fit_from_dict(m, degrees) for m in payload["members"]]
    if payload["kind"] == "single":
        return members[0]
    return ConditionalCopulaEnsemble(members=tuple(members), degrees=degrees)
