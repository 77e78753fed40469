"""Core dengue-Wolbachia model: domain types, right-hand side, Jacobian.

The model couples four human compartments (susceptible, infected,
healthcare-seeking, recovered) with fourteen vector compartments split by
sex, life stage (aquatic / non-pregnant / pregnant female), Wolbachia
carriage and dengue status.  Wolbachia spreads maternally and through
cytoplasmic incompatibility: uninfected females mated by Wolbachia males
produce sterile pregnancies, which is what suppresses the wild population
when infected aquatic-stage mosquitoes are released at rate r(t).

State serialization order is fixed package-wide to ``STATE_NAMES`` and is
relied on by the integrator, the Jacobian layout and all CSV output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import NEGATIVE_CLAMP_REL

STATE_NAMES = (
    "S_h", "I_h", "J_h", "R_h",
    "M_v_w", "M_v",
    "S_vf_w", "S_vf",
    "S_vfp_w", "S_vfp", "S_vfp_s",
    "I_vf_w", "I_vf", "I_vfp", "I_vfp_s", "I_vfp_w",
    "A_w", "A",
)

PARAM_NAMES = (
    "b_h", "mu_h", "alpha", "gamma", "theta",
    "B", "C_hv", "C_vh", "C_vh_w",
    "sigma", "phi", "phi_w", "v_w", "v",
    "psi", "b_m", "b_f",
    "mu_a", "mu_f", "mu_f_w", "mu_m", "mu_m_w",
    "K_a",
)

_FRACTION_PARAMS = ("alpha", "C_hv", "C_vh", "C_vh_w", "v_w", "v", "b_m", "b_f")


class ModelDomainError(ValueError):
    """State/parameter combination outside the model's domain."""


class ComputationError(ArithmeticError):
    """A derivative evaluation produced a non-finite value."""


@dataclass(frozen=True)
class StateVector:
    """Compartment populations at one instant.

    Humans (individuals): ``S_h`` susceptible, ``I_h`` infected
    non-healthcare-seeking, ``J_h`` healthcare-seeking, ``R_h`` recovered.
    Vectors (mosquitoes): ``M_v``/``M_v_w`` adult males without/with
    Wolbachia; ``S_vf*``/``I_vf*`` dengue-susceptible/-infected non-pregnant
    females; ``S_vfp*``/``I_vfp*`` pregnant females, with the ``_s`` suffix
    marking sterile pregnancies from incompatible matings; ``A``/``A_w``
    aquatic stage.  All fields are non-negative counts and the human total
    must be positive wherever the equations divide by it; ``in_domain``
    reports violations rather than the constructor rejecting them.
    """

    S_h: float
    I_h: float
    J_h: float
    R_h: float
    M_v_w: float
    M_v: float
    S_vf_w: float
    S_vf: float
    S_vfp_w: float
    S_vfp: float
    S_vfp_s: float
    I_vf_w: float
    I_vf: float
    I_vfp: float
    I_vfp_s: float
    I_vfp_w: float
    A_w: float
    A: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STATE_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "StateVector":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (len(STATE_NAMES),):
            raise ValueError(f"expected {len(STATE_NAMES)} state values, got shape {arr.shape}")
        return cls(*arr.tolist())

    @property
    def human_total(self) -> float:
        return self.S_h + self.I_h + self.J_h + self.R_h


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of each compartment, in individuals or mosquitoes per day."""

    S_h: float
    I_h: float
    J_h: float
    R_h: float
    M_v_w: float
    M_v: float
    S_vf_w: float
    S_vf: float
    S_vfp_w: float
    S_vfp: float
    S_vfp_s: float
    I_vf_w: float
    I_vf: float
    I_vfp: float
    I_vfp_s: float
    I_vfp_w: float
    A_w: float
    A: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STATE_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "StateDerivative":
        arr = np.asarray(values, dtype=float)
        return cls(*arr.tolist())


@dataclass(frozen=True)
class ModelParameters:
    """All rate constants of the model plus the aquatic carrying capacity.

    Units: rates are per day, ``alpha``/``v``/``v_w``/``b_m``/``b_f`` and the
    transmission entries are dimensionless fractions or probabilities, and
    ``K_a`` is a mosquito count.  Wolbachia shortens mosquito life, so
    ``mu_f <= mu_f_w`` and ``mu_m <= mu_m_w`` are required (the domain
    bounds below depend on it).
    """

    b_h: float
    mu_h: float
    alpha: float
    gamma: float
    theta: float
    B: float
    C_hv: float
    C_vh: float
    C_vh_w: float
    sigma: float
    phi: float
    phi_w: float
    v_w: float
    v: float
    psi: float
    b_m: float
    b_f: float
    mu_a: float
    mu_f: float
    mu_f_w: float
    mu_m: float
    mu_m_w: float
    K_a: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"parameter {name} must be finite, got {value}")
            if name != "K_a" and value < 0:
                raise ValueError(f"parameter {name} must be >= 0, got {value}")
        for name in _FRACTION_PARAMS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"parameter {name} must lie in [0, 1], got {value}")
        if abs(self.v + self.v_w - 1.0) > 1e-9:
            raise ValueError(f"maternal transmission fractions must sum to 1, got v={self.v}, v_w={self.v_w}")
        if abs(self.b_m + self.b_f - 1.0) > 1e-9:
            raise ValueError(f"birth sex fractions must sum to 1, got b_m={self.b_m}, b_f={self.b_f}")
        if self.mu_f > self.mu_f_w:
            raise ValueError("mu_f must not exceed mu_f_w (Wolbachia raises female mortality)")
        if self.mu_m > self.mu_m_w:
            raise ValueError("mu_m must not exceed mu_m_w (Wolbachia raises male mortality)")
        if self.K_a <= 0:
            raise ValueError(f"carrying capacity K_a must be positive, got {self.K_a}")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=float)

    @classmethod
    def from_dict(cls, values: dict) -> "ModelParameters":
        unknown = set(values) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown parameter names: {sorted(unknown)}")
        missing = set(PARAM_NAMES) - set(values)
        if missing:
            raise ValueError(f"missing parameters: {sorted(missing)}")
        return cls(**{k: float(v) for k, v in values.items()})

    @property
    def max_valid_release(self) -> float:
        """Largest release rate keeping the aquatic bound dissipative, (psi+mu_a)*K_a."""
        return (self.psi + self.mu_a) * self.K_a


@dataclass(frozen=True)
class DerivedAggregates:
    """Quantities derived from a state: totals, mating probabilities, oviposition rates.

    ``m``/``m_w`` are the probabilities that a mating male is uninfected /
    Wolbachia-infected; ``eta``/``eta_w`` are the logistic egg-laying rates,
    which vanish as the aquatic total reaches ``K_a``.
    """

    N_h: float
    I_v: float
    I_v_w: float
    m: float
    m_w: float
    eta: float
    eta_w: float


def derived_aggregates(state: StateVector, params: ModelParameters) -> DerivedAggregates:
    """Compute the aggregate quantities the equations are written in terms of.

    With no adult males at all the mating fractions are taken as the
    Wolbachia-free limit m=1, m_w=0, which also kills the sterile-mating
    flux, the only place m_w is used.

    Raises:
        ModelDomainError: if the human population is zero.
    """
    n_h = state.human_total
    if n_h <= 0.0:
        raise ModelDomainError(f"human population must be positive, got N_h={n_h}")
    m_tot = state.M_v + state.M_v_w
    if m_tot > 0.0:
        m = state.M_v / m_tot
        m_w = 1.0 - m
    else:
        m, m_w = 1.0, 0.0
    crowd = 1.0 - (state.A + state.A_w) / params.K_a
    return DerivedAggregates(
        N_h=n_h,
        I_v=state.I_vf + state.I_vfp,
        I_v_w=state.I_vf_w + state.I_vfp_w + state.I_vfp_s,
        m=m,
        m_w=m_w,
        eta=params.phi * crowd,
        eta_w=params.phi_w * crowd,
    )


def rhs(t: float, state: StateVector, params: ModelParameters,
        release_value: float = 0.0) -> StateDerivative:
    """Right-hand side of the coupled dengue-Wolbachia system.

    ``release_value`` is the release rate r(t), already evaluated by the
    caller; it feeds only the Wolbachia-infected aquatic compartment.  The
    system is autonomous apart from r, so ``t`` only labels error messages.

    Raises:
        ModelDomainError: zero human population.
        ComputationError: a non-finite derivative component, named.
    """
    if release_value < 0.0:
        raise ValueError(f"release_value must be >= 0, got {release_value}")
    if state.human_total <= 0.0:
        raise ModelDomainError(f"human population must be positive at t={t}")
    out = np.empty(len(STATE_NAMES))
    kernels.rhs_into(state.to_array(), params.to_array(), float(release_value), out)
    if not np.all(np.isfinite(out)):
        bad = [STATE_NAMES[i] for i in np.flatnonzero(~np.isfinite(out))]
        raise ComputationError(f"non-finite derivative for {', '.join(bad)} at t={t}")
    return StateDerivative.from_array(out)


def jacobian(state: StateVector, params: ModelParameters) -> np.ndarray:
    """Exact 18x18 Jacobian of the right-hand side at ``state``.

    Includes the derivatives of the mating fractions with respect to the
    male compartments and of the logistic egg-laying rates with respect to
    the aquatic compartments; dropping those recovers the frozen-aggregate
    block form.  Rows and columns follow ``STATE_NAMES``.

    Raises:
        ModelDomainError: zero human population or no adult males (the
            mating-fraction derivative is singular there).
    """
    y = state.to_array()
    p = params

    n_h = state.human_total
    if n_h <= 0.0:
        raise ModelDomainError("jacobian requires N_h > 0")
    m_tot = state.M_v + state.M_v_w
    if m_tot <= 0.0:
        raise ModelDomainError("jacobian requires at least one adult male (M_v + M_v_w > 0)")

    agg = derived_aggregates(state, params)
    lam_h = p.B * (p.C_vh * agg.I_v + p.C_vh_w * agg.I_v_w) / n_h
    lam_v = p.B * p.C_hv * state.I_h / n_h

    k = kernels
    humans = (k.S_H, k.I_H, k.J_H, k.R_H)
    iv_cols = (k.I_VF, k.I_VFP)
    ivw_cols = (k.I_VF_W, k.I_VFP_S, k.I_VFP_W)

    J = np.zeros((18, 18))

    # Human rows: force of infection lam_h depends on N_h and the infected
    # vector totals.
    for j in humans:
        J[k.S_H, j] = p.b_h + lam_h * state.S_h / n_h
        J[k.I_H, j] = -(1.0 - p.alpha) * lam_h * state.S_h / n_h
        J[k.J_H, j] = -p.alpha * lam_h * state.S_h / n_h
    J[k.S_H, k.S_H] += -(lam_h + p.mu_h)
    J[k.I_H, k.S_H] += (1.0 - p.alpha) * lam_h
    J[k.I_H, k.I_H] += -(p.mu_h + p.gamma)
    J[k.J_H, k.S_H] += p.alpha * lam_h
    J[k.J_H, k.J_H] += -(p.mu_h + p.theta)
    for j in iv_cols:
        coeff = p.B * p.C_vh * state.S_h / n_h
        J[k.S_H, j] = -coeff
        J[k.I_H, j] = (1.0 - p.alpha) * coeff
        J[k.J_H, j] = p.alpha * coeff
    for j in ivw_cols:
        coeff = p.B * p.C_vh_w * state.S_h / n_h
        J[k.S_H, j] = -coeff
        J[k.I_H, j] = (1.0 - p.alpha) * coeff
        J[k.J_H, j] = p.alpha * coeff
    J[k.R_H, k.I_H] = p.gamma
    J[k.R_H, k.J_H] = p.theta
    J[k.R_H, k.R_H] = -p.mu_h

    # Males: linear in the aquatic stages.
    J[k.M_V_W, k.A_W] = p.psi * p.b_m
    J[k.M_V_W, k.M_V_W] = -p.mu_m_w
    J[k.M_V, k.A] = p.psi * p.b_m
    J[k.M_V, k.M_V] = -p.mu_m

    # Female rows all share the lam_v*X pattern; its human-column
    # derivatives carry sign +1 for a +lam_v*X term and -1 for -lam_v*X.
    dlamv_dIh = p.B * p.C_hv * (n_h - state.I_h) / n_h**2

    def infection_term(row: int, x_value: float, sign: float) -> None:
        J[row, k.I_H] += sign * x_value * dlamv_dIh
        for j in (k.S_H, k.J_H, k.R_H):
            J[row, j] += -sign * x_value * lam_v / n_h

    # Non-pregnant females.
    J[k.S_VF_W, k.A_W] = p.psi * p.b_f
    J[k.S_VF_W, k.S_VF_W] = -(lam_v + p.sigma + p.mu_f_w)
    infection_term(k.S_VF_W, state.S_vf_w, -1.0)

    J[k.S_VF, k.A] = p.psi * p.b_f
    J[k.S_VF, k.S_VF] = -(lam_v + p.sigma + p.mu_f)
    infection_term(k.S_VF, state.S_vf, -1.0)

    J[k.I_VF_W, k.S_VF_W] = lam_v
    J[k.I_VF_W, k.I_VF_W] = -(p.sigma + p.mu_f_w)
    infection_term(k.I_VF_W, state.S_vf_w, +1.0)

    J[k.I_VF, k.S_VF] = lam_v
    J[k.I_VF, k.I_VF] = -(p.sigma + p.mu_f)
    infection_term(k.I_VF, state.S_vf, +1.0)

    # Pregnant females; mating fractions m, m_w depend on the male split.
    dm_dMvw = -agg.m / m_tot
    dm_dMv = agg.m_w / m_tot

    J[k.S_VFP_W, k.S_VF_W] = p.sigma
    J[k.S_VFP_W, k.S_VFP_W] = -(lam_v + p.mu_f_w)
    infection_term(k.S_VFP_W, state.S_vfp_w, -1.0)

    J[k.S_VFP, k.S_VF] = p.sigma * agg.m
    J[k.S_VFP, k.S_VFP] = -(lam_v + p.mu_f)
    J[k.S_VFP, k.M_V_W] = p.sigma * state.S_vf * dm_dMvw
    J[k.S_VFP, k.M_V] = p.sigma * state.S_vf * dm_dMv
    infection_term(k.S_VFP, state.S_vfp, -1.0)

    J[k.S_VFP_S, k.S_VF] = p.sigma * agg.m_w
    J[k.S_VFP_S, k.S_VFP_S] = -(lam_v + p.mu_f)
    J[k.S_VFP_S, k.M_V_W] = -p.sigma * state.S_vf * dm_dMvw
    J[k.S_VFP_S, k.M_V] = -p.sigma * state.S_vf * dm_dMv
    infection_term(k.S_VFP_S, state.S_vfp_s, -1.0)

    J[k.I_VFP, k.I_VF] = p.sigma * agg.m
    J[k.I_VFP, k.S_VFP] = lam_v
    J[k.I_VFP, k.I_VFP] = -p.mu_f
    J[k.I_VFP, k.M_V_W] = p.sigma * state.I_vf * dm_dMvw
    J[k.I_VFP, k.M_V] = p.sigma * state.I_vf * dm_dMv
    infection_term(k.I_VFP, state.S_vfp, +1.0)

    J[k.I_VFP_S, k.I_VF] = p.sigma * agg.m_w
    J[k.I_VFP_S, k.S_VFP_S] = lam_v
    J[k.I_VFP_S, k.I_VFP_S] = -p.mu_f_w
    J[k.I_VFP_S, k.M_V_W] = -p.sigma * state.I_vf * dm_dMvw
    J[k.I_VFP_S, k.M_V] = -p.sigma * state.I_vf * dm_dMv
    infection_term(k.I_VFP_S, state.S_vfp_s, +1.0)

    J[k.I_VFP_W, k.I_VF_W] = p.sigma
    J[k.I_VFP_W, k.S_VFP_W] = lam_v
    J[k.I_VFP_W, k.I_VFP_W] = -p.mu_f_w
    infection_term(k.I_VFP_W, state.S_vfp_w, +1.0)

    # Aquatic stages; the egg-laying rates carry the logistic crowding term.
    preg = state.S_vfp + state.I_vfp
    preg_w = state.S_vfp_w + state.I_vfp_w

    J[k.A_W, k.S_VFP_W] = agg.eta_w * p.v_w
    J[k.A_W, k.I_VFP_W] = agg.eta_w * p.v_w
    J[k.A_W, k.A_W] = -(p.psi + p.mu_a) - (p.phi_w / p.K_a) * p.v_w * preg_w
    J[k.A_W, k.A] = -(p.phi_w / p.K_a) * p.v_w * preg_w

    J[k.A, k.S_VFP] = agg.eta
    J[k.A, k.I_VFP] = agg.eta
    J[k.A, k.S_VFP_W] = agg.eta_w * p.v
    J[k.A, k.I_VFP_W] = agg.eta_w * p.v
    crowd_pull = (p.phi / p.K_a) * preg + (p.phi_w / p.K_a) * p.v * preg_w
    J[k.A, k.A_W] = -crowd_pull
    J[k.A, k.A] = -crowd_pull - (p.psi + p.mu_a)

    return J


@dataclass(frozen=True)
class BoundCheck:
    """One inequality of the epidemiological domain, with its slack (bound - value)."""

    name: str
    value: float
    bound: float
    slack: float
    passed: bool


@dataclass(frozen=True)
class DomainReport:
    """Membership report against the forward-invariant domain.

    One entry per population bound plus a non-negativity entry whose value
    is the most negative field (slack equals that value).
    """

    checks: tuple[BoundCheck, ...]
    negative_fields: tuple[str, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_checks(self) -> tuple[BoundCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)


def domain_bounds(params: ModelParameters) -> dict[str, float]:
    """Upper bounds of the invariant domain for each vector population group."""
    p = params
    return {
        "aquatic": p.K_a,
        "males": p.b_m * p.psi / p.mu_m * p.K_a,
        "nonpregnant_females": p.b_f * p.psi / (p.sigma + p.mu_f) * p.K_a,
        "pregnant_females": p.b_f * p.sigma / (p.sigma + p.mu_f) * p.psi / p.mu_f * p.K_a,
    }


def _group_totals(state: StateVector) -> dict[str, float]:
    return {
        "aquatic": state.A + state.A_w,
        "males": state.M_v + state.M_v_w,
        "nonpregnant_females": state.S_vf + state.S_vf_w + state.I_vf + state.I_vf_w,
        "pregnant_females": (state.S_vfp + state.S_vfp_w + state.S_vfp_s
                             + state.I_vfp + state.I_vfp_w + state.I_vfp_s),
    }


def in_domain(state: StateVector, params: ModelParameters, tol: float = 1e-6) -> DomainReport:
    """Check membership in the forward-invariant domain (a report, never an exception).

    Each population bound passes when value <= bound*(1+tol); non-negativity
    passes when every field is >= -tol times the state's one-norm, matching
    the round-off clamp convention.
    """
    totals = _group_totals(state)
    bounds = domain_bounds(params)
    checks = []
    for name, bound in bounds.items():
        value = totals[name]
        checks.append(BoundCheck(
            name=name, value=value, bound=bound, slack=bound - value,
            passed=value <= bound * (1.0 + tol),
        ))

    arr = state.to_array()
    one_norm = float(np.sum(np.abs(arr)))
    min_value = float(arr.min())
    negative = tuple(STATE_NAMES[i] for i in np.flatnonzero(arr < -tol * one_norm))
    checks.append(BoundCheck(
        name="nonnegative", value=min_value, bound=0.0, slack=min_value,
        passed=len(negative) == 0,
    ))
    return DomainReport(checks=tuple(checks), negative_fields=negative, tol=tol)


def scale_state(state: StateVector, factor: float) -> StateVector:
    """Multiply every compartment by ``factor`` (population rescaling)."""
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return StateVector.from_array(state.to_array() * factor)


def minimal_carrying_capacity(state: StateVector, params: ModelParameters) -> float:
    """Smallest K_a for which ``state`` satisfies every domain bound.

    Only the rate parameters of ``params`` are used; its K_a is ignored.
    Used by the default-K_a rule (twice this value), which keeps the initial
    condition inside the invariant domain with the egg-laying rates positive.
    """
    p = params
    totals = _group_totals(state)
    per_unit = {
        "aquatic": 1.0,
        "males": p.b_m * p.psi / p.mu_m,
        "nonpregnant_females": p.b_f * p.psi / (p.sigma + p.mu_f),
        "pregnant_females": p.b_f * p.sigma / (p.sigma + p.mu_f) * p.psi / p.mu_f,
    }
    return max(totals[name] / per_unit[name] for name in totals)


def clamp_roundoff_negatives(values: np.ndarray) -> np.ndarray:
    """Zero out negatives smaller than the round-off threshold; reject larger ones.

    Raises:
        ValueError: a component is genuinely negative (beyond round-off),
            named by compartment.
    """
    arr = np.array(values, dtype=float)
    floor = -NEGATIVE_CLAMP_REL * float(np.sum(np.abs(arr)))
    bad = np.flatnonzero(arr < floor)
    if bad.size:
        raise ValueError(
            f"compartment {STATE_NAMES[bad[0]]} is negative beyond round-off: {arr[bad[0]]}")
    arr[arr < 0.0] = 0.0
    return arr


def state_fields() -> tuple[str, ...]:
    """Names of the state fields in serialization order."""
    return STATE_NAMES
