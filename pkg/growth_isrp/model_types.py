"""
This module defines the enums and TypedDict records shared by the growth_isrp modules.

Classes:
    Parent: The four parent growth models.
    Variation: Tag of a catalog row (which parameter varies and how).
    ModelId: A (parent, variation) pair identifying one catalog entry.
    ParameterSet: Named real parameters of a growth model.
    TimeGrid: A uniform grid of observation times.
    Asymptote: Limit classification of a size profile.
    CatalogEntry: Serializable description of one catalog entry.
    MeanTriplet: Consecutive mean sizes fed to the ISRP estimators.
    IsrpEstimate: One interval of an ISRP profile.
    IsrpSeries: A whole ISRP profile.
    KoopmanCov: Stationary lag-correlated covariance parameters.
    SimulationPlan: Full description of a simulation study.
    ReplicationSummary: Per-interval summary of replicated ISRP estimates.
    FitResult: Outcome of a nonlinear least-squares fit.
    BootstrapReport: AIC samples and win counts of a bootstrap model comparison.
    TrajectoryPanel: Trajectory matrix together with its ids and times.
    StageFit: One ranked candidate of a selection stage.
    SelectionReport: Outcome of the two-stage identification.
"""
from enum import StrEnum
from typing import Literal, NamedTuple, NotRequired, TypedDict

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]


class Parent(StrEnum):
    """The four parent models every catalog entry is derived from."""

    EXPONENTIAL = "exponential"
    LOGISTIC = "logistic"
    THETA_LOGISTIC = "theta_logistic"
    CONFINED_EXPONENTIAL = "confined_exponential"


class Variation(StrEnum):
    """
    Tag of a catalog row.

    Rate tags (the r column) are shared between parents; the same tag under two parents names
    two different catalog rows.
    """

    CONSTANT_PARAMS = "constant_params"
    POWER_RATE = "power_rate"
    LINEAR_INCREASING_RATE = "linear_increasing_rate"
    LINEAR_DECAYING_RATE = "linear_decaying_rate"
    EXP_DECAY_RATE = "exp_decay_rate"
    EXP_GROWTH_RATE = "exp_growth_rate"
    HYPERBOLIC_RATE = "hyperbolic_rate"
    SINE_RATE = "sine_rate"
    COSINE_RATE = "cosine_rate"
    RECIPROCAL_RATE = "reciprocal_rate"
    BLOWUP_RATE = "blowup_rate"
    GOMPERTZ_HUMP_RATE = "gompertz_hump_rate"
    DENSITY_LINEAR_RATE = "density_linear_rate"
    LINEAR_K = "linear_k"
    EXP_GROWTH_K = "exp_growth_k"
    EXP_DECAY_K = "exp_decay_k"
    HYPERBOLIC_K = "hyperbolic_k"
    LOGISTIC_REDUCTION = "logistic_reduction"
    GOMPERTZ_LIMIT = "gompertz_limit"
    RICHARDS = "richards"
    KOYA_GOSHU = "koya_goshu"
    EXTENDED_GOMPERTZ = "extended_gompertz"
    VON_BERTALANFFY = "von_bertalanffy"
    GENERALIZED_VON_BERTALANFFY = "generalized_von_bertalanffy"
    GENERALIZED_GOMPERTZ = "generalized_gompertz"
    CRESCENZO_SPINA = "crescenzo_spina"
    SECOND_ORDER_EXP_POLY = "second_order_exp_poly"
    COOPERATION = "cooperation"
    MARUSIC_BAJZER = "marusic_bajzer"


class ModelId(NamedTuple):
    """
    Identifies one catalog entry.

    Attributes:
        parent (Parent): The parent model.
        variation (Variation): The row tag under that parent.
    """

    parent: Parent
    variation: Variation

    def __str__(self) -> str:
        return f"{self.parent}/{self.variation}"


class ParameterSet(TypedDict, total=False):
    """
    Named real parameters. Each catalog entry reads only the names it declares.

    Attributes:
        r0 (float): Initial intrinsic rate (1/time); the constant rate for parents.
        c (float): Variation coefficient; its unit depends on the form.
        omega (float): Angular frequency of periodic forms (1/time).
        K (float): Carrying capacity (size units).
        K0 (float): Initial carrying capacity when K varies with time.
        theta (float): Shape exponent of the theta-logistic family.
        gamma (float): Density exponent of the co-operation model.
        b (float): Decay rate of the hump-shaped rate r0*exp(-b*t)*t^c.
        x0 (float): Size at t = 0.
    """

    r0: float
    c: float
    omega: float
    K: float
    K0: float
    theta: float
    gamma: float
    b: float
    x0: float


class TimeGrid(TypedDict):
    """
    Uniform observation grid t_j = t0 + j*h for j = 0..q-1.

    Attributes:
        t0 (float): First time point.
        h (float): Step, strictly positive.
        q (int): Number of points, at least 3.
    """

    t0: float
    h: float
    q: int


AsymptoteKind = Literal["finite", "zero", "infinity", "minus_infinity"]


class Asymptote(TypedDict):
    """
    Limit of X(t) as t grows.

    Attributes:
        kind (AsymptoteKind): Classification of the limit.
        value (float | None): The limit when kind is "finite" or "zero", else None.
    """

    kind: AsymptoteKind
    value: float | None


class CatalogEntry(TypedDict):
    """
    Plain-data view of one catalog entry, as exported to JSON.

    Attributes:
        parent (str): Parent model name.
        variation (str): Row tag.
        params (list[str]): Parameter names the entry reads.
        table_ref (str): "group.row" coordinate; row 0 is the constant-parameter parent.
        has_closed_form (bool): Whether size() is available.
        label (str): Model identification.
        form (str): The varied parameter written out.
        distribution (bool): Whether the entry is identified as a probability distribution.
        identified_as (str | None): "parent/variation" of the model this row reduces to.
    """

    parent: str
    variation: str
    params: list[str]
    table_ref: str
    has_closed_form: bool
    label: str
    form: str
    distribution: bool
    identified_as: str | None


class MeanTriplet(TypedDict):
    """
    Consecutive mean sizes around interval j.

    Attributes:
        mu_j (float): Mean at t_j.
        mu_j1 (float): Mean at t_j + h.
        mu_j2 (NotRequired[float]): Mean at t_j + 2h; absent for the exponential pair.
        t_j (float): Left time point, measured from the baseline time.
        h (float): Step.
    """

    mu_j: float
    mu_j1: float
    mu_j2: NotRequired[float]
    t_j: float
    h: float


IsrpTarget = Literal["r", "K"]


class IsrpEstimate(TypedDict):
    """
    One interval of an ISRP profile.

    Attributes:
        j (int): Interval number, starting at 1.
        t_j (float): Left time point of the interval on the data grid.
        value (float | None): Estimate of r or K; None when the interval failed.
        variance (float | None): Delta-method variance of the estimate, already divided by n.
        ci_lo (float | None): Lower end of the normal 95% interval.
        ci_hi (float | None): Upper end of the normal 95% interval.
        status (str): "ok" or the name of the error that made the interval fail.
        message (str): Error message for failed intervals, empty otherwise.
    """

    j: int
    t_j: float
    value: float | None
    variance: float | None
    ci_lo: float | None
    ci_hi: float | None
    status: str
    message: str


class IsrpSeries(TypedDict):
    """
    ISRP profile of one target under one parent.

    Attributes:
        parent (str): Parent model assumed to generate the data.
        target (IsrpTarget): "r" or "K".
        theta (float | None): Shape exponent for the theta-logistic parent.
        h (float): Grid step.
        n (int): Number of trajectories the column means were computed from.
        estimates (list[IsrpEstimate]): One record per admissible interval, ordered by j.
    """

    parent: str
    target: IsrpTarget
    theta: float | None
    h: float
    n: int
    estimates: list[IsrpEstimate]


class KoopmanCov(TypedDict):
    """
    Covariance sigma2 * rho^|i-j| between time points i and j.

    Attributes:
        sigma2 (float): Marginal variance, strictly positive.
        rho (float): Lag-one correlation, |rho| < 1.
    """

    sigma2: float
    rho: float


class SimulationPlan(TypedDict):
    """
    A simulation study.

    Attributes:
        model (ModelId): Catalog entry supplying the mean function.
        params (ParameterSet): Its parameters.
        grid (TimeGrid): Observation times.
        n (int): Trajectories per dataset.
        cov (KoopmanCov): Error covariance.
        replications (int): Number of independent datasets.
        seed (int): Master seed; each replication derives its own stream from it.
    """

    model: ModelId
    params: ParameterSet
    grid: TimeGrid
    n: int
    cov: KoopmanCov
    replications: int
    seed: int


class ReplicationSummary(TypedDict):
    """
    Empirical distribution of one interval's estimates across replications.

    Attributes:
        j (int): Interval number.
        t_j (float): Left time point.
        count (int): Replications that produced an estimate.
        failures (int): Replications where the interval failed.
        mean (float): Mean of the estimates.
        variance (float): Sample variance of the estimates.
        skewness (float): Sample skewness of the estimates.
        q025 (float): 2.5% quantile.
        q25 (float): Lower quartile.
        q50 (float): Median.
        q75 (float): Upper quartile.
        q975 (float): 97.5% quantile.
        delta_variance (float | None): Delta-method variance at the true means.
    """

    j: int
    t_j: float
    count: int
    failures: int
    mean: float
    variance: float
    skewness: float
    q025: float
    q25: float
    q50: float
    q75: float
    q975: float
    delta_variance: float | None


class FitResult(TypedDict):
    """
    Outcome of nls_fit.

    Attributes:
        estimates (ParameterSet): Estimated free parameters merged with the fixed ones.
        free (list[str]): Names of the estimated parameters, in fitting order.
        rss (float): Residual sum of squares.
        aic (float): Gaussian AIC counting the error variance as a parameter.
        rmse (float): sqrt(rss / m).
        stderr (dict[str, float]): Standard error per free parameter (nan when unavailable).
        ci (dict[str, tuple[float, float]]): Normal 95% interval per free parameter.
        converged (bool): Whether a stopping rule was met.
        iterations (int): Iterations performed.
        m (int): Number of data points.
        k (int): Number of free parameters.
        message (str): Why the iteration stopped.
    """

    estimates: ParameterSet
    free: list[str]
    rss: float
    aic: float
    rmse: float
    stderr: dict[str, float]
    ci: dict[str, tuple[float, float]]
    converged: bool
    iterations: int
    m: int
    k: int
    message: str


class BootstrapReport(TypedDict):
    """
    Result of bootstrap_select.

    Attributes:
        B (int): Number of bootstrap replicates.
        seed (int): Master seed.
        labels (list[str]): Candidate labels in input order.
        aic_samples (dict[str, list[float | None]]): AIC per replicate; None where the fit failed.
        wins (dict[str, int]): Replicates where the candidate had the minimum AIC.
        failures (int): Replicates where every candidate failed.
    """

    B: int
    seed: int
    labels: list[str]
    aic_samples: dict[str, list[float | None]]
    wins: dict[str, int]
    failures: int


class TrajectoryPanel(TypedDict):
    """
    A trajectory matrix with its row ids and column times.

    Attributes:
        ids (list[str]): One id per individual (row).
        times (FloatArray): Column times, uniformly spaced.
        values (FloatArray): n x q matrix of sizes.
    """

    ids: list[str]
    times: FloatArray
    values: FloatArray


class StageFit(TypedDict):
    """
    One ranked candidate of a selection stage.

    Attributes:
        label (str): Rate form name or catalog label.
        key (str): Rate form tag or "parent/variation".
        fixed (dict[str, float]): Parameters held fixed during the fit.
        result (FitResult | None): The fit; None when every start failed.
        delta_aic (float | None): AIC minus the best AIC of the stage.
        status (str): "ok" or the reason the candidate has no fit.
    """

    label: str
    key: str
    fixed: dict[str, float]
    result: FitResult | None
    delta_aic: float | None
    status: str


class SelectionReport(TypedDict):
    """
    Outcome of the two-stage identification.

    Attributes:
        parent (str): Parent model the ISRP profile was computed under.
        isrp_stage (list[StageFit]): Rate forms fitted to the profile, best first.
        model_stage (list[StageFit]): Catalog models fitted to the mean sizes, best first.
        chosen (str): "parent/variation" of the best model.
        strength (str): "decisive" or "weak" preference over the runner-up, "uncontested" for a single fit.
        no_variation (bool): Whether the constant form is within 2 AIC units of the best form.
        narrative (list[str]): Decisions taken, in order.
    """

    parent: str
    isrp_stage: list[StageFit]
    model_stage: list[StageFit]
    chosen: str
    strength: str
    no_variation: bool
    narrative: list[str]
