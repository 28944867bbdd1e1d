"""
Oracle Registry

Maps statistic ids (`<family>.<name>`) onto oracle functions, with the formula
each id evaluates and the arguments it needs. This is the formula-to-function
index behind `oracle` and `oracle --list`.
"""

import logging
from typing import Any, Callable, Dict, List, Tuple

from pydantic import BaseModel, ConfigDict

from . import ou_oracle, scalar_gauss, wiener_oracle
from .constants import BridgeKind
from .contracts import BridgeSpec, GaussianMoment, ProcessParams, RegionPoint, TimeChange
from .errors import RegistryError

logger = logging.getLogger(__name__)

# Arguments that fall back to these values when not given
DEFAULT_ARGS: Dict[str, Any] = {"a": 0.0, "T": 1.0, "sigma": 1.0}


class OracleEntry(BaseModel):
    """One registered statistic."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    statistic: str
    formula: str
    args: Tuple[str, ...]
    func: Callable[[Dict[str, Any]], Any]

    def evaluate(self, values: Dict[str, Any]) -> Any:
        given = {k: v for k, v in values.items() if v is not None}
        missing = [name for name in self.args if name not in given and name not in DEFAULT_ARGS]
        if missing:
            raise RegistryError(f"statistic '{self.statistic}' needs --{', --'.join(missing)}")
        resolved = {name: given.get(name, DEFAULT_ARGS.get(name)) for name in self.args}
        if "kind" in resolved:
            resolved["kind"] = BridgeKind(resolved["kind"])
        logger.debug(f"evaluating {self.statistic} with {resolved}")
        return self.func(resolved)


# =============================================================================
# ARGUMENT HELPERS
# =============================================================================

def _moment(v: Dict[str, Any]) -> GaussianMoment:
    return GaussianMoment(mean=v["mean"], variance=v["var"])


def _spec(v: Dict[str, Any]) -> BridgeSpec:
    return BridgeSpec(a=v["a"], b=v["b"], T=v["T"])


def _tc(v: Dict[str, Any]) -> TimeChange:
    return TimeChange(params=ProcessParams(q=v["q"], sigma=v.get("sigma", DEFAULT_ARGS["sigma"])), T=v["T"])


def _point(v: Dict[str, Any]) -> RegionPoint:
    return RegionPoint(b_tilde=v["b_tilde"], d_tilde=v["d_tilde"])


def _wiener_end(v: Dict[str, Any]) -> float:
    return wiener_oracle.shift_endpoint(v["a"], v["b"])


def _ou_end(v: Dict[str, Any]) -> float:
    return ou_oracle.ou_effective_endpoint(v["a"], v["b"], _tc(v))


# =============================================================================
# ENTRIES
# =============================================================================

_ENTRIES: List[OracleEntry] = [
    # scalar Gaussian laws
    OracleEntry(statistic="scalar.std_normal_cdf", formula="Phi(x)", args=("x",),
                func=lambda v: scalar_gauss.std_normal_cdf(v["x"])),
    OracleEntry(statistic="scalar.folded_mean", formula="E|Y|, Y ~ N(mean, var)", args=("mean", "var"),
                func=lambda v: scalar_gauss.folded_mean(_moment(v))),
    OracleEntry(statistic="scalar.tail", formula="P(|Y| > x), Y ~ N(mean, var)", args=("mean", "var", "x"),
                func=lambda v: scalar_gauss.tail(_moment(v), v["x"])),

    # Wiener bridges
    OracleEntry(statistic="wiener.bridge_mean", formula="a + (b - a) t / T", args=("t", "a", "b", "T"),
                func=lambda v: wiener_oracle.bridge_mean(v["t"], _spec(v))),
    OracleEntry(statistic="wiener.bridge_cov", formula="min(s,t)(T - max(s,t)) / T", args=("s", "t", "T"),
                func=lambda v: wiener_oracle.bridge_cov(v["s"], v["t"], v["T"])),
    OracleEntry(statistic="wiener.process_bridge_cov", formula="Cov(W_t^kind, W_t)", args=("kind", "t", "T"),
                func=lambda v: wiener_oracle.process_bridge_cov(v["kind"], v["t"], v["T"])),
    OracleEntry(statistic="wiener.corr_with_process",
                formula="sqrt((T-t)/T) (av, st); sqrt(T(T-t))/t log(T/(T-t)) (ir)", args=("kind", "t", "T"),
                func=lambda v: wiener_oracle.corr_with_process(v["kind"], v["t"], v["T"])),
    OracleEntry(statistic="wiener.deviation_mean", formula="E(W_t - W_t^kind) = (a - b) t / T",
                args=("kind", "t", "a", "b", "T"),
                func=lambda v: wiener_oracle.deviation_law(v["kind"], v["t"], BridgeSpec(b=_wiener_end(v), T=v["T"])).mean),
    OracleEntry(statistic="wiener.deviation_var", formula="t^2/T (av, st); 2t - t^2/T + 2(T-t) log((T-t)/T) (ir)",
                args=("kind", "t", "a", "b", "T"),
                func=lambda v: wiener_oracle.deviation_law(v["kind"], v["t"], BridgeSpec(b=_wiener_end(v), T=v["T"])).variance),
    OracleEntry(statistic="wiener.cond_deviation_mean", formula="E(W_t - W_t^kind | W_T = d)",
                args=("kind", "t", "a", "b", "d", "T"),
                func=lambda v: wiener_oracle.cond_deviation_law(v["kind"], v["t"], _wiener_end(v), v["d"], v["T"]).mean),
    OracleEntry(statistic="wiener.cond_deviation_var", formula="Var(W_t - W_t^kind | W_T = d)",
                args=("kind", "t", "a", "b", "d", "T"),
                func=lambda v: wiener_oracle.cond_deviation_law(v["kind"], v["t"], _wiener_end(v), v["d"], v["T"]).variance),
    OracleEntry(statistic="wiener.expected_abs_dev", formula="E|W_t - W_t^kind|", args=("kind", "t", "a", "b", "T"),
                func=lambda v: wiener_oracle.expected_abs_dev(v["kind"], v["t"], _wiener_end(v), v["T"])),
    OracleEntry(statistic="wiener.expected_integrated_abs_dev", formula="E int_0^T |W_t - W_t^kind| dt",
                args=("kind", "a", "b", "T"),
                func=lambda v: wiener_oracle.expected_integrated_abs_dev(v["kind"], _wiener_end(v), v["T"])),
    OracleEntry(statistic="wiener.expected_quad_dev",
                formula="(T/3)(T + b^2) (av, st); (T/3)(T/2 + b^2) (ir)", args=("kind", "a", "b", "T"),
                func=lambda v: wiener_oracle.expected_quad_dev(v["kind"], _wiener_end(v), v["T"])),
    OracleEntry(statistic="wiener.expected_cond_quad_dev", formula="E(int_0^T (W_t - W_t^kind)^2 dt | W_T = d)",
                args=("kind", "a", "b", "d", "T"),
                func=lambda v: wiener_oracle.expected_cond_quad_dev(v["kind"], _wiener_end(v), v["d"], v["T"])),
    OracleEntry(statistic="wiener.region", formula="ordering of the conditional quadratic deviations at (b~, d~)",
                args=("b_tilde", "d_tilde"),
                func=lambda v: wiener_oracle.region_classify(_point(v)).tag),
    OracleEntry(statistic="wiener.boundary_distance", formula="distance along d~ to the nearest region boundary",
                args=("b_tilde", "d_tilde"),
                func=lambda v: wiener_oracle.boundary_distance(_point(v))),

    # Ornstein-Uhlenbeck bridges
    OracleEntry(statistic="ou.kappa", formula="(1 - e^{-2qt}) / (2q)", args=("t", "q"),
                func=lambda v: ou_oracle.kappa(v["t"], v["q"])),
    OracleEntry(statistic="ou.kappa_star", formula="kappa(t) kappa(T) / (kappa(T) - kappa(t))", args=("t", "q", "T"),
                func=lambda v: ou_oracle.kappa_star(v["t"], _tc(v))),
    OracleEntry(statistic="ou.t_star", formula="t* in (0, T) with kappa*_T(t*) = T", args=("q", "T"),
                func=lambda v: ou_oracle.t_star(_tc(v))),
    OracleEntry(statistic="ou.bridge_mean", formula="a sinh(q(T-t))/sinh(qT) + b sinh(qt)/sinh(qT)",
                args=("t", "a", "b", "q", "T"),
                func=lambda v: ou_oracle.ou_bridge_mean(v["t"], v["a"], v["b"], _tc(v))),
    OracleEntry(statistic="ou.bridge_cov", formula="(sigma^2/q) sinh(qs) sinh(q(T-t)) / sinh(qT)",
                args=("s", "t", "q", "sigma", "T"),
                func=lambda v: ou_oracle.ou_bridge_cov(v["s"], v["t"], _tc(v))),
    OracleEntry(statistic="ou.cov_with_process", formula="Cov(U_t^kind, U_t)", args=("kind", "t", "q", "sigma", "T"),
                func=lambda v: ou_oracle.ou_cov_with_process(v["kind"], v["t"], _tc(v))),
    OracleEntry(statistic="ou.corr_with_process", formula="Corr(U_t^kind, U_t)", args=("kind", "t", "q", "sigma", "T"),
                func=lambda v: ou_oracle.ou_corr_with_process(v["kind"], v["t"], _tc(v))),
    OracleEntry(statistic="ou.deviation_mean", formula="-(b - a e^{qT}) sinh(qt) / sinh(qT)",
                args=("kind", "t", "a", "b", "q", "sigma", "T"),
                func=lambda v: ou_oracle.ou_deviation_law(v["kind"], v["t"], _ou_end(v), _tc(v)).mean),
    OracleEntry(statistic="ou.deviation_var", formula="Var(U_t - U_t^kind)",
                args=("kind", "t", "a", "b", "q", "sigma", "T"),
                func=lambda v: ou_oracle.ou_deviation_law(v["kind"], v["t"], _ou_end(v), _tc(v)).variance),
    OracleEntry(statistic="ou.st_deviation_gap", formula="2(sigma^2/q) sinh(q(T-t))(1 - cosh(qt)) / sinh(qT)",
                args=("t", "q", "sigma", "T"),
                func=lambda v: ou_oracle.st_deviation_gap(v["t"], _tc(v))),
    OracleEntry(statistic="ou.expected_quad_dev", formula="E int_0^T (U_t - U_t^kind)^2 dt (with the ST mean term)",
                args=("kind", "a", "b", "q", "sigma", "T"),
                func=lambda v: ou_oracle.ou_expected_quad_dev(v["kind"], _ou_end(v), _tc(v))),
    OracleEntry(statistic="ou.expected_quad_dev_expanded",
                formula="expanded closed form (ST without the b^2 mean term)",
                args=("kind", "a", "b", "q", "sigma", "T"),
                func=lambda v: ou_oracle.ou_expected_quad_dev_expanded(v["kind"], _ou_end(v), _tc(v))),
    OracleEntry(statistic="ou.st_mean_term", formula="(b^2/(4q)) (sinh(2qT) - 2qT) / sinh^2(qT)",
                args=("a", "b", "q", "sigma", "T"),
                func=lambda v: ou_oracle.st_mean_term(_ou_end(v), _tc(v))),
    OracleEntry(statistic="ou.j_integral", formula="int_0^x (1 - e^{-2y}) log(sinh(x)/sinh(y)) dy", args=("x",),
                func=lambda v: ou_oracle.j_integral(v["x"])),
    OracleEntry(statistic="ou.wiener_l2_gap", formula="E(U_t - W_t)^2, sigma = 1, shared driver", args=("t", "q"),
                func=lambda v: ou_oracle.ou_wiener_l2_gap(v["t"], v["q"])),
    OracleEntry(statistic="ou.expected_integrated_abs_dev", formula="E int_0^T |U_t - U_t^kind| dt",
                args=("kind", "a", "b", "q", "sigma", "T"),
                func=lambda v: ou_oracle.ou_expected_integrated_abs_dev(v["kind"], _ou_end(v), _tc(v))),
]

REGISTRY: Dict[str, OracleEntry] = {entry.statistic: entry for entry in _ENTRIES}


def lookup(statistic: str) -> OracleEntry:
    """Registry entry for a statistic id."""
    try:
        return REGISTRY[statistic]
    except KeyError:
        raise RegistryError(f"unknown statistic id '{statistic}' (see `oracle --list`)") from None


def evaluate(statistic: str, values: Dict[str, Any]) -> Any:
    return lookup(statistic).evaluate(values)


def listing() -> List[Tuple[str, str, Tuple[str, ...]]]:
    """(id, formula, args) for every registered statistic, sorted by id."""
    return [(e.statistic, e.formula, e.args) for e in sorted(_ENTRIES, key=lambda e: e.statistic)]
