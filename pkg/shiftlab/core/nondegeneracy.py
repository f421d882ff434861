"""
Derivative polynomials P_n and the nondegeneracy functions Q_n.

P_n expresses x^(n+1)(t0) for a solution of x' = f(t, x) through the partial
derivatives zeta_{i,j} = D_t^i D_x^j f(t0, x0):

    P_0 = zeta_{0,0}
    P_n = sum over (k, m) of dP_{n-1}/dzeta_{k,m} * (zeta_{k+1,m} + zeta_{0,0} zeta_{k,m+1})

For a delay equation the partials also depend on the delayed value v, and
Q_n(v) is the v-derivative of P_n through that substitution.
"""
import logging
import threading
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Tuple

from ..errors import CapExceeded, JetTooShort, OracleGap
from .series import TruncatedSeries

logger = logging.getLogger(__name__)

Var = Tuple[int, int]
Monomial = Tuple[Tuple[Var, int], ...]
Oracle = Callable[[int, int, float], Tuple[float, float]]

DEFAULT_CAP = 8
QN_THRESHOLD = 1e-10

_SUBSCRIPTS = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")


def _monomial(powers: Mapping[Var, int]) -> Monomial:
    return tuple(sorted((v, e) for v, e in powers.items() if e))


def _monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    powers: Dict[Var, int] = defaultdict(int)
    for v, e in a + b:
        powers[v] += e
    return _monomial(powers)


class IndexedPolynomial:
    """Integer polynomial in the variables zeta_{i,j}."""

    def __init__(self, n: int, terms: Optional[Mapping[Monomial, int]] = None):
        self.n = n
        self.terms: Dict[Monomial, int] = {m: c for m, c in (terms or {}).items() if c}

    @classmethod
    def variable(cls, n: int, var: Var) -> "IndexedPolynomial":
        return cls(n, {((var, 1),): 1})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IndexedPolynomial) and self.terms == other.terms

    def __add__(self, other: "IndexedPolynomial") -> "IndexedPolynomial":
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return IndexedPolynomial(max(self.n, other.n), terms)

    def __mul__(self, other: "IndexedPolynomial") -> "IndexedPolynomial":
        terms: Dict[Monomial, int] = defaultdict(int)
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                terms[_monomial_mul(ma, mb)] += ca * cb
        return IndexedPolynomial(max(self.n, other.n), terms)

    def variables(self) -> List[Var]:
        return sorted({v for m in self.terms for v, _ in m})

    def partial(self, var: Var) -> "IndexedPolynomial":
        terms: Dict[Monomial, int] = defaultdict(int)
        for m, c in self.terms.items():
            powers = dict(m)
            e = powers.get(var, 0)
            if e == 0:
                continue
            powers[var] = e - 1
            terms[_monomial(powers)] += c * e
        return IndexedPolynomial(self.n, terms)

    def evaluate(self, values: Mapping[Var, float]) -> float:
        total = 0.0
        for m, c in self.terms.items():
            prod = float(c)
            for v, e in m:
                prod *= values[v] ** e
            total += prod
        return total

    @staticmethod
    def _sort_key(m: Monomial):
        expanded = [v for v, e in m for _ in range(e)]
        return (len(expanded), expanded)

    def render(self, style: str = "ascii") -> str:
        """
        Text form ordered by degree, then lexicographically.

        style "ascii" gives `z10 + z00*z01`; style "zeta" gives `ζ₁₀ + ζ₀₀ζ₀₁`.
        """
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=self._sort_key):
            c = self.terms[m]
            factors = []
            for (i, j), e in m:
                if style == "zeta":
                    name = f"ζ{i}{j}".translate(_SUBSCRIPTS) + (f"^{e}" if e > 1 else "")
                else:
                    name = f"z{i}{j}" + (f"^{e}" if e > 1 else "")
                factors.append(name)
            sep = "" if style == "zeta" else "*"
            body = sep.join(factors)
            mag = abs(c)
            text = body if mag == 1 else f"{mag}{sep}{body}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, text))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out

    def __repr__(self) -> str:
        return f"IndexedPolynomial(n={self.n}, {self.render()})"


# Memo of P_0..P_k; guarded for concurrent first use.
_pn_cache: List[IndexedPolynomial] = []
_pn_lock = threading.Lock()


def _next_pn(prev: IndexedPolynomial) -> IndexedPolynomial:
    n = prev.n + 1
    z00 = IndexedPolynomial.variable(n, (0, 0))
    out = IndexedPolynomial(n)
    for k, m in prev.variables():
        shift = IndexedPolynomial.variable(n, (k + 1, m)) + z00 * IndexedPolynomial.variable(n, (k, m + 1))
        out = out + prev.partial((k, m)) * shift
    out.n = n
    return out


def build_pn(n: int, cap: int = DEFAULT_CAP) -> IndexedPolynomial:
    """
    Exact integer polynomial P_n.

    Raises:
        CapExceeded: n above the configured cap
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n > cap:
        raise CapExceeded(f"P_{n} requested, cap is {cap}")
    if n < len(_pn_cache):
        return _pn_cache[n]
    with _pn_lock:
        if not _pn_cache:
            _pn_cache.append(IndexedPolynomial.variable(0, (0, 0)))
        while len(_pn_cache) <= n:
            _pn_cache.append(_next_pn(_pn_cache[-1]))
            logger.debug(f"built P_{len(_pn_cache) - 1} with {len(_pn_cache[-1].terms)} terms")
    return _pn_cache[n]


class PartialsOracle:
    """
    Oracle backed by a table {(i, j): (value_fn, dv_fn)}.

    value_fn(v) is D_t^i D_x^j f(t0, x0, v) and dv_fn(v) its v-derivative.
    Indices absent from the table raise OracleGap unless `default_zero`.
    """

    def __init__(self, table: Mapping[Var, Tuple[Callable[[float], float], Callable[[float], float]]],
                 default_zero: bool = False):
        self.table = dict(table)
        self.default_zero = default_zero

    def __call__(self, i: int, j: int, v: float) -> Tuple[float, float]:
        entry = self.table.get((i, j))
        if entry is None:
            if self.default_zero:
                return 0.0, 0.0
            raise OracleGap(f"no partial D_t^{i} D_x^{j} f supplied")
        value_fn, dv_fn = entry
        return float(value_fn(v)), float(dv_fn(v))


def _query(oracle: Oracle, var: Var, v: float) -> Tuple[float, float]:
    try:
        result = oracle(var[0], var[1], v)
    except (KeyError, IndexError, LookupError) as e:
        raise OracleGap(f"partial {var} unavailable: {e}") from e
    if result is None:
        raise OracleGap(f"partial {var} unavailable")
    return result


def evaluate_qn(oracle: Oracle, v: float, n: int, cap: int = DEFAULT_CAP) -> float:
    """
    Q_n(v) = sum over zeta_{i,j} in P_n of dP_n/dzeta_{i,j} * D_v D_t^i D_x^j f.

    Args:
        oracle: (i, j, v) -> (D_t^i D_x^j f, D_v D_t^i D_x^j f) at (t0, x0, v)
        v: delayed-argument value
        n: index

    Raises:
        OracleGap: a required partial is missing
    """
    pn = build_pn(n, cap)
    variables = pn.variables()
    values: Dict[Var, float] = {}
    dvs: Dict[Var, float] = {}
    for var in variables:
        values[var], dvs[var] = _query(oracle, var, v)
    return sum(pn.partial(var).evaluate(values) * dvs[var] for var in variables)


def ode_derivative(n: int, values: Mapping[Var, float], cap: int = DEFAULT_CAP) -> float:
    """x^(n+1)(t0) for x' = f(t, x), given zeta_{i,j} = D_t^i D_x^j f(t0, x0)."""
    pn = build_pn(n, cap)
    try:
        return pn.evaluate(values)
    except KeyError as e:
        raise OracleGap(f"partial {e.args[0]} missing") from e


@dataclass(frozen=True)
class HypothesisCheck:
    holds: bool
    witness: Optional[Tuple[int, float]]
    exhaustive: bool = False

    def to_dict(self) -> Dict[str, object]:
        return {
            "holds": self.holds,
            "witness": list(self.witness) if self.witness else None,
            "exhaustive": self.exhaustive,
        }


def check_nondegeneracy_hypothesis(oracle: Oracle, v_samples: Iterable[float], n_max: int,
                                   cap: int = DEFAULT_CAP) -> HypothesisCheck:
    """
    Search for some Q_n(v) with |Q_n(v)| > 1e-10, n <= n_max, v in v_samples.

    A negative answer only covers the samples and is never a certificate.
    """
    samples = list(v_samples)
    if not samples:
        raise ValueError("v_samples must be nonempty")
    for n in range(n_max + 1):
        for v in samples:
            q = evaluate_qn(oracle, v, n, cap)
            if abs(q) > QN_THRESHOLD:
                logger.info(f"nondegeneracy holds: Q_{n}({v}) = {q:.6g}")
                return HypothesisCheck(True, (n, float(v)))
    logger.warning(f"Q_n vanished on all {len(samples)} sample(s) for n <= {n_max}; result is not exhaustive")
    return HypothesisCheck(False, None)


@dataclass(frozen=True)
class EtaOrder:
    first_nonzero: int
    m: Optional[int]

    @property
    def admissible(self) -> bool:
        return self.m is not None


def eta_order_condition(jet: TruncatedSeries, tol: float = 1e-12) -> EtaOrder:
    """
    First nonvanishing derivative of eta at its center.

    The condition on eta holds with m when eta^(k)(t0) = 0 for 1 <= k <= 2m and
    eta^(2m+1)(t0) != 0; an even first order gives m = None.
    """
    for k in range(1, jet.order + 1):
        if abs(jet.coeffs[k]) > tol:
            return EtaOrder(k, (k - 1) // 2 if k % 2 == 1 else None)
    raise JetTooShort(f"all derivatives of eta up to order {jet.order} vanish")
