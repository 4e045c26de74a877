"""Exact finite joint distributions and entropy/mutual-information measures.

Probabilities are ``fractions.Fraction`` end to end; floating point enters
only through ``math.log2``.  Every measure is therefore a sum of terms
``p * log2(ratio)`` where both ``p`` and ``ratio`` are exact rationals, which
keeps conditional decompositions free of drift.

Conventions:
  * ``0 * log(1/0) = 0`` (outcomes with zero conditional mass are skipped);
  * mutual information is clamped to ``0.0`` when the float residue is a
    rounding artifact in ``(-1e-12, 0)``; anything more negative raises,
    because it would indicate a real bug rather than rounding.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

#: Raw mutual-information sums below this are treated as rounding residue.
NEGATIVE_RESIDUE = 1e-12

Outcome = tuple[Any, ...]


def _as_fraction(w: Any) -> Fraction:
    if isinstance(w, Fraction):
        return w
    if isinstance(w, int):
        return Fraction(w)
    raise TypeError(f"weights must be exact rationals, got {type(w).__name__}")


@dataclass(frozen=True)
class JointDistribution:
    """Probability mass over tuples of named discrete variables.

    ``variables`` gives the coordinate order of every outcome tuple.
    ``outcomes`` lists ``(value_tuple, weight)`` pairs with positive exact
    weights summing to exactly 1.
    """

    variables: tuple[str, ...]
    outcomes: tuple[tuple[Outcome, Fraction], ...]

    def __post_init__(self):
        if not self.variables:
            raise ValueError("a distribution needs at least one variable")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")
        if not self.outcomes:
            raise ValueError("a distribution needs at least one outcome")
        arity = len(self.variables)
        seen = set()
        total = Fraction(0)
        for values, weight in self.outcomes:
            if len(values) != arity:
                raise ValueError(
                    f"outcome {values!r} has arity {len(values)}, expected {arity}"
                )
            if not isinstance(weight, Fraction):
                raise ValueError("weights must be Fraction instances")
            if weight <= 0:
                raise ValueError(f"outcome {values!r} has non-positive weight")
            if values in seen:
                raise ValueError(f"duplicate outcome {values!r}")
            seen.add(values)
            total += weight
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")

    @classmethod
    def from_mapping(
        cls, variables: Iterable[str], weights: Mapping[Outcome, Any]
    ) -> "JointDistribution":
        vs = tuple(variables)
        outs = tuple(
            (tuple(values), _as_fraction(w)) for values, w in weights.items()
        )
        return cls(vs, outs)

    # -- selectors ---------------------------------------------------------

    def resolve(self, selector: str | Iterable[str]) -> tuple[str, ...]:
        """Normalize a selector to variable names in distribution order."""
        names = (selector,) if isinstance(selector, str) else tuple(selector)
        if not names:
            raise ValueError("empty variable selector")
        unknown = [n for n in names if n not in self.variables]
        if unknown:
            raise ValueError(f"unknown variable name(s): {unknown}")
        chosen = set(names)
        return tuple(n for n in self.variables if n in chosen)

    def _indices(self, names: tuple[str, ...]) -> tuple[int, ...]:
        pos = {n: i for i, n in enumerate(self.variables)}
        return tuple(pos[n] for n in names)

    def marginal(self, selector: str | Iterable[str]) -> dict[Outcome, Fraction]:
        """Exact marginal mass over the selected variables."""
        idx = self._indices(self.resolve(selector))
        out: dict[Outcome, Fraction] = {}
        for values, w in self.outcomes:
            key = tuple(values[i] for i in idx)
            out[key] = out.get(key, Fraction(0)) + w
        return out

    def condition(self, assignment: Mapping[str, Any]) -> "JointDistribution":
        """Renormalized distribution given ``variable == value`` constraints.

        Conditioned variables are kept (as constants) so selectors written
        against the original distribution keep working.
        """
        idx = {self.variables.index(n): v for n, v in assignment.items()}
        for n in assignment:
            if n not in self.variables:
                raise ValueError(f"unknown variable name: {n}")
        kept = [
            (values, w)
            for values, w in self.outcomes
            if all(values[i] == v for i, v in idx.items())
        ]
        mass = sum((w for _, w in kept), Fraction(0))
        if mass == 0:
            raise ValueError(f"conditioning event {dict(assignment)!r} has zero mass")
        return JointDistribution(
            self.variables, tuple((values, w / mass) for values, w in kept)
        )

    def support_size(self, selector: str | Iterable[str]) -> int:
        return len(self.marginal(selector))


def entropy(d: JointDistribution, selector: str | Iterable[str]) -> float:
    """Shannon entropy H(A) in bits of the selected marginal."""
    total = 0.0
    for w in d.marginal(selector).values():
        total += float(w) * math.log2(w.denominator / w.numerator)
    return total


def cond_entropy(
    d: JointDistribution,
    selector: str | Iterable[str],
    given: str | Iterable[str],
) -> float:
    """Conditional entropy H(A | C) in bits.

    Overlapping selectors are allowed; shared variables contribute nothing
    (H(X | X) = 0), matching the expectation-over-conditionals definition.
    """
    a = d.resolve(selector)
    c = d.resolve(given)
    ac = d.resolve(a + c)  # union, in distribution order
    p_ac = d.marginal(ac)
    p_c = d.marginal(c)
    c_in_ac = [ac.index(n) for n in c]
    total = 0.0
    for values, w in p_ac.items():
        pc = p_c[tuple(values[i] for i in c_in_ac)]
        ratio = pc / w  # exact Fraction >= 1
        if ratio != 1:
            total += float(w) * math.log2(ratio.numerator / ratio.denominator)
    return total


def mutual_info(
    d: JointDistribution,
    a_sel: str | Iterable[str],
    b_sel: str | Iterable[str],
    given: str | Iterable[str] | None = None,
) -> float:
    """Conditional mutual information I(A ; B | C) in bits, non-negative.

    Computed as a single exact-ratio sum
    ``sum p(abc) * log2(p(abc) p(c) / (p(ac) p(bc)))`` so that only the final
    float summation can introduce error.  Raises if the raw value falls
    below ``-NEGATIVE_RESIDUE``.
    """
    a = d.resolve(a_sel)
    b = d.resolve(b_sel)
    c = d.resolve(given) if given is not None else ()
    groups = (set(a), set(b), set(c))
    for i in range(3):
        for j in range(i + 1, 3):
            if groups[i] & groups[j]:
                raise ValueError(
                    f"overlapping selectors: {sorted(groups[i] & groups[j])}"
                )
    abc = tuple(n for n in d.variables if n in groups[0] | groups[1] | groups[2])
    p_abc = d.marginal(abc)
    ac_names = tuple(n for n in abc if n in groups[0] | groups[2])
    bc_names = tuple(n for n in abc if n in groups[1] | groups[2])
    c_names = tuple(n for n in abc if n in groups[2])
    i_ac = [abc.index(n) for n in ac_names]
    i_bc = [abc.index(n) for n in bc_names]
    i_c = [abc.index(n) for n in c_names]
    p_ac = d.marginal(ac_names)
    p_bc = d.marginal(bc_names)
    p_c = d.marginal(c_names) if c_names else {(): Fraction(1)}
    total = 0.0
    for values, w in p_abc.items():
        pac = p_ac[tuple(values[i] for i in i_ac)]
        pbc = p_bc[tuple(values[i] for i in i_bc)]
        pc = p_c[tuple(values[i] for i in i_c)]
        ratio = (w * pc) / (pac * pbc)
        if ratio != 1:
            total += float(w) * math.log2(ratio.numerator / ratio.denominator)
    if total < 0.0:
        if total < -NEGATIVE_RESIDUE:
            raise RuntimeError(
                f"mutual information evaluated to {total}; "
                "residue exceeds the rounding tolerance"
            )
        total = 0.0
    return total


def apply_function(
    d: JointDistribution,
    selector: str | Iterable[str],
    f: Mapping[Any, Any] | Callable[[Outcome], Any],
    new_name: str,
) -> JointDistribution:
    """Extend the distribution with a derived variable ``new_name = f(A)``.

    ``f`` may be a finite map or a callable; a map must be total on the
    marginal support of the selector (for single-variable selectors bare
    values are accepted as keys).  Original marginals are unchanged.
    """
    if new_name in d.variables:
        raise ValueError(f"variable {new_name!r} already exists")
    names = d.resolve(selector)
    idx = d._indices(names)

    def evaluate(key: Outcome) -> Any:
        if callable(f):
            return f(key)
        if key in f:
            return f[key]
        if len(key) == 1 and key[0] in f:
            return f[key[0]]
        raise ValueError(f"function not total on support: missing {key!r}")

    new_outcomes = []
    for values, w in d.outcomes:
        key = tuple(values[i] for i in idx)
        new_outcomes.append((values + (evaluate(key),), w))
    return JointDistribution(d.variables + (new_name,), tuple(new_outcomes))
