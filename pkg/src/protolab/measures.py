"""Complexity measures over enumerated protocols, and the protocol
transformations that relate them (publicization, derandomization, products,
and the two-party grid search for the distribution maximizing PIC).

Every measure is an exact finite sum: the joint law of inputs, tapes,
transcripts and outputs is enumerated with rational weights, and the
information quantities are evaluated on it.  Measure names:

  cc    worst-case total communication, in bits (an integer)
  acc   expected total communication under an input distribution (rational)
  ic    internal information cost   sum_i I(X_-i ; Pi_i | X_i R_i Rp)
  pic   public information cost     sum_i I(X_-i ; Pi_i R_-i | X_i R_i Rp)
  spy   sum_i I(X_i ; Pi_i<->)      leakage to a per-player wiretapper
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ModelViolationError
from .info import (
    JointDistribution,
    apply_function,
    cond_entropy,
    mutual_info,
)
from .model import (
    DEFAULT_BUDGET,
    ObliviousStructure,
    ProtocolDef,
    Round,
    View,
    bitstrings,
    replay_program,
    run_all,
)
from .zoo import FunctionFamily

#: Global comparison tolerance, in bits, for equality assertions.
TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Input distributions
# ---------------------------------------------------------------------------


def _normalize_weights(weights) -> tuple:
    items = []
    for outcome, w in (
        weights.items() if isinstance(weights, Mapping) else weights
    ):
        frac = w if isinstance(w, Fraction) else Fraction(w)
        if frac < 0:
            raise ValueError(f"negative weight for {outcome!r}")
        if frac > 0:
            items.append((tuple(outcome), frac))
    items.sort()
    total = sum((w for _, w in items), Fraction(0))
    if total != 1:
        raise ValueError(f"input weights sum to {total}, not 1")
    if len({o for o, _ in items}) != len(items):
        raise ValueError("duplicate input tuples")
    return tuple(items)


@dataclass(frozen=True)
class InputDistribution:
    """Exact rational weights over tuples of per-player inputs."""

    name: str
    weights: tuple[tuple[tuple[str, ...], Fraction], ...]

    @classmethod
    def from_weights(cls, name: str, weights) -> "InputDistribution":
        return cls(name, _normalize_weights(weights))

    @classmethod
    def uniform(cls, p: ProtocolDef) -> "InputDistribution":
        n = 1
        for dom in p.input_domains:
            n *= len(dom)
        w = Fraction(1, n)
        return cls("uniform", _normalize_weights(
            {x: w for x in p.input_space()}
        ))

    @classmethod
    def independent_bits(cls, alpha: Fraction, beta: Fraction) -> "InputDistribution":
        """Two one-bit players, independent, P[X=0]=alpha, P[Y=0]=beta."""
        alpha, beta = Fraction(alpha), Fraction(beta)
        if not (0 < alpha < 1 and 0 < beta < 1):
            raise ValueError("grid probabilities must be inside (0, 1)")
        weights = {
            ("0", "0"): alpha * beta,
            ("0", "1"): alpha * (1 - beta),
            ("1", "0"): (1 - alpha) * beta,
            ("1", "1"): (1 - alpha) * (1 - beta),
        }
        return cls(f"ber({alpha})*ber({beta})", _normalize_weights(weights))

    @classmethod
    def product(
        cls, a: "InputDistribution", b: "InputDistribution", name: str | None = None
    ) -> "InputDistribution":
        """Product measure on per-player concatenated inputs."""
        weights: dict[tuple[str, ...], Fraction] = {}
        for xa, wa in a.weights:
            for xb, wb in b.weights:
                if len(xa) != len(xb):
                    raise ValueError("player counts differ")
                key = tuple(s + t for s, t in zip(xa, xb))
                weights[key] = weights.get(key, Fraction(0)) + wa * wb
        return cls(name or f"product({a.name},{b.name})",
                   _normalize_weights(weights))

    @classmethod
    def power(cls, mu: "InputDistribution", t: int) -> "InputDistribution":
        """t-fold product of a distribution with itself."""
        if t < 1:
            raise ValueError("power needs t >= 1")
        out = mu
        for _ in range(t - 1):
            out = cls.product(out, mu)
        return cls(f"{mu.name}^{t}", out.weights)

    def mapping(self) -> dict[tuple[str, ...], Fraction]:
        return dict(self.weights)

    def validate_for(self, p: ProtocolDef) -> None:
        for x, _ in self.weights:
            if len(x) != p.k:
                raise ConfigError(
                    f"distribution {self.name!r} has {len(x)}-tuples for a "
                    f"{p.k}-player protocol"
                )
            for i in p.players:
                if x[i - 1] not in p.input_domain(i):
                    raise ConfigError(
                        f"distribution {self.name!r} puts weight on "
                        f"{x[i-1]!r}, outside player {i}'s domain"
                    )


# ---------------------------------------------------------------------------
# The joint law of one protocol under one input distribution
# ---------------------------------------------------------------------------


def _var_names(k: int) -> dict[str, list[str]]:
    return {
        "x": [f"x{i}" for i in range(1, k + 1)],
        "r": [f"r{i}" for i in range(1, k + 1)],
        "pi": [f"pi{i}" for i in range(1, k + 1)],
        "bidi": [f"bidi{i}" for i in range(1, k + 1)],
        "out": [f"out{i}" for i in range(1, k + 1)],
    }


@lru_cache(maxsize=128)
def build_joint(
    p: ProtocolDef,
    mu: InputDistribution,
    family: FunctionFamily | None = None,
    budget: int | None = DEFAULT_BUDGET,
) -> JointDistribution:
    """Exact joint law of inputs, tapes, transcripts, and outputs.

    Variables: ``x1..xk`` inputs, ``r1..rk`` private tapes, ``rp`` public
    tape, ``pi1..pik`` received transcripts, ``bidi1..bidik`` bidirectional
    transcripts (received-then-sent ordering), ``pi`` the full transcript,
    ``out1..outk`` outputs, and ``f1..fk`` when a function family is given.
    """
    mu.validate_for(p)
    table = run_all(p, budget)
    k = p.k
    names = _var_names(k)
    variables = (
        names["x"] + names["r"] + ["rp"] + names["pi"] + names["bidi"]
        + ["pi"] + names["out"]
    )
    tape_weight = Fraction(1, 1 << p.total_tape_bits)
    outcomes = {}
    for x, wx in mu.weights:
        for privs, pub in p.tape_space():
            e = table.get(x, privs, pub)
            row = (
                tuple(x)
                + tuple(privs)
                + (pub,)
                + tuple(e.received_transcript(i) for i in p.players)
                + tuple(e.bidirectional_transcript(i) for i in p.players)
                + (e.full_transcript(),)
                + tuple(e.outputs)
            )
            outcomes[row] = outcomes.get(row, Fraction(0)) + wx * tape_weight
    d = JointDistribution.from_mapping(variables, outcomes)
    if family is not None:
        for i in p.players:
            d = apply_function(
                d, names["x"], lambda key, i=i: family.value(i, key), f"f{i}"
            )
    return d


def _others(names: list[str], i: int) -> list[str]:
    return [n for j, n in enumerate(names, start=1) if j != i]


def cc(p: ProtocolDef, budget: int | None = DEFAULT_BUDGET) -> int:
    """Worst-case communication: max transcript length over all executions."""
    return max(e.total_bits for e in run_all(p, budget).values())


def acc(
    p: ProtocolDef, mu: InputDistribution, budget: int | None = DEFAULT_BUDGET
) -> Fraction:
    """Average communication under mu and uniform tapes, exact."""
    mu.validate_for(p)
    table = run_all(p, budget)
    tape_weight = Fraction(1, 1 << p.total_tape_bits)
    total = Fraction(0)
    for x, wx in mu.weights:
        for privs, pub in p.tape_space():
            total += wx * tape_weight * table.get(x, privs, pub).total_bits
    return total


def ic(p, mu, budget=DEFAULT_BUDGET, joint=None) -> float:
    """Internal information cost sum_i I(X_-i ; Pi_i | X_i R_i Rp)."""
    d = joint if joint is not None else build_joint(p, mu, None, budget)
    names = _var_names(p.k)
    return sum(
        mutual_info(
            d, _others(names["x"], i), [f"pi{i}"], [f"x{i}", f"r{i}", "rp"]
        )
        for i in p.players
    )


def ic_bidirectional(p, mu, budget=DEFAULT_BUDGET, joint=None) -> float:
    """Same as ic() but over the bidirectional transcripts (must agree)."""
    d = joint if joint is not None else build_joint(p, mu, None, budget)
    names = _var_names(p.k)
    return sum(
        mutual_info(
            d, _others(names["x"], i), [f"bidi{i}"], [f"x{i}", f"r{i}", "rp"]
        )
        for i in p.players
    )


def pic(p, mu, budget=DEFAULT_BUDGET, joint=None) -> float:
    """Public information cost sum_i I(X_-i ; Pi_i R_-i | X_i R_i Rp)."""
    d = joint if joint is not None else build_joint(p, mu, None, budget)
    names = _var_names(p.k)
    return sum(
        mutual_info(
            d,
            _others(names["x"], i),
            [f"pi{i}"] + _others(names["r"], i),
            [f"x{i}", f"r{i}", "rp"],
        )
        for i in p.players
    )


def pic_decomposition(p, mu, budget=DEFAULT_BUDGET, joint=None) -> tuple[float, float]:
    """Split pic into its ic part and the private-randomness part.

    Returns ``(ic_term, random_term)`` with
    ``random_term = sum_i I(R_-i ; X_-i | X_i Pi_i R_i Rp)``; the two parts
    must recompose to pic within TOLERANCE.
    """
    d = joint if joint is not None else build_joint(p, mu, None, budget)
    names = _var_names(p.k)
    ic_term = ic(p, mu, budget, joint=d)
    random_term = sum(
        mutual_info(
            d,
            _others(names["r"], i),
            _others(names["x"], i),
            [f"x{i}", f"pi{i}", f"r{i}", "rp"],
        )
        for i in p.players
    )
    total = pic(p, mu, budget, joint=d)
    if abs(ic_term + random_term - total) > TOLERANCE:
        raise RuntimeError(
            f"pic decomposition drifted: {ic_term} + {random_term} != {total}"
        )
    return ic_term, random_term


def privacy_terms(
    p, mu, family: FunctionFamily, budget=DEFAULT_BUDGET, joint=None
) -> list[float]:
    """Per-player leakage terms I(X_-i ; Pi_i | X_i R_i Rp f_i(X))."""
    d = joint if joint is not None else build_joint(p, mu, family, budget)
    names = _var_names(p.k)
    if "f1" not in d.variables:
        raise ValueError("joint law was built without a function family")
    return [
        mutual_info(
            d,
            _others(names["x"], i),
            [f"pi{i}"],
            [f"x{i}", f"r{i}", "rp", f"f{i}"],
        )
        for i in p.players
    ]


def privacy_leakage(
    p, mu, family: FunctionFamily, budget=DEFAULT_BUDGET, joint=None
) -> float:
    """sum_i I(X_-i ; Pi_i | X_i R_i Rp f_i(X)); zero on a full-support mu
    certifies the protocol private for the family."""
    return sum(privacy_terms(p, mu, family, budget, joint))


def transcript_entropy(p, mu, budget=DEFAULT_BUDGET, joint=None) -> float:
    """H(Pi | X Rp): randomness visible in the full transcript once inputs
    and public coins are fixed; lower-bounds the private entropy used."""
    d = joint if joint is not None else build_joint(p, mu, None, budget)
    names = _var_names(p.k)
    return cond_entropy(d, ["pi"], names["x"] + ["rp"])


def spy_info(p, mu, budget=DEFAULT_BUDGET, joint=None) -> float:
    """sum_i I(X_i ; Pi_i<->): what a wiretapper of each player's links
    learns about that player's input (no conditioning)."""
    d = joint if joint is not None else build_joint(p, mu, None, budget)
    return sum(
        mutual_info(d, [f"x{i}"], [f"bidi{i}"]) for i in p.players
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class MeasureReport:
    """Named measure values in bits, with the inputs that produced them."""

    protocol: str
    distribution: str
    tolerance: float
    cc: int
    acc: Fraction
    ic: float
    pic: float
    pic_random_term: float
    transcript_entropy: float
    spy_info: float
    privacy_leakage: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.ic + self.pic_random_term - self.pic) > self.tolerance:
            raise RuntimeError("measure report violates pic = ic + random part")

    def to_dict(self) -> dict:
        out = {
            "report": "measure",
            "protocol": self.protocol,
            "distribution": self.distribution,
            "tolerance": self.tolerance,
            "cc": self.cc,
            "acc": str(self.acc),
            "acc_bits": round(float(self.acc), 9),
            "ic": round(self.ic, 9),
            "pic": round(self.pic, 9),
            "pic_random_term": round(self.pic_random_term, 9),
            "transcript_entropy": round(self.transcript_entropy, 9),
            "spy_info": round(self.spy_info, 9),
            "privacy_leakage": (
                None if self.privacy_leakage is None
                else round(self.privacy_leakage, 9)
            ),
        }
        out.update(self.extras)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def measure_protocol(
    p: ProtocolDef,
    mu: InputDistribution,
    family: FunctionFamily | None = None,
    tolerance: float = TOLERANCE,
    budget: int | None = DEFAULT_BUDGET,
) -> MeasureReport:
    """Compute the full measure suite; cross-checks the decomposition and
    the randomness lower bound before returning."""
    d = build_joint(p, mu, family, budget)
    ic_term, random_term = pic_decomposition(p, mu, budget, joint=d)
    pic_value = ic_term + random_term
    te = transcript_entropy(p, mu, budget, joint=d)
    if te < (pic_value - ic_term) / p.k - tolerance:
        raise RuntimeError(
            "transcript entropy fell below the randomness lower bound"
        )
    leak = (
        privacy_leakage(p, mu, family, budget, joint=d)
        if family is not None
        else None
    )
    return MeasureReport(
        protocol=p.name,
        distribution=mu.name,
        tolerance=tolerance,
        cc=cc(p, budget),
        acc=acc(p, mu, budget),
        ic=ic_term,
        pic=pic_value,
        pic_random_term=random_term,
        transcript_entropy=te,
        spy_info=spy_info(p, mu, budget, joint=d),
        privacy_leakage=leak,
    )


# ---------------------------------------------------------------------------
# Publicization and derandomization
# ---------------------------------------------------------------------------


def interleave_positions(lengths: list[int]) -> list[list[int]]:
    """Round-robin interleaving of several tapes into one: returns, per
    logical tape, the positions of its bits in the combined tape."""
    remaining = list(lengths)
    positions: list[list[int]] = [[] for _ in lengths]
    cursor = 0
    while any(remaining):
        for j in range(len(lengths)):
            if remaining[j] > 0:
                positions[j].append(cursor)
                remaining[j] -= 1
                cursor += 1
    return positions


def split_public_tape(p: ProtocolDef, combined: str) -> tuple[str, tuple[str, ...]]:
    """Invert the bit-by-bit interleaving used by publicize()."""
    lengths = [p.public_tape_length] + list(p.private_tape_lengths)
    positions = interleave_positions(lengths)
    parts = ["".join(combined[at] for at in sub) for sub in positions]
    return parts[0], tuple(parts[1:])


def publicize(p: ProtocolDef) -> ProtocolDef:
    """Move all private tapes onto one enlarged public tape.

    The new public tape carries the old public tape and the k private tapes
    interleaved bit by bit; each program reads its old tapes out of the
    shared one, so transcripts are bit-identical per tape assignment and
    obliviousness is preserved.  A protocol with no private tapes is
    returned unchanged.
    """
    if sum(p.private_tape_lengths) == 0:
        return p
    new_len = p.public_tape_length + sum(p.private_tape_lengths)

    def wrap(i: int):
        original = p.program(i)

        def prog(view: View) -> Round:
            pub, privs = split_public_tape(p, view.public_tape)
            inner = View(
                player=view.player,
                input=view.input,
                private_tape=privs[i - 1],
                public_tape=pub,
                reads=view.reads,
            )
            return original(inner)

        return prog

    return ProtocolDef(
        name=f"publicize({p.name})",
        k=p.k,
        input_domains=p.input_domains,
        output_domains=p.output_domains,
        private_tape_lengths=(0,) * p.k,
        public_tape_length=new_len,
        programs=tuple(wrap(i) for i in p.players),
        max_local_rounds=p.max_local_rounds,
        mode=p.mode,
    )


def public_seed_scores(
    p: ProtocolDef, mu: InputDistribution, budget: int | None = DEFAULT_BUDGET
) -> dict[str, float]:
    """t(r) = sum_i I(X_-i ; Pi_i | X_i, Rp=r) for each public seed r."""
    if sum(p.private_tape_lengths) != 0:
        raise ValueError("seed scores are defined for public-coin protocols")
    d = build_joint(p, mu, None, budget)
    names = _var_names(p.k)
    scores = {}
    for seed in bitstrings(p.public_tape_length):
        cond = d.condition({"rp": seed})
        scores[seed] = sum(
            mutual_info(cond, _others(names["x"], i), [f"pi{i}"], [f"x{i}"])
            for i in p.players
        )
    return scores


def _is_zero_error(p, mu, table, family) -> bool:
    for x, _ in mu.weights:
        reference = None
        for privs, pub in p.tape_space():
            outputs = table.get(x, privs, pub).outputs
            if reference is None:
                reference = outputs
            elif outputs != reference:
                return False
        if family is not None:
            for i in p.players:
                if reference[i - 1] != family.value(i, x):
                    return False
    return True


def derandomize_zero_error(
    p: ProtocolDef,
    mu: InputDistribution,
    family: FunctionFamily | None = None,
    budget: int | None = DEFAULT_BUDGET,
) -> tuple[ProtocolDef, str]:
    """Fix the public seed minimizing the revealed information.

    Requires a public-coin protocol (publicize first) whose outputs do not
    depend on the seed on the support of mu (zero error); the fixed-seed
    protocol then reveals no more than the average over seeds, so its ic is
    at most ic(p, mu).  Ties pick the lexicographically smallest seed.
    Returns ``(deterministic protocol, chosen seed)``.
    """
    if sum(p.private_tape_lengths) != 0:
        raise ValueError(
            "derandomization needs a public-coin protocol; apply publicize()"
        )
    mu.validate_for(p)
    table = run_all(p, budget)
    if not _is_zero_error(p, mu, table, family):
        raise ValueError(f"{p.name} is not zero-error on the support of {mu.name}")
    if p.public_tape_length == 0:
        return p, ""
    scores = public_seed_scores(p, mu, budget)
    seed = min(scores, key=lambda r: (scores[r], r))

    def wrap(i: int):
        original = p.program(i)

        def prog(view: View) -> Round:
            inner = View(
                player=view.player,
                input=view.input,
                private_tape=view.private_tape,
                public_tape=seed,
                reads=view.reads,
            )
            return original(inner)

        return prog

    fixed = ProtocolDef(
        name=f"derandomize({p.name},seed={seed})",
        k=p.k,
        input_domains=p.input_domains,
        output_domains=p.output_domains,
        private_tape_lengths=(0,) * p.k,
        public_tape_length=0,
        programs=tuple(wrap(i) for i in p.players),
        max_local_rounds=p.max_local_rounds,
        mode=p.mode,
    )
    return fixed, seed


# ---------------------------------------------------------------------------
# Product of two protocols
# ---------------------------------------------------------------------------


def _fixed_lengths(p: ProtocolDef) -> list[int]:
    lengths = []
    for i in p.players:
        ls = {len(v) for v in p.input_domain(i)}
        if len(ls) != 1:
            raise ConfigError(
                f"product needs fixed-length input domains; player {i} of "
                f"{p.name} mixes lengths"
            )
        lengths.append(ls.pop())
    return lengths


@dataclass
class _SideState:
    sends_by_lot: dict
    output: str | None


def _drive_side(struct: ObliviousStructure, i: int, input_value: str,
                private_tape: str, public_tape: str,
                streams: dict[int, list[str]]) -> _SideState:
    """Replay one side's player against the decoded side messages and group
    its sends by lot number."""
    p = struct.protocol
    state = replay_program(
        p.program(i), i, input_value, private_tape, public_tape, streams,
        p.max_local_rounds,
    )
    sends_by_lot: dict[int, list] = {}
    for round_sends, round_no in state.rounds:
        if not round_sends:
            continue
        lot = struct.lot_of_round[(i, round_no)]
        sends_by_lot.setdefault(lot, []).extend(round_sends)
    return _SideState(sends_by_lot=sends_by_lot, output=state.output)


def product_protocol(
    p: ProtocolDef, q: ProtocolDef, budget: int | None = DEFAULT_BUDGET
) -> ProtocolDef:
    """Run two oblivious protocols side by side on disjoint input and tape
    slices, concatenating their messages lot by lot.

    The combined protocol proceeds in one local round per lot: in round t a
    player emits, per link, the first side's lot-t message followed by the
    second side's (either part may be absent), and waits on exactly the
    senders that a lot-t message is due from.  Message parts are split with
    the sides' per-position prefix-free codebooks, so each side's view is
    reconstructed exactly.  Both protocols must be oblivious and have the
    same number of players.
    """
    if p.k != q.k:
        raise ConfigError("product needs the same number of players")
    sa = ObliviousStructure.build(p, budget)
    sb = ObliviousStructure.build(q, budget)
    k = p.k
    in_a, in_b = _fixed_lengths(p), _fixed_lengths(q)
    priv_a, priv_b = p.private_tape_lengths, q.private_tape_lengths
    pub_a = p.public_tape_length
    max_lot = max(sa.max_lot, sb.max_lot)

    # Fixed plans: who sends to / waits on whom in each combined round.
    wait_plan: dict[tuple[int, int], tuple[int, ...]] = {}
    link_plan: dict[tuple[int, int], set] = {}
    for struct, side in ((sa, 0), (sb, 1)):
        for lot, links in struct.links_in_lot.items():
            for s, r in links:
                wait_plan.setdefault((r, lot), ())
                wait_plan[(r, lot)] = tuple(
                    sorted(set(wait_plan[(r, lot)]) | {s})
                )
                link_plan.setdefault((s, r, lot), set()).add(side)

    def split_input(i, value):
        return value[: in_a[i - 1]], value[in_a[i - 1] :]

    def split_priv(i, value):
        return value[: priv_a[i - 1]], value[priv_a[i - 1] :]

    def split_pub(value):
        return value[:pub_a], value[pub_a:]

    def decode_reads(i, reads):
        """Split merged messages back into per-side FIFO streams."""
        streams_a: dict[int, list[str]] = {}
        streams_b: dict[int, list[str]] = {}
        pos_a: dict[int, int] = {}
        pos_b: dict[int, int] = {}
        for lot_index, round_reads in enumerate(reads, start=1):
            for sender, merged in round_reads:
                sides = link_plan.get((sender, i, lot_index), set())
                offset = 0
                if 0 in sides:
                    word = sa.decode_message(
                        sender, i, pos_a.get(sender, 0), merged, 0
                    )
                    if word is None:
                        raise ModelViolationError(
                            "product message does not start with a first-side "
                            "codeword"
                        )
                    streams_a.setdefault(sender, []).append(word)
                    pos_a[sender] = pos_a.get(sender, 0) + 1
                    offset = len(word)
                if 1 in sides:
                    rest = merged[offset:]
                    streams_b.setdefault(sender, []).append(rest)
                    pos_b[sender] = pos_b.get(sender, 0) + 1
                    offset = len(merged)
                if offset != len(merged):
                    raise ModelViolationError(
                        "product message has trailing bits after its parts"
                    )
        return streams_a, streams_b

    def make_program(i: int):
        def prog(view: View) -> Round:
            t = view.round
            xa, xb = split_input(i, view.input)
            ra, rb = split_priv(i, view.private_tape)
            pa, pb = split_pub(view.public_tape)
            streams_a, streams_b = decode_reads(i, view.reads)
            side_a = _drive_side(sa, i, xa, ra, pa, streams_a)
            side_b = _drive_side(sb, i, xb, rb, pb, streams_b)

            if t <= max_lot:
                merged: dict[int, str] = {}
                for side, state in ((0, side_a), (1, side_b)):
                    for recipient, content in state.sends_by_lot.get(t, ()):
                        merged[recipient] = merged.get(recipient, "") + content
                waits = wait_plan.get((i, t), ())
                return Round(
                    sends=tuple(sorted(merged.items())),
                    waits=waits,
                )
            if side_a.output is None or side_b.output is None:
                raise ModelViolationError(
                    f"product player {i} finished its rounds without both "
                    "side outputs"
                )
            return Round(output=side_a.output + side_b.output, halt=True)

        return prog

    input_domains = tuple(
        tuple(
            a + b for a in p.input_domain(i) for b in q.input_domain(i)
        )
        for i in p.players
    )
    output_domains = tuple(
        tuple(
            a + b for a in p.output_domain(i) for b in q.output_domain(i)
        )
        for i in p.players
    )
    return ProtocolDef(
        name=f"product({p.name},{q.name})",
        k=k,
        input_domains=input_domains,
        output_domains=output_domains,
        private_tape_lengths=tuple(
            priv_a[i - 1] + priv_b[i - 1] for i in p.players
        ),
        public_tape_length=p.public_tape_length + q.public_tape_length,
        programs=tuple(make_program(i) for i in p.players),
        max_local_rounds=max_lot + 2,
        mode=p.mode,
    )


# ---------------------------------------------------------------------------
# Grid search for the PIC-maximizing independent two-party distribution
# ---------------------------------------------------------------------------


@dataclass
class GridResult:
    alpha: Fraction
    beta: Fraction
    value: float
    grid_value: float
    mu: InputDistribution


def _vec_group_entropy(weights: np.ndarray, group_ids: np.ndarray) -> np.ndarray:
    """Entropy over grouped cells, vectorized across the leading axis."""
    n_groups = int(group_ids.max()) + 1
    probs = np.zeros((weights.shape[0], n_groups))
    for cell, g in enumerate(group_ids):
        probs[:, g] += weights[:, cell]
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(probs > 0, np.log2(np.where(probs > 0, probs, 1.0)), 0.0)
    return -(probs * logs).sum(axis=1)


def sup_pic_grid(
    p: ProtocolDef,
    grid_step: float = 0.001,
    budget: int | None = DEFAULT_BUDGET,
) -> GridResult:
    """Maximize pic over a grid of independent Ber(alpha) x Ber(beta) input
    distributions for a two-player one-bit protocol.

    The grid is scanned with a vectorized float evaluation; the winning grid
    point (ties resolved toward smaller alpha, then smaller beta) is then
    re-evaluated exactly.  Returns a lower bound on the supremum.
    """
    if p.k != 2 or any(set(d) != {"0", "1"} for d in p.input_domains):
        raise ConfigError(
            "grid search needs two players with one-bit input domains"
        )
    m = round(1.0 / grid_step)
    if m < 2:
        raise ConfigError("grid step too coarse")
    table = run_all(p, budget)
    tape_weight = 1.0 / (1 << p.total_tape_bits)

    cells = []
    for x in p.input_space():
        for privs, pub in p.tape_space():
            e = table.get(x, privs, pub)
            cells.append(
                {
                    "x": x,
                    "tapes": (privs, pub),
                    "pi": tuple(e.received_transcript(i) for i in (1, 2)),
                }
            )

    # Per player i: I(X_-i ; Pi_i R_-i | X_i R_i Rp)
    #             = H(AC) + H(BC) - H(ABC) - H(C) over cell groupings.
    groupings = []
    for i in (1, 2):
        o = 2 if i == 1 else 1

        def keys(cell, i=i, o=o):
            a = cell["x"][o - 1]
            b = (cell["pi"][i - 1], cell["tapes"][0][o - 1])
            c = (cell["x"][i - 1], cell["tapes"][0][i - 1], cell["tapes"][1])
            return a, b, c

        def ids(selector):
            seen: dict = {}
            out = []
            for cell in cells:
                a, b, c = keys(cell)
                key = selector(a, b, c)
                out.append(seen.setdefault(key, len(seen)))
            return np.array(out)

        groupings.append(
            (
                ids(lambda a, b, c: (a, c)),
                ids(lambda a, b, c: (b, c)),
                ids(lambda a, b, c: (a, b, c)),
                ids(lambda a, b, c: (c,)),
            )
        )

    steps = np.arange(1, m) / m
    n_b = len(steps)
    best_val = -1.0
    best_ia = best_ib = 1
    tie_window = 1e-12  # float ties resolve toward smaller alpha, then beta
    x_bits = np.array([[int(cell["x"][0]), int(cell["x"][1])] for cell in cells])
    for ia, alpha in enumerate(np.asarray(steps), start=1):
        pa = np.where(x_bits[:, 0] == 0, alpha, 1 - alpha)  # per cell
        pb = np.where(
            x_bits[None, :, 1] == 0, steps[:, None], 1 - steps[:, None]
        )  # (n_b, cells)
        weights = pa[None, :] * pb * tape_weight
        total = np.zeros(n_b)
        for g_ac, g_bc, g_abc, g_c in groupings:
            total += (
                _vec_group_entropy(weights, g_ac)
                + _vec_group_entropy(weights, g_bc)
                - _vec_group_entropy(weights, g_abc)
                - _vec_group_entropy(weights, g_c)
            )
        row_best = float(total.max())
        ib = int(np.argmax(total >= row_best - tie_window))
        if row_best > best_val + tie_window:
            best_val = row_best
            best_ia, best_ib = ia, ib + 1

    alpha = Fraction(best_ia, m)
    beta = Fraction(best_ib, m)
    mu = InputDistribution.independent_bits(alpha, beta)
    mu = InputDistribution(f"grid({alpha},{beta})", mu.weights)
    exact = pic(p, mu, budget)
    return GridResult(alpha=alpha, beta=beta, value=exact,
                      grid_value=best_val, mu=mu)
