"""Shared test fixtures and independent brute-force oracles.

The oracles recompute the information measures straight from enumerated
executions with their own counting code (entropy differences over plain
dicts), independently of the library's joint-distribution machinery, so a
regression in one path cannot hide in the other.
"""

import math
from collections import defaultdict
from fractions import Fraction

from protolab.model import ProtocolDef, run
from protolab.measures import InputDistribution


# ---------------------------------------------------------------------------
# Independent information-measure oracles
# ---------------------------------------------------------------------------


def oracle_entropy(weighted_values) -> float:
    """H of a list of (Fraction weight, value) with weights summing to 1."""
    mass = defaultdict(Fraction)
    for w, v in weighted_values:
        mass[v] += w
    return sum(
        float(w) * math.log2(1 / float(w)) for w in mass.values() if w > 0
    )


def oracle_cond_entropy(rows) -> float:
    """H(A | C) from rows of (Fraction weight, a, c)."""
    joint = defaultdict(Fraction)
    cond = defaultdict(Fraction)
    for w, a, c in rows:
        joint[(a, c)] += w
        cond[c] += w
    total = 0.0
    for (a, c), w in joint.items():
        total += float(w) * math.log2(float(cond[c] / w))
    return total


def oracle_conditional_mi(rows) -> float:
    """I(A ; B | C) = H(A | C) - H(A | BC) from (weight, a, b, c) rows."""
    h_a_c = oracle_cond_entropy([(w, a, c) for w, a, b, c in rows])
    h_a_bc = oracle_cond_entropy([(w, a, (b, c)) for w, a, b, c in rows])
    return h_a_c - h_a_bc


def enumerate_runs(p: ProtocolDef, mu: InputDistribution):
    """Yield (Fraction weight, execution) over mu and uniform tapes."""
    tape_weight = Fraction(1, 1 << p.total_tape_bits)
    for x, wx in mu.weights:
        for privs, pub in p.tape_space():
            yield wx * tape_weight, run(p, x, privs, pub)


def _pi(e, i):
    return "".join(m for rnd in e.reads[i - 1] for _, m in rnd)


def _sent(e, i):
    return "".join(m for rnd in e.sends[i - 1] for _, m in rnd)


def _without(values, i):
    return tuple(v for j, v in enumerate(values, start=1) if j != i)


def oracle_ic(p, mu) -> float:
    """Term-by-term internal information cost by direct enumeration."""
    runs = list(enumerate_runs(p, mu))
    total = 0.0
    for i in p.players:
        rows = [
            (
                w,
                _without(e.inputs, i),
                _pi(e, i),
                (e.inputs[i - 1], e.private_tapes[i - 1], e.public_tape),
            )
            for w, e in runs
        ]
        total += oracle_conditional_mi(rows)
    return total


def oracle_pic(p, mu) -> float:
    """Term-by-term public information cost by direct enumeration."""
    runs = list(enumerate_runs(p, mu))
    total = 0.0
    for i in p.players:
        rows = [
            (
                w,
                _without(e.inputs, i),
                (_pi(e, i), _without(e.private_tapes, i)),
                (e.inputs[i - 1], e.private_tapes[i - 1], e.public_tape),
            )
            for w, e in runs
        ]
        total += oracle_conditional_mi(rows)
    return total


def oracle_transcript_entropy(p, mu) -> float:
    runs = list(enumerate_runs(p, mu))
    rows = [
        (
            w,
            "".join(_pi(e, i) for i in p.players),
            (e.inputs, e.public_tape),
        )
        for w, e in runs
    ]
    return oracle_cond_entropy(rows)


def oracle_spy_info(p, mu) -> float:
    runs = list(enumerate_runs(p, mu))
    total = 0.0
    for i in p.players:
        rows = [
            (w, e.inputs[i - 1], _pi(e, i) + _sent(e, i), ())
            for w, e in runs
        ]
        total += oracle_conditional_mi(rows)
    return total


def oracle_privacy_leakage(p, mu, family) -> float:
    runs = list(enumerate_runs(p, mu))
    total = 0.0
    for i in p.players:
        rows = [
            (
                w,
                _without(e.inputs, i),
                _pi(e, i),
                (
                    e.inputs[i - 1],
                    e.private_tapes[i - 1],
                    e.public_tape,
                    family.value(i, e.inputs),
                ),
            )
            for w, e in runs
        ]
        total += oracle_conditional_mi(rows)
    return total


def oracle_bidirectional_ic_terms(p, mu) -> list:
    """Per-player I(X_-i ; Pi_i<-> | X_i R_i Rp), bidirectional ordering."""
    runs = list(enumerate_runs(p, mu))
    terms = []
    for i in p.players:
        rows = [
            (
                w,
                _without(e.inputs, i),
                _pi(e, i) + _sent(e, i),
                (e.inputs[i - 1], e.private_tapes[i - 1], e.public_tape),
            )
            for w, e in runs
        ]
        terms.append(oracle_conditional_mi(rows))
    return terms


def oracle_ic_terms(p, mu) -> list:
    runs = list(enumerate_runs(p, mu))
    terms = []
    for i in p.players:
        rows = [
            (
                w,
                _without(e.inputs, i),
                _pi(e, i),
                (e.inputs[i - 1], e.private_tapes[i - 1], e.public_tape),
            )
            for w, e in runs
        ]
        terms.append(oracle_conditional_mi(rows))
    return terms


# ---------------------------------------------------------------------------
# Tree-protocol fixtures
# ---------------------------------------------------------------------------


def _x(a: str, b: str) -> str:
    return "1" if a != b else "0"


def relay3_dict() -> dict:
    """Three players, two local rounds each: player 1 starts a relay whose
    last message is the three-way parity, which player 1 outputs."""

    def leaf(par):
        return {"outputs": [par, "0", "0"]}

    def node31(b2):
        return {
            "sender": 3, "receiver": 1, "msg_bits": 1,
            "message_table": {"0": b2, "1": _x(b2, "1")},
            "children": {"0": leaf("0"), "1": leaf("1")},
        }

    def node23(x1):
        return {
            "sender": 2, "receiver": 3, "msg_bits": 1,
            "message_table": {"0": x1, "1": _x(x1, "1")},
            "children": {"0": node31("0"), "1": node31("1")},
        }

    return {
        "name": "relay3",
        "k": 3,
        "input_bits": [1, 1, 1],
        "tape_bits": {"private": [0, 0, 0], "public": 0},
        "tree": {
            "sender": 1, "receiver": 2, "msg_bits": 1,
            "message_table": {"0": "0", "1": "1"},
            "children": {"0": node23("0"), "1": node23("1")},
        },
    }


def relay3_family():
    from protolab.zoo import FunctionFamily

    def parity(x):
        return _x(_x(x[0], x[1]), x[2])

    return FunctionFamily(
        "relay3-parity", (parity, lambda x: "0", lambda x: "0")
    )


def masked_ping_dict() -> dict:
    """Player 1 sends x xor r (one private pad bit); outputs are constant.

    pic = 1 while ic = 0: the message is a one-time pad until the pad is
    adjoined, so all of pic is the private-randomness term."""
    return {
        "name": "masked-ping",
        "k": 2,
        "input_bits": [1, 1],
        "tape_bits": {"private": [1, 0], "public": 0},
        "tree": {
            "sender": 1, "receiver": 2, "msg_bits": 1,
            "message_table": {
                "0:0:": "0", "0:1:": "1", "1:0:": "1", "1:1:": "0"
            },
            "children": {
                "0": {"outputs": ["0", "0"]},
                "1": {"outputs": ["0", "0"]},
            },
        },
    }


def and_mask_dict() -> dict:
    """Player 1 sends x AND r; constant outputs.  Derandomization helps
    strictly: the seed r=0 makes the message constant."""
    return {
        "name": "and-mask",
        "k": 2,
        "input_bits": [1, 1],
        "tape_bits": {"private": [1, 0], "public": 0},
        "tree": {
            "sender": 1, "receiver": 2, "msg_bits": 1,
            "message_table": {
                "0:0:": "0", "0:1:": "0", "1:0:": "0", "1:1:": "1"
            },
            "children": {
                "0": {"outputs": ["0", "0"]},
                "1": {"outputs": ["0", "0"]},
            },
        },
    }


def second_bit_dict() -> dict:
    """Player 1 sends its bit; only on 1 does player 2 reply with its own
    bit (which player 1 outputs).  Average communication 1.5 under uniform
    inputs."""
    return {
        "name": "second-bit",
        "k": 2,
        "input_bits": [1, 1],
        "tape_bits": {"private": [0, 0], "public": 0},
        "tree": {
            "sender": 1, "receiver": 2, "msg_bits": 1,
            "message_table": {"0": "0", "1": "1"},
            "children": {
                "0": {"outputs": ["0", "0"]},
                "1": {
                    "sender": 2, "receiver": 1, "msg_bits": 1,
                    "message_table": {"0": "0", "1": "1"},
                    "children": {
                        "0": {"outputs": ["0", "0"]},
                        "1": {"outputs": ["1", "0"]},
                    },
                },
            },
        },
    }


# ---------------------------------------------------------------------------
# Random generators (seeded by the caller)
# ---------------------------------------------------------------------------


def random_joint(rng, n_vars=None, max_vals=3):
    """Random small exact joint distribution for property tests."""
    from protolab.info import JointDistribution

    n_vars = n_vars or rng.randint(2, 4)
    names = tuple(f"v{j}" for j in range(n_vars))
    sizes = [rng.randint(2, max_vals) for _ in range(n_vars)]
    cells = []

    def fill(prefix):
        if len(prefix) == n_vars:
            cells.append(tuple(prefix))
            return
        for v in range(sizes[len(prefix)]):
            fill(prefix + [f"a{v}"])

    fill([])
    support = [c for c in cells if rng.random() < 0.8]
    if len(support) < 2:
        support = cells[:2]
    denom = rng.randint(len(support), 6 * len(support))
    weights = {}
    remaining = denom
    for idx, cell in enumerate(support):
        left = len(support) - idx - 1
        hi = remaining - left
        num = rng.randint(1, hi) if left else remaining
        weights[cell] = Fraction(num, denom)
        remaining -= num
    return JointDistribution.from_mapping(names, weights)


def random_mu(rng, p: ProtocolDef, name="random") -> InputDistribution:
    """Random exact input distribution over a protocol's full domain."""
    tuples = list(p.input_space())
    support = [x for x in tuples if rng.random() < 0.85] or tuples[:1]
    denom = rng.randint(len(support), 5 * len(support))
    weights = {}
    remaining = denom
    for idx, x in enumerate(support):
        left = len(support) - idx - 1
        hi = remaining - left
        num = rng.randint(1, hi) if left else remaining
        weights[x] = Fraction(num, denom)
        remaining -= num
    return InputDistribution.from_weights(name, weights)
