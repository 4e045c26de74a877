"""Executable semantics of the restricted asynchronous peer-to-peer model.

Players are numbered 1..k.  Every ordered pair of players is joined by a
FIFO link.  A player's program runs in local rounds: called with the current
view it returns the messages to send, an optional output, and the set of
players to wait for before the next round starts.  In restricted mode the
wait set is an explicit set of player indices (a pure function of the view);
in relaxed mode a program may instead wait for "any next message", which is
exactly the loophole the restricted model closes.

Executions are deterministic given inputs and tapes.  A finished execution
records, per player, the messages read (ordered by round, then sender index)
and sent (ordered by round, then recipient index), from which the various
transcript orderings are derived.  The global message order groups messages
into causal lots: the lot of the messages a player sends in some round is one
more than the largest lot among the messages it had read before that round
(and its own earlier sending rounds); inside a lot, messages are ordered
lexicographically by link.

Termination: the simulation stops when nobody can advance.  That is an error
only if some player never wrote an output or some sent message was never
read.  A player blocked forever in a wait *after* writing its output is
legal (some valid protocols leave unqueried players waiting for pings that
never come).
"""

from __future__ import annotations

import itertools
from collections import deque
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache

from .errors import (
    BudgetExceededError,
    DeadlockError,
    ModelViolationError,
    NonTerminationError,
    NotObliviousError,
    SelfDelimitingError,
)

#: Wait marker for "block until any one message arrives" (relaxed mode only).
WAIT_ANY = "any"

RESTRICTED = "restricted"
RELAXED = "relaxed"

DEFAULT_BUDGET = 1 << 16


def bitstrings(length: int) -> tuple[str, ...]:
    """All bitstrings of the given length, lexicographically ("" for 0)."""
    return tuple("".join(bits) for bits in itertools.product("01", repeat=length))


def is_bitstring(s: str) -> bool:
    return isinstance(s, str) and all(c in "01" for c in s)


def prefix_free_violation(strings: Iterable[str]) -> tuple[str, str] | None:
    """Return a (prefix, longer) witness pair if the set is not prefix-free."""
    uniq = sorted(set(strings), key=len)
    for i, short in enumerate(uniq):
        for long in uniq[i + 1 :]:
            if len(long) > len(short) and long.startswith(short):
                return (short, long)
    return None


@dataclass(frozen=True)
class Round:
    """One local round's worth of decisions, as returned by a program."""

    sends: tuple[tuple[int, str], ...] = ()
    output: str | None = None
    waits: tuple[int, ...] | str = ()
    halt: bool = False


@dataclass(frozen=True)
class View:
    """Everything player ``player`` knows: input, tapes, messages read."""

    player: int
    input: str
    private_tape: str
    public_tape: str
    reads: tuple[tuple[tuple[int, str], ...], ...] = ()

    @property
    def round(self) -> int:
        """1-based index of the local round about to run."""
        return len(self.reads) + 1

    @property
    def received(self) -> tuple[tuple[int, str], ...]:
        """All (sender, message) pairs read so far, flattened in read order."""
        return tuple(item for rnd in self.reads for item in rnd)


Program = Callable[[View], Round]


@dataclass(frozen=True)
class ProtocolDef:
    """A k-player program plus its declared domains and tape lengths."""

    name: str
    k: int
    input_domains: tuple[tuple[str, ...], ...]
    output_domains: tuple[tuple[str, ...], ...]
    private_tape_lengths: tuple[int, ...]
    public_tape_length: int
    programs: tuple[Program, ...]
    max_local_rounds: int
    mode: str = RESTRICTED

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two players")
        if self.mode not in (RESTRICTED, RELAXED):
            raise ValueError(f"unknown mode {self.mode!r}")
        for name, group in (
            ("input_domains", self.input_domains),
            ("output_domains", self.output_domains),
            ("programs", self.programs),
            ("private_tape_lengths", self.private_tape_lengths),
        ):
            if len(group) != self.k:
                raise ValueError(f"{name} must have one entry per player")
        for dom in self.input_domains + self.output_domains:
            if not dom:
                raise ValueError("empty domain")
            if len(set(dom)) != len(dom):
                raise ValueError("domain entries must be distinct")
            for v in dom:
                if not is_bitstring(v):
                    raise ValueError(f"domain value {v!r} is not a bitstring")
        for dom in self.output_domains:
            if any(v == "" for v in dom):
                raise ValueError("outputs must be non-empty strings")
        if self.max_local_rounds < 1:
            raise ValueError("max_local_rounds must be positive")
        if self.public_tape_length < 0 or any(
            n < 0 for n in self.private_tape_lengths
        ):
            raise ValueError("tape lengths must be non-negative")

    # 1-based accessors

    def input_domain(self, i: int) -> tuple[str, ...]:
        return self.input_domains[i - 1]

    def output_domain(self, i: int) -> tuple[str, ...]:
        return self.output_domains[i - 1]

    def program(self, i: int) -> Program:
        return self.programs[i - 1]

    def private_len(self, i: int) -> int:
        return self.private_tape_lengths[i - 1]

    @property
    def players(self) -> range:
        return range(1, self.k + 1)

    @property
    def total_tape_bits(self) -> int:
        return sum(self.private_tape_lengths) + self.public_tape_length

    def input_space(self):
        return itertools.product(*self.input_domains)

    def tape_space(self):
        parts = [bitstrings(n) for n in self.private_tape_lengths]
        pubs = bitstrings(self.public_tape_length)
        return itertools.product(itertools.product(*parts), pubs)

    def execution_count(self) -> int:
        n = 1
        for dom in self.input_domains:
            n *= len(dom)
        return n << self.total_tape_bits

    @property
    def deterministic(self) -> bool:
        return self.total_tape_bits == 0


@dataclass(frozen=True)
class Message:
    """One delivered message, placed in the global (lot) order."""

    sender: int
    receiver: int
    content: str
    sender_round: int
    receiver_round: int
    link_index: int
    lot: int
    global_index: int


PerRound = tuple[tuple[tuple[int, str], ...], ...]


@dataclass(frozen=True)
class Execution:
    """Full record of one deterministic run."""

    protocol: ProtocolDef
    inputs: tuple[str, ...]
    private_tapes: tuple[str, ...]
    public_tape: str
    outputs: tuple[str, ...]
    reads: tuple[PerRound, ...]
    sends: tuple[PerRound, ...]
    patterns: tuple[tuple[tuple[tuple[int, ...] | str, tuple[int, ...]], ...], ...]
    messages: tuple[Message, ...]
    total_bits: int

    def key(self) -> tuple:
        return (self.inputs, self.private_tapes, self.public_tape)

    # -- transcript orderings ----------------------------------------------

    def received_transcript(self, i: int) -> str:
        """Pi_i: messages read by player i, by round then sender index."""
        return "".join(m for rnd in self.reads[i - 1] for _, m in rnd)

    def sent_transcript(self, i: int) -> str:
        """Messages sent by player i, by round then recipient index."""
        return "".join(m for rnd in self.sends[i - 1] for _, m in rnd)

    def bidirectional_transcript(self, i: int) -> str:
        """Received-then-sent concatenation (the base model's ordering)."""
        return self.received_transcript(i) + self.sent_transcript(i)

    def round_interleaved_transcript(self, i: int) -> str:
        """Per round: sent messages then read messages (compression ordering)."""
        sends = self.sends[i - 1]
        reads = self.reads[i - 1]
        parts = []
        for r in range(max(len(sends), len(reads))):
            if r < len(sends):
                parts.extend(m for _, m in sends[r])
            if r < len(reads):
                parts.extend(m for _, m in reads[r])
        return "".join(parts)

    def full_transcript(self) -> str:
        """Pi: concatenation of all Pi_i by player index."""
        return "".join(
            self.received_transcript(i) for i in self.protocol.players
        )

    def link_log(self, sender: int, receiver: int) -> tuple[str, ...]:
        """Messages sent on one directional link, in FIFO order."""
        out = [
            m.content
            for m in sorted(
                (m for m in self.messages if m.sender == sender and m.receiver == receiver),
                key=lambda m: m.link_index,
            )
        ]
        return tuple(out)


def _validate_run_args(p, inputs, private_tapes, public_tape):
    inputs = tuple(inputs)
    if private_tapes is None:
        private_tapes = tuple("" for _ in range(p.k))
    else:
        private_tapes = tuple(private_tapes)
    if public_tape is None:
        public_tape = ""
    if len(inputs) != p.k:
        raise ValueError("need one input per player")
    for i in p.players:
        if inputs[i - 1] not in p.input_domain(i):
            raise ValueError(f"input {inputs[i-1]!r} not in player {i}'s domain")
        tape = private_tapes[i - 1]
        if not is_bitstring(tape) or len(tape) != p.private_len(i):
            raise ValueError(f"player {i} expects a {p.private_len(i)}-bit tape")
    if not is_bitstring(public_tape) or len(public_tape) != p.public_tape_length:
        raise ValueError(f"public tape must have {p.public_tape_length} bits")
    return inputs, private_tapes, public_tape


def _execute(p, inputs, private_tapes, public_tape, relaxed, schedule):
    inputs, private_tapes, public_tape = _validate_run_args(
        p, inputs, private_tapes, public_tape
    )
    k = p.k
    channels = {
        (s, r): deque() for s in p.players for r in p.players if s != r
    }
    reads = [[] for _ in range(k)]
    sends = [[] for _ in range(k)]
    patterns = [[] for _ in range(k)]
    outputs: list[str | None] = [None] * k
    status = ["ready"] * k  # ready | waiting | halted
    waiting_on: list = [None] * k
    read_clock = 0
    read_counts = {link: 0 for link in channels}
    recv_round = {}  # (sender, receiver, link_index) -> (reader round, clock)
    schedule_iter = iter(schedule or ())

    def read_one(s, i):
        nonlocal read_clock
        content, _sender_round = channels[(s, i)].popleft()
        link_index = read_counts[(s, i)]
        read_counts[(s, i)] += 1
        read_clock += 1
        recv_round[(s, i, link_index)] = (len(reads[i - 1]) + 1, read_clock)
        return (s, content)

    def advance(i) -> bool:
        """Run player i as far as it can go; return True if anything moved."""
        moved = False
        while True:
            if status[i - 1] == "halted":
                return moved
            if status[i - 1] == "waiting":
                w = waiting_on[i - 1]
                if w == WAIT_ANY:
                    avail = sorted(
                        s for s in p.players if s != i and channels[(s, i)]
                    )
                    if not avail:
                        return moved
                    pick = avail[0]
                    for cand in schedule_iter:
                        if cand in avail:
                            pick = cand
                            break
                    round_reads = (read_one(pick, i),)
                else:
                    if not all(channels[(s, i)] for s in w):
                        return moved
                    round_reads = tuple(read_one(s, i) for s in sorted(w))
                reads[i - 1].append(round_reads)
                status[i - 1] = "ready"
                moved = True
            # status is "ready": run the next local round
            if len(patterns[i - 1]) >= p.max_local_rounds:
                raise NonTerminationError(
                    f"player {i} exceeded {p.max_local_rounds} local rounds"
                )
            view = View(
                player=i,
                input=inputs[i - 1],
                private_tape=private_tapes[i - 1],
                public_tape=public_tape,
                reads=tuple(reads[i - 1]),
            )
            act = p.program(i)(view)
            if not isinstance(act, Round):
                raise ModelViolationError(
                    f"player {i}'s program returned {type(act).__name__}"
                )
            recipients = []
            for q, content in act.sends:
                if q == i or q not in p.players:
                    raise ModelViolationError(
                        f"player {i} sends to invalid recipient {q}"
                    )
                if q in recipients:
                    raise ModelViolationError(
                        f"player {i} sends twice to {q} in one round"
                    )
                if not is_bitstring(content) or not content:
                    raise ModelViolationError(
                        f"player {i} sends a non-bitstring or empty message"
                    )
                recipients.append(q)
            round_no = view.round
            round_sends = tuple(sorted(act.sends, key=lambda t: t[0]))
            for q, content in round_sends:
                channels[(i, q)].append((content, round_no))
            sends[i - 1].append(round_sends)
            if act.output is not None:
                if outputs[i - 1] is not None:
                    raise ModelViolationError(f"player {i} wrote output twice")
                if act.output not in p.output_domain(i):
                    raise ModelViolationError(
                        f"player {i} output {act.output!r} outside its domain"
                    )
                outputs[i - 1] = act.output
            if act.waits == WAIT_ANY:
                if not relaxed:
                    raise ModelViolationError(
                        "wait-any is only available in relaxed mode; "
                        "restricted wait sets must be view-determined"
                    )
                waits_norm = WAIT_ANY
            else:
                waits_norm = tuple(sorted(set(act.waits)))
                for s in waits_norm:
                    if s == i or s not in p.players:
                        raise ModelViolationError(
                            f"player {i} waits on invalid player {s}"
                        )
            patterns[i - 1].append((waits_norm, tuple(q for q, _ in round_sends)))
            moved = True
            if act.halt:
                status[i - 1] = "halted"
                return moved
            if waits_norm == ():
                reads[i - 1].append(())
                continue
            status[i - 1] = "waiting"
            waiting_on[i - 1] = waits_norm

    progress = True
    while progress:
        progress = False
        for i in p.players:
            if advance(i):
                progress = True

    missing = [i for i in p.players if outputs[i - 1] is None]
    if missing:
        raise DeadlockError(
            f"execution stalled with no output from player(s) {missing}"
        )
    stuck = {link: len(q) for link, q in channels.items() if q}
    if stuck:
        raise DeadlockError(f"unread messages left in transit: {stuck}")

    return _finish_execution(
        p, inputs, private_tapes, public_tape, outputs, reads, sends,
        patterns, recv_round, relaxed,
    )


def _finish_execution(
    p, inputs, private_tapes, public_tape, outputs, reads, sends,
    patterns, recv_round, relaxed,
):
    # Collect raw message records: (sender, receiver, content, sender_round,
    # link_index), with link positions assigned in FIFO (send) order.
    link_pos = {}
    raw = []
    for i in p.players:
        for r, round_sends in enumerate(sends[i - 1], start=1):
            for q, content in round_sends:
                pos = link_pos.get((i, q), 0)
                link_pos[(i, q)] = pos + 1
                raw.append((i, q, content, r, pos))

    if relaxed:
        # No lot structure in relaxed mode; order messages by read chronology.
        def clock(rec):
            return recv_round[(rec[0], rec[1], rec[4])][1]

        ordered = sorted(raw, key=clock)
        lots = {id(rec): n + 1 for n, rec in enumerate(ordered)}
    else:
        lot_of_node = _assign_lot_numbers(p, reads, sends, recv_round, raw)
        ordered = sorted(
            raw, key=lambda rec: (lot_of_node[(rec[0], rec[3])], (rec[0], rec[1]))
        )
        lots = {id(rec): lot_of_node[(rec[0], rec[3])] for rec in ordered}
        seen_links = {}
        for rec in ordered:
            lot = lots[id(rec)]
            if (lot, rec[0], rec[1]) in seen_links:
                raise ModelViolationError(
                    "two messages on one link were assigned to the same lot"
                )
            seen_links[(lot, rec[0], rec[1])] = True

    messages = tuple(
        Message(
            sender=s,
            receiver=q,
            content=content,
            sender_round=r,
            receiver_round=recv_round[(s, q, pos)][0],
            link_index=pos,
            lot=lots[id(rec)],
            global_index=g,
        )
        for g, rec in enumerate(ordered, start=1)
        for s, q, content, r, pos in (rec,)
    )
    total_bits = sum(len(m.content) for m in messages)
    e = Execution(
        protocol=p,
        inputs=inputs,
        private_tapes=private_tapes,
        public_tape=public_tape,
        outputs=tuple(outputs),
        reads=tuple(tuple(r) for r in reads),
        sends=tuple(tuple(s) for s in sends),
        patterns=tuple(tuple(pt) for pt in patterns),
        messages=messages,
        total_bits=total_bits,
    )
    if sum(len(e.received_transcript(i)) for i in p.players) != total_bits:
        raise ModelViolationError("transcript length accounting mismatch")
    return e


def _assign_lot_numbers(p, reads, sends, recv_round, raw):
    """Lot number per (sender, sending round) node, by causal level."""
    send_rounds = {}
    for i in p.players:
        send_rounds[i] = [
            r for r, rs in enumerate(sends[i - 1], start=1) if rs
        ]
    # For dependency lookups: which (sender, sender_round) produced the
    # message player i read at position j of its reads.
    source = {}
    for s, q, content, r, pos in raw:
        reader_round = recv_round[(s, q, pos)][0]
        source.setdefault((q, reader_round), []).append((s, r))

    lot: dict[tuple[int, int], int] = {}

    def resolve(node, stack=()):
        if node in lot:
            return lot[node]
        if node in stack:
            raise ModelViolationError("causality cycle in message ordering")
        i, r = node
        deps = []
        for r2 in send_rounds[i]:
            if r2 < r:
                deps.append((i, r2))
        for rr in range(1, r):
            deps.extend(source.get((i, rr), ()))
        value = 1 + max(
            (resolve(d, stack + (node,)) for d in deps), default=0
        )
        lot[node] = value
        return value

    for i in p.players:
        for r in send_rounds[i]:
            resolve((i, r))
    return lot


def run(
    p: ProtocolDef,
    inputs: Sequence[str],
    private_tapes: Sequence[str] | None = None,
    public_tape: str | None = None,
) -> Execution:
    """Run a restricted-mode protocol to completion, deterministically."""
    if p.mode != RESTRICTED:
        raise ModelViolationError(
            f"{p.name}: run() requires restricted mode; use run_relaxed()"
        )
    return _execute(p, inputs, private_tapes, public_tape, relaxed=False,
                    schedule=None)


def run_relaxed(
    p: ProtocolDef,
    inputs: Sequence[str],
    private_tapes: Sequence[str] | None = None,
    public_tape: str | None = None,
    schedule: Sequence[int] | None = None,
) -> Execution:
    """Run a relaxed-mode protocol under an adversarial delivery order.

    ``schedule`` lists sender indices consulted whenever a wait-any read has
    several messages available; entries not currently available are skipped,
    and the lowest sender index is the fallback.
    """
    if p.mode != RELAXED:
        raise ModelViolationError(f"{p.name}: protocol is not in relaxed mode")
    return _execute(p, inputs, private_tapes, public_tape, relaxed=True,
                    schedule=schedule)


@dataclass
class ExecutionTable:
    """Every execution of a protocol, plus whole-space certifications."""

    protocol: ProtocolDef
    executions: dict[tuple, Execution]
    codebooks: dict[tuple[int, int, int], tuple[str, ...]]

    def __len__(self):
        return len(self.executions)

    def get(self, inputs, private_tapes=None, public_tape=None) -> Execution:
        inputs, private_tapes, public_tape = _validate_run_args(
            self.protocol, inputs, private_tapes, public_tape
        )
        return self.executions[(inputs, private_tapes, public_tape)]

    def values(self):
        return self.executions.values()

    def items(self):
        return self.executions.items()


@lru_cache(maxsize=None)
def _enumerate_all(p: ProtocolDef) -> ExecutionTable:
    executions = {}
    for x in p.input_space():
        for privs, pub in p.tape_space():
            e = _execute(p, x, privs, pub, relaxed=False, schedule=None)
            executions[(tuple(x), tuple(privs), pub)] = e
    codebooks: dict[tuple[int, int, int], set[str]] = {}
    for e in executions.values():
        for m in e.messages:
            codebooks.setdefault((m.sender, m.receiver, m.link_index), set()).add(
                m.content
            )
    frozen = {}
    for key, contents in codebooks.items():
        witness = prefix_free_violation(contents)
        if witness:
            raise SelfDelimitingError(
                f"messages at link {key[0]}->{key[1]} position {key[2]} are "
                f"not prefix-free: {witness[0]!r} prefixes {witness[1]!r}"
            )
        frozen[key] = tuple(sorted(contents))
    return ExecutionTable(p, executions, frozen)


def run_all(p: ProtocolDef, budget: int | None = DEFAULT_BUDGET) -> ExecutionTable:
    """Enumerate every (input, tape) execution and certify the whole space.

    Certifies termination (every run completes), the self-delimiting
    invariant (per-position codebooks are prefix-free), and output validity.
    """
    if p.mode != RESTRICTED:
        raise ModelViolationError(
            f"{p.name}: exhaustive enumeration requires restricted mode"
        )
    required = p.execution_count()
    if budget is not None and required > budget:
        raise BudgetExceededError(required, budget)
    return _enumerate_all(p)


@dataclass(frozen=True)
class ObliviousWitness:
    """Two executions on which a wait- or send-set differs."""

    player: int
    round: int
    kind: str
    value_a: object
    value_b: object
    key_a: tuple
    key_b: tuple

    def describe(self) -> str:
        return (
            f"player {self.player}, round {self.round}: {self.kind} is "
            f"{self.value_a!r} on {self.key_a} but {self.value_b!r} on {self.key_b}"
        )


def is_oblivious(
    p: ProtocolDef, budget: int | None = DEFAULT_BUDGET
) -> tuple[bool, ObliviousWitness | None]:
    """Check that wait- and send-sets depend only on (player, round)."""
    table = run_all(p, budget)
    items = list(table.items())
    ref_key, ref = items[0]
    for key, e in items[1:]:
        for i in p.players:
            a, b = ref.patterns[i - 1], e.patterns[i - 1]
            for r in range(max(len(a), len(b))):
                pa = a[r] if r < len(a) else None
                pb = b[r] if r < len(b) else None
                if pa == pb:
                    continue
                if pa is None or pb is None:
                    kind, va, vb = "round structure", pa, pb
                elif pa[0] != pb[0]:
                    kind, va, vb = "wait set", pa[0], pb[0]
                else:
                    kind, va, vb = "send set", pa[1], pb[1]
                return False, ObliviousWitness(
                    player=i, round=r + 1, kind=kind,
                    value_a=va, value_b=vb, key_a=ref_key, key_b=key,
                )
    return True, None


def assign_lots(p: ProtocolDef, e: Execution) -> tuple[Message, ...]:
    """The lot-ordered global message list of a completed execution."""
    if p.mode != RESTRICTED:
        raise ModelViolationError("lot assignment is defined for restricted mode")
    return e.messages


# ---------------------------------------------------------------------------
# Fixed structure of an oblivious protocol (used by compression and products)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParsedEvent:
    """One message of a parsed per-player transcript."""

    global_index: int
    direction: str  # "s" or "r"
    peer: int
    link_index: int
    start: int
    end: int
    content: str


@dataclass
class ObliviousStructure:
    """Everything about an oblivious protocol that is input-independent."""

    protocol: ProtocolDef
    table: ExecutionTable
    patterns: tuple
    lot_of_round: dict[tuple[int, int], int]
    max_lot: int
    links_in_lot: dict[int, tuple[tuple[int, int], ...]]
    global_index: dict[tuple[int, int, int], int]
    events: dict[int, tuple[tuple[int, str, int, int], ...]]
    cc: int

    @classmethod
    def build(cls, p: ProtocolDef, budget: int | None = DEFAULT_BUDGET):
        ok, witness = is_oblivious(p, budget)
        if not ok:
            raise NotObliviousError(
                f"{p.name} has an input-dependent communication pattern "
                f"({witness.describe()})"
            )
        table = run_all(p, budget)
        ref = next(iter(table.values()))
        lot_of_round = {}
        links_in_lot: dict[int, list] = {}
        gidx = {}
        for m in ref.messages:
            lot_of_round[(m.sender, m.sender_round)] = m.lot
            links_in_lot.setdefault(m.lot, []).append((m.sender, m.receiver))
            gidx[(m.sender, m.receiver, m.link_index)] = m.global_index
        for e in table.values():
            if [
                (m.sender, m.receiver, m.link_index, m.lot, m.global_index)
                for m in e.messages
            ] != [
                (m.sender, m.receiver, m.link_index, m.lot, m.global_index)
                for m in ref.messages
            ]:
                raise NotObliviousError(
                    f"{p.name}: lot structure varies across executions"
                )
        events = {}
        for i in p.players:
            ev = []
            send_pos = {}
            read_pos = {}
            n_rounds = len(ref.patterns[i - 1])
            for r in range(1, n_rounds + 1):
                if r <= len(ref.sends[i - 1]):
                    for q, _ in ref.sends[i - 1][r - 1]:
                        pos = send_pos.get(q, 0)
                        send_pos[q] = pos + 1
                        ev.append((gidx[(i, q, pos)], "s", q, pos))
                if r <= len(ref.reads[i - 1]):
                    for s, _ in ref.reads[i - 1][r - 1]:
                        pos = read_pos.get(s, 0)
                        read_pos[s] = pos + 1
                        ev.append((gidx[(s, i, pos)], "r", s, pos))
            indices = [t[0] for t in ev]
            if indices != sorted(indices):
                raise ModelViolationError(
                    "per-player transcript order disagrees with the global order"
                )
            events[i] = tuple(ev)
        cc = max(e.total_bits for e in table.values())
        return cls(
            protocol=p,
            table=table,
            patterns=ref.patterns,
            lot_of_round=lot_of_round,
            max_lot=max(links_in_lot, default=0),
            links_in_lot={
                lot: tuple(sorted(links)) for lot, links in links_in_lot.items()
            },
            global_index=gidx,
            events=events,
            cc=cc,
        )

    def decode_message(self, sender: int, receiver: int, pos: int,
                       bits: str, offset: int) -> str | None:
        """Unique prefix-free codeword starting at ``offset``, if complete."""
        book = self.table.codebooks.get((sender, receiver, pos))
        if book is None:
            raise ModelViolationError(
                f"no codebook for link {sender}->{receiver} position {pos}"
            )
        for word in book:
            if bits.startswith(word, offset):
                return word
        return None

    def parse_transcript(self, i: int, t: str) -> tuple[ParsedEvent, ...]:
        """Split a round-interleaved transcript of player i into messages."""
        out = []
        cursor = 0
        for g, direction, peer, pos in self.events[i]:
            link = (i, peer, pos) if direction == "s" else (peer, i, pos)
            word = self.decode_message(link[0], link[1], link[2], t, cursor)
            if word is None:
                raise ModelViolationError(
                    f"transcript of player {i} is unparseable at bit {cursor}"
                )
            out.append(
                ParsedEvent(g, direction, peer, pos, cursor, cursor + len(word), word)
            )
            cursor += len(word)
        if cursor != len(t):
            raise ModelViolationError(
                f"transcript of player {i} has {len(t) - cursor} trailing bits"
            )
        return tuple(out)


# ---------------------------------------------------------------------------
# Replay helpers
# ---------------------------------------------------------------------------


@dataclass
class ReplayState:
    """Result of replaying one player's program against message streams."""

    rounds: list  # per executed round: (sends, reads)
    output: str | None
    halted: bool
    waiting_on: tuple | None
    consumed: dict  # sender -> number of stream messages consumed


def replay_program(
    program: Program,
    player: int,
    input_value: str,
    private_tape: str,
    public_tape: str,
    streams: dict[int, Sequence[str]],
    max_rounds: int,
) -> ReplayState:
    """Drive one player's program as far as the given messages allow.

    ``streams`` maps sender index to the FIFO list of messages available on
    that link.  The replay stops when the program halts or its wait set asks
    for a message that is not (yet) in the streams.
    """
    consumed = {s: 0 for s in streams}
    reads: list[tuple[tuple[int, str], ...]] = []
    rounds = []
    output = None
    waiting: tuple | None = None
    while True:
        if waiting is not None:
            if not all(
                consumed.get(s, 0) < len(streams.get(s, ())) for s in waiting
            ):
                return ReplayState(rounds, output, False, waiting, consumed)
            round_reads = []
            for s in sorted(waiting):
                round_reads.append((s, streams[s][consumed[s]]))
                consumed[s] = consumed.get(s, 0) + 1
            reads.append(tuple(round_reads))
            waiting = None
        if len(rounds) >= max_rounds:
            raise NonTerminationError(
                f"replayed player {player} exceeded {max_rounds} rounds"
            )
        view = View(
            player=player,
            input=input_value,
            private_tape=private_tape,
            public_tape=public_tape,
            reads=tuple(reads),
        )
        act = program(view)
        rounds.append((tuple(sorted(act.sends, key=lambda t: t[0])), view.round))
        if act.output is not None:
            if output is not None:
                raise ModelViolationError(
                    f"replayed player {player} wrote output twice"
                )
            output = act.output
        if act.halt:
            return ReplayState(rounds, output, True, None, consumed)
        if act.waits == WAIT_ANY:
            raise ModelViolationError("replay supports restricted wait sets only")
        waits = tuple(sorted(set(act.waits)))
        if waits == ():
            reads.append(())
            continue
        waiting = waits


def decode_received_transcript(
    struct_or_table,
    p: ProtocolDef,
    i: int,
    input_value: str,
    private_tape: str,
    public_tape: str,
    transcript: str,
) -> tuple[tuple[int, str], ...]:
    """Replay Pi_i through the player's wait sets, decoding message
    boundaries with the per-position prefix-free codebooks.

    Returns the reconstructed (sender, message) read events; raises if the
    transcript cannot be decoded or leaves trailing bits.
    """
    codebooks = (
        struct_or_table.codebooks
        if isinstance(struct_or_table, ExecutionTable)
        else struct_or_table.table.codebooks
    )
    read_pos: dict[int, int] = {}
    cursor = 0
    reads: list[tuple[tuple[int, str], ...]] = []
    events: list[tuple[int, str]] = []
    rounds = 0
    waiting: tuple | None = None
    while True:
        if waiting is not None:
            round_reads = []
            for s in sorted(waiting):
                pos = read_pos.get(s, 0)
                book = codebooks.get((s, i, pos), ())
                match = [w for w in book if transcript.startswith(w, cursor)]
                if len(match) != 1:
                    raise ModelViolationError(
                        f"transcript of player {i} is not uniquely decodable "
                        f"at bit {cursor} (link {s}->{i} position {pos})"
                    )
                word = match[0]
                cursor += len(word)
                read_pos[s] = pos + 1
                round_reads.append((s, word))
                events.append((s, word))
            reads.append(tuple(round_reads))
            waiting = None
        if rounds >= p.max_local_rounds:
            raise NonTerminationError("decode exceeded the round bound")
        view = View(i, input_value, private_tape, public_tape, tuple(reads))
        act = p.program(i)(view)
        rounds += 1
        if act.halt:
            break
        if act.waits == WAIT_ANY:
            raise ModelViolationError("decoding requires restricted wait sets")
        waits = tuple(sorted(set(act.waits)))
        if waits == ():
            reads.append(())
            continue
        if not all(
            codebooks.get((s, i, read_pos.get(s, 0)))
            and any(
                transcript.startswith(w, cursor)
                for w in codebooks[(s, i, read_pos.get(s, 0))]
            )
            for s in waits
        ):
            # Blocked forever (legal when the transcript is exhausted).
            break
        waiting = waits
    if cursor != len(transcript):
        raise ModelViolationError(
            f"transcript of player {i} has {len(transcript) - cursor} "
            "undecoded trailing bits"
        )
    return tuple(events)
