"""Table-driven protocol trees: a JSON format for small sequential protocols.

Format (field names are normative for the CLI):

    {
      "name": "optional identifier",
      "k": 2,
      "input_bits": [1, 1],
      "tape_bits": {"private": [0, 0], "public": 0},
      "tree": {
        "sender": 1, "receiver": 2, "msg_bits": 1,
        "message_table": {"0": "0", "1": "1"},
        "children": {
          "0": {"outputs": ["0", "0"]},
          "1": {"sender": 2, "receiver": 1, "msg_bits": 1, ...}
        }
      }
    }

Internal nodes carry (sender, receiver, msg_bits) plus a ``message_table``
mapping the sender's local view key to the message it sends there; edges are
keyed by message value; leaves carry per-player outputs.  The view key is
the sender's input when the protocol declares no tape bits at all, and
``"input:private:public"`` otherwise.

The compiler turns the tree into per-player programs.  A player tracks the
set of tree positions consistent with what it has itself seen and done:
its own sends follow its message table, its reads consume its received
messages in order, and nodes between other players fan out over all
branches.  It acts when every consistent position agrees on its role:
send the (necessarily unique) table value, wait on the (necessarily unique)
next sender, or halt at leaves.  The player writes its output at the first
round where all leaves still reachable agree on it, which lets a player
finish early on branches that never involve it again.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, ModelViolationError
from .model import ProtocolDef, Round, View, bitstrings


@dataclass
class _Node:
    index: int
    sender: int | None
    receiver: int | None
    msg_bits: int | None
    message_table: dict | None
    children: dict | None
    outputs: tuple[str, ...] | None
    depth: int

    @property
    def is_leaf(self) -> bool:
        return self.outputs is not None


def _parse_tree(spec: dict, k: int, depth: int, nodes: list) -> _Node:
    index = len(nodes)
    nodes.append(None)
    if "outputs" in spec:
        outputs = tuple(spec["outputs"])
        if len(outputs) != k:
            raise ConfigError(f"leaf needs {k} outputs, got {len(outputs)}")
        node = _Node(index, None, None, None, None, None, outputs, depth)
    else:
        for key in ("sender", "receiver", "msg_bits", "message_table", "children"):
            if key not in spec:
                raise ConfigError(f"tree node is missing field {key!r}")
        sender, receiver = spec["sender"], spec["receiver"]
        bits = spec["msg_bits"]
        if not (1 <= sender <= k and 1 <= receiver <= k) or sender == receiver:
            raise ConfigError(f"bad sender/receiver pair ({sender}, {receiver})")
        if bits < 1:
            raise ConfigError("msg_bits must be positive")
        table = dict(spec["message_table"])
        children = {
            value: _parse_tree(child, k, depth + 1, nodes)
            for value, child in spec["children"].items()
        }
        for value in table.values():
            if len(value) != bits or any(c not in "01" for c in value):
                raise ConfigError(
                    f"message value {value!r} is not a {bits}-bit string"
                )
            if value not in children:
                raise ConfigError(f"message value {value!r} has no child")
        node = _Node(index, sender, receiver, bits, table, children, None, depth)
    nodes[index] = node
    return node


@dataclass(frozen=True)
class _Decision:
    kind: str  # "send" | "wait" | "halt"
    receiver: int | None
    value: str | None
    sender: int | None
    determined: str | None  # unique reachable output for this player, if any


class _TreeMachine:
    """Shared immutable data for the per-player compiled programs."""

    def __init__(self, spec: dict, source: str):
        for key in ("k", "input_bits", "tape_bits", "tree"):
            if key not in spec:
                raise ConfigError(f"protocol tree is missing field {key!r}")
        self.k = spec["k"]
        if self.k < 2:
            raise ConfigError("a protocol tree needs at least 2 players")
        self.input_bits = list(spec["input_bits"])
        tape = spec["tape_bits"]
        self.private_bits = list(tape["private"])
        self.public_bits = tape["public"]
        if len(self.input_bits) != self.k or len(self.private_bits) != self.k:
            raise ConfigError("input_bits/tape_bits must list every player")
        self.nodes: list[_Node] = []
        self.root = _parse_tree(spec["tree"], self.k, 0, self.nodes)
        self.has_tapes = sum(self.private_bits) + self.public_bits > 0
        self.name = spec.get("name") or source
        self._validate_tables()

    def _validate_tables(self):
        for node in self.nodes:
            if node.is_leaf:
                continue
            tapes = (
                bitstrings(self.private_bits[node.sender - 1])
                if self.has_tapes
                else ("",)
            )
            pubs = bitstrings(self.public_bits) if self.has_tapes else ("",)
            for inp in bitstrings(self.input_bits[node.sender - 1]):
                for priv in tapes:
                    for pub in pubs:
                        key = self.view_key(inp, priv, pub)
                        if key not in node.message_table:
                            raise ConfigError(
                                f"message_table of node {node.index} is "
                                f"missing view key {key!r}"
                            )

    def view_key(self, inp: str, priv: str, pub: str) -> str:
        if not self.has_tapes:
            return inp
        return f"{inp}:{priv}:{pub}"

    def reachable_outputs(self, player: int, node: _Node) -> set[str]:
        out = set()

        def walk(n: _Node):
            if n.is_leaf:
                out.add(n.outputs[player - 1])
            else:
                for child in n.children.values():
                    walk(child)

        walk(node)
        return out

    def _frontier(self, player, key, received, send_budget):
        """Consistent stop positions given the player's history.

        ``send_budget`` is how many of its own sends the player has already
        performed; the walk stops at the next own-send node once the budget
        is used up.
        """
        points: list[_Node] = []

        def walk(node: _Node, consumed: int, sent: int):
            if node.is_leaf:
                if consumed == len(received):
                    points.append(node)
                return
            if node.sender == player:
                if sent < send_budget:
                    walk(node.children[node.message_table[key]],
                         consumed, sent + 1)
                else:
                    if consumed == len(received):
                        points.append(node)
                return
            if node.receiver == player:
                if consumed < len(received):
                    sender, value = received[consumed]
                    if sender == node.sender and value in node.children:
                        walk(node.children[value], consumed + 1, sent)
                    return
                points.append(node)
                return
            for child in node.children.values():
                walk(child, consumed, sent)

        walk(self.root, 0, 0)
        if not points:
            raise ModelViolationError(
                f"player {player} observed messages inconsistent with the tree"
            )
        return points

    def _decide(self, player, key, received, send_budget) -> _Decision:
        points = self._frontier(player, key, received, send_budget)
        outputs = set()
        for node in points:
            outputs |= self.reachable_outputs(player, node)
        determined = outputs.pop() if len(outputs) == 1 else None

        leaves = [n for n in points if n.is_leaf]
        own = [n for n in points if not n.is_leaf and n.sender == player]
        waits = [n for n in points if not n.is_leaf and n.receiver == player]

        if own:
            if leaves or waits:
                raise ModelViolationError(
                    f"player {player} cannot tell whether it must send "
                    "(mixed roles across indistinguishable branches)"
                )
            moves = {(n.receiver, n.message_table[key]) for n in own}
            if len(moves) != 1:
                raise ModelViolationError(
                    f"player {player} would send different messages on "
                    "branches it cannot distinguish"
                )
            receiver, value = moves.pop()
            return _Decision("send", receiver, value, None, determined)
        if waits:
            senders = {n.sender for n in waits}
            if len(senders) != 1:
                raise ModelViolationError(
                    f"player {player} cannot form a wait set: possible "
                    f"senders {sorted(senders)}"
                )
            return _Decision("wait", None, None, senders.pop(), determined)
        return _Decision("halt", None, None, None, determined)

    def program(self, player: int):
        def prog(view: View) -> Round:
            key = self.view_key(view.input, view.private_tape, view.public_tape)
            # Replay earlier rounds to recover how many sends this player
            # has performed and whether its output is already written.
            sent = 0
            wrote = False
            for j in range(len(view.reads)):
                received = tuple(
                    item for rnd in view.reads[:j] for item in rnd
                )
                past = self._decide(player, key, received, sent)
                if past.determined is not None:
                    wrote = True
                if past.kind == "send":
                    sent += 1
            now = self._decide(player, key, view.received, sent)
            output = now.determined if (now.determined is not None and not wrote) else None
            if now.kind == "send":
                return Round(
                    sends=((now.receiver, now.value),), output=output, waits=()
                )
            if now.kind == "wait":
                return Round(output=output, waits=(now.sender,))
            if output is None and now.determined is None:
                raise ModelViolationError(
                    f"player {player} reached leaves with conflicting outputs"
                )
            return Round(output=output, halt=True)

        return prog


def protocol_from_dict(spec: dict, source: str = "tree") -> ProtocolDef:
    """Compile a protocol-tree dictionary into an executable protocol."""
    machine = _TreeMachine(spec, source)
    k = machine.k
    output_domains = tuple(
        tuple(sorted(machine.reachable_outputs(i, machine.root)))
        for i in range(1, k + 1)
    )
    max_depth = max(node.depth for node in machine.nodes)
    return ProtocolDef(
        name=machine.name,
        k=k,
        input_domains=tuple(bitstrings(b) for b in machine.input_bits),
        output_domains=output_domains,
        private_tape_lengths=tuple(machine.private_bits),
        public_tape_length=machine.public_bits,
        programs=tuple(machine.program(i) for i in range(1, k + 1)),
        max_local_rounds=2 * max_depth + 4,
    )


def load_protocol(path: str | Path) -> ProtocolDef:
    """Load a protocol-tree JSON file."""
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load protocol tree {path}: {exc}") from exc
    return protocol_from_dict(spec, source=path.stem)
