"""Tests for the built-in protocols."""

import itertools

import pytest

from protolab.errors import ConfigError
from protolab.model import run, run_all, run_relaxed
from protolab.zoo import (
    get_entry,
    lift_entry,
    q_index,
    ring_parity,
    star_parity,
    xor_bits,
)


def outputs_match_family(entry):
    p = entry.protocol
    for (x, privs, pub), e in run_all(p).items():
        for i in p.players:
            if e.outputs[i - 1] != entry.family.value(i, x):
                return False
    return True


@pytest.mark.parametrize(
    "name,params",
    [
        ("ring-parity", {"k": 3, "n": 1}),
        ("ring-parity", {"k": 4, "n": 2}),
        ("star-parity", {"k": 3, "n": 2}),
        ("star-parity", {"k": 4, "n": 1}),
        ("and-opt", {}),
        ("q-index", {"k": 3, "q": 1}),
        ("q-index", {"k": 3, "q": 2}),
        ("q-index", {"k": 4, "q": 2}),
    ],
)
def test_zero_error_entries_compute_their_family(name, params):
    assert outputs_match_family(get_entry(name, **params))


def test_ring_hand_examples():
    p = ring_parity(3, 1).protocol
    e = run(p, ("1", "0", "1"), ("1", "", ""), "")
    assert [m.content for m in e.messages] == ["0", "0", "1"]
    assert e.outputs[0] == "0"
    e = run(p, ("1", "0", "1"), ("0", "", ""), "")
    assert e.outputs[0] == "0"
    assert e.total_bits == 3
    for pad in ("0", "1"):
        e = run(p, ("0", "0", "0"), (pad, "", ""), "")
        assert e.outputs[0] == "0"


def test_ring_rejects_small_k():
    with pytest.raises(ConfigError):
        ring_parity(2, 1)


def test_star_counts():
    entry = star_parity(3, 2)
    table = run_all(entry.protocol)
    assert len(table) == 64
    assert all(e.total_bits == 4 for e in table.values())


def test_and_opt_examples():
    p = get_entry("and-opt").protocol
    e = run(p, ("1", "1"))
    assert e.received_transcript(2) == "1"
    assert e.received_transcript(1) == "1"
    assert e.outputs == ("1", "1")
    e = run(p, ("0", "1"))
    assert e.received_transcript(2) == "0"
    assert e.outputs == ("0", "0")


def test_q_index_communication_and_output():
    for k, q in ((3, 1), (3, 2), (4, 2), (4, 3)):
        entry = q_index(k, q)
        p = entry.protocol
        for (x, privs, pub), e in run_all(p).items():
            assert e.total_bits == 2 * q
            assert e.outputs[k - 1] == entry.family.value(k, x)


def test_q_index_domain_excludes_duplicates():
    p = q_index(3, 2).protocol
    assert set(p.input_domain(3)) == {"01", "10"}
    with pytest.raises(ValueError, match="domain"):
        run(p, ("0", "0", "00"))


def test_q_index_parameter_validation():
    with pytest.raises(ConfigError):
        q_index(2, 1)
    with pytest.raises(ConfigError):
        q_index(3, 3)


def test_order_leak_runs():
    entry = get_entry("order-leak")
    p = entry.protocol
    runs = {}
    for x in ("0", "1"):
        e = run_relaxed(p, (x, "", "", ""))
        runs[x] = e
        assert e.outputs[1] == x
        assert all(m.content == "0" for m in e.messages)
        assert e.total_bits == 8
    # First read of player 2 comes from player 3 iff x = 0.
    assert runs["0"].reads[1][0][0][0] == 3
    assert runs["1"].reads[1][0][0][0] == 4
    # Content-only transcripts coincide.
    for i in p.players:
        assert runs["0"].received_transcript(i) == runs["1"].received_transcript(i)


def test_registry_errors():
    with pytest.raises(ConfigError, match="unknown protocol"):
        get_entry("no-such")
    with pytest.raises(ConfigError, match="no parameter"):
        get_entry("and-opt", k=5)


def test_registry_caches_entries():
    a = get_entry("ring-parity", k=3, n=1)
    b = get_entry("ring-parity", k=3, n=1)
    assert a is b


def test_lift_entry():
    entry = lift_entry(get_entry("and-opt"), 3)
    p = entry.protocol
    assert p.k == 3
    for x, y in itertools.product("01", repeat=2):
        e = run(p, (x, y, ""))
        want = "1" if x == y == "1" else "0"
        assert e.outputs == (want, want, "0")
        assert e.total_bits == 2
    assert entry.family.value(1, (x, y, "")) == want


def test_xor_bits():
    assert xor_bits("1010", "0110") == "1100"
    with pytest.raises(ValueError):
        xor_bits("10", "1")


def test_documented_expected_measures_hold():
    from protolab.measures import (
        InputDistribution, cc, ic, pic, privacy_leakage, spy_info,
        transcript_entropy,
    )

    checkers = {
        "cc": lambda p, mu, fam: cc(p),
        "ic": lambda p, mu, fam: ic(p, mu),
        "pic": lambda p, mu, fam: pic(p, mu),
        "transcript_entropy": lambda p, mu, fam: transcript_entropy(p, mu),
        "spy_info": lambda p, mu, fam: spy_info(p, mu),
        "privacy_leakage": lambda p, mu, fam: privacy_leakage(p, mu, fam),
    }
    for name, params in (
        ("ring-parity", {"k": 3, "n": 1}),
        ("star-parity", {"k": 3, "n": 2}),
        ("and-opt", {}),
    ):
        entry = get_entry(name, **params)
        mu = InputDistribution.uniform(entry.protocol)
        for key, want in entry.expected.items():
            if key not in checkers:
                continue
            got = checkers[key](entry.protocol, mu, entry.family)
            assert got == pytest.approx(want, abs=1e-9), (name, key)
