import pytest

from stardkg.rng import Drbg
from stardkg.transport import (
    ChanError,
    FifoScheduler,
    Network,
    ScriptedScheduler,
    SeededScheduler,
)

SID = b"S" * 16


def _net():
    net = Network(Drbg(1))
    inboxes = {p: [] for p in ("P1", "P2", "P3")}
    for p in inboxes:
        net.register_party(p, lambda env, p=p: inboxes[p].append(env))
    net.init_channel(SID, "P2", "P1")
    net.init_channel(SID, "P1", "P2")
    return net, inboxes


def test_send_requires_initialized_channel():
    net, _ = _net()
    with pytest.raises(ChanError):
        net.chan_send(SID, "P3", "P1", b"x")


def test_send_leaks_length_only_for_honest():
    net, _ = _net()
    net.chan_send(SID, "P2", "P1", b"secret-payload")
    ev = net.adversary_view[-1]
    assert ev.length == len(b"secret-payload")
    assert ev.payload is None


def test_corrupted_sender_leaks_payload():
    net, _ = _net()
    net.corrupt("P2")
    net.chan_send(SID, "P2", "P1", b"secret")
    assert net.adversary_view[-1].payload == b"secret"


def test_corrupted_recipient_leaks_at_delivery():
    net, _ = _net()
    t = net.chan_send(SID, "P2", "P1", b"secret")
    net.corrupt("P1")
    net.deliver(t)
    deliveries = [e for e in net.adversary_view if e.kind == "deliver"]
    assert deliveries[-1].payload == b"secret"


def test_distinct_tickets():
    net, _ = _net()
    t1 = net.chan_send(SID, "P2", "P1", b"a")
    t2 = net.chan_send(SID, "P2", "P1", b"a")
    assert t1 != t2


def test_exactly_once_delivery():
    net, inboxes = _net()
    t = net.chan_send(SID, "P2", "P1", b"m")
    assert net.deliver(t)
    assert not net.deliver(t)  # replay is a no-op
    assert not net.deliver(b"\x00" * 16)  # unknown ticket
    assert len(inboxes["P1"]) == 1


def test_out_of_order_delivery():
    net, inboxes = _net()
    t1 = net.chan_send(SID, "P2", "P1", b"first")
    t2 = net.chan_send(SID, "P2", "P1", b"second")
    net.deliver(t2)
    net.deliver(t1)
    assert [e.payload for e in inboxes["P1"]] == [b"second", b"first"]


def test_withheld_ticket_never_arrives():
    net, inboxes = _net()
    t = net.chan_send(SID, "P2", "P1", b"m")
    net.run(SeededScheduler(Drbg(2), withhold={t}))
    assert inboxes["P1"] == []
    assert t in net.pending_tickets()


def test_broadcast_fans_out_and_leaks():
    net, inboxes = _net()
    t = net.pub_publish(SID, "P2", b"public-key-bytes")
    assert net.adversary_view[-1].payload == b"public-key-bytes"
    net.deliver(t)
    for p in ("P1", "P2", "P3"):
        assert inboxes[p][-1].payload == b"public-key-bytes"


def test_honest_view_never_contains_payload_bytes():
    net, _ = _net()
    payload = b"\xfe\xed" * 20
    t = net.chan_send(SID, "P2", "P1", payload)
    net.deliver(t)
    for ev in net.adversary_view:
        if ev.kind != "publish":
            assert ev.payload is None


def test_fifo_and_scripted_schedulers():
    net, inboxes = _net()
    net.chan_send(SID, "P2", "P1", b"a")
    net.chan_send(SID, "P2", "P1", b"b")
    net.run(FifoScheduler())
    assert [e.payload for e in inboxes["P1"]] == [b"a", b"b"]

    net2, inboxes2 = _net()
    net2.chan_send(SID, "P2", "P1", b"a")
    net2.chan_send(SID, "P2", "P1", b"b")
    net2.run(ScriptedScheduler([1, 0]))
    assert [e.payload for e in inboxes2["P1"]] == [b"b", b"a"]


def test_view_export_json():
    import json

    net, _ = _net()
    t = net.chan_send(SID, "P2", "P1", b"hello")
    net.deliver(t)
    rows = json.loads(net.export_view_json())
    assert rows[0]["event"] == "send"
    assert rows[0]["length"] == 5
    assert rows[0]["payload"] is None
