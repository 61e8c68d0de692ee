"""Simulated point-to-point channels and broadcast with scheduled delivery.

Channels are authenticated and confidential: an eavesdropper's view of an
honest-endpoint message is its length only, while corrupted endpoints leak
the payload.  Broadcast payloads are visible at publish time and fan out to
every registered party in one delivery.  Delivery order is chosen by a
pluggable scheduler; every ticket delivers at most once.
"""

from dataclasses import dataclass, field

from .rng import Drbg


class ChanError(Exception):
    pass


@dataclass
class Envelope:
    ticket: bytes
    kind: str  # "chan" | "pub"
    sid: bytes
    sender: str
    recipient: str  # "*" for broadcast
    payload: bytes


@dataclass
class ViewEvent:
    kind: str
    sid: bytes
    sender: str
    recipient: str
    ticket: bytes
    length: int
    payload: bytes = field(default=None)  # set only for corrupted endpoints


class Network:
    def __init__(self, rng: Drbg):
        self._rng = rng
        self._parties = {}
        self._channels = set()
        self._pending = {}
        self._order = []
        self._delivered = set()
        self.corrupted = set()
        self.adversary_view = []
        self.all_payloads = []  # every wire byte string, for scan oracles

    def register_party(self, pid: str, handler=None):
        self._parties[pid] = handler

    def set_handler(self, pid: str, handler):
        if pid not in self._parties:
            raise ChanError("unknown party %r" % pid)
        self._parties[pid] = handler

    def corrupt(self, pid: str):
        self.corrupted.add(pid)

    def init_channel(self, sid: bytes, sender: str, recipient: str):
        self._channels.add((sid, sender, recipient))

    def _ticket(self) -> bytes:
        while True:
            t = self._rng.random_bytes(16)
            if t not in self._pending and t not in self._delivered:
                return t

    def chan_send(self, sid: bytes, sender: str, recipient: str, payload: bytes):
        if (sid, sender, recipient) not in self._channels:
            raise ChanError("channel not initialized")
        ticket = self._ticket()
        env = Envelope(ticket, "chan", sid, sender, recipient, bytes(payload))
        self._pending[ticket] = env
        self._order.append(ticket)
        self.all_payloads.append(env.payload)
        self.adversary_view.append(
            ViewEvent(
                "send", sid, sender, recipient, ticket, len(payload),
                payload=env.payload if sender in self.corrupted else None,
            )
        )
        return ticket

    def pub_publish(self, sid: bytes, sender: str, payload: bytes):
        ticket = self._ticket()
        env = Envelope(ticket, "pub", sid, sender, "*", bytes(payload))
        self._pending[ticket] = env
        self._order.append(ticket)
        self.all_payloads.append(env.payload)
        # broadcast payloads are adversary-visible at publish time
        self.adversary_view.append(
            ViewEvent("publish", sid, sender, "*", ticket, len(payload),
                      payload=env.payload)
        )
        return ticket

    def pending_tickets(self):
        return [t for t in self._order if t in self._pending]

    def deliver(self, ticket: bytes) -> bool:
        """Deliver a pending ticket; replays and unknown tickets are no-ops."""
        env = self._pending.pop(ticket, None)
        if env is None:
            return False
        self._delivered.add(ticket)
        if env.kind == "chan":
            self.adversary_view.append(
                ViewEvent(
                    "deliver", env.sid, env.sender, env.recipient, ticket,
                    len(env.payload),
                    payload=env.payload if env.recipient in self.corrupted else None,
                )
            )
            handler = self._parties.get(env.recipient)
            if handler is not None:
                handler(env)
        else:
            self.adversary_view.append(
                ViewEvent("deliver", env.sid, env.sender, "*", ticket,
                          len(env.payload), payload=env.payload)
            )
            for pid, handler in self._parties.items():
                if handler is not None:
                    handler(env)
        return True

    def run(self, scheduler, max_steps=10_000):
        steps = 0
        while steps < max_steps:
            pending = self.pending_tickets()
            ticket = scheduler.pick(pending)
            if ticket is None:
                return steps
            self.deliver(ticket)
            steps += 1
        raise ChanError("delivery loop did not quiesce")

    def export_view_json(self) -> str:
        """Adversary-view event log (what a transcript accountant sees)."""
        import json

        rows = []
        for ev in self.adversary_view:
            rows.append(
                {
                    "event": ev.kind,
                    "sid": ev.sid.hex(),
                    "sender": ev.sender,
                    "recipient": ev.recipient,
                    "ticket": ev.ticket.hex(),
                    "length": ev.length,
                    "payload": None if ev.payload is None else ev.payload.hex(),
                }
            )
        return json.dumps(rows)


class FifoScheduler:
    def pick(self, pending):
        return pending[0] if pending else None


class SeededScheduler:
    """Adversarial-but-reproducible ordering drawn from a seeded generator."""

    def __init__(self, rng: Drbg, withhold=()):
        self._rng = rng
        self._withhold = set(withhold)

    def pick(self, pending):
        live = [t for t in pending if t not in self._withhold]
        if not live:
            return None
        return live[self._rng.randint_below(len(live))]


class ScriptedScheduler:
    """Delivers pending tickets at scripted indices; None index withholds."""

    def __init__(self, indices):
        self._indices = list(indices)

    def pick(self, pending):
        if not pending:
            return None
        if self._indices:
            idx = self._indices.pop(0)
            if idx is None or idx >= len(pending):
                return None
            return pending[idx]
        return pending[0]
