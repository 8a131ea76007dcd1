"""Home-network (AuC + registry) and serving-network (VLR) actors.

The home network provisions subscribers and issues triple batches; for
enhanced subscriptions the challenges carry sequence numbers, for legacy
ones they are random.  The serving network is deliberately dumb: it queues
triples per subscriber, pops them under a configurable consumption policy,
compares an 8-octet response and picks a cipher.  Nothing here reads the
subscription mode after issuance -- the enhancement stays invisible to the
visited side.
"""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass

from . import auth_core, crypto_suite as cs
from .auth_core import AuthTriple
from .errors import (
    MalformedInputError,
    ProtocolOrderError,
    ProvisioningError,
    TripleExhaustionError,
    UnknownSubscriberError,
)
from .sim_card import SimMode, SimState

__all__ = [
    "check_imsi",
    "SubscriberRecord",
    "ConsumptionPolicy",
    "Verdict",
    "HomeNetwork",
    "ServingNetwork",
]


def check_imsi(imsi: str) -> str:
    if not isinstance(imsi, str) or len(imsi) != 15 or not imsi.isdigit():
        raise MalformedInputError(f"imsi must be 15 decimal digits, got {imsi!r}")
    return imsi


@dataclass
class SubscriberRecord:
    """AuC-side mirror of one card at provisioning time."""

    imsi: str
    ki: bytes
    ka: bytes | None
    counter: int
    mode: SimMode


class ConsumptionPolicy(enum.Enum):
    IN_ORDER = "IN_ORDER"
    RANDOM_ORDER = "RANDOM_ORDER"
    REUSE = "REUSE"


class Verdict(enum.Enum):
    AUTHENTICATED = "AUTHENTICATED"
    REJECTED = "REJECTED"


def _noop_trace(actor, msg, **fields):
    return None


class HomeNetwork:
    """Authentication centre plus subscriber registry."""

    def __init__(self, rng: random.Random, tracer=None, name="auc"):
        self.registry: dict[str, SubscriberRecord] = {}
        self.rng = rng
        self.trace = tracer or _noop_trace
        self.name = name

    def provision(
        self, imsi: str, mode: SimMode, master: bytes
    ) -> tuple[SubscriberRecord, SimState]:
        """Create matching AuC and card records for a new subscriber."""
        check_imsi(imsi)
        if imsi in self.registry:
            raise ProvisioningError(f"imsi {imsi} already provisioned")
        ki, ka = cs.derive_subscriber_keys(master, imsi)
        if mode is SimMode.LEGACY:
            ka = None
        record = SubscriberRecord(imsi=imsi, ki=ki, ka=ka, counter=0, mode=mode)
        self.registry[imsi] = record
        sim_state = SimState(imsi=imsi, ki=ki, ka=ka, counter=0, mode=mode)
        self.trace(self.name, "PROVISION", imsi=imsi, mode=mode.value)
        return record, sim_state

    def request_triples(self, imsi: str, n: int, amf: int = 0) -> list[AuthTriple]:
        """Issue a batch of n triples for the subscriber."""
        if imsi not in self.registry:
            raise UnknownSubscriberError(imsi)
        if n < 1:
            raise MalformedInputError(f"batch size must be >= 1, got {n}")
        record = self.registry[imsi]
        if record.mode is SimMode.ENHANCED:
            triples, record.counter = auth_core.generate_triples(
                record.ki, record.ka, record.counter, amf, n
            )
            self.trace(
                self.name,
                "TRIPLES_ISSUED",
                imsi=imsi,
                n=n,
                sqn_first=triples[0].sqn_hint,
                sqn_last=triples[-1].sqn_hint,
            )
        else:
            triples = [
                auth_core.make_legacy_triple(record.ki, self.rng.randbytes(cs.RAND_LEN))
                for _ in range(n)
            ]
            self.trace(self.name, "TRIPLES_ISSUED", imsi=imsi, n=n)
        return triples


class ServingNetwork:
    """Visitor location register: triple store, challenges, SRES check."""

    def __init__(
        self,
        policy: ConsumptionPolicy,
        cipher_choice: cs.CipherAlgId,
        rng: random.Random,
        tracer=None,
        name="vlr",
    ):
        self.policy = policy
        self.cipher_choice = cipher_choice
        self.rng = rng
        self.trace = tracer or _noop_trace
        self.name = name
        self.store: dict[str, deque[AuthTriple]] = {}
        self.last_issued: dict[str, AuthTriple] = {}
        self.pending: dict[str, AuthTriple] = {}

    def add_triples(self, imsi: str, triples: list[AuthTriple]):
        self.store.setdefault(imsi, deque()).extend(triples)
        self.trace(self.name, "TRIPLES_STORED", imsi=imsi, n=len(triples))

    def triple_count(self, imsi: str) -> int:
        return len(self.store.get(imsi, ()))

    def challenge(self, imsi: str) -> bytes:
        """Pick a triple per policy and send its RAND as the challenge."""
        queue = self.store.get(imsi)
        if self.policy is ConsumptionPolicy.REUSE and imsi in self.last_issued:
            triple = self.last_issued[imsi]
        elif not queue:
            raise TripleExhaustionError(f"no triples left for {imsi}")
        elif self.policy is ConsumptionPolicy.RANDOM_ORDER:
            index = self.rng.randrange(len(queue))
            queue.rotate(-index)
            triple = queue.popleft()
            queue.rotate(index)
        else:
            triple = queue.popleft()
        self.last_issued[imsi] = triple
        self.pending[imsi] = triple
        self.trace(self.name, "AUTH_CHALLENGE", imsi=imsi, rand=triple.rand.hex())
        return triple.rand

    def verify(self, imsi: str, sres: bytes) -> Verdict:
        """Compare the response against the stored expectation, nothing else."""
        if imsi not in self.pending:
            raise ProtocolOrderError(f"no outstanding challenge for {imsi}")
        triple = self.pending.pop(imsi)
        verdict = Verdict.AUTHENTICATED if sres == triple.xres else Verdict.REJECTED
        self.trace(self.name, "AUTH_RESULT", imsi=imsi, verdict=verdict.value)
        return verdict

    def select_cipher(self) -> cs.CipherAlgId:
        self.trace(self.name, "CIPHER_SELECT", alg=self.cipher_choice.value)
        return self.cipher_choice
