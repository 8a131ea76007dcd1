"""Construction and verification of sequence-number-bearing challenges.

The home network replaces the random 128-bit challenge with

    RAND = ((AMF || SQN) xor AK) || MAC
    MAC  = f1_ka(AMF || SQN)          AK = f5_ka(MAC)

where AMF is a 16-bit management field and SQN a 48-bit monotone sequence
number.  A SIM holding Ka can strip the mask, recompute the tag and check
freshness against its stored counter, authenticating the network without
the serving infrastructure noticing anything: the challenge still looks
random and SRES/Kc are still computed over the full 16 octets.

All operations here are pure; counter state lives with the callers.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from . import crypto_suite as cs
from .errors import CounterOverflowError, MalformedInputError

__all__ = [
    "SQN_MAX",
    "AMF_MAX",
    "check_sqn48",
    "check_amf16",
    "pack_amf_sqn",
    "unpack_amf_sqn",
    "HijackedRandLayout",
    "AuthTriple",
    "RejectReason",
    "Accepted",
    "Rejected",
    "VerifyOutcome",
    "build_hijacked_rand",
    "decompose_rand",
    "verify_hijacked_rand",
    "legacy_response",
    "generate_triples",
    "make_legacy_triple",
]

SQN_MAX = (1 << 48) - 1
AMF_MAX = (1 << 16) - 1


def check_sqn48(value: int) -> int:
    if not isinstance(value, int) or not 0 <= value <= SQN_MAX:
        raise MalformedInputError(f"sqn must be an integer in [0, 2^48), got {value!r}")
    return value


def check_amf16(value: int) -> int:
    if not isinstance(value, int) or not 0 <= value <= AMF_MAX:
        raise MalformedInputError(f"amf must be an integer in [0, 2^16), got {value!r}")
    return value


def pack_amf_sqn(amf: int, sqn: int) -> bytes:
    """Big-endian 16-bit AMF || 48-bit SQN, the 8-octet tag message."""
    return check_amf16(amf).to_bytes(2, "big") + check_sqn48(sqn).to_bytes(6, "big")


def unpack_amf_sqn(block: bytes) -> tuple[int, int]:
    if len(block) != 8:
        raise MalformedInputError(f"amf||sqn block must be 8 octets, got {len(block)}")
    return int.from_bytes(block[:2], "big"), int.from_bytes(block[2:], "big")


@dataclass(frozen=True)
class HijackedRandLayout:
    """Decomposed view of a sequence-bearing challenge.

    On the construction side the fields are the generated values; on the
    verification side they are the recovered candidates (mac is the
    received tag, ak the mask derived from it).
    """

    amf: int
    sqn: int
    mac: bytes
    ak: bytes

    def rand(self) -> bytes:
        return cs.xor_bytes(pack_amf_sqn(self.amf, self.sqn), self.ak) + self.mac


@dataclass(frozen=True)
class AuthTriple:
    """(RAND, XRES, Kc) as delivered from home to serving network.

    sqn_hint is the home-network ordering key; it never crosses the wire
    (legacy triples carry 0).
    """

    rand: bytes
    xres: bytes
    kc: bytes
    sqn_hint: int = 0


class RejectReason(enum.Enum):
    MAC_MISMATCH = "MAC_MISMATCH"
    SQN_NOT_FRESH = "SQN_NOT_FRESH"


@dataclass(frozen=True)
class Accepted:
    amf: int
    sqn: int
    sres: bytes
    kc: bytes


@dataclass(frozen=True)
class Rejected:
    reason: RejectReason
    placeholder_sres: bytes
    placeholder_kc: bytes


VerifyOutcome = Accepted | Rejected


def build_hijacked_rand(ka: bytes, amf: int, sqn: int) -> bytes:
    """Encode (amf, sqn) into a challenge indistinguishable from random."""
    mac = cs.f1_mac(ka, pack_amf_sqn(amf, sqn))
    ak = cs.f5_mask(ka, mac)
    return cs.xor_bytes(pack_amf_sqn(amf, sqn), ak) + mac


def decompose_rand(ka: bytes, rand: bytes) -> HijackedRandLayout:
    """Recover the candidate (amf, sqn, mac, ak) view of a challenge.

    Performs no authenticity or freshness check; on a challenge that was
    not built under this ka the recovered fields are garbage.
    """
    if len(rand) != cs.RAND_LEN:
        raise MalformedInputError(f"rand must be {cs.RAND_LEN} octets, got {len(rand)}")
    masked, mac = rand[:8], rand[8:]
    ak = cs.f5_mask(ka, mac)
    amf, sqn = unpack_amf_sqn(cs.xor_bytes(masked, ak))
    return HijackedRandLayout(amf=amf, sqn=sqn, mac=mac, ak=ak)


def _placeholder(rng: random.Random, forbidden: bytes) -> bytes:
    # failure-path stand-in value; must never equal the honest output
    value = rng.randbytes(cs.TAG_LEN)
    while value == forbidden:
        value = rng.randbytes(cs.TAG_LEN)
    return value


def verify_hijacked_rand(
    ka: bytes,
    counter: int,
    rand: bytes,
    ki: bytes,
    rng: random.Random,
) -> VerifyOutcome:
    """Authenticate a challenge against the SIM's current counter.

    Pure with respect to the counter: the caller commits the update on
    Accepted.  The tag is checked before freshness, so a forged challenge
    reports MAC_MISMATCH even if its recovered sequence number happens to
    be stale.  Rejection is a value, not an error; placeholder response
    values are drawn from the injected generator and are guaranteed to
    differ from the honest (sres, kc) for this challenge.
    """
    check_sqn48(counter)
    layout = decompose_rand(ka, rand)
    xmac = cs.f1_mac(ka, pack_amf_sqn(layout.amf, layout.sqn))
    if xmac != layout.mac:
        reason = RejectReason.MAC_MISMATCH
    elif layout.sqn <= counter:
        reason = RejectReason.SQN_NOT_FRESH
    else:
        sres, kc = legacy_response(ki, rand)
        return Accepted(amf=layout.amf, sqn=layout.sqn, sres=sres, kc=kc)
    sres, kc = legacy_response(ki, rand)
    return Rejected(
        reason=reason,
        placeholder_sres=_placeholder(rng, sres),
        placeholder_kc=_placeholder(rng, kc),
    )


def legacy_response(ki: bytes, rand: bytes) -> tuple[bytes, bytes]:
    """The unmodified challenge response: (SRES, Kc) over the full RAND."""
    return cs.a3_sres(ki, rand), cs.a8_kc(ki, rand)


def generate_triples(
    ki: bytes,
    ka: bytes,
    counter: int,
    amf: int,
    n: int,
) -> tuple[list[AuthTriple], int]:
    """Issue a batch of n sequence-bearing triples, advancing the counter.

    Triple i carries sqn = counter + i + 1; the returned new counter equals
    the last issued sequence number.  Refuses to wrap the 48-bit space.
    """
    check_sqn48(counter)
    check_amf16(amf)
    if n < 1:
        raise MalformedInputError(f"batch size must be >= 1, got {n}")
    if counter + n > SQN_MAX:
        raise CounterOverflowError(
            f"issuing {n} triples from counter {counter} would exceed 2^48 - 1"
        )
    triples = []
    for i in range(1, n + 1):
        sqn = counter + i
        rand = build_hijacked_rand(ka, amf, sqn)
        xres, kc = legacy_response(ki, rand)
        triples.append(AuthTriple(rand=rand, xres=xres, kc=kc, sqn_hint=sqn))
    return triples, counter + n


def make_legacy_triple(ki: bytes, rand: bytes) -> AuthTriple:
    """Triple for a legacy subscriber; the caller supplies the random RAND."""
    xres, kc = legacy_response(ki, rand)
    return AuthTriple(rand=rand, xres=xres, kc=kc, sqn_hint=0)
