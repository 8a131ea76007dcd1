"""Bit-exact cryptographic primitives for the simulated GSM ecosystem.

Every keyed primitive here is a truncation of AES-128 applied to a
domain-separated input block:

    f1_mac(ka, m)   = AES_ka(m  || 0x00*7 || 0x01)[:8]     m is 8 octets
    f5_mask(ka, t)  = AES_ka(t  || 0x00*7 || 0x05)[:8]     t is 8 octets
    a3_sres(ki, r)  = AES_ki(r xor 0x33*16)[:8]            r is 16 octets
    a8_kc(ki, r)    = AES_ki(r xor 0x88*16)[:8]

The A5 cipher family is modeled, not real: A5/1 and A5/3 are AES-CTR-style
PRFs keyed by Kc with per-algorithm tag bytes, while A5/2 is deliberately
broken -- its frame-0 keystream starts with Kc itself and repeats with an
8-octet period, so a single known-plaintext frame reveals the session key.

Byte strings are used directly for keys, tags and challenges:

    Key128 -- 16 octets (Ki, Ka, master keys)
    Tag64  -- 8 octets (MAC, AK, SRES, Kc)
    Rand128 -- 16 octets (the challenge)

All functions validate lengths and raise MalformedInputError on violation.
Everything is a pure function of its arguments.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import InvalidAlgorithmError, MalformedInputError

__all__ = [
    "KEY_LEN",
    "TAG_LEN",
    "RAND_LEN",
    "CipherAlgId",
    "KeystreamBlock",
    "xor_bytes",
    "f1_mac",
    "f5_mask",
    "a3_sres",
    "a8_kc",
    "a5_keystream",
    "derive_subscriber_keys",
    "parse_vector_line",
    "render_vector_line",
    "iter_vector_records",
]

KEY_LEN = 16
TAG_LEN = 8
RAND_LEN = 16

# single-octet domain separation tags for the AES truncations
_TAG_F1 = 0x01
_TAG_F5 = 0x05
_C3 = bytes([0x33]) * 16
_C8 = bytes([0x88]) * 16
_TAG_DERIVE_KI = 0x4B
_TAG_DERIVE_KA = 0x4A


class CipherAlgId(enum.Enum):
    """Air-interface encryption algorithm selector."""

    A5_1 = "A5_1"
    A5_2 = "A5_2"
    A5_3 = "A5_3"
    NONE = "NONE"

    @property
    def tag_byte(self) -> int:
        return {"A5_1": 0xA1, "A5_2": 0xA2, "A5_3": 0xA3, "NONE": 0x00}[self.value]


@dataclass(frozen=True)
class KeystreamBlock:
    """Keystream produced for one traffic frame."""

    bytes: bytes
    frame_index: int


def _check_len(name: str, value: bytes, expected: int) -> bytes:
    if not isinstance(value, (bytes, bytearray)):
        raise MalformedInputError(f"{name} must be bytes, got {type(value).__name__}")
    if len(value) != expected:
        raise MalformedInputError(f"{name} must be {expected} octets, got {len(value)}")
    return bytes(value)


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise MalformedInputError(f"xor of unequal lengths {len(a)} != {len(b)}")
    return bytes(x ^ y for x, y in zip(a, b))


@lru_cache(maxsize=512)
def _ecb(key: bytes):
    # ECB encrypts each block independently, so one cached context per key
    # can serve every call; update() is where the fast path lives.
    return Cipher(algorithms.AES(key), modes.ECB()).encryptor()


def _encrypt_block(key: bytes, block: bytes) -> bytes:
    return _ecb(key).update(block)


def f1_mac(ka: bytes, amf_sqn: bytes) -> bytes:
    """64-bit authentication tag over a 16-bit AMF || 48-bit SQN message."""
    ka = _check_len("ka", ka, KEY_LEN)
    amf_sqn = _check_len("amf_sqn", amf_sqn, TAG_LEN)
    return _encrypt_block(ka, amf_sqn + bytes(7) + bytes([_TAG_F1]))[:TAG_LEN]


def f5_mask(ka: bytes, mac: bytes) -> bytes:
    """64-bit encrypting mask derived from an authentication tag."""
    ka = _check_len("ka", ka, KEY_LEN)
    mac = _check_len("mac", mac, TAG_LEN)
    return _encrypt_block(ka, mac + bytes(7) + bytes([_TAG_F5]))[:TAG_LEN]


def a3_sres(ki: bytes, rand: bytes) -> bytes:
    """Challenge-response MAC: the SIM's 64-bit signed response."""
    ki = _check_len("ki", ki, KEY_LEN)
    rand = _check_len("rand", rand, RAND_LEN)
    return _encrypt_block(ki, xor_bytes(rand, _C3))[:TAG_LEN]


def a8_kc(ki: bytes, rand: bytes) -> bytes:
    """Session-key derivation: the 64-bit ciphering key Kc."""
    ki = _check_len("ki", ki, KEY_LEN)
    rand = _check_len("rand", rand, RAND_LEN)
    return _encrypt_block(ki, xor_bytes(rand, _C8))[:TAG_LEN]


def a5_keystream(alg: CipherAlgId, kc: bytes, frame_index: int, length: int) -> KeystreamBlock:
    """Keystream for one frame under the modeled A5 family.

    A5/1 and A5/3 expand (kc, alg tag, frame_index) through AES in counter
    mode.  A5/2 is the intentionally weak model: the frame keystream is the
    8-octet block (kc xor frame_index) repeated, which at frame 0 is Kc
    verbatim.
    """
    kc = _check_len("kc", kc, TAG_LEN)
    if not isinstance(frame_index, int) or frame_index < 0:
        raise MalformedInputError("frame_index must be a non-negative integer")
    if frame_index >= 1 << 64:
        raise MalformedInputError("frame_index must fit in 64 bits")
    if not isinstance(length, int) or length < 0:
        raise MalformedInputError("length must be a non-negative integer")
    if alg is CipherAlgId.NONE:
        raise InvalidAlgorithmError("cannot generate keystream for alg NONE")

    if alg is CipherAlgId.A5_2:
        unit = xor_bytes(kc, frame_index.to_bytes(8, "big"))
        reps = -(-length // TAG_LEN) if length else 0
        return KeystreamBlock(bytes=(unit * reps)[:length], frame_index=frame_index)

    key = kc + kc
    prefix = bytes([alg.tag_byte]) + bytes(3) + frame_index.to_bytes(8, "big")
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += _encrypt_block(key, prefix + counter.to_bytes(4, "big"))
        counter += 1
    return KeystreamBlock(bytes=bytes(out[:length]), frame_index=frame_index)


def derive_subscriber_keys(master: bytes, imsi: str) -> tuple[bytes, bytes]:
    """Derive the per-subscriber (ki, ka) pair from one master key.

    The input block is the 15 IMSI digits as ASCII plus a one-octet purpose
    tag, so the two keys are outputs of the same PRP on distinct blocks.
    """
    master = _check_len("master", master, KEY_LEN)
    if len(imsi) != 15 or not imsi.isdigit():
        raise MalformedInputError(f"imsi must be 15 decimal digits, got {imsi!r}")
    digits = imsi.encode("ascii")
    ki = _encrypt_block(master, digits + bytes([_TAG_DERIVE_KI]))
    ka = _encrypt_block(master, digits + bytes([_TAG_DERIVE_KA]))
    return ki, ka


# --- test-vector record format ---------------------------------------------
#
# One record per line:  op-name <hex-in ...> -> <hex-out>
# All fields lowercase hex; '#' lines are comments.


def render_vector_line(op: str, inputs: list[str], output: str) -> str:
    return f"{op} {' '.join(inputs)} -> {output}"


def parse_vector_line(line: str) -> tuple[str, list[str], str] | None:
    """Parse one record; returns None for blank/comment lines."""
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    head, sep, out = line.partition("->")
    if not sep:
        raise MalformedInputError(f"vector record missing '->': {line!r}")
    parts = head.split()
    if not parts:
        raise MalformedInputError(f"vector record missing op name: {line!r}")
    out = out.strip()
    for field in parts[1:] + [out]:
        if field != field.lower() or set(field) - set("0123456789abcdef"):
            raise MalformedInputError(f"non-hex field {field!r} in record: {line!r}")
    return parts[0], parts[1:], out


def iter_vector_records(text: str):
    """Yield (op, inputs, output) for every record in a vector file body."""
    for line in text.splitlines():
        rec = parse_vector_line(line)
        if rec is not None:
            yield rec
