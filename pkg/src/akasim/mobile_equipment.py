"""Phone-side actor: master of the card interface, slave of the network.

The phone knows nothing about the sequence-number scheme.  It forwards
challenges to the card, keeps whatever Kc comes back, honours the '91'
proactive status by running the FETCH / TERMINAL RESPONSE loop, and
applies whichever cipher the network selected.  When the card's toolkit
commands close its data channels the phone detaches and the pending SRES
is discarded (a `leaky` profile models phones that transmit it first).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto_suite as cs
from .errors import ProtocolOrderError
from .sim_card import (
    ChannelStatusResult,
    CloseChannelResult,
    SimCard,
    SimStatus,
    StkKind,
    TerminalProfile,
)

__all__ = [
    "MeProfile",
    "ChannelTable",
    "MeSession",
    "Responded",
    "ConnectionDropped",
    "ChallengeOutcome",
    "MobileEquipment",
]


@dataclass(frozen=True)
class MeProfile:
    class_e_supported: bool = True
    accepts_unauthenticated: bool = False
    # weaker reading of the teardown: SRES goes upstream before the drop
    leaky: bool = False


@dataclass
class ChannelTable:
    open_channels: set[int] = field(default_factory=set)
    next_id: int = 1

    def open(self) -> int:
        cid = self.next_id
        self.next_id += 1  # closed ids are never reused within a run
        self.open_channels.add(cid)
        return cid

    def close(self, ids) -> tuple[int, ...]:
        closed = tuple(sorted(set(ids) & self.open_channels))
        self.open_channels -= set(ids)
        return closed


@dataclass
class MeSession:
    kc: bytes | None = None
    cipher: cs.CipherAlgId = cs.CipherAlgId.NONE
    channels: ChannelTable = field(default_factory=ChannelTable)
    attached_network: str | None = None


@dataclass(frozen=True)
class Responded:
    sres: bytes


@dataclass(frozen=True)
class ConnectionDropped:
    closed_channels: tuple[int, ...]


ChallengeOutcome = Responded | ConnectionDropped


def _noop_trace(actor, msg, **fields):
    return None


class MobileEquipment:
    """One phone with its inserted card."""

    def __init__(self, profile: MeProfile, sim: SimCard, tracer=None, name=None):
        self.profile = profile
        self.sim = sim
        self.session = MeSession()
        self.trace = tracer or _noop_trace
        self.name = name or f"ue:{sim.imsi}"
        self._powered = False

    # --- lifecycle ---------------------------------------------------------

    def power_on(self):
        if self._powered:
            raise ProtocolOrderError("ME already powered on")
        self._powered = True
        profile = TerminalProfile(class_e=self.profile.class_e_supported)
        self.sim.init(profile)
        self.trace(self.name, "TERMINAL_PROFILE", class_e=profile.class_e)

    def power_cycle(self):
        """Off and on again: session gone, card keeps its counter."""
        self.session = MeSession(channels=ChannelTable(next_id=self.session.channels.next_id))
        self._powered = False
        self.sim.power_cycle()
        self.trace(self.name, "POWER_CYCLE")
        self.power_on()

    def attach(self, network: str):
        self.session.attached_network = network
        self.trace(self.name, "ATTACH", network=network)

    def detach(self):
        network = self.session.attached_network
        self.session.attached_network = None
        self.session.kc = None
        self.session.cipher = cs.CipherAlgId.NONE
        if network is not None:
            self.trace(self.name, "DETACH", network=network)

    def open_channel(self) -> int:
        cid = self.session.channels.open()
        self.trace(self.name, "OPEN_CHANNEL", channel=cid)
        return cid

    # --- authentication ----------------------------------------------------

    def handle_challenge(self, rand: bytes) -> ChallengeOutcome:
        """Run one challenge through the card and act on its status.

        The same code path serves every card type; this actor never
        branches on anything but the response status byte.
        """
        if not self._powered:
            raise ProtocolOrderError("challenge while powered off")
        if self.session.attached_network is None:
            raise ProtocolOrderError("challenge while detached")
        self.trace(self.name, "SIM_CHALLENGE", rand=rand.hex())
        response = self.sim.challenge(rand)
        self.trace(
            self.name,
            "SIM_RESPONSE",
            sres=response.sres.hex(),
            kc=response.kc.hex(),
            status=response.status.value,
            **(
                {"pending_length": response.pending_length}
                if response.pending_length is not None
                else {}
            ),
        )
        if response.status is SimStatus.NORMAL:
            self.session.kc = response.kc
            self._send_sres(response.sres)
            return Responded(sres=response.sres)

        # '91' status: the card wants something before this goes further
        if self.profile.leaky:
            self._send_sres(response.sres)
        closed = self._run_fetch_loop()
        self.detach()
        self.trace(self.name, "CONNECTION_DROPPED", closed_channels=list(closed))
        return ConnectionDropped(closed_channels=closed)

    def _send_sres(self, sres: bytes):
        self.trace(
            self.name,
            "SRES_TO_NETWORK",
            network=self.session.attached_network,
            sres=sres.hex(),
        )

    def _run_fetch_loop(self) -> tuple[int, ...]:
        """FETCH proactive commands until the card reports NORMAL."""
        closed_total: tuple[int, ...] = ()
        status = SimStatus.PROACTIVE_PENDING
        while status is SimStatus.PROACTIVE_PENDING:
            self.trace(self.name, "FETCH")
            command = self.sim.fetch()
            if command.kind is StkKind.GET_CHANNEL_STATUS:
                channels = tuple(sorted(self.session.channels.open_channels))
                self.trace(self.name, "PROACTIVE_COMMAND", kind=command.kind.value)
                result = ChannelStatusResult(channels=channels)
                status = self.sim.terminal_response(result)
                self.trace(
                    self.name,
                    "TERMINAL_RESPONSE",
                    kind=command.kind.value,
                    channels=list(channels),
                    next_status=status.value,
                )
            else:
                self.trace(
                    self.name,
                    "PROACTIVE_COMMAND",
                    kind=command.kind.value,
                    channels=list(command.channel_ids),
                )
                closed = self.session.channels.close(command.channel_ids)
                closed_total += closed
                result = CloseChannelResult(success=bool(closed))
                status = self.sim.terminal_response(result)
                self.trace(
                    self.name,
                    "TERMINAL_RESPONSE",
                    kind=command.kind.value,
                    success=bool(closed),
                    next_status=status.value,
                )
        return closed_total

    # --- traffic -----------------------------------------------------------

    def apply_cipher(self, alg: cs.CipherAlgId):
        """Start ciphering as commanded by the serving network."""
        if alg is not cs.CipherAlgId.NONE and self.session.kc is None:
            raise ProtocolOrderError("cipher start without a session key")
        self.session.cipher = alg
        self.trace(self.name, "CIPHER_APPLIED", alg=alg.value)

    def send_traffic(self, plaintext: bytes, frame_index: int) -> bytes:
        """Encrypt and emit one traffic frame; returns the air ciphertext."""
        if self.session.attached_network is None:
            raise ProtocolOrderError("traffic while detached")
        if self.session.kc is None and not self.profile.accepts_unauthenticated:
            raise ProtocolOrderError("traffic before authentication")
        if self.session.cipher is cs.CipherAlgId.NONE:
            ciphertext = plaintext
        else:
            keystream = cs.a5_keystream(
                self.session.cipher, self.session.kc, frame_index, len(plaintext)
            )
            ciphertext = cs.xor_bytes(plaintext, keystream.bytes)
        self.trace(
            self.name,
            "TRAFFIC",
            network=self.session.attached_network,
            frame_index=frame_index,
            alg=self.session.cipher.value,
            ciphertext=ciphertext.hex(),
        )
        return ciphertext
