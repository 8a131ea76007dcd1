"""Stateful SIM actor: challenge handling and proactive teardown signaling.

The SIM is the slave side of the card interface; it can only act by
flagging a pending proactive command in a response status and waiting for
the phone to FETCH it.  On a failed network authentication an enhanced SIM
walks the five-phase teardown choreography:

    IDLE -> AWAIT_FETCH_1 -> AWAIT_CHANNEL_STATUS -> AWAIT_FETCH_2
         -> AWAIT_CLOSE_RESULT -> IDLE

issuing GET CHANNEL STATUS first and then CLOSE CHANNEL for whatever
channel ids the phone reported.  A phone that never announced class-e
toolkit support in its TERMINAL PROFILE gets plain responses only.
"""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass, field

from . import auth_core
from .errors import MalformedInputError, ProtocolOrderError

__all__ = [
    "SimMode",
    "TeardownPhase",
    "StkKind",
    "StkCommand",
    "SimStatus",
    "SimResponse",
    "TerminalProfile",
    "ChannelStatusResult",
    "CloseChannelResult",
    "TerminalResponse",
    "SimState",
    "SimCard",
]


class SimMode(enum.Enum):
    LEGACY = "LEGACY"
    ENHANCED = "ENHANCED"


class TeardownPhase(enum.Enum):
    IDLE = "IDLE"
    AWAIT_FETCH_1 = "AWAIT_FETCH_1"
    AWAIT_CHANNEL_STATUS = "AWAIT_CHANNEL_STATUS"
    AWAIT_FETCH_2 = "AWAIT_FETCH_2"
    AWAIT_CLOSE_RESULT = "AWAIT_CLOSE_RESULT"


class StkKind(enum.Enum):
    GET_CHANNEL_STATUS = "GET_CHANNEL_STATUS"
    CLOSE_CHANNEL = "CLOSE_CHANNEL"


@dataclass(frozen=True)
class StkCommand:
    kind: StkKind
    channel_ids: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind is StkKind.CLOSE_CHANNEL and not self.channel_ids:
            raise MalformedInputError("CLOSE_CHANNEL needs at least one channel id")

    def encoded_length(self) -> int:
        # modeled command size: kind octet + length octet + one octet per id
        return 2 + len(self.channel_ids)


class SimStatus(enum.Enum):
    NORMAL = "NORMAL"
    PROACTIVE_PENDING = "PROACTIVE_PENDING"


@dataclass(frozen=True)
class SimResponse:
    """Outcome of one challenge: response values plus the status signal.

    pending_length models the '91 xx' status word: it is the octet count of
    the queued proactive command, present only with PROACTIVE_PENDING.
    """

    sres: bytes
    kc: bytes
    status: SimStatus
    pending_length: int | None = None


@dataclass(frozen=True)
class TerminalProfile:
    """Capabilities the phone announces at card initialisation."""

    class_e: bool = True


@dataclass(frozen=True)
class ChannelStatusResult:
    channels: tuple[int, ...]


@dataclass(frozen=True)
class CloseChannelResult:
    success: bool = True


TerminalResponse = ChannelStatusResult | CloseChannelResult


@dataclass
class SimState:
    """Full card state; keys and counter are the non-volatile part."""

    imsi: str
    ki: bytes
    ka: bytes | None
    counter: int
    mode: SimMode
    initialized: bool = False
    me_class_e: bool = False
    teardown_phase: TeardownPhase = TeardownPhase.IDLE
    pending_proactive: deque = field(default_factory=deque)
    teardown_channels: tuple[int, ...] = ()

    def __post_init__(self):
        if self.mode is SimMode.LEGACY and self.ka is not None:
            raise MalformedInputError("legacy SIM must not hold a ka")
        if self.mode is SimMode.ENHANCED and self.ka is None:
            raise MalformedInputError("enhanced SIM needs a ka")
        auth_core.check_sqn48(self.counter)

    # --- snapshot format: one line of space-separated key=value fields ----

    def to_record(self) -> str:
        fields = [
            f"imsi={self.imsi}",
            f"mode={self.mode.value}",
            f"ki={self.ki.hex()}",
        ]
        if self.ka is not None:
            fields.append(f"ka={self.ka.hex()}")
        fields += [
            f"counter={self.counter}",
            f"phase={self.teardown_phase.value}",
            f"initialized={int(self.initialized)}",
            f"class_e={int(self.me_class_e)}",
        ]
        if self.teardown_channels:
            fields.append("channels=" + ",".join(str(c) for c in self.teardown_channels))
        return " ".join(fields)

    @classmethod
    def from_record(cls, record: str) -> "SimState":
        kv = {}
        for item in record.split():
            key, sep, value = item.partition("=")
            if not sep:
                raise MalformedInputError(f"bad snapshot field {item!r}")
            kv[key] = value
        try:
            mode = SimMode(kv["mode"])
            phase = TeardownPhase(kv.get("phase", "IDLE"))
            channels = tuple(
                int(c) for c in kv.get("channels", "").split(",") if c
            )
            state = cls(
                imsi=kv["imsi"],
                ki=bytes.fromhex(kv["ki"]),
                ka=bytes.fromhex(kv["ka"]) if "ka" in kv else None,
                counter=int(kv["counter"]),
                mode=mode,
                initialized=kv.get("initialized", "0") == "1",
                me_class_e=kv.get("class_e", "0") == "1",
                teardown_phase=phase,
                teardown_channels=channels,
            )
        except (KeyError, ValueError) as exc:
            raise MalformedInputError(f"bad SIM snapshot record: {record!r}") from exc
        state._rebuild_pending()
        return state

    def _rebuild_pending(self):
        self.pending_proactive.clear()
        if self.teardown_phase is TeardownPhase.AWAIT_FETCH_1:
            self.pending_proactive.append(StkCommand(StkKind.GET_CHANNEL_STATUS))
        elif self.teardown_phase is TeardownPhase.AWAIT_FETCH_2:
            self.pending_proactive.append(
                StkCommand(StkKind.CLOSE_CHANNEL, self.teardown_channels)
            )


class SimCard:
    """One physical card.  The owner serializes all calls."""

    def __init__(self, state: SimState, rng: random.Random):
        self.state = state
        self.rng = rng
        # diagnostics for the omniscient trace; not observable on the wire
        self.last_outcome: auth_core.VerifyOutcome | None = None

    @property
    def imsi(self) -> str:
        return self.state.imsi

    def power_cycle(self):
        """Drop volatile state; keys and counter survive."""
        st = self.state
        st.initialized = False
        st.me_class_e = False
        st.teardown_phase = TeardownPhase.IDLE
        st.pending_proactive.clear()
        st.teardown_channels = ()

    def init(self, profile: TerminalProfile) -> TerminalProfile:
        """Record the phone's TERMINAL PROFILE; must happen exactly once."""
        if self.state.initialized:
            raise ProtocolOrderError("SIM already initialized this power session")
        self.state.initialized = True
        self.state.me_class_e = profile.class_e
        return profile

    def challenge(self, rand: bytes) -> SimResponse:
        """Answer an authentication challenge.

        Legacy cards always answer honestly.  Enhanced cards verify the
        embedded sequence number: acceptance commits the counter, rejection
        returns placeholders and (on a class-e phone) arms the teardown.
        """
        st = self.state
        if not st.initialized:
            raise ProtocolOrderError("challenge before TERMINAL PROFILE")
        if st.teardown_phase is not TeardownPhase.IDLE:
            raise ProtocolOrderError("challenge during pending teardown")

        if st.mode is SimMode.LEGACY:
            sres, kc = auth_core.legacy_response(st.ki, rand)
            self.last_outcome = None
            return SimResponse(sres=sres, kc=kc, status=SimStatus.NORMAL)

        outcome = auth_core.verify_hijacked_rand(
            st.ka, st.counter, rand, st.ki, self.rng
        )
        self.last_outcome = outcome
        if isinstance(outcome, auth_core.Accepted):
            st.counter = outcome.sqn
            return SimResponse(sres=outcome.sres, kc=outcome.kc, status=SimStatus.NORMAL)

        if st.me_class_e:
            st.teardown_phase = TeardownPhase.AWAIT_FETCH_1
            command = StkCommand(StkKind.GET_CHANNEL_STATUS)
            st.pending_proactive.append(command)
            return SimResponse(
                sres=outcome.placeholder_sres,
                kc=outcome.placeholder_kc,
                status=SimStatus.PROACTIVE_PENDING,
                pending_length=command.encoded_length(),
            )
        return SimResponse(
            sres=outcome.placeholder_sres,
            kc=outcome.placeholder_kc,
            status=SimStatus.NORMAL,
        )

    def fetch(self) -> StkCommand:
        """Hand the queued proactive command to the phone."""
        st = self.state
        if st.teardown_phase is TeardownPhase.AWAIT_FETCH_1:
            st.teardown_phase = TeardownPhase.AWAIT_CHANNEL_STATUS
        elif st.teardown_phase is TeardownPhase.AWAIT_FETCH_2:
            st.teardown_phase = TeardownPhase.AWAIT_CLOSE_RESULT
        else:
            raise ProtocolOrderError(
                f"FETCH with nothing pending (phase {st.teardown_phase.value})"
            )
        if not st.pending_proactive:
            raise ProtocolOrderError("teardown armed but proactive queue empty")
        return st.pending_proactive.popleft()

    def terminal_response(self, result: TerminalResponse) -> SimStatus:
        """Consume the phone's execution result and advance the teardown."""
        st = self.state
        if st.teardown_phase is TeardownPhase.AWAIT_CHANNEL_STATUS:
            if not isinstance(result, ChannelStatusResult):
                raise ProtocolOrderError("expected channel-status result")
            channels = tuple(result.channels)
            if not channels:
                # nothing to close: finish the exchange right here
                st.teardown_phase = TeardownPhase.IDLE
                st.teardown_channels = ()
                return SimStatus.NORMAL
            st.teardown_channels = channels
            st.teardown_phase = TeardownPhase.AWAIT_FETCH_2
            st.pending_proactive.append(StkCommand(StkKind.CLOSE_CHANNEL, channels))
            return SimStatus.PROACTIVE_PENDING
        if st.teardown_phase is TeardownPhase.AWAIT_CLOSE_RESULT:
            if not isinstance(result, CloseChannelResult):
                raise ProtocolOrderError("expected close-channel result")
            # back to IDLE whatever the result code; the phone ignoring the
            # close is visible in the trace, not in card state
            st.teardown_phase = TeardownPhase.IDLE
            st.teardown_channels = ()
            return SimStatus.NORMAL
        raise ProtocolOrderError(
            f"TERMINAL RESPONSE in phase {st.teardown_phase.value}"
        )

    def pending_length(self) -> int:
        if not self.state.pending_proactive:
            raise ProtocolOrderError("no proactive command pending")
        return self.state.pending_proactive[0].encoded_length()
