"""Deterministic scenario engine.

A scenario wires one home network, one serving network, a set of UEs
(phone + card) and optionally an attacker, then executes a scripted event
sequence on a single logical timeline.  All randomness flows from
per-role generators derived from the run seed, so a config replays to a
byte-identical trace.

Configs are JSON documents (see README for the schema); traces are
line-delimited JSON records with stable field order, one event per line:

    {"seq_no": 7, "actor": "ue:...", "event": {"msg": "SIM_RESPONSE", ...}}
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field

from . import crypto_suite as cs
from .adversary import Adversary, AttackKind, AttackReport, InterceptLog, RandSource
from .errors import ConfigError, SimulationError
from .mobile_equipment import MeProfile, MobileEquipment, Responded
from .network_side import (
    ConsumptionPolicy,
    HomeNetwork,
    ServingNetwork,
    Verdict,
    check_imsi,
)
from .sim_card import SimCard, SimMode

__all__ = [
    "TraceEvent",
    "Tracer",
    "StepKind",
    "ScenarioStep",
    "ScenarioConfig",
    "AssertOutcome",
    "AssertResult",
    "ScenarioResult",
    "assert_trace",
    "run_scenario",
    "render_trace",
    "render_intercept_log",
]


@dataclass(frozen=True)
class TraceEvent:
    seq_no: int
    actor: str
    event: dict

    def to_json_line(self) -> str:
        payload = {"seq_no": self.seq_no, "actor": self.actor, "event": self.event}
        return json.dumps(payload, separators=(",", ":"))


class Tracer:
    """Collects the run's ordered event stream; injected into every actor."""

    def __init__(self):
        self.events: list[TraceEvent] = []

    def __call__(self, actor: str, msg: str, **fields):
        event = {"msg": msg, **fields}
        self.events.append(TraceEvent(seq_no=len(self.events), actor=actor, event=event))


def render_trace(events: list[TraceEvent]) -> str:
    return "".join(ev.to_json_line() + "\n" for ev in events)


def render_intercept_log(log: InterceptLog) -> str:
    """Export an attacker's log in the harness trace-record format."""
    tracer = Tracer()
    for record in log.records:
        tracer("intercept", "EXCHANGE", rand=record.rand.hex())
        if record.sres is not None:
            tracer("intercept", "SRES", sres=record.sres.hex())
        for frame in record.frames:
            tracer(
                "intercept",
                "FRAME",
                frame_index=frame.frame_index,
                alg=frame.alg.value,
                ciphertext=frame.ciphertext.hex(),
            )
    return render_trace(tracer.events)


# --- configuration -----------------------------------------------------------


class StepKind(enum.Enum):
    ATTACH = "ATTACH"
    REQUEST_TRIPLES = "REQUEST_TRIPLES"
    CHALLENGE = "CHALLENGE"
    SEND_TRAFFIC = "SEND_TRAFFIC"
    POWER_CYCLE_UE = "POWER_CYCLE_UE"
    OPEN_CHANNEL = "OPEN_CHANNEL"
    RUN_ATTACK = "RUN_ATTACK"
    ASSERT = "ASSERT"


@dataclass(frozen=True)
class ScenarioStep:
    kind: StepKind
    params: dict


@dataclass(frozen=True)
class SubscriberSpec:
    imsi: str
    mode: SimMode
    master: bytes | None = None


@dataclass(frozen=True)
class AttackerSpec:
    kind: AttackKind
    imsi: str | None = None
    rand_source: RandSource = RandSource.FABRICATED
    victim_traffic: bytes = b""


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    subscribers: tuple[SubscriberSpec, ...]
    me_profiles: dict
    policy: ConsumptionPolicy
    cipher: cs.CipherAlgId
    batch_size: int
    attacker: AttackerSpec | None
    script: tuple[ScenarioStep, ...]

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        try:
            return cls._parse(raw)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario config: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "ScenarioConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def _parse(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - {
            "seed",
            "subscribers",
            "me_profiles",
            "network_policy",
            "attacker",
            "script",
        }
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        seed = raw["seed"]
        if not isinstance(seed, int):
            raise ConfigError("seed must be an integer")

        subscribers = []
        seen = set()
        for sub in raw["subscribers"]:
            imsi = check_imsi(sub["imsi"])
            if imsi in seen:
                raise ConfigError(f"duplicate subscriber {imsi}")
            seen.add(imsi)
            master = bytes.fromhex(sub["master"]) if "master" in sub else None
            if master is not None and len(master) != cs.KEY_LEN:
                raise ConfigError(f"master key for {imsi} must be 16 octets")
            subscribers.append(
                SubscriberSpec(imsi=imsi, mode=SimMode(sub["mode"]), master=master)
            )
        if not subscribers:
            raise ConfigError("at least one subscriber is required")

        me_profiles = {}
        for imsi, prof in raw.get("me_profiles", {}).items():
            if imsi not in seen:
                raise ConfigError(f"me_profile for unknown subscriber {imsi}")
            bad = set(prof) - {"class_e", "accepts_unauthenticated", "leaky"}
            if bad:
                raise ConfigError(f"unknown me_profile keys for {imsi}: {sorted(bad)}")
            me_profiles[imsi] = MeProfile(
                class_e_supported=prof.get("class_e", True),
                accepts_unauthenticated=prof.get("accepts_unauthenticated", False),
                leaky=prof.get("leaky", False),
            )

        net = raw.get("network_policy", {})
        bad = set(net) - {"consumption_policy", "cipher", "batch_size"}
        if bad:
            raise ConfigError(f"unknown network_policy keys: {sorted(bad)}")
        policy = ConsumptionPolicy(net.get("consumption_policy", "IN_ORDER"))
        cipher = cs.CipherAlgId(net.get("cipher", "A5_3"))
        batch_size = net.get("batch_size", 2)
        if not isinstance(batch_size, int) or batch_size < 1:
            raise ConfigError("batch_size must be a positive integer")

        attacker = None
        if raw.get("attacker"):
            atk = raw["attacker"]
            bad = set(atk) - {"kind", "imsi", "rand_source", "victim_traffic"}
            if bad:
                raise ConfigError(f"unknown attacker keys: {sorted(bad)}")
            attacker_imsi = atk.get("imsi")
            if attacker_imsi is not None and attacker_imsi not in seen:
                raise ConfigError(f"attacker imsi {attacker_imsi} not provisioned")
            attacker = AttackerSpec(
                kind=AttackKind(atk["kind"]),
                imsi=attacker_imsi,
                rand_source=RandSource(atk.get("rand_source", "FABRICATED")),
                victim_traffic=bytes.fromhex(atk.get("victim_traffic", "")),
            )
            if attacker.kind is AttackKind.MITM_EAVESDROP and not attacker.victim_traffic:
                raise ConfigError("MITM_EAVESDROP needs non-empty victim_traffic")

        script = []
        for idx, step in enumerate(raw.get("script", [])):
            kind = StepKind(step["op"])
            params = {k: v for k, v in step.items() if k != "op"}
            cls._check_step(idx, kind, params, seen, attacker)
            script.append(ScenarioStep(kind=kind, params=params))

        return cls(
            seed=seed,
            subscribers=tuple(subscribers),
            me_profiles=me_profiles,
            policy=policy,
            cipher=cipher,
            batch_size=batch_size,
            attacker=attacker,
            script=tuple(script),
        )

    @staticmethod
    def _check_step(idx, kind, params, known_imsis, attacker):
        if kind is StepKind.ASSERT:
            if "predicate" not in params:
                raise ConfigError(f"ASSERT step {idx} missing predicate")
            assert_trace([], params["predicate"])  # structural check only
            return
        step_imsi = params.get("victim") if kind is StepKind.RUN_ATTACK else params.get("imsi")
        if step_imsi is None:
            raise ConfigError(f"step {idx} ({kind.value}) needs an imsi/victim")
        if step_imsi not in known_imsis:
            raise ConfigError(f"step {idx} references unknown imsi {step_imsi}")
        if kind is StepKind.RUN_ATTACK and attacker is None:
            raise ConfigError(f"step {idx} runs an attack but none is configured")
        if kind is StepKind.REQUEST_TRIPLES:
            n = params.get("n", 1)
            if not isinstance(n, int) or n < 1:
                raise ConfigError(f"step {idx}: n must be a positive integer")
        if kind is StepKind.SEND_TRAFFIC:
            try:
                bytes.fromhex(params["plaintext"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"step {idx}: plaintext must be a hex string") from exc
            frame = params.get("frame_index", 0)
            if not isinstance(frame, int) or frame < 0:
                raise ConfigError(f"step {idx}: frame_index must be a non-negative integer")


# --- trace predicates --------------------------------------------------------


@dataclass(frozen=True)
class AssertOutcome:
    passed: bool
    detail: str


def _match(event: TraceEvent, where: dict) -> bool:
    for key, expected in where.items():
        if key == "actor":
            actual = event.actor
        elif key == "msg":
            actual = event.event.get("msg")
        else:
            actual = event.event.get(key)
        if actual != expected:
            return False
    return True


def _find(trace, where, start=0):
    for event in trace[start:]:
        if _match(event, where):
            return event
    return None


def assert_trace(trace: list[TraceEvent], predicate: dict) -> AssertOutcome:
    """Evaluate a declarative matcher over the event sequence.

    Kinds: present, absent, ordered, absent_after, field_equals.  A `where`
    clause is a dict of field=value requirements; `actor` and `msg` address
    the envelope, anything else the event payload.
    """
    if not isinstance(predicate, dict) or "kind" not in predicate:
        raise ConfigError(f"malformed predicate: {predicate!r}")
    kind = predicate["kind"]

    if kind == "present":
        hit = _find(trace, _require(predicate, "where"))
        if hit:
            return AssertOutcome(True, f"matched at seq_no {hit.seq_no}")
        return AssertOutcome(False, "no event matched")

    if kind == "absent":
        hit = _find(trace, _require(predicate, "where"))
        if hit:
            return AssertOutcome(False, f"unexpected match at seq_no {hit.seq_no}")
        return AssertOutcome(True, "no event matched")

    if kind == "ordered":
        sequence = _require(predicate, "sequence")
        if not isinstance(sequence, list) or not sequence:
            raise ConfigError("ordered predicate needs a non-empty sequence")
        start = 0
        for i, where in enumerate(sequence):
            hit = _find(trace, where, start)
            if hit is None:
                return AssertOutcome(
                    False, f"element {i} not found after seq_no {start - 1}"
                )
            start = hit.seq_no + 1
        return AssertOutcome(True, f"sequence complete by seq_no {start - 1}")

    if kind == "absent_after":
        anchor = _find(trace, _require(predicate, "anchor"))
        if anchor is None:
            return AssertOutcome(True, "anchor never occurred (vacuous)")
        hit = _find(trace, _require(predicate, "where"), anchor.seq_no + 1)
        if hit:
            return AssertOutcome(
                False,
                f"match at seq_no {hit.seq_no} after anchor at {anchor.seq_no}",
            )
        return AssertOutcome(True, f"nothing after anchor at seq_no {anchor.seq_no}")

    if kind == "field_equals":
        where = _require(predicate, "where")
        fname = _require(predicate, "field")
        value = _require(predicate, "value")
        hit = _find(trace, where)
        if hit is None:
            return AssertOutcome(False, "no event matched the where clause")
        actual = hit.event.get(fname)
        if actual == value:
            return AssertOutcome(True, f"field {fname} matches at seq_no {hit.seq_no}")
        return AssertOutcome(
            False, f"field {fname} is {actual!r} at seq_no {hit.seq_no}, wanted {value!r}"
        )

    raise ConfigError(f"unknown predicate kind {kind!r}")


def _require(predicate: dict, key: str):
    if key not in predicate:
        raise ConfigError(f"predicate {predicate.get('kind')!r} missing {key!r}")
    return predicate[key]


# --- engine --------------------------------------------------------------


@dataclass(frozen=True)
class AssertResult:
    step_index: int
    passed: bool
    detail: str
    predicate: dict


@dataclass
class ScenarioResult:
    trace: list[TraceEvent]
    verdicts: list = field(default_factory=list)
    aborted: bool = False
    error: str | None = None

    def trace_text(self) -> str:
        return render_trace(self.trace)

    @property
    def attack_reports(self) -> list[AttackReport]:
        return [v for v in self.verdicts if isinstance(v, AttackReport)]

    @property
    def assert_results(self) -> list[AssertResult]:
        return [v for v in self.verdicts if isinstance(v, AssertResult)]

    @property
    def all_asserts_passed(self) -> bool:
        return all(r.passed for r in self.assert_results)


@dataclass
class _Ue:
    imsi: str
    sim: SimCard
    me: MobileEquipment


class ScenarioEngine:
    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.tracer = Tracer()
        seed = config.seed
        self.home = HomeNetwork(
            rng=random.Random(f"{seed}/auc"), tracer=self.tracer
        )
        self.serving = ServingNetwork(
            policy=config.policy,
            cipher_choice=config.cipher,
            rng=random.Random(f"{seed}/vlr"),
            tracer=self.tracer,
        )
        self._provision_rng = random.Random(f"{seed}/provision")
        self.ues: dict[str, _Ue] = {}
        for spec in config.subscribers:
            master = spec.master or self._provision_rng.randbytes(cs.KEY_LEN)
            _, sim_state = self.home.provision(spec.imsi, spec.mode, master)
            sim = SimCard(sim_state, rng=random.Random(f"{seed}/sim/{spec.imsi}"))
            profile = config.me_profiles.get(spec.imsi, MeProfile())
            me = MobileEquipment(profile, sim, tracer=self.tracer)
            me.power_on()
            self.ues[spec.imsi] = _Ue(imsi=spec.imsi, sim=sim, me=me)

        self.adversary: Adversary | None = None
        if config.attacker is not None:
            own_ue = (
                self.ues[config.attacker.imsi].me
                if config.attacker.imsi is not None
                else None
            )
            self.adversary = Adversary(
                rng=random.Random(f"{seed}/attacker"),
                tracer=self.tracer,
                own_ue=own_ue,
            )
        # plaintexts behind each logged exchange, index-parallel to the log
        self._truth: list[list[bytes]] = []

    # --- step handlers -----------------------------------------------------

    def run(self) -> ScenarioResult:
        result = ScenarioResult(trace=self.tracer.events)
        for index, step in enumerate(self.config.script):
            try:
                self._execute(index, step, result)
            except SimulationError as exc:
                self.tracer(
                    "engine", "ABORT", step=index, error=f"{type(exc).__name__}: {exc}"
                )
                result.aborted = True
                result.error = f"step {index} ({step.kind.value}): {exc}"
                break
        return result

    def _execute(self, index: int, step: ScenarioStep, result: ScenarioResult):
        kind, params = step.kind, step.params
        if kind is StepKind.ATTACH:
            self.ues[params["imsi"]].me.attach(self.serving.name)
        elif kind is StepKind.REQUEST_TRIPLES:
            imsi = params["imsi"]
            n = params.get("n", self.config.batch_size)
            self.tracer(self.serving.name, "TRIPLES_REQUEST", imsi=imsi, n=n)
            triples = self.home.request_triples(imsi, n)
            self.serving.add_triples(imsi, triples)
        elif kind is StepKind.CHALLENGE:
            self._challenge(params["imsi"])
        elif kind is StepKind.SEND_TRAFFIC:
            self._send_traffic(params)
        elif kind is StepKind.POWER_CYCLE_UE:
            self.ues[params["imsi"]].me.power_cycle()
        elif kind is StepKind.OPEN_CHANNEL:
            self.ues[params["imsi"]].me.open_channel()
        elif kind is StepKind.RUN_ATTACK:
            report = self._run_attack(params["victim"])
            result.verdicts.append(report)
        elif kind is StepKind.ASSERT:
            outcome = assert_trace(self.tracer.events, params["predicate"])
            self.tracer(
                "engine",
                "ASSERT_RESULT",
                step=index,
                passed=outcome.passed,
                detail=outcome.detail,
            )
            result.verdicts.append(
                AssertResult(
                    step_index=index,
                    passed=outcome.passed,
                    detail=outcome.detail,
                    predicate=params["predicate"],
                )
            )
        else:  # pragma: no cover - StepKind is closed
            raise ConfigError(f"unhandled step kind {kind}")

    def _challenge(self, imsi: str):
        ue = self.ues[imsi]
        rand = self.serving.challenge(imsi)
        if self.adversary is not None:
            self.adversary.log.start_exchange(rand)
            self._truth.append([])
        outcome = ue.me.handle_challenge(rand)
        if isinstance(outcome, Responded):
            if self.adversary is not None:
                self.adversary.log.note_sres(outcome.sres)
            verdict = self.serving.verify(imsi, outcome.sres)
            if verdict is Verdict.AUTHENTICATED:
                ue.me.apply_cipher(self.serving.select_cipher())

    def _send_traffic(self, params: dict):
        ue = self.ues[params["imsi"]]
        plaintext = bytes.fromhex(params["plaintext"])
        frame_index = params.get("frame_index", 0)
        ciphertext = ue.me.send_traffic(plaintext, frame_index)
        if self.adversary is not None:
            if not self.adversary.log.records:
                self._truth.append([])
            self.adversary.log.note_frame(frame_index, ue.me.session.cipher, ciphertext)
            self._truth[-1].append(plaintext)

    def _run_attack(self, victim_imsi: str) -> AttackReport:
        spec = self.config.attacker
        adversary = self.adversary
        victim = self.ues[victim_imsi].me
        if spec.kind is AttackKind.MITM_EAVESDROP:
            if adversary.own_ue is not None:
                self._attach_attacker_leg(adversary.own_ue)
            relay = (
                self.serving if spec.rand_source is RandSource.RELAY_FRESH else None
            )
            return adversary.fake_network_attach(
                victim,
                victim_traffic=spec.victim_traffic,
                rand_source=spec.rand_source,
                relay=relay,
            )
        # challenge replay: ground truth is the plaintext behind the logged
        # exchange the attacker will pick
        record = adversary.log.latest_with_strong_frames()
        truth = b""
        if record is not None:
            index = next(
                i for i, r in enumerate(adversary.log.records) if r is record
            )
            truth = b"".join(self._truth[index])
        return adversary.bbk_attack(victim, ground_truth=truth)

    def _attach_attacker_leg(self, own: MobileEquipment):
        """The MITM's genuine leg: its own subscription authenticates normally."""
        if own.session.attached_network is not None:
            return
        own.attach(self.serving.name)
        rand = self.serving.challenge(own.sim.imsi)
        outcome = own.handle_challenge(rand)
        if isinstance(outcome, Responded):
            verdict = self.serving.verify(own.sim.imsi, outcome.sres)
            if verdict is Verdict.AUTHENTICATED:
                own.apply_cipher(self.serving.select_cipher())


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Execute a validated config; identical configs yield identical traces."""
    engine = ScenarioEngine(config)
    result = engine.run()
    engine.tracer(
        "engine",
        "RUN_COMPLETE",
        aborted=result.aborted,
        asserts_passed=result.all_asserts_passed,
    )
    return result
