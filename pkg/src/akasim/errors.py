"""Exception hierarchy shared by the protocol library and the simulator."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class MalformedInputError(SimulationError, ValueError):
    """An input violates a length or range constraint."""


class InvalidAlgorithmError(SimulationError, ValueError):
    """A cipher operation was requested with an unusable algorithm id."""


class CounterOverflowError(SimulationError):
    """The 48-bit sequence counter cannot be advanced without wrapping."""


class ProtocolOrderError(SimulationError):
    """An actor operation was invoked outside its legal message sequence."""


class ProvisioningError(SimulationError):
    """Subscriber provisioning failed (e.g. duplicate IMSI)."""


class UnknownSubscriberError(SimulationError, KeyError):
    """An IMSI was referenced that is not in the registry / store."""


class TripleExhaustionError(SimulationError):
    """The serving network has no authentication triple left to issue."""


class ConfigError(SimulationError):
    """A scenario configuration failed validation."""
