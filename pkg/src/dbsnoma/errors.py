"""Exception hierarchy shared by the allocation library."""


class DbsNomaError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(DbsNomaError, ValueError):
    """A system parameter violates its invariant."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class NonPositiveBandwidth(ConfigError):
    pass


class TooFewSubcarriers(ConfigError):
    pass


class NegativeMargin(ConfigError):
    pass


class UnknownConfigKey(ConfigError):
    pass


class EmptySet(DbsNomaError, ValueError):
    """Waterfilling was requested over an empty subcarrier set."""


class AllRemoved(DbsNomaError):
    """Every sole subcarrier went negative: the rate cannot be carried."""


class SameRRH(DbsNomaError, ValueError):
    """Mutual SIC was queried for two users powered by the same RRH."""


class InfeasibleBand(DbsNomaError):
    """The margin-adjusted multiplexing band is empty."""


class NoFeasibleCase(DbsNomaError):
    """No KKT case of the joint adjustment yields positive powers."""


class RootBracketFailure(DbsNomaError):
    """The stationarity equation has no sign change on the search interval."""


class InstanceTooLarge(DbsNomaError, ValueError):
    """The exhaustive oracle refuses instances beyond its enumeration bound."""
