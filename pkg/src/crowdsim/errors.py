"""Exception types shared across the simulator."""


class CrowdsimError(Exception):
    """Base class for all crowdsim errors."""


class InvalidDirection(CrowdsimError):
    """Ray direction is not unit length within tolerance."""


class EmptyBounds(CrowdsimError):
    """Obstacle set has degenerate bounds and no explicit world bounds were given."""


class ScenarioSyntaxError(CrowdsimError):
    """Scenario document is not well-formed."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ValidationError(CrowdsimError):
    """Scenario content violates an invariant. `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class NoPath(CrowdsimError):
    """Goal is unreachable on the planning grid."""


class OutOfBounds(CrowdsimError):
    """Point lies outside the planning grid."""


class OccupiedEndpoint(CrowdsimError):
    """Plan endpoint maps to an occupied grid cell."""


class UnknownRobot(CrowdsimError):
    """No robot with the given id exists in the scenario."""


class NotARobot(CrowdsimError):
    """Agent exists but is not a robot."""


class PlacementFailure(CrowdsimError):
    """Could not place benchmark robots without overlap."""


class ProtocolError(CrowdsimError):
    """Malformed or invalid wire message."""
