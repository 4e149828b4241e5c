"""
Error hierarchy shared by the simulation apps.

Config problems are reported with django's ``ValidationError`` instead;
these classes cover what goes wrong once a config has been accepted.
"""


class SimulationError(Exception):
    """Base class for every failure raised by the numerical apps"""


class DomainError(SimulationError, ValueError):
    """A physical input is outside the range the model is defined on"""


class SingularChannelError(SimulationError):
    """The channel matrix cannot be inverted at the requested tolerance"""

    def __init__(self, message, condition_number=None, geometry=''):
        super().__init__(message)
        self.condition_number = condition_number
        self.geometry = geometry
