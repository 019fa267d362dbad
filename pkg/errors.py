"""Exception hierarchy shared by the numeric modules, the CLI and the JSON service"""


class DensityError(Exception):
    """Base class; `exit_code` is what the CLI returns, `remedy` what it prints"""

    exit_code = 1
    http_status = 400

    def __init__(self, message, remedy=None):
        super().__init__(message)
        self.remedy = remedy

    def to_dict(self):
        payload = {'success': False, 'message': str(self), 'error': type(self).__name__}
        if self.remedy:
            payload['remedy'] = self.remedy
        return payload


class ConfigError(DensityError):
    exit_code = 2


class DomainError(DensityError):
    exit_code = 2


class PoleError(DomainError):
    pass


class CapacityError(DensityError):
    exit_code = 3
    http_status = 413


class TruncationError(DensityError):
    exit_code = 4
    http_status = 422


class StructureError(DensityError):
    exit_code = 4
    http_status = 422


class AssemblyError(DensityError):
    exit_code = 4
    http_status = 422


class ToleranceError(DensityError):
    exit_code = 4
    http_status = 422
