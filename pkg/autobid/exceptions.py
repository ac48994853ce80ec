class AutobidError(Exception):
    "Base error for the autobid tools; carries the process exit code for the CLI."
    exit_code = 2


class InstanceError(AutobidError):
    "Raised for malformed instances, profiles, traces or input files."
    exit_code = 2


class ParameterError(AutobidError):
    "Raised when a parameter falls outside the range its module requires."
    exit_code = 3


class BudgetExceededError(AutobidError):
    "Raised when a grid enumeration would exceed the configured budget."
    exit_code = 4
