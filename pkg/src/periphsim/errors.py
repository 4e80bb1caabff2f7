"""Exception types shared across the emulator."""


class PeriphSimError(Exception):
    """Base class for every error raised by periphsim."""


class RuleSyntaxError(PeriphSimError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateEntity(PeriphSimError):
    pass


class UnknownEntity(PeriphSimError):
    def __init__(self, name: str, rule_id: int | None):
        where = f" (rule {rule_id})" if rule_id is not None else ""
        super().__init__(f"unknown entity {name}{where}")
        self.name = name
        self.rule_id = rule_id


class WidthOverflow(PeriphSimError):
    def __init__(self, message: str, rule_id: int | None = None):
        super().__init__(message)
        self.rule_id = rule_id


class AccessViolation(PeriphSimError):
    pass


class Overflow(PeriphSimError):
    pass


class UnboundWildcard(PeriphSimError):
    pass


class ChainLimitExceeded(PeriphSimError):
    def __init__(self, limit: int):
        super().__init__(f"rule chain exceeded {limit} waves (rule cycle?)")
        self.limit = limit


class UnmappedAddress(PeriphSimError):
    def __init__(self, address: int):
        super().__init__(f"unmapped address {address:#010x}")
        self.address = address


class ConfigError(PeriphSimError):
    pass


class ScriptSyntaxError(PeriphSimError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownDirective(ScriptSyntaxError):
    pass
