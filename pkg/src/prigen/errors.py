class PrigenError(Exception):
    """Base class for all recoverable input/validation errors."""


class ApiDbError(PrigenError):
    pass


class ApkError(PrigenError):
    pass


class ManifestError(PrigenError):
    pass


class DexError(PrigenError):
    """Malformed DEX input. ``structure`` and ``offset`` locate the problem."""

    def __init__(self, message, structure=None, offset=None):
        self.structure = structure
        self.offset = offset
        loc = []
        if structure is not None:
            loc.append(structure)
        if offset is not None:
            loc.append(f"offset 0x{offset:x}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)


class NoBodyError(PrigenError):
    pass


class JavaSyntaxError(PrigenError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} at line {line}, column {column}"
        super().__init__(message)


class UnsupportedConstruct(JavaSyntaxError):
    def __init__(self, construct, line=None, column=None):
        self.construct = construct
        super().__init__(f"unsupported construct: {construct}", line, column)


class CheckpointError(PrigenError):
    pass


class TrainingDiverged(PrigenError):
    pass
