"""Exception hierarchy shared by every molssl subpackage."""


class MolsslError(Exception):
    """Base class for all errors raised by molssl."""


class ConfigError(MolsslError, ValueError):
    pass


# --- chemistry -------------------------------------------------------------

class SmilesError(MolsslError, ValueError):
    """Raised when a SMILES string cannot be turned into a molecular graph."""

    def __init__(self, message, smiles=None, position=None):
        self.smiles = smiles
        self.position = position
        where = ""
        if smiles is not None:
            where = f" in {smiles!r}"
            if position is not None:
                where += f" at position {position}"
        super().__init__(message + where)


class UnclosedBranch(SmilesError):
    pass


class UnpairedRingBond(SmilesError):
    pass


class UnknownElement(SmilesError):
    pass


class ValenceViolation(SmilesError):
    pass


# --- tensors / models ------------------------------------------------------

class ShapeMismatch(MolsslError, ValueError):
    def __init__(self, op, *shapes):
        self.op = op
        self.shapes = shapes
        shown = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {shown}")


class NonScalarLoss(MolsslError, ValueError):
    pass


class CorruptCheckpoint(MolsslError, IOError):
    pass


class EmptyBatch(MolsslError, ValueError):
    pass


class WidthMismatch(MolsslError, ValueError):
    pass


class DuplicateKey(MolsslError, KeyError):
    pass


class MissingEmbedding(MolsslError, KeyError):
    pass


# --- data ------------------------------------------------------------------

class MissingColumn(MolsslError, KeyError):
    pass


class EmptyDataset(MolsslError, ValueError):
    pass


class SizeExceedsPool(MolsslError, ValueError):
    pass


class DegenerateLabels(MolsslError, ValueError):
    pass


class CorruptRow(MolsslError, ValueError):
    def __init__(self, line_number, reason=""):
        self.line_number = line_number
        msg = f"corrupt row at line {line_number}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


# --- metrics ---------------------------------------------------------------

class SingleClass(MolsslError, ValueError):
    pass


class AllMasked(MolsslError, ValueError):
    pass


class NoValidTask(MolsslError, ValueError):
    pass


# --- training --------------------------------------------------------------

class NonFiniteLoss(MolsslError, FloatingPointError):
    def __init__(self, what, epoch=None, batch=None):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite {what} (epoch={epoch}, batch={batch})")


class DegeneratePool(MolsslError, ValueError):
    pass


class DegenerateHybrid(MolsslError, ValueError):
    pass


class UnsupportedTask(MolsslError, ValueError):
    pass


class EmptyTrain(MolsslError, ValueError):
    pass


class ZeroDropoutWarning(UserWarning):
    pass
