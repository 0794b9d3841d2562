"""Exception types raised across the package.

Every error carries enough context (byte offset, row, class id, ...) to
locate the fault without re-running with a debugger.
"""


class FsbError(Exception):
    """Base class for all errors raised by this package."""


# --- embedding file / manifest loading ---------------------------------


class BadMagic(FsbError):
    def __init__(self, path, got):
        super().__init__(f"{path}: bad magic {got!r} at offset 0, expected b'FSEB'")
        self.path = path
        self.got = got


class VersionUnsupported(FsbError):
    def __init__(self, path, got):
        super().__init__(f"{path}: unsupported format version {got} at offset 4")
        self.path = path
        self.got = got


class TruncatedFile(FsbError):
    def __init__(self, path, expected_bytes, got_bytes):
        super().__init__(
            f"{path}: payload truncated, expected {expected_bytes} bytes, "
            f"got {got_bytes}"
        )
        self.path = path
        self.expected_bytes = expected_bytes
        self.got_bytes = got_bytes


class NonFiniteValue(FsbError):
    def __init__(self, where, row, col):
        super().__init__(f"{where}: non-finite value at (row {row}, col {col})")
        self.row = row
        self.col = col


class LabelCountMismatch(FsbError):
    def __init__(self, path, rows, labels):
        super().__init__(f"{path}: {rows} data rows but {labels} labels")
        self.rows = rows
        self.labels = labels


# --- library assembly ---------------------------------------------------


class RowCountMismatch(FsbError):
    def __init__(self, name_a, rows_a, name_b, rows_b):
        super().__init__(
            f"member {name_b!r} has {rows_b} rows, {name_a!r} has {rows_a}"
        )


class LabelOrderMismatch(FsbError):
    def __init__(self, name, first_bad_row):
        super().__init__(
            f"member {name!r}: labels disagree first at row {first_bad_row}"
        )
        self.row = first_bad_row


class IndexOutOfRange(FsbError, IndexError):
    def __init__(self, index, rows):
        super().__init__(f"row index {index} out of range [0, {rows})")


class UnknownMember(FsbError, KeyError):
    def __init__(self, name, known):
        super().__init__(f"unknown member {name!r}; have {sorted(known)}")


# --- episode sampling ----------------------------------------------------


class NotEnoughClasses(FsbError):
    def __init__(self, have, need):
        super().__init__(f"library has {have} classes, episode needs {need}")


class ClassTooSmall(FsbError):
    def __init__(self, class_id, have, need):
        super().__init__(
            f"class {class_id} has {have} rows, episode needs {need}"
        )
        self.class_id = class_id
        self.have = have
        self.need = need


class EmptyInput(FsbError, ValueError):
    pass


# --- classifier ----------------------------------------------------------


class NonFiniteInput(FsbError, ValueError):
    pass


class ShapeMismatch(FsbError, ValueError):
    pass


class LabelOutOfRange(FsbError, ValueError):
    def __init__(self, label, ways):
        super().__init__(f"label {label} outside [0, {ways})")


class DegenerateInput(FsbError, ValueError):
    def __init__(self, missing_class):
        super().__init__(f"class {missing_class} absent from support set")
        self.missing_class = missing_class


# --- ensembles -----------------------------------------------------------


class NotAProbability(FsbError, ValueError):
    pass


# --- analysis -------------------------------------------------------------


class HasHiddenLayer(FsbError, ValueError):
    pass


class ConstantInput(FsbError, ValueError):
    pass


class LengthMismatch(FsbError, ValueError):
    pass


class UniverseMismatch(FsbError, ValueError):
    pass


# --- tuning ----------------------------------------------------------------


class ValidationEqualsTest(FsbError, ValueError):
    def __init__(self, name):
        super().__init__(
            f"validation dataset {name!r} also appears in the test plan"
        )


class UnknownMethod(FsbError, KeyError):
    def __init__(self, name, known):
        super().__init__(f"unknown method {name!r}; have {sorted(known)}")


# --- reporting --------------------------------------------------------------


class EmptyReport(FsbError, ValueError):
    pass
