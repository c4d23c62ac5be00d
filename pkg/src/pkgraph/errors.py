"""Exception hierarchy. Every module raises subclasses of PkgraphError."""


class PkgraphError(Exception):
    """Base class for all pkgraph errors."""


# --- store ---

class StoreError(PkgraphError):
    pass


class CorruptStoreError(StoreError):
    """Magic bytes, checksum, or structural validation failed."""


class VersionMismatchError(StoreError):
    """File carries a format version this build cannot read."""


class StoreIOError(StoreError):
    """Underlying filesystem operation failed."""


class InvalidLabelError(StoreError):
    pass


class SecondUserRootError(StoreError):
    """Attempt to insert a second User root node."""


class DanglingEdgeError(StoreError):
    """Edge endpoint does not reference an existing node."""


class UnknownNodeError(StoreError):
    pass


class CannotDeleteRootError(StoreError):
    pass


class ImportStateError(StoreError):
    """Portable import requires a freshly initialized store."""


class ImportFormatError(StoreError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


# --- vector index / embedding ---

class DimensionMismatchError(PkgraphError):
    pass


class DuplicateIdError(PkgraphError):
    pass


class EmptyTextError(PkgraphError):
    pass


class ProviderError(PkgraphError):
    """External embedding provider unreachable or returned bad vectors."""


# --- extraction ---

class EmptyPayloadError(PkgraphError):
    pass


class ExtractionError(PkgraphError):
    """Model-backed extractor failed; the record must be retried, not dropped."""


class CaptionUnavailableError(PkgraphError):
    """Offline vision stub found no sidecar caption for the image."""


class VisionClientError(PkgraphError):
    pass


# --- entity resolution ---

class LabelMismatchError(PkgraphError):
    pass


class SelfMergeError(PkgraphError):
    pass


# --- community detection ---

class EmptyGraphError(PkgraphError):
    pass


# --- retrieval ---

class UnknownAnchorError(PkgraphError):
    pass


class GenerationError(PkgraphError):
    """External answer generator failed (structured path never raises this)."""


# --- service ---

class BindAddressError(PkgraphError):
    """Non-loopback bind requested without the explicit override flag."""
