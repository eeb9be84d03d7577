"""Error codes shared across the platform.

Every user-facing failure carries a stable machine-readable code. Codes are
minted in exactly one layer (their "origin"); the gateway never invents
domain errors, which keeps business rules out of the application layer and
lets tests assert provenance.
"""

from __future__ import annotations

# code -> origin layer
ERROR_ORIGINS = {
    # ledger engine
    "DuplicateOrg": "ledger",
    "EmptyCert": "ledger",
    "AccessDenied": "ledger",
    "StaleNonce": "ledger",
    "UnknownContract": "ledger",
    "UnknownChain": "ledger",
    "NothingToAnchor": "ledger",
    "OversizedDigestArg": "ledger",
    # contracts
    "InsufficientLocalStock": "contract",
    "NotOwner": "contract",
    "NoMatchingOutbound": "contract",
    "QuantityMismatch": "contract",
    "PendingCertification": "contract",
    "DuplicateCert": "contract",
    "DuplicateQualification": "contract",
    "MalformedDigest": "contract",
    "NotApproved": "contract",
    "InsufficientStock": "contract",
    "NoInTransitRecord": "contract",
    "NotSupervisor": "contract",
    "AlreadyDecided": "contract",
    "UnknownQualification": "contract",
    "DuplicateEvent": "contract",
    "DuplicateHop": "contract",
    "OrphanInbound": "contract",
    "DuplicateUser": "contract",
    "UnknownUser": "contract",
    "BadCredential": "contract",
    "UnknownOrg": "contract",
    "DuplicateEnterprise": "contract",
    "InvalidQuantity": "contract",
    "BadAnchor": "contract",
    "MalformedArgs": "contract",
    # event bus
    "MalformedEvent": "bus",
    "DuplicateGroupHandler": "bus",
    "Timeout": "bus",
    # blob store
    "TooLarge": "blobstore",
    "NotFound": "blobstore",
    # domain services
    "InvalidToken": "service",
    "UnknownBatch": "service",
    "BadBatchId": "service",
    "UnknownService": "service",
    "DuplicateService": "service",
    "UnknownReceipt": "service",
    # gateway (auth and shape only -- no business rules)
    "Unauthenticated": "gateway",
    "UnknownFlow": "gateway",
    "BadRequest": "gateway",
    # cli
    "ParseError": "cli",
    "StepMismatch": "cli",
    "InvalidWorkload": "cli",
}


class ChainTraceError(Exception):
    """Base error; ``code`` is the stable identifier, ``message`` is free text."""

    def __init__(self, code: str, message: str = ""):
        if code not in ERROR_ORIGINS:
            raise ValueError(f"unregistered error code: {code}")
        super().__init__(message or code)
        self.code = code
        self.message = message or code

    @property
    def origin(self) -> str:
        return ERROR_ORIGINS[self.code]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"ChainTraceError({self.code!r}, {self.message!r})"


class ContractError(ChainTraceError):
    """Raised by contract operations; commits as a failure marker, never
    aborts the block."""
