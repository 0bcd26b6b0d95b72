"""Error taxonomy shared across the package.

The proxy must be able to report proof failures without ever seeing
plaintext, so transform/verification errors are distinct from ordinary
authenticated-decryption failures and from malformed inputs.
"""


class SealShareError(Exception):
    """Base class for all errors raised by this package."""


class MalformedInput(SealShareError):
    """Input bytes or arguments do not parse as the expected structure."""


class AuthFailure(SealShareError):
    """Authenticated decryption failed: wrong key or tampered ciphertext."""


class ProofFailure(SealShareError):
    """A re-encryption proof or capsule integrity check did not verify."""


class EntropyError(SealShareError):
    """The OS entropy source failed; key material cannot be generated."""


class KeyMismatch(SealShareError):
    """Ciphertext and key material belong to different key sets."""


class RebuildRequired(SealShareError):
    """The requested index change needs a full re-encryption of the index."""


class StateTransitionError(SealShareError):
    """An access request was driven along an edge the state machine forbids."""


class AuthorizationError(SealShareError):
    """Caller is not allowed to perform this operation on this resource."""


class ConflictError(SealShareError):
    """Resource already exists or concurrent modification was detected."""


class NotFound(SealShareError):
    """Referenced principal, request, or document does not exist."""
