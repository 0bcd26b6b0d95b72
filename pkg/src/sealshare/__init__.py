"""Consent-driven sharing of end-to-end encrypted documents.

Patients seal documents with a KEM-DEM scheme whose key capsules a
semi-trusted proxy can re-encrypt for approved practitioners; keyword
search runs homomorphically over a bit-encrypted keyword x file index; and
every disclosure passes through an explicit grant/decline/revoke lifecycle.
"""

__version__ = "0.1.0"
