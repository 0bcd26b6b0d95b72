"""Semi-trusted proxy: ciphertext storage, homomorphic search execution,
and the consent state machine. Holds no plaintext and no decryption keys."""

from .api import create_app
from .service import ProxyService, ServiceConfig
from .state import LEGAL_EDGES, RequestMachine, Status

__all__ = ["LEGAL_EDGES", "ProxyService", "RequestMachine", "ServiceConfig",
           "Status", "create_app"]
