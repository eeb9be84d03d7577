from chaintrace.gateway.app import create_app
from chaintrace.gateway.sessions import SessionStore

__all__ = ["create_app", "SessionStore"]
