"""Authoritative operator server: broadcast, tiered actions, audit, pull."""

from .core import (
    ActionResult,
    AdapterFailure,
    AuditLog,
    AuthFailed,
    FrameHub,
    InProcessAdapter,
    RemoteAdapter,
    Session,
    ShellAdapter,
    StateServer,
    Tier,
    TokenAuth,
    UnknownTarget,
    Verb,
)

__all__ = [
    "ActionResult",
    "AdapterFailure",
    "AuditLog",
    "AuthFailed",
    "FrameHub",
    "InProcessAdapter",
    "RemoteAdapter",
    "Session",
    "ShellAdapter",
    "StateServer",
    "Tier",
    "TokenAuth",
    "UnknownTarget",
    "Verb",
]
