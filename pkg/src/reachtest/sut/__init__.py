"""The black-box boundary: session contract and bundled systems under test."""

from .session import SutSession, AutomatonSut
from .carriage import CarriageSut
from .passageway import PassagewaySut
from .wire import ExternalSut, spawn_external, serve_session

__all__ = [
    "SutSession",
    "AutomatonSut",
    "CarriageSut",
    "PassagewaySut",
    "ExternalSut",
    "spawn_external",
    "serve_session",
]
