"""Timer package."""

from .timer import ITimerFactory, TimerContext, TimerFactory

__all__ = ["ITimerFactory", "TimerContext", "TimerFactory"]
