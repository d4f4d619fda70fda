"""Catalytic decoupling toolkit: one-shot entropies, convex split and
decoupling protocols on dense states."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
