"""Numerical toolkit for dimensions of projections of self-conformal measures."""

import logging
import os

__version__ = "0.1.0"

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

logging.getLogger(__name__).setLevel(_LEVELS.get(os.environ.get("CONFDIM_LOG", "warn").lower(), logging.WARNING))
