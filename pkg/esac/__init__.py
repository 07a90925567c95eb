#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# Licensed under MIT License (--> LICENSE.txt)
# -----------------------------------------------------------------------------

"""'esac' estimates multiple changepoints in the mean of a high-dimensional
data sequence, adapting to the unknown sparsity of every change.

The package is organised in layers:
    - core_stats : prefix sums, CUSUMs, thresholds, rates and penalties
    - intervals  : deterministic seeded intervals
    - score      : sparsity-specific penalized scores and interval tests
    - detect     : single-changepoint estimation and the recursive detector
    - calibrate  : MAD normalization and Monte Carlo penalty calibration
    - simulate   : data generation, metrics and experiment harness
    - cli        : the 'esac' command line front end

"""

import logging

__version__ = '0.3.0'

logger = logging.getLogger('esac')
"""esac logger"""


# -----------------------------------------------------------------------------
def initLogging(level=logging.INFO,
                format='%(message)s'):
    """Initializes the esac logger.

    Args:
        level            : log level
                           Optional, defaults to logging.INFO
        format (string)  : tokenized string describing the log format
                           Optional, defaults to plain message logging:
                           '%(message)s'

    """
    logger = logging.getLogger('esac')
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    console = logging.StreamHandler()
    formatter = logging.Formatter(format)
    console.setFormatter(formatter)
    console.setLevel(level)
    logger.setLevel(level)
    logger.addHandler(console)
    logger.propagate = False


initLogging()


# -----------------------------------------------------------------------------
# Errors
# -----------------------------------------------------------------------------

# -----------------------------------------------------------------------------
class EsacError(ValueError):
    """Base class of every error raised by esac."""


class NonFiniteError(EsacError):
    """Input matrix holds NaN or infinite entries."""


class TooShortError(EsacError):
    """Fewer time points than the operation needs."""


class BadIntervalError(EsacError):
    """Interval triple violates 0 <= s < v < e <= n."""


class NegativeThresholdError(EsacError):
    """Negative truncation threshold."""


class OutOfRangeError(EsacError):
    """Sparsity level outside of [1, p]."""


class BadParamsError(EsacError):
    """Invalid tuning parameters."""


class BadSparsityError(EsacError):
    """Sparsity level is not part of the sparsity grid."""


class MismatchedNError(EsacError):
    """Data and seeded intervals were built for different n."""


class DegenerateSeriesError(EsacError):
    """A series has a zero noise level estimate."""


class SpecInvalidError(EsacError):
    """Inconsistent simulation spec or experiment design."""


class ConfigMismatchError(EsacError):
    """A calibrated penalty table does not match data or settings."""


class ParseError(EsacError):
    """Input file could not be parsed."""
