"""Slice reconciliation and key-rate toolkit for Gaussian-modulated CV-QKD.

The package is organized as a numpy/scipy library:

- ``gaussmodel``: correlated Gaussian source, AWGN/BIAWGN capacities.
- ``quantizer``: slice quantizer design, entropy integrals, efficiency.
- ``ldpc``: degree distributions, PEG construction, syndrome BP decoding,
  density evolution and ensemble search.
- ``reconcile``: the multilevel (slice) reconciliation engine.
- ``keyrate``: asymptotic collective-attack secret key rates.
- ``wire``: framed two-party session protocol over TCP.
- ``cli``: command-line front end emitting CSV/text artifacts.
"""

from . import gaussmodel, keyrate, ldpc, quantizer, reconcile, wire  # noqa: F401

__version__ = "0.1.0"
