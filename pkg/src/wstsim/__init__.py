"""Simulation and analysis toolkit for wireless distributed-storage repair.

Helper nodes send their erasure-coded shares to a newcomer over a block
Rayleigh multiple-access channel using an algebraic space-time code that
stays sphere-decodable with two receive antennas.  The package provides the
exact field arithmetic behind the code, the bit-to-constellation lift, the
pair-scheduling transmission protocol, exact ML decoders, closed-form
diversity-multiplexing curves, and seeded Monte Carlo outage/repair sweeps.
"""

__version__ = "0.1.0"
