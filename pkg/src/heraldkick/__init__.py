"""Photon recoil and motional decoherence in heralded entanglement generation.

The package computes how photon recoil on trapped atomic emitters degrades
remote-entanglement fidelity, and how spin-dependent-displacement corrections
recover it, for single-photon, two-photon, and time-bin heralding protocols.
"""

__version__ = "0.1.0"
