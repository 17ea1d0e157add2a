"""Head-tracked binaural listening-test engine.

A library and CLI for running seat-based spatial audio listening tests:
ambisonic room impulse responses are convolved with anechoic samples in
real time, rotated to follow the listener's head, and decoded binaurally,
while a UDP/OSC control surface drives MUSHRA-style rating sessions and
records assessor behavior for later screening and aggregation.
"""

__version__ = "0.1.0"
