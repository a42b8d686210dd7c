"""Relative-speed estimation of a reactive jammer in vehicle platoons."""
