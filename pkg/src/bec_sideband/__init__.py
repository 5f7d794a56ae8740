"""Sideband Rabi spectroscopy of trapped two-component Bose gases."""
