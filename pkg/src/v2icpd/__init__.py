"""Change-point detection of DOS, impersonation and false-information attacks
in connected-vehicle safety message streams."""

__version__ = "0.1.0"
