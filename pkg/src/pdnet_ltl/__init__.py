"""LTL-X model checking of small concurrent programs through PDNet unfoldings."""

__version__ = "0.1.0"
