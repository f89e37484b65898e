"""Contextuality proofs on exclusivity graphs: KS sets, Hardy- and GHZ-type arguments."""

__version__ = "0.1.0"
