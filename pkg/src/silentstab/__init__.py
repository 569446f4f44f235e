"""Analysis and simulation of silent self-stabilizing algorithms on spanning forests."""

__version__ = "0.1.0"
