"""
shiftlab: analyticity analysis for delay-differential equations with a
variable time-shift, x'(t) = f(t, x(t), x(eta(t))).
"""

__version__ = "0.3.0"
