"""
Test suite for shiftlab
"""
