"""
chainlab test suite
"""
