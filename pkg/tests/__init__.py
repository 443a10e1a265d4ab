"""
unit tests for diskbvp
"""
