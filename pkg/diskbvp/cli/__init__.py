"""
command-line interface components
"""
