"""
boundary sections, coefficient algebra, boundary operators and their functional calculus
"""
