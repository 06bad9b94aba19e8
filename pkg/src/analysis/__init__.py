"""Theory constants, consistency oracles, error, cost and histogram statistics"""
