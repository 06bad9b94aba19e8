"""Random batch partitions, particle dynamics and coupled runs"""
