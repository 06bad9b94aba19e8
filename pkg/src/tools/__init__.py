"""File exporters for trajectories, histograms, error series and reports"""
