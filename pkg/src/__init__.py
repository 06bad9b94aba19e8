"""Multi-species random-batch particle simulator"""
