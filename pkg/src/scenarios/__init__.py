"""Pinned experiment presets and scenario configuration files"""
