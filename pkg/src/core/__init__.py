"""Core modules for settings, logging, errors, messages, storage and replica orchestration"""
