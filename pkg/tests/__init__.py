"""
Eyecenter Test Suite

Unit, integration and end-to-end tests for the eyecenter toolkit.
"""
