"""Models package for loggas"""
