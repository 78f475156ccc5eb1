"""Utilities package for loggas"""
