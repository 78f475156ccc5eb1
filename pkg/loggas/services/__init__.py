"""Services package for loggas"""
