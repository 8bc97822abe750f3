"""Linear programming kernel"""
