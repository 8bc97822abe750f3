"""Constrained linear plant, invariant sets and safe time"""
