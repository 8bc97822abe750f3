"""Closed-loop self-triggered simulation"""
