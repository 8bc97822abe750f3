"""Run configuration"""
