"""Artifact export"""
