"""Computational services for rmt"""
