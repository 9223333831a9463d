"""Utilities for rmt"""
