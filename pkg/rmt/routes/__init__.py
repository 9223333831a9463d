"""Routes package for rmt"""
