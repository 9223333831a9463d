"""
rmt - random band matrices with exchangeable entries
"""

from rmt.app import create_app

__all__ = ['create_app']
