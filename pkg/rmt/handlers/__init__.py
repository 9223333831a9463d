"""Action handlers for rmt"""
