"""Runnable checks, one registered class per command"""
