"""CLI and acceptance runs"""
