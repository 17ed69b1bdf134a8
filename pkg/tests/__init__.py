"""bohmflow test suite"""
