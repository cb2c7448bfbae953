"""
Command plumbing shared by every experiment verb
"""
