"""Result files"""
