"""
Types de valeurs et lignes persistées du simulateur
"""
