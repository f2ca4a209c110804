"""
Simulateur de ferme verticale à conduits de lumière : optique, bilan énergétique,
croissance, pilotage de l'éclairage de l'étage 3 et technico-économie d'une ferme
en conteneur à trois étages.
"""

__version__ = '0.1.0'
