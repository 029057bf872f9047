"""
Viscous Burgers boundary-layer study
"""
