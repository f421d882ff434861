"""
Numerical core: series arithmetic, shift-map dynamics, conjugacies,
pantograph recursions, the periodic eigenproblem and the steps integrator.
"""
