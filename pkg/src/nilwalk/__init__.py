"""Nilpotent Lie group arithmetic and Monte Carlo limit-theorem checks.

Subpackage map:

    algebra      structure-constant nilpotent Lie algebras, BCH products
    ratlinalg    exact rational linear algebra (echelon subspaces)
    freealg      truncated free associative algebra, group-product element
    pathswap     block permutation groups and signed swap averages
    filtration   drift-induced weight filtration, dilations, graded product
    measures     increment laws, truncation, gap function
    walks        Monte Carlo product engine and experiments
    limitlaw     limit diffusion sampler, Levy-area reference, KDE
    fourier      characteristic-function scans, band-limited sandwiches
    nilmanifold  Heisenberg quotient walks, lazy-walk bound
    config, cli  experiment files, digests, CSV, command line
"""

__version__ = "0.1.0"
