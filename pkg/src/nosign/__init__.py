"""Numerical harness for the no-sign obstacle problem Δu = χ_{Ω(u)}.

Modules
-------
field        grid fields, interpolation, quadrature, negativity-set measures
fixtures     closed-form solutions and calibrators
solver       fixed-point and projected-relaxation grid solvers
functionals  frequency, Weiss and L2-growth functionals
blowup       blowup fitting, stratum classification, Almgren blowups
recursion    decay-recursion constants and brute-force verification
cli          config-driven experiment runner
"""

__version__ = "0.1.0"
