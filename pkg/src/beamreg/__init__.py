"""beamreg: clamped Euler-Bernoulli beam solver with mollified singular
coefficients, a-priori energy-bound verification and eps-sweep diagnostics."""

__version__ = "0.1.0"
