"""Poisson structure, Casimirs and Darboux reduction for generalized Lotka-Volterra systems."""

from .darboux import DarbouxSystem, darboux_general, darboux_via_decoupling, darboux_via_linear
from .glv import EmbeddingSpec, GLVSystem, apply_qmt, class_signature, decouple, embed, prepare_decoupling
from .poisson import GLVPFactorization, NotGLVP, casimirs, check_jacobi, hamiltonian, solve_factorization, verify_factorization
from .ratmat import RatMatrix

__version__ = "0.1.0"

__all__ = [
    "DarbouxSystem",
    "EmbeddingSpec",
    "GLVPFactorization",
    "GLVSystem",
    "NotGLVP",
    "RatMatrix",
    "apply_qmt",
    "casimirs",
    "check_jacobi",
    "class_signature",
    "darboux_general",
    "darboux_via_decoupling",
    "darboux_via_linear",
    "decouple",
    "embed",
    "hamiltonian",
    "prepare_decoupling",
    "solve_factorization",
    "verify_factorization",
]
