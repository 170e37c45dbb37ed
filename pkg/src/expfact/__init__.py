"""Factor invertible matrices over sampled function algebras into two exponentials."""

from .algebra import (
    AlgebraElement,
    MatrixOverAlgebra,
    SampleSpace,
    make_backend,
)
from .certify import FactorizationCertificate, verify_factorization
from .general import factorize_two_exp, regroup_unitriangular, single_exp_finite
from .matfunc import direct_log, log_unipotent, mat_exp, mat_log_branch
from .spectra import Spectrum, spectrum
from .triangular import two_exp_triangular

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement",
    "MatrixOverAlgebra",
    "SampleSpace",
    "make_backend",
    "FactorizationCertificate",
    "verify_factorization",
    "factorize_two_exp",
    "regroup_unitriangular",
    "single_exp_finite",
    "direct_log",
    "log_unipotent",
    "mat_exp",
    "mat_log_branch",
    "Spectrum",
    "spectrum",
    "two_exp_triangular",
]
