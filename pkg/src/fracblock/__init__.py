"""Fractional powers of positive matrices and 3x3 block operator matrices."""
from .block3 import (BlockOperator3, adjugate_resolvent, assemble, block_fracpow_quadrature,
                     commutation_report)
from .closed_forms import (FAMILIES, build_family, family_fracpow, lambda1, lambda3, lambda4,
                           lambda312, spectrum_report)
from .errors import OperatorError, PreconditionError, ToleranceError
from .operators import GridSpec, PositivityCertificate, certify_positive, resolvent
from .oracle import matrix_exp, matrix_power, oracle_power, relative_error
from .quadrature import (DEFAULT_SCHEME, QuadratureScheme, balakrishnan_e1, balakrishnan_e2,
                         balakrishnan_e3_apply)

__version__ = "0.1.0"
