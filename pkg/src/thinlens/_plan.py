"""Flat description of a lens map consumed by the numerical kernels.

Every lens model lowers itself to a :class:`Plan`: a sum of multipole
terms, at most one elliptical component, at most one isothermal-ellipse
component and at most one radial profile, plus external shear.  Both
kernel backends evaluate exactly this structure, so the formulas for
the conjugate deflection and its Wirtinger derivatives exist in one
numpy implementation and one compiled one.
"""
from dataclasses import dataclass, field

import numpy as np

ELL_NONE = 0
ELL_EXTERIOR = 1  # exterior closed form continued to C minus the focal cut
ELL_PIECEWISE = 2  # uniform density: interior formula inside, exterior outside

RAD_NONE = 0
RAD_UNIFORM = 1
RAD_ISOTHERMAL = 2
RAD_POWER = 3

N_PARAMS = 14


@dataclass(frozen=True)
class Plan:
    gamma: float = 0.0
    nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    orders: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    ell_mode: int = ELL_NONE
    ell_a: float = 0.0
    ell_b: float = 0.0
    ell_c: float = 0.0
    ell_density: float = 0.0
    iso_strength: float = 0.0
    iso_c: float = 0.0
    rad_kind: int = RAD_NONE
    rad_radius: float = 0.0
    rad_p0: float = 0.0
    rad_p1: float = 0.0

    def pack(self):
        """Arrays in the layout expected by the compiled kernel."""
        params = np.array([
            self.gamma, self.ell_mode, self.ell_a, self.ell_b, self.ell_c,
            self.ell_density, 1.0 if self.iso_strength else 0.0,
            self.iso_strength, self.iso_c, self.rad_kind, self.rad_radius,
            self.rad_p0, self.rad_p1, 0.0,
        ], dtype=np.float64)
        return (params,
                np.ascontiguousarray(self.nodes, dtype=np.complex128),
                np.ascontiguousarray(self.orders, dtype=np.int64),
                np.ascontiguousarray(self.weights, dtype=np.complex128))

    @property
    def has_singular_origin(self):
        return self.rad_kind == RAD_ISOTHERMAL
