"""Exact harmonic dynamics on the periodic box (-L, L]^d.

Arrays handed to and returned from this module are in box order: index i on
every axis is the site x = i - L + 1, so index 0 is -L + 1 and index 2L - 1 is L.
The unitary DFT on the box diagonalises gamma on the dual grid x*pi/L.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .dynamics.evolution import evolve
from .dynamics.lattice import LatticeFunction
from .errors import DegenerateModel, SizeMismatch
from .kernels.base import QuadratureSpec
from .model import ModelParams, dispersion_on_grid, multipliers_from_gamma

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class FiniteVolume:
    L: int
    params: ModelParams

    def __post_init__(self) -> None:
        if self.L < 1:
            raise SizeMismatch(f"box half-width must be positive, got {self.L}")
        if self.params.omega <= 0:
            raise DegenerateModel("finite-volume dynamics needs omega > 0")

    @property
    def side(self) -> int:
        return 2 * self.L

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.side,) * self.params.d

    @property
    def axis_sites(self) -> np.ndarray:
        return np.arange(-self.L + 1, self.L + 1)

    @property
    def dual_grid(self) -> np.ndarray:
        """Quasi-momenta x*pi/L per axis, in box order."""
        return self.axis_sites * np.pi / self.L

    def contains(self, site) -> bool:
        return all(-self.L < int(v) <= self.L for v in site)

    def to_fft_order(self, array: np.ndarray) -> np.ndarray:
        return np.roll(array, -(self.L - 1), axis=tuple(range(array.ndim)))

    def to_box_order(self, array: np.ndarray) -> np.ndarray:
        return np.roll(array, self.L - 1, axis=tuple(range(array.ndim)))

    def embed(self, f: LatticeFunction) -> np.ndarray:
        if f.dimension != self.params.d:
            raise SizeMismatch(f"function has dimension {f.dimension}, box has d={self.params.d}")
        array = np.zeros(self.shape, dtype=complex)
        for site, value in f:
            if not self.contains(site):
                raise SizeMismatch(f"site {site} lies outside the box (-{self.L}, {self.L}]^{self.params.d}")
            array[tuple(v + self.L - 1 for v in site)] = value
        return array

    def restrict(self, f: LatticeFunction) -> np.ndarray:
        """Values of an infinite-volume function on the box sites, ignoring the rest."""
        array = np.zeros(self.shape, dtype=complex)
        for site, value in f:
            if self.contains(site):
                array[tuple(v + self.L - 1 for v in site)] = value
        return array

    def to_function(self, array: np.ndarray) -> LatticeFunction:
        return LatticeFunction.from_dense(array, (-self.L + 1,) * self.params.d)


def _check_shape(vol: FiniteVolume, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    if f.shape != vol.shape:
        raise SizeMismatch(f"expected an array of shape {vol.shape}, got {f.shape}")
    return f


def evolve_finite(vol: FiniteVolume, f: np.ndarray, t: float) -> np.ndarray:
    """T_t^L f for a box-ordered array f.

    (U* - V*) is applied to the pair (f, conj f) in Fourier space, each
    component picks up its phase e^{+-2 i gamma t}, and (U + V) reassembles it.
    """
    f = _check_shape(vol, f)
    if t == 0:
        return f.copy()
    gamma = np.broadcast_to(dispersion_on_grid(vol.params, vol.side), vol.shape)
    plus, minus = multipliers_from_gamma(gamma)
    f_hat = np.fft.fftn(vol.to_fft_order(f), norm="ortho")
    f_bar_hat = np.fft.fftn(vol.to_fft_order(np.conj(f)), norm="ortho")

    # h = (U* - V*) f, carried with the transform of its conjugate.
    h_hat = -0.5j * (plus * f_hat + minus * f_bar_hat)
    h_bar_hat = 0.5j * (plus * f_bar_hat + minus * f_hat)

    phase = np.exp(2j * gamma * t)
    h_hat = phase * h_hat
    h_bar_hat = np.conj(phase) * h_bar_hat

    result = np.fft.ifftn(0.5j * (plus * h_hat + minus * h_bar_hat), norm="ortho")
    return vol.to_box_order(result)


def finite_symplectic_form(f: np.ndarray, g: np.ndarray) -> float:
    return float(np.vdot(f, g).imag)


def compare_finite_infinite(
    params: ModelParams, L: int, f: LatticeFunction, t: float, spec: QuadratureSpec
) -> float:
    """max over the box of |T_t^L f - T_t f|."""
    vol = FiniteVolume(L=L, params=params)
    boxed = vol.embed(f)
    if t == 0:
        return 0.0
    finite = evolve_finite(vol, boxed, t)
    infinite = vol.restrict(evolve(params, f, t, spec).function)
    difference = float(np.abs(finite - infinite).max())
    LOGGER.debug(f"compare_finite_infinite L={L} t={t:g} difference={difference:.3e}")
    return difference
