# coding: utf-8
# abcd: Abstract Class about boundary evaluators
#

import abc

import numpy as np

from supercool.core import ModelParams, TimeGrid


class WindowEvaluator(metaclass=abc.ABCMeta):
    """
    A restartable F_eps. The Picard driver evaluates one time window at a
    time from a saved state, so the converged prefix is never recomputed.
    """

    def __init__(self, params: ModelParams, grid: TimeGrid):
        self.params = params
        self.grid = grid

    @property
    @abc.abstractmethod
    def name(self) -> str:
        """ 'pde' or 'mc' """

    @abc.abstractmethod
    def initial_state(self):
        """ solver state at t_0 """

    @abc.abstractmethod
    def advance(self, state, lam: np.ndarray, k0: int, k1: int):
        """
        Args:
            state: state at step k0, left untouched
            lam: boundary values on the whole grid; only k0..k1 are read

        Returns:
            (F values at steps k0+1..k1, state at k1, error estimates at k0+1..k1)
        """
