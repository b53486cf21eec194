"""Stationary stochastic fluid model for a single continuous place.

The stationary distribution F(x) is assembled by spectral decomposition of
the pencil (Q - gamma R): the zero mode contributes the stationary PMF phi,
every mode with negative real part contributes a decaying exponential, and
positive modes are excluded by boundedness. The generalized (pencil)
eigensolver tolerates zero diagonal entries of R, where R^-1 does not exist.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import EigenCountMismatch, MultiContinuous, NumericFailure, Unstable
from .ctmc import Ctmc, steady_state
from .model import Lfspn, Marking, enabled
from .reachability import Drg

ZERO_EIG_REL_TOL = 1e-9


def _single_cplace(net: Lfspn) -> str:
    if len(net.continuous_places) != 1:
        raise MultiContinuous(
            f"analysis needs exactly one continuous place, net has {len(net.continuous_places)}"
        )
    return net.continuous_places[0]


def potential_rate(net: Lfspn, m: Marking) -> Fraction:
    """Net fluid drift in m: inflow minus outflow over the enabled transitions."""
    q = _single_cplace(net)
    idx = net.place_index
    total = Fraction(0)
    for t in enabled(net, m):
        total += t.fluid_in_rate(q, m, idx) - t.fluid_out_rate(q, m, idx)
    return total


@dataclass(frozen=True)
class FluidRateMatrix:
    """Diagonal drift matrix; diag[i] is the potential rate in state i."""

    diag: tuple[Fraction, ...]

    def __len__(self) -> int:
        return len(self.diag)

    def as_numpy(self) -> np.ndarray:
        return np.diag([float(x) for x in self.diag])


@dataclass(frozen=True)
class SignClasses:
    negative: frozenset[int]
    zero: frozenset[int]
    positive: frozenset[int]


def fluid_rate_matrix(net: Lfspn, drg: Drg) -> FluidRateMatrix:
    return FluidRateMatrix(tuple(potential_rate(net, m) for m in drg.states))


def sign_classes(frm: FluidRateMatrix) -> SignClasses:
    neg = frozenset(i for i, r in enumerate(frm.diag) if r < 0)
    zero = frozenset(i for i, r in enumerate(frm.diag) if r == 0)
    pos = frozenset(i for i, r in enumerate(frm.diag) if r > 0)
    return SignClasses(neg, zero, pos)


def stability(phi: Sequence[Union[Fraction, float]], frm: FluidRateMatrix) -> tuple[Union[Fraction, float], bool]:
    """Mean potential drift phi . diag(R); stable iff strictly negative."""
    drift = sum(p * r for p, r in zip(phi, frm.diag))
    return drift, drift < 0


@dataclass(frozen=True)
class SfmSolution:
    """Spectral solution F(x) = phi + sum_k a_k e^(gamma_k x) v_k.

    Only the decaying modes are retained (conjugate pairs stay complex and
    realify on evaluation); ``ell`` = F(0) is the buffer empty probability.
    """

    phi: tuple[Union[Fraction, float], ...]
    gammas: tuple[complex, ...]
    vectors: tuple[tuple[complex, ...], ...]
    coeffs: tuple[complex, ...]
    ell: tuple[float, ...]
    signs: SignClasses

    @property
    def n(self) -> int:
        return len(self.phi)

    def eigenvalues(self) -> list[complex]:
        """All retained eigenvalues, zero mode first."""
        return [0j] + list(self.gammas)

    def eval(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        """(F(x), f(x)) as real vectors; imaginary residue is discarded."""
        if x < 0:
            raise ValueError("fluid level must be nonnegative")
        big_f = np.array([float(p) for p in self.phi], dtype=complex)
        small_f = np.zeros(self.n, dtype=complex)
        for gamma, vec, a in zip(self.gammas, self.vectors, self.coeffs):
            term = a * np.exp(gamma * x) * np.asarray(vec)
            big_f += term
            small_f += gamma * term
        return np.real(big_f), np.real(small_f)

    def density_integral(self) -> np.ndarray:
        """Componentwise integral of f over (0, infinity): equals phi - ell."""
        total = np.zeros(self.n, dtype=complex)
        for vec, a in zip(self.vectors, self.coeffs):
            total -= a * np.asarray(vec)
        return np.real(total)

    def density_moment_integral(self, power: int, lo: float = 0.0, hi: Optional[float] = None) -> np.ndarray:
        """Componentwise integral of x^power f_i(x) dx over [lo, hi).

        Closed form against the exponential modes (hi=None means infinity);
        used by the hybrid reward measures.
        """
        total = np.zeros(self.n, dtype=complex)
        for gamma, vec, a in zip(self.gammas, self.vectors, self.coeffs):
            seg = _poly_exp_integral(power, gamma, lo, hi)
            total += a * gamma * seg * np.asarray(vec)
        return np.real(total)


def _poly_exp_integral(p: int, gamma: complex, lo: float, hi: Optional[float]) -> complex:
    """Integral of x^p e^(gamma x) dx over [lo, hi); Re(gamma) < 0, hi may be inf."""
    # antiderivative: e^(gamma x) * sum_{j=0..p} (-1)^j (p!/(p-j)!) x^(p-j) / gamma^(j+1)
    def anti(x: float) -> complex:
        acc = 0j
        fact = 1.0
        for j in range(p + 1):
            acc += ((-1) ** j) * fact * (x ** (p - j)) / gamma ** (j + 1)
            fact *= p - j
        return np.exp(gamma * x) * acc

    upper = 0j if hi is None else anti(hi)
    return upper - anti(lo)


def spectral_solve(
    ctmc: Ctmc,
    frm: FluidRateMatrix,
    phi: Optional[Sequence[Union[Fraction, float]]] = None,
) -> SfmSolution:
    """Solve the stationary SFM by spectral decomposition of (Q - gamma R).

    Retains the zero mode (normalized so its contribution is phi) plus all
    modes with negative real part; their count must equal the number of
    positive-drift states, which also sizes the boundary linear system.
    """
    n = len(ctmc)
    if phi is None:
        phi = steady_state(ctmc)
    signs = sign_classes(frm)
    drift, stable = stability(phi, frm)
    if not stable:
        raise Unstable(f"mean potential drift {drift} is not negative; no stationary fluid distribution")

    qf = ctmc.as_numpy()
    rf = frm.as_numpy()
    # left eigenproblem v(Q - gamma R) = 0  <=>  right problem on transposes
    try:
        eigvals, eigvecs = scipy.linalg.eig(qf.T, rf.T)
    except Exception as exc:  # LAPACK failure
        raise NumericFailure(f"pencil eigensolver failed: {exc}") from exc

    scale = max(np.max(np.abs(qf)), 1.0) / max(np.max(np.abs(rf)), 1.0)
    tol = ZERO_EIG_REL_TOL * scale
    zero_count = 0
    retained: list[tuple[complex, np.ndarray]] = []
    for k in range(len(eigvals)):
        gamma = eigvals[k]
        if not np.isfinite(gamma):
            continue  # infinite eigenvalue of the singular pencil
        if abs(gamma.real) <= tol and abs(gamma.imag) <= tol:
            zero_count += 1
        elif gamma.real < -tol:
            vec = eigvecs[:, k]
            vec = vec / np.max(np.abs(vec))  # unit infinity norm; coefficient absorbs scale
            retained.append((complex(gamma), vec))
    if zero_count != 1:
        raise EigenCountMismatch(
            f"expected exactly 1 zero eigenvalue of the pencil, found {zero_count}"
        )
    if len(retained) != len(signs.positive):
        raise EigenCountMismatch(
            f"retained {len(retained)} decaying modes but the net has "
            f"{len(signs.positive)} positive-drift states (defective pencil?)"
        )

    retained.sort(key=lambda ev: (ev[0].real, ev[0].imag))
    phi_f = np.array([float(p) for p in phi])
    pos = sorted(signs.positive)
    if pos:
        a_mat = np.array([[vec[l] for _, vec in retained] for l in pos], dtype=complex)
        rhs = np.array([-phi_f[l] for l in pos], dtype=complex)
        try:
            coeffs = np.linalg.solve(a_mat, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericFailure(f"boundary coefficient system is singular: {exc}") from exc
    else:
        coeffs = np.zeros(0, dtype=complex)

    ell = phi_f.astype(complex).copy()
    for (gamma, vec), a in zip(retained, coeffs):
        ell += a * vec
    ell_real = np.real(ell)
    ell_real[np.abs(ell_real) < 1e-12] = 0.0

    return SfmSolution(
        phi=tuple(phi),
        gammas=tuple(gamma for gamma, _ in retained),
        vectors=tuple(tuple(complex(x) for x in vec) for _, vec in retained),
        coeffs=tuple(complex(a) for a in coeffs),
        ell=tuple(float(x) for x in ell_real),
        signs=signs,
    )


def eval_solution(sol: SfmSolution, x: float) -> tuple[np.ndarray, np.ndarray]:
    return sol.eval(x)
