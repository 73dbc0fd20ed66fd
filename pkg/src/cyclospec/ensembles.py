"""Random-matrix samplers and deterministic diagonal builders.

GUE normalization is fixed so that the normalized trace of ``G**2`` tends to
1 (semicircle law on ``[-2, 2]``): off-diagonal entries are complex Gaussian
with variance ``1/n`` and diagonal entries are real Gaussian with variance
``1/n``.
"""

from __future__ import annotations

import numpy as np


def sample_gue(n: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian GUE sample of dimension ``n`` with ``E tr(G^2) = 1``."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * np.sqrt(0.5)
    return (z + z.conj().T) / np.sqrt(2.0 * n)


def sample_haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The R-diagonal phase correction makes the factorization unique, which is
    what produces the Haar measure rather than a QR artifact.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * np.sqrt(0.5)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def geometric_diag(n: int, ratio: float, scale: float = 1.0, start_power: int = 0) -> np.ndarray:
    """Diagonal matrix with entries ``scale * ratio**(start_power + k)``, k < n."""
    if abs(ratio) >= 1:
        raise ValueError("|ratio| must be < 1")
    powers = start_power + np.arange(n)
    return np.diag(scale * np.power(float(ratio), powers)).astype(complex)
