"""
# linalg.py

Deterministic dense linear-algebra kernels: thin SVD with a fixed sign
convention, Moore-Penrose pseudo-inverse, PSD matrix square root and Jacobi
joint diagonalisation of symmetric matrices.
"""
import logging

import numpy as np
import scipy.linalg

from .errors import InvalidInputError
from .utils import as_array

logger = logging.getLogger(__name__)

# Singular values below max(rows, cols) * s_max * PINV_RTOL count as zero.
PINV_RTOL = 1e-10
SYMMETRY_TOL = 1e-8
EIGEN_TOL = 1e-8


def thin_svd(m):
    """ Thin singular value decomposition m = u * diag(s) * v^T.

    The sign of every singular pair is fixed so that the largest-magnitude
    entry of each u column is non-negative.

    Args:
        m (np.array): rows x cols matrix

    Returns:
        (u, s, v): u rows x k, s length k (descending), v cols x k, k = min(rows, cols)
    """
    m = as_array(m, ndim=2, name='matrix')
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidInputError("matrix must have at least one row and column")

    u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver='gesvd')
    v = vt.T.copy()

    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[pivots, np.arange(u.shape[1])] < 0, -1.0, 1.0)
    u = u * signs
    v = v * signs

    return u, s, v


def pseudo_inverse(m):
    """ Moore-Penrose pseudo-inverse via thin_svd.

    Args:
        m (np.array): rows x cols matrix

    Returns:
        cols x rows matrix
    """
    m = as_array(m, ndim=2, name='matrix')
    u, s, v = thin_svd(m)
    s_max = s[0] if s.size else 0.0
    tol = max(m.shape) * s_max * PINV_RTOL
    s_inv = np.zeros_like(s)
    keep = s > tol
    s_inv[keep] = 1.0 / s[keep]
    return (v * s_inv) @ u.T


def psd_sqrt(m):
    """ Symmetric square root of a positive semi-definite matrix.

    Eigenvalues slightly below zero (rounding) are clamped to zero.

    Args:
        m (np.array): symmetric n x n matrix

    Returns:
        r (np.array): symmetric n x n matrix with r @ r = m
    """
    m = as_array(m, ndim=2, name='matrix')
    if m.shape[0] != m.shape[1]:
        raise InvalidInputError("psd_sqrt needs a square matrix, got %s" % (m.shape,))
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
        raise InvalidInputError("psd_sqrt needs a symmetric matrix")

    evals, evecs = scipy.linalg.eigh((m + m.T) / 2.0)
    if evals.size and evals.min() < -EIGEN_TOL * scale:
        raise InvalidInputError("psd_sqrt needs a positive semi-definite matrix "
                                "(min eigenvalue %g)" % evals.min())
    if evals.size and evals.min() < 0:
        logger.debug('Clamping %i small negative eigenvalues to zero.' % np.sum(evals < 0))
    evals = np.clip(evals, 0.0, None)

    r = (evecs * np.sqrt(evals)) @ evecs.T
    return (r + r.T) / 2.0


def joint_diagonalize(mats, tol=1e-12, max_sweeps=100):
    """ Orthogonal matrix that jointly diagonalises a set of symmetric matrices.

    Jacobi sweeps of plane rotations; each angle is chosen in closed form to
    minimise the off-diagonal energy summed over all matrices.

    Args:
        mats (np.array): (K, n, n) symmetric matrices, or one (n, n) matrix
        tol (float): stop when a full sweep has no rotation angle above tol
        max_sweeps (int): sweep limit

    Returns:
        v (np.array): (n, n) orthogonal; v^T mats[k] v is as diagonal as a common
        rotation allows, exactly diagonal when the matrices commute
    """
    mats = as_array(mats, name='matrices')
    if mats.ndim == 2:
        mats = mats[np.newaxis]
    if mats.ndim != 3 or mats.shape[0] < 1 or mats.shape[1] != mats.shape[2]:
        raise InvalidInputError("joint_diagonalize needs (K, n, n) matrices, got %s" % (mats.shape,))
    m = (mats + mats.transpose(0, 2, 1)) / 2.0
    n = m.shape[1]
    v = np.eye(n)

    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = np.stack([m[:, p, p] - m[:, q, q], m[:, p, q] + m[:, q, p]])
                gg = g @ g.T
                ton = gg[0, 0] - gg[1, 1]
                toff = gg[0, 1] + gg[1, 0]
                theta = 0.5 * np.arctan2(toff, ton + np.hypot(ton, toff))
                if abs(theta) <= tol:
                    continue
                rotated = True
                c, s = np.cos(theta), np.sin(theta)
                rot = np.array([[c, -s], [s, c]])
                pair = [p, q]
                m[:, :, pair] = m[:, :, pair] @ rot
                m[:, pair, :] = rot.T @ m[:, pair, :]
                v[:, pair] = v[:, pair] @ rot
        if not rotated:
            logger.debug('Joint diagonalisation converged after %i sweeps.' % (sweep + 1))
            break
    else:
        logger.warning('Joint diagonalisation stopped after %i sweeps.' % max_sweeps)
    return v
