"""NumPy fallback for the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def fwht(a):
    n = a.shape[0]
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        v = a.reshape(-1, 2, h)
        x = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = x - v[:, 1, :]
        h *= 2
    return a


def parity_and(a, b):
    if a.shape[0] != b.shape[0]:
        raise ValueError("length mismatch")
    return (np.bitwise_count(a & b) & 1).astype(np.uint8)


def hadamard_encode(items, rows, uniforms, keep):
    if rows.shape[0] != items.shape[0] or uniforms.shape[0] != items.shape[0]:
        raise ValueError("length mismatch")
    bits = np.bitwise_count(items & rows) & 1
    return (bits ^ (uniforms >= keep)).astype(np.int8)


def signed_row_sums(rows, bits, size):
    if bits.shape[0] != rows.shape[0]:
        raise ValueError("length mismatch")
    signs = 1.0 - 2.0 * bits.astype(np.float64)
    return np.bincount(rows.astype(np.intp), weights=signs, minlength=size).astype(np.float64)
