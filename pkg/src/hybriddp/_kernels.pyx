# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors ``_kernels_py`` function for function."""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int8_t, uint8_t, uint64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def fwht(double[::1] a):
    """In-place unnormalized Walsh-Hadamard transform; len(a) must be a power of two."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    cdef double x, y
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    with nogil:
        while h < n:
            i = 0
            while i < n:
                for j in range(i, i + h):
                    x = a[j]
                    y = a[j + h]
                    a[j] = x + y
                    a[j + h] = x - y
                i += 2 * h
            h *= 2
    return np.asarray(a)


def parity_and(const uint64_t[::1] a, const uint64_t[::1] b):
    """Parity of popcount(a & b), elementwise."""
    cdef Py_ssize_t n = a.shape[0], i
    if b.shape[0] != n:
        raise ValueError("length mismatch")
    out = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = __builtin_popcountll(a[i] & b[i]) & 1
    return out


def hadamard_encode(const uint64_t[::1] items, const uint64_t[::1] rows,
                    const double[::1] uniforms, double keep):
    """Report bit parity(rows & items), flipped when uniforms >= keep."""
    cdef Py_ssize_t n = items.shape[0], i
    cdef uint8_t bit
    if rows.shape[0] != n or uniforms.shape[0] != n:
        raise ValueError("length mismatch")
    out = np.empty(n, dtype=np.int8)
    cdef int8_t[::1] o = out
    with nogil:
        for i in range(n):
            bit = __builtin_popcountll(items[i] & rows[i]) & 1
            if uniforms[i] >= keep:
                bit ^= 1
            o[i] = bit
    return out


def signed_row_sums(const uint64_t[::1] rows, const int8_t[::1] bits, Py_ssize_t size):
    """sum over reports of (-1)**bit, bucketed by row."""
    cdef Py_ssize_t n = rows.shape[0], i
    if bits.shape[0] != n:
        raise ValueError("length mismatch")
    out = np.zeros(size, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            if bits[i]:
                o[rows[i]] -= 1.0
            else:
                o[rows[i]] += 1.0
    return out
