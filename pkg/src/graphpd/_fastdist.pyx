# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise-distance kernels. Same contracts as _puredist."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def pairwise_euclidean(double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, n))
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for t in range(m):
                diff = X[i, t] - X[j, t]
                acc += diff * diff
            acc = sqrt(acc)
            D[i, j] = acc
            D[j, i] = acc
    return out


def pairwise_manhattan(double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, n))
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, t
    cdef double acc
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for t in range(m):
                acc += fabs(X[i, t] - X[j, t])
            D[i, j] = acc
            D[j, i] = acc
    return out


def pairwise_cosine(double[:, ::1] X):
    # Caller guarantees no zero-norm row.
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, n))
    cdef double[:, ::1] D = out
    cdef cnp.ndarray[double, ndim=1] norms = np.empty(n)
    cdef double[::1] nv = norms
    cdef Py_ssize_t i, j, t
    cdef double acc, d
    for i in range(n):
        acc = 0.0
        for t in range(m):
            acc += X[i, t] * X[i, t]
        nv[i] = sqrt(acc)
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for t in range(m):
                acc += X[i, t] * X[j, t]
            d = 1.0 - acc / (nv[i] * nv[j])
            if d < 0.0:
                d = 0.0
            D[i, j] = d
            D[j, i] = d
    return out


def cross_euclidean(double[:, ::1] A, double[:, ::1] B):
    cdef Py_ssize_t p = A.shape[0], q = B.shape[0], m = A.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((p, q))
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(p):
        for j in range(q):
            acc = 0.0
            for t in range(m):
                diff = A[i, t] - B[j, t]
                acc += diff * diff
            D[i, j] = sqrt(acc)
    return out


def cross_manhattan(double[:, ::1] A, double[:, ::1] B):
    cdef Py_ssize_t p = A.shape[0], q = B.shape[0], m = A.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((p, q))
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, t
    cdef double acc
    for i in range(p):
        for j in range(q):
            acc = 0.0
            for t in range(m):
                acc += fabs(A[i, t] - B[j, t])
            D[i, j] = acc
    return out


def cross_cosine(double[:, ::1] A, double[:, ::1] B):
    cdef Py_ssize_t p = A.shape[0], q = B.shape[0], m = A.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((p, q))
    cdef double[:, ::1] D = out
    cdef cnp.ndarray[double, ndim=1] na = np.empty(p), nb = np.empty(q)
    cdef double[::1] nav = na, nbv = nb
    cdef Py_ssize_t i, j, t
    cdef double acc, d
    for i in range(p):
        acc = 0.0
        for t in range(A.shape[1]):
            acc += A[i, t] * A[i, t]
        nav[i] = sqrt(acc)
    for j in range(q):
        acc = 0.0
        for t in range(B.shape[1]):
            acc += B[j, t] * B[j, t]
        nbv[j] = sqrt(acc)
    for i in range(p):
        for j in range(q):
            acc = 0.0
            for t in range(m):
                acc += A[i, t] * B[j, t]
            d = 1.0 - acc / (nav[i] * nbv[j])
            if d < 0.0:
                d = 0.0
            D[i, j] = d
    return out
