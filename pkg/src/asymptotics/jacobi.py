from typing import Tuple

import numpy as np

JACOBI_TOLERANCE = 1e-15
JACOBI_MAX_SWEEPS = 64


def jacobi_eigh(matrix) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a small symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in ascending order and unit eigenvectors as columns,
    each oriented so its largest-magnitude component is positive.
    """
    A = np.array(matrix, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    scale = float(np.linalg.norm(A))

    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.sqrt(np.sum(A ** 2) - np.sum(np.diag(A) ** 2)))
        if off <= JACOBI_TOLERANCE * max(scale, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                sign = 1.0 if theta >= 0.0 else -1.0
                t = sign / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J

    eigenvalues = np.diag(A).copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    V = V[:, order]
    for k in range(n):
        if V[np.argmax(np.abs(V[:, k])), k] < 0.0:
            V[:, k] = -V[:, k]
    return eigenvalues, V
