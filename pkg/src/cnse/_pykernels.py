"""Pure-numpy pointwise kernels (fallback backend).

Every kernel takes C-contiguous float64 arrays of shape (3, M) (or
(3, 3, M) for velocity gradients) and returns fresh arrays. The arithmetic
is written in the same operation order as ``_ckernels.pyx`` so the two
backends agree to the last bit wherever libm is not involved.
"""
import numpy as np

NAME = "python"


def calm(code, eps, u):
    x, y, z = u[0], u[1], u[2]
    if code == 1:
        r = np.sqrt(x * x + y * y + z * z)
        return u / (1.0 + eps * r)
    if code == 2:
        r2 = x * x + y * y + z * z
        return u / (1.0 + eps * eps * r2)
    if code == 3:
        return np.arctan(eps * u) / eps
    if code == 4:
        r = np.sqrt(x * x + y * y + z * z)
        out = u.copy()
        outer = r >= 1.0 / eps
        if not outer.any():
            return out
        ro = r[outer]
        t = ro - 2.0 / eps
        q = np.where(ro < 2.0 / eps, -0.5 * eps * t * t + 1.5 / eps, 1.5 / eps)
        out[:, outer] = u[:, outer] * (q / ro)
        return out
    raise ValueError(f"unknown calming code {code}")


def lamb(a, b):
    """Pointwise cross product a x b."""
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def advect(w, grad):
    """(w . grad) v with grad[i, j] = d_j v_i."""
    out = np.empty_like(w)
    for i in range(3):
        out[i] = w[0] * grad[i, 0] + w[1] * grad[i, 1] + w[2] * grad[i, 2]
    return out


def max_norm(w):
    if w.shape[1] == 0:
        return 0.0
    return float(np.sqrt(np.max(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])))


# -- per-mode spectral kernels; c has shape (3, nx, ny, nzh) ----------------

def project_masked(c, kx, ky, kz, mask):
    """Leray projection of c * mask; the k = 0 mode is zeroed."""
    kx = kx[:, None, None]
    ky = ky[None, :, None]
    kz = kz[None, None, :]
    k2 = kx * kx + ky * ky + kz * kz
    inv_k2 = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    c = c * mask
    div = (kx * c[0] + ky * c[1] + kz * c[2]) * inv_k2
    out = np.empty_like(c)
    out[0] = c[0] - kx * div
    out[1] = c[1] - ky * div
    out[2] = c[2] - kz * div
    out[:, 0, 0, 0] = 0.0
    return out


def _times_i(z):
    return -z.imag + 1j * z.real


def curl(c, kx, ky, kz):
    kx = kx[:, None, None]
    ky = ky[None, :, None]
    kz = kz[None, None, :]
    out = np.empty_like(c)
    out[0] = _times_i(ky * c[2] - kz * c[1])
    out[1] = _times_i(kz * c[0] - kx * c[2])
    out[2] = _times_i(kx * c[1] - ky * c[0])
    return out


def gradient(c, kx, ky, kz):
    k = (kx[:, None, None], ky[None, :, None], kz[None, None, :])
    out = np.empty((3, 3) + c.shape[1:], dtype=c.dtype)
    for i in range(3):
        for j in range(3):
            out[i, j] = _times_i(k[j] * c[i])
    return out
