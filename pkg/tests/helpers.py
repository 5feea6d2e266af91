"""Shared test oracles, independent of the library's evaluation shortcuts."""

import numpy as np


def direct_group_rate(h, s, t, gamma):
    """Conditional group rate straight from the defining formula, with an
    explicit M x M inverse and determinant."""
    h = np.asarray(h, dtype=complex)
    m = h.shape[0]
    s = sorted(s)
    t = sorted(t)
    if not s:
        return 0.0
    eye = np.eye(m, dtype=complex)
    h_s = h[:, s]
    a = gamma * (h_s @ h_s.conj().T)
    if t:
        h_t = h[:, t]
        b = eye + gamma * (h_t @ h_t.conj().T)
        a = a @ np.linalg.inv(b)
    sign, logdet = np.linalg.slogdet(eye + a)
    assert sign.real > 0
    return float(logdet / np.log(2.0))


def random_channel(rng, m, k):
    return (rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))) / np.sqrt(2.0)
