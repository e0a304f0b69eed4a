"""Pure-numpy covariance builders, fallback for mfbo._covcore."""

import numpy as np


def se_cross(xa, xb, inv_ls_sq, signal_var):
    diff = xa[:, None, :] - xb[None, :, :]
    d2 = np.einsum("ijk,k,ijk->ij", diff, inv_ls_sq, diff)
    return signal_var * np.exp(-0.5 * d2)


def se_sym(xa, inv_ls_sq, signal_var):
    out = se_cross(xa, xa, inv_ls_sq, signal_var)
    # (x_i - x_j)**2 is bitwise symmetric, but mirror anyway so the
    # guarantee does not rest on einsum's reduction order.
    il = np.tril_indices_from(out, -1)
    out[(il[1], il[0])] = out[il]
    np.fill_diagonal(out, signal_var)
    return out
