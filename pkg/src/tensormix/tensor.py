"""Finite views of the factorized cell-probability tensor.

The joint probability of a cell (c_1, ..., c_p) of lower-level indices is

    pi[c] = sum_h  w_h * prod_j  psi[h][j].weight(c_j),

a mixture over top-level sticks of per-component stick weights.  Only the
instantiated part of each measure is representable; callers extend the sticks
to push the missing mass below any tolerance they care about.
"""

from __future__ import annotations

import numpy as np

from .sticks import StickMeasure, UninstantiatedIndexError


class TensorView:
    """Instantiated slice of the infinite probability tensor.

    Parameters
    ----------
    top : StickMeasure
        Top-level mixture weights.
    rows : list of list of StickMeasure
        ``rows[h][j]`` carries the component-j stick measure of top level h;
        one inner list per instantiated top-level stick.
    """

    def __init__(self, top, rows):
        if len(rows) != len(top):
            raise ValueError(
                "need one row of component measures per top-level stick "
                "(%d sticks, %d rows)" % (len(top), len(rows))
            )
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise ValueError("every top level must carry the same number of components")
        self.top = top
        self.rows = rows

    @property
    def n_components(self):
        return len(self.rows[0]) if self.rows else 0

    def truncated_mass(self, cell_shape):
        """Total tensor mass captured by cells within ``cell_shape``.

        ``cell_shape[j]`` bounds the 1-based index of component j.  Useful for
        checking that an extension pushed the unrepresented mass below a
        tolerance.
        """
        total = 0.0
        for h, w in enumerate(self.top.weights):
            prod = w
            for j, k in enumerate(cell_shape):
                m = self.rows[h][j]
                if k > len(m):
                    raise UninstantiatedIndexError(
                        "component %d instantiates %d sticks, cell shape wants %d; "
                        "extend the measure first" % (j, len(m), k)
                    )
                prod *= m.weights[:k].sum()
            total += prod
        return float(total)


def tensor_cell_prob(view, cell):
    """Probability of one tensor cell under the instantiated view.

    Parameters
    ----------
    view : TensorView
    cell : sequence of int
        1-based lower-level index per component.

    Raises
    ------
    UninstantiatedIndexError
        If any index exceeds the instantiated sticks of its measure; extend
        the view and retry.
    """
    cell = [int(c) for c in cell]
    if len(cell) != view.n_components:
        raise ValueError(
            "cell has %d indices but the view has %d components"
            % (len(cell), view.n_components)
        )
    if any(c < 1 for c in cell):
        raise ValueError("cell indices are 1-based and must be positive")
    total = 0.0
    for h, w in enumerate(view.top.weights):
        prod = w
        for j, c in enumerate(cell):
            prod *= view.rows[h][j].weight(c)
        total += prod
    return float(total)
