"""Observable selector expressions for configs and the CLI.

Grammar: products of `name(site)` atoms joined by '*', plus the bare keywords
`Q` (total charge) and `H` (the configured Hamiltonian).  Examples:
`sx(1)`, `sx(2)*sx(6)`, `lambda1(5)`, `q(3)`.
"""
from __future__ import annotations

import re

from .operators import (HamiltonianSpec, LAMBDA, OperatorMatrix, SIGMA_X,
                        SIGMA_Y, SIGMA_Z, CHARGE_Q, _wrap, build_charge_operators,
                        build_hamiltonian, embed_at_site)

_ATOM = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\((\d+)\)$")

# `sx` on a qutrit chain acts on the qubit subsystem, i.e. lambda_1
_NAMES = {
    2: {"sx": SIGMA_X, "sy": SIGMA_Y, "sz": SIGMA_Z},
    3: {"sx": LAMBDA[1], "sy": LAMBDA[2], "sz": LAMBDA[3], "q": CHARGE_Q,
        **{f"lambda{i}": LAMBDA[i] for i in LAMBDA}},
}


class SelectorError(ValueError):
    pass


def operator_selector(expr: str, L: int, d: int,
                      ham: HamiltonianSpec | None = None) -> OperatorMatrix:
    """Assemble the observable named by a selector expression."""
    expr = expr.strip()
    if not expr:
        raise SelectorError("empty operator expression")
    if expr == "Q":
        if d != 3:
            raise SelectorError("Q is defined for qutrit chains")
        return build_charge_operators(L)[1]
    if expr == "H":
        if ham is None:
            raise SelectorError("selector 'H' needs a Hamiltonian spec")
        H = build_hamiltonian(ham)
        return H
    factors = [p.strip() for p in expr.split("*")]
    matrix = None
    names = []
    for atom in factors:
        m = _ATOM.match(atom)
        if not m:
            raise SelectorError(f"cannot parse operator atom {atom!r}")
        name, site = m.group(1), int(m.group(2))
        table = _NAMES[d]
        if name not in table:
            raise SelectorError(f"unknown operator name {name!r} for site "
                                f"dimension {d}")
        if not 1 <= site <= L:
            raise SelectorError(f"site {site} out of range 1..{L}")
        factor = embed_at_site(table[name], site, L)
        matrix = factor.matrix if matrix is None else matrix @ factor.matrix
        names.append(f"{name}({site})")
    return _wrap(matrix, L, d, "*".join(names))
