"""Word map x^a y^b on SL(2,q) and PSL(2,q): decisions, witnesses, oracles."""

__version__ = "0.1.0"

from .field import (
    CharRoots,
    FieldElem,
    Fq,
    NotPrime,
    QuadElem,
    QuadExt,
    SizeLimitExceeded,
    ZeroElement,
    char_roots,
    element_order,
    field_for_q,
    make_field,
    nonsplit_generator,
    primitive_element,
    split_prime_power,
)
