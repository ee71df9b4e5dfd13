from fractions import Fraction

from intransitive_dice_lab.dice_core.interval import SQRT3
from intransitive_dice_lab.edgeworth.simple_integrals import IntegralRow, simple_integrals_table


def test_every_identity_holds() -> None:
    rows = simple_integrals_table()
    assert 17 == len(rows)
    for row in rows:
        assert row.passed, f"{row.label}: {row.numeric} vs {row.exact}"


def test_row_serialization() -> None:
    numeric: float = float(Fraction(1, 3)) * SQRT3
    row: IntegralRow = IntegralRow("E[max(V1,V2)]", Fraction(1, 3), 1, numeric)
    document = row.to_dict()
    assert "1/3" == document["rational"]
    assert document["passed"]
    assert 0.0 == document["error"]
