from enum import Enum
from typing import Dict, List, Sequence, Tuple


class Tournament3Class(Enum):
    Transitive = "transitive"
    Cycle = "cycle"
    Degenerate = "degenerate"


class Tournament4Class(Enum):
    Transitive = "transitive"
    WinnerOrLoserPlusCycle = "winner_or_loser_plus_cycle"
    FourCycle = "four_cycle"
    Degenerate = "degenerate"


# Vertex pairs in the order margins are passed to classify4.
PAIRS4: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def out_degrees(
    vertex_count: int, pairs: Sequence[Tuple[int, int]], margins: Sequence[int]
) -> List[int]:
    """
    :return: Out-degree of each vertex, where margin > 0 on pair (i, j) means
        i beats j.
    """
    degrees: List[int] = [0] * vertex_count
    for (i, j), margin in zip(pairs, margins):
        if margin > 0:
            degrees[i] += 1
        elif margin < 0:
            degrees[j] += 1
    return degrees


def classify3(m_ab: int, m_bc: int, m_ac: int) -> Tournament3Class:
    if 0 == m_ab or 0 == m_bc or 0 == m_ac:
        return Tournament3Class.Degenerate
    degrees: List[int] = out_degrees(3, ((0, 1), (1, 2), (0, 2)), (m_ab, m_bc, m_ac))
    if [1, 1, 1] == degrees:
        return Tournament3Class.Cycle
    return Tournament3Class.Transitive


def classify4(margins: Sequence[int]) -> Tournament4Class:
    """
    Classifies a tournament on four dice by its sorted out-degree sequence.

    :param margins: The six pairwise margins in the order ab, ac, ad, bc, bd, cd.
    """
    if 6 != len(margins):
        raise ValueError(f"Expected six margins, got {len(margins)}")
    if any(0 == margin for margin in margins):
        return Tournament4Class.Degenerate
    degrees: List[int] = sorted(out_degrees(4, PAIRS4, margins))
    if [0, 1, 2, 3] == degrees:
        return Tournament4Class.Transitive
    if [1, 1, 2, 2] == degrees:
        return Tournament4Class.FourCycle
    return Tournament4Class.WinnerOrLoserPlusCycle


def sub_margins3(margins: Sequence[int], dropped: int) -> Tuple[int, int, int]:
    """
    :return: The (ab, bc, ac) margins of the three dice left after dropping one
        vertex of a four-dice tournament, keeping the remaining dice in order.
    """
    kept: List[int] = [vertex for vertex in range(4) if vertex != dropped]
    lookup: Dict[Tuple[int, int], int] = {pair: margin for pair, margin in zip(PAIRS4, margins)}
    a, b, c = kept
    return lookup[(a, b)], lookup[(b, c)], lookup[(a, c)]
