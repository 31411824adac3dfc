"""Cluster and boundary records shared by graph founding and agglomeration."""

from typing import NamedTuple

NOT_CONNECTED = -1


class ColorStats(NamedTuple):
    """Diagonal Gaussian colour model: per-channel mean and standard deviation (Lab)."""

    mean: tuple
    sigma: tuple


class Cluster:
    """A node of the region graph / hierarchy tree.

    ``adjacency`` holds ``(neighbor_id, boundary_id, distance)`` tuples sorted
    by neighbour id; ``nn_index`` is the position of the nearest neighbour.
    """

    __slots__ = (
        "id",
        "parent",
        "left",
        "right",
        "adjacency",
        "nn_index",
        "area",
        "stats",
        "alive",
    )

    def __init__(self, id, area, stats, left=NOT_CONNECTED, right=NOT_CONNECTED):
        self.id = id
        self.parent = NOT_CONNECTED
        self.left = left
        self.right = right
        self.adjacency = []
        self.nn_index = -1
        self.area = area
        self.stats = stats
        self.alive = True

    @property
    def is_leaf(self):
        return self.left == NOT_CONNECTED

    def nearest(self):
        """Return the adjacency entry of the nearest neighbour, or None."""
        if self.nn_index < 0:
            return None
        return self.adjacency[self.nn_index]

    def __repr__(self):
        return (
            f"Cluster(id={self.id}, area={self.area}, parent={self.parent}, "
            f"children=({self.left}, {self.right}), degree={len(self.adjacency)})"
        )


class Boundary:
    __slots__ = ("id", "parent", "length", "contrast")

    def __init__(self, id, length, contrast, parent=NOT_CONNECTED):
        self.id = id
        self.parent = parent
        self.length = length
        self.contrast = contrast

    def __repr__(self):
        return f"Boundary(id={self.id}, length={self.length:.4g}, contrast={self.contrast:.4g})"
