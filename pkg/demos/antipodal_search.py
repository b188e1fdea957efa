"""Antipodal points and cube cylinders in random convex covers."""
from cclab.bodies import Ball, Box
from cclab.covers import find_cube_cylinder, find_diameter, random_cell_cover
from cclab.spaces import derive_rng

for i in range(5):
    cover = random_cell_cover(Ball.unit(3), 3, derive_rng(1, i))
    r = find_diameter(cover, 64, rng=i)
    print(f"B^3 cover {i}: piece {r.piece} holds x and -x for x = {r.x.round(3)}")

for i in range(5):
    cover = random_cell_cover(Box.cube(10), 3, derive_rng(2, i))
    r = find_cube_cylinder(cover)
    print(f"[-1,1]^10 cover {i}: piece {r.piece} contains a sub-cube, "
          f"fixed prefix {r.prefix}")
