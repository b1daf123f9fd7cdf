"""Posing a mesh and rasterizing its silhouette.

Loads the unit-cube model, spins it through a few orientations under the
affine camera (rotate about the centroid, drop z, scale, translate), and
prints each silhouette as ASCII art.  Masks are also written as PGM files
under demo_out/silhouette_basics/.
"""

import math
import os

from siltrack import PoseParams, apply_pose, load_mesh, rasterize_silhouette
from siltrack.io import write_pgm

HERE = os.path.dirname(__file__)
OUT = os.path.join(HERE, "demo_out", "silhouette_basics")
os.makedirs(OUT, exist_ok=True)

mesh = load_mesh(os.path.join(HERE, os.pardir, "assets", "cube.mesh"))
print(f"cube: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles")

# A face-on cube projects to a square; tilting reveals more faces and the
# silhouette grows toward the hexagonal outline of the corner view.
for k, (yaw, pitch) in enumerate([(0.0, 0.0), (0.4, 0.0), (0.4, 0.6),
                                  (math.pi / 4, math.atan(1 / math.sqrt(2)))]):
    # the cube spans [0, 1]^3, so shift by half its scaled size to center it
    pose = PoseParams(yaw=yaw, pitch=pitch, roll=0.0,
                      tx=9.0, ty=9.0, scale=14.0)
    mask = rasterize_silhouette(apply_pose(mesh, pose), 32, 32)
    print(f"\nyaw={yaw:.2f} pitch={pitch:.2f} "
          f"-> {int(mask.sum())} foreground pixels")
    for row in mask:
        print("".join("#" if v else "." for v in row))
    write_pgm(mask.astype("uint8") * 255,
              os.path.join(OUT, f"cube_{k}.pgm"))

print(f"\nmasks written to {OUT}")
