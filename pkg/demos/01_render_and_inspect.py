"""
Rendering a synthetic scene with exact ground truth
====================================================

Every capability in this package can be checked against scenes whose
motion is known to machine precision. This script builds a small scene,
renders it, and looks at what came out.
"""

import numpy as np

from labmotion import MotionProfile, Rect, SceneSpec, render_scene, save_pgm_file

# A 160x120 canvas with one textured 60x44 target that slides along a
# half-pixel-per-frame ramp in x. Intensities live in [0, 1].
spec = SceneSpec(
    canvas=(160, 120),
    target_rect=Rect(40, 30, 60, 44),
    texture_seed=7,
    fps=30.0,
    n_frames=12,
    noise_sigma=0.005,
    profile_x=MotionProfile(kind="ramp", rate=0.5),
)

frames, truth = render_scene(spec)
print(f"rendered {len(frames)} frames of {frames.width}x{frames.height} px")

# The ground truth is the per-frame displacement relative to frame 0.
# Entry 0 is exactly (0, 0) by construction.
print("\n  t        du     dv")
for t, du, dv in zip(truth.t[:6], truth.du[:6], truth.dv[:6]):
    print(f"  {t:5.3f}  {du:5.2f}  {dv:5.2f}")

# Frames are plain float arrays, so ordinary numpy tools apply.
first = frames[0].pixels
inside = first[30:74, 40:100]
outside_mean = (first.sum() - inside.sum()) / (first.size - inside.size)
print(f"\ntarget intensity spread {inside.min():.2f}..{inside.max():.2f}, "
      f"background mean {outside_mean:.2f}")

# Integer shifts reproduce the texture exactly; frame 2 sits 1 px right
# of frame 0, so the interiors agree pixel for pixel.
interior0 = frames[0].pixels[32:72, 44:96]
interior2 = frames[2].pixels[32:72, 45:97]
print(f"frame 2 is frame 0 shifted by 1 px: max interior difference "
      f"{np.max(np.abs(interior2 - interior0)):.4f} (noise only)")

# Frames serialise to ordinary binary PGM for use with any image tool.
save_pgm_file(frames[0], "demo_frame0.pgm")
print("\nwrote demo_frame0.pgm")
