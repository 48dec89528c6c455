"""Orthographic top-down SVG of a shot: footprints with forward ticks, the
camera with its frustum wedge, and the scene bounds. Headless inspection of
a layout without any engine.

Output is deterministic: fixed float formatting and stable element order.
"""
from __future__ import annotations

import math
from typing import Mapping

from .camera_rig import camera_pose
from .geometry import Placement, forward_vector, local_corners

_SCALE = 30.0        # px per meter
_MARGIN = 1.5        # meters of breathing room around the bounds


def _fmt(v: float) -> str:
    out = f"{v:.3f}"
    return "0.000" if out == "-0.000" else out


class _Svg:
    def __init__(self) -> None:
        self.parts: list[str] = []

    def add(self, element: str) -> None:
        self.parts.append(element)


def _to_px(x: float, y: float, min_x: float, max_y: float) -> tuple[float, float]:
    # world +Y points up on screen
    return (x - min_x + _MARGIN) * _SCALE, (max_y - y + _MARGIN) * _SCALE


def _footprint_polygon(p: Placement) -> list[tuple[float, float]]:
    rot = p.rotation.matrix()
    corners = local_corners(p.dimensions) @ rot.T + p.location.as_array()
    bottom = corners[::2]  # z-low corners, in stable order
    # order the quad as a ring: indexes of local (-x,-y), (-x,+y), (+x,+y), (+x,-y)
    ring = [bottom[0], bottom[1], bottom[3], bottom[2]]
    return [(pt[0], pt[1]) for pt in ring]


def render_shot_svg(scene_size, placements: Mapping[str, Placement],
                    shell=None, camera_state=None, focus_ids=()) -> str:
    """Standalone renderer over parsed structures (the editor reuses it)."""
    min_x, max_x = scene_size.x_negative, scene_size.x
    min_y, max_y = scene_size.y_negative, scene_size.y
    width = (max_x - min_x + 2 * _MARGIN) * _SCALE
    height = (max_y - min_y + 2 * _MARGIN) * _SCALE

    svg = _Svg()
    svg.add(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )
    svg.add('<rect width="100%" height="100%" fill="#fafafa"/>')

    bx, by = _to_px(min_x, max_y, min_x, max_y)
    svg.add(
        f'<rect x="{_fmt(bx)}" y="{_fmt(by)}" width="{_fmt((max_x - min_x) * _SCALE)}" '
        f'height="{_fmt((max_y - min_y) * _SCALE)}" fill="none" stroke="#888" '
        f'stroke-width="1.5" stroke-dasharray="6 4"/>'
    )

    if shell is not None:
        for side in sorted(shell.walls):
            wall = shell.walls[side]
            wx, wy = _to_px(wall.min.x, wall.max.y, min_x, max_y)
            svg.add(
                f'<rect x="{_fmt(wx)}" y="{_fmt(wy)}" '
                f'width="{_fmt((wall.max.x - wall.min.x) * _SCALE)}" '
                f'height="{_fmt((wall.max.y - wall.min.y) * _SCALE)}" '
                f'fill="#d0d0d0" stroke="none"/>'
            )

    for asset_id in sorted(placements):
        p = placements[asset_id]
        ring = _footprint_polygon(p)
        pts = " ".join(
            f"{_fmt(px)},{_fmt(py)}"
            for px, py in (_to_px(x, y, min_x, max_y) for x, y in ring)
        )
        highlight = asset_id in focus_ids
        fill = "#ffd9a0" if highlight else "#cfe3ff"
        svg.add(f'<polygon points="{pts}" fill="{fill}" stroke="#335" stroke-width="1"/>')
        # forward tick from the origin, pointing where the asset faces
        fx, fy = forward_vector(p.rotation.z)
        tick_len = p.dimensions.y / 2.0 + 0.3
        x0, y0 = _to_px(p.location.x, p.location.y, min_x, max_y)
        x1, y1 = _to_px(p.location.x + fx * tick_len, p.location.y + fy * tick_len,
                        min_x, max_y)
        svg.add(
            f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}" '
            f'stroke="#c33" stroke-width="2"/>'
        )
        svg.add(
            f'<text x="{_fmt(x0 + 4)}" y="{_fmt(y0 - 4)}" font-size="10" '
            f'font-family="sans-serif" fill="#222">{asset_id}</text>'
        )

    if camera_state is not None:
        pose = camera_pose(camera_state)
        cx, cy = _to_px(pose.position.x, pose.position.y, min_x, max_y)
        svg.add(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="4" fill="#363" stroke="none"/>')
        # XY projection of the view direction and the horizontal FOV wedge
        view_dir = -camera_state.rotation.matrix()[:, 2]
        heading = math.atan2(view_dir[1], view_dir[0])
        half = camera_state.intrinsics.horizontal_fov_rad / 2.0
        reach = 3.0
        for sign in (-1.0, 1.0):
            ang = heading + sign * half
            ex = pose.position.x + math.cos(ang) * reach
            ey = pose.position.y + math.sin(ang) * reach
            exp, eyp = _to_px(ex, ey, min_x, max_y)
            svg.add(
                f'<line x1="{_fmt(cx)}" y1="{_fmt(cy)}" x2="{_fmt(exp)}" y2="{_fmt(eyp)}" '
                f'stroke="#363" stroke-width="1" stroke-dasharray="3 3"/>'
            )

    svg.add("</svg>")
    return "\n".join(svg.parts) + "\n"


def render_topdown(world, scene_id: int, shot_id: int) -> str:
    """Top-down SVG of one built shot."""
    shot = world.shot(scene_id, shot_id)
    scene = world.scenes[scene_id]
    camera_state = shot.camera_track.keyframes[0].state
    return render_shot_svg(
        scene.layout.scene_size,
        shot.placements,
        shell=scene.shell,
        camera_state=camera_state,
        focus_ids=set(shot.camera_spec.focus_ids),
    )
