"""Intersection-over-union of oriented rectangles in the BEV plane."""

import numpy as np

from macp.errors import ContractError
from macp.geom.geometry import Box2D


def polygon_area(poly: np.ndarray) -> float:
    """Shoelace area of a simple polygon given as (N, 2) vertices."""
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """
    Sutherland-Hodgman: clip ``subject`` against the convex, counter-clockwise
    polygon ``clip``.
    """
    output = [p for p in subject]
    n = len(clip)
    for i in range(n):
        if not output:
            break
        a, b = clip[i], clip[(i + 1) % n]
        edge = b - a

        def side(p):
            return edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])

        points, output = output, []
        prev = points[-1]
        prev_side = side(prev)
        for cur in points:
            cur_side = side(cur)
            if cur_side >= 0:
                if prev_side < 0:
                    output.append(prev + (cur - prev) * (prev_side / (prev_side - cur_side)))
                output.append(cur)
            elif prev_side >= 0:
                output.append(prev + (cur - prev) * (prev_side / (prev_side - cur_side)))
            prev, prev_side = cur, cur_side
    return np.array(output).reshape(-1, 2)


def rotated_iou(a: Box2D, b: Box2D) -> float:
    """IoU of two oriented rectangles, in [0, 1]."""
    if a.area <= 0 or b.area <= 0:
        raise ContractError(f"degenerate box in IoU: {a if a.area <= 0 else b}")
    # cheap reject on circumscribed circles
    ra = 0.5 * np.hypot(a.length, a.width)
    rb = 0.5 * np.hypot(b.length, b.width)
    if np.hypot(a.x - b.x, a.y - b.y) >= ra + rb:
        return 0.0
    inter = polygon_area(clip_polygon(a.corners(), b.corners()))
    union = a.area + b.area - inter
    return float(min(1.0, max(0.0, inter / union)))
