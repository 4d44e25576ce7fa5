"""Noisy planar multi-hole point clouds (unions of annuli)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import GenerationFailure

MAX_HOLES = 5
MAX_PLACEMENT_TRIES = 200


@dataclass(frozen=True)
class Annulus:
    center: tuple
    outer: float
    inner: float
    hole_center: tuple  # equals center unless pinched

    @property
    def area(self):
        return math.pi * (self.outer ** 2 - self.inner ** 2)


def _annulus(rng, center, pinched):
    outer = rng.uniform(1.0, 1.5)
    inner = outer * rng.uniform(0.45, 0.65)
    hole = center
    if pinched:
        # hole tangent to the outer circle from inside
        phi = rng.uniform(0.0, 2 * math.pi)
        off = outer - inner
        hole = (center[0] + off * math.cos(phi), center[1] + off * math.sin(phi))
    return Annulus(tuple(center), outer, inner, tuple(hole))


def _compatible(a, b, margin):
    # neither hole may reach into the other's band or hole
    d_ab = math.dist(a.hole_center, b.center)
    d_ba = math.dist(b.hole_center, a.center)
    return d_ab >= a.inner + b.outer + margin and d_ba >= b.inner + a.outer + margin


def random_configuration(holes, rng, pinched=False, margin=0.1):
    """Random chain of overlapping annuli with pairwise separated holes."""
    if not 1 <= holes <= MAX_HOLES:
        raise ValueError(f"holes must be in 1..{MAX_HOLES}, got {holes}")
    shapes = [_annulus(rng, (0.0, 0.0), pinched)]
    for _ in range(holes - 1):
        for _attempt in range(MAX_PLACEMENT_TRIES):
            anchor = shapes[rng.integers(len(shapes))]
            probe = _annulus(rng, (0.0, 0.0), pinched)
            lo = max(probe.inner + anchor.outer, anchor.inner + probe.outer) + margin
            hi = probe.outer + anchor.outer  # keep the bands overlapping
            if pinched:
                hi += probe.outer - probe.inner
            if lo >= hi:
                continue
            dist = rng.uniform(lo, hi)
            phi = rng.uniform(0.0, 2 * math.pi)
            c = (anchor.center[0] + dist * math.cos(phi), anchor.center[1] + dist * math.sin(phi))
            dx, dy = c[0] - probe.center[0], c[1] - probe.center[1]
            cand = Annulus(c, probe.outer, probe.inner, (probe.hole_center[0] + dx, probe.hole_center[1] + dy))
            if all(_compatible(cand, s, margin) for s in shapes):
                shapes.append(cand)
                break
        else:
            raise GenerationFailure(f"could not place {holes} annuli after {MAX_PLACEMENT_TRIES} tries")
    return shapes


def _sample_in(shape, rng, count):
    out = np.empty((0, 2))
    while len(out) < count:
        m = 2 * (count - len(out)) + 8
        r = shape.outer * np.sqrt(rng.uniform(0.0, 1.0, m))
        t = rng.uniform(0.0, 2 * math.pi, m)
        p = np.column_stack([shape.center[0] + r * np.cos(t), shape.center[1] + r * np.sin(t)])
        keep = np.hypot(p[:, 0] - shape.hole_center[0], p[:, 1] - shape.hole_center[1]) >= shape.inner
        out = np.vstack([out, p[keep]])
    return out[:count]


def sample_tori_2d(holes, n_points, noise_sigma, seed, pinched=False, return_shapes=False):
    """Points on a union of ``holes`` annuli plus isotropic Gaussian noise.

    Deterministic under ``seed``. ``noise_sigma`` is an absolute standard
    deviation (outer radii lie in [1, 1.5]).
    """
    if not 1 <= holes <= MAX_HOLES:
        raise ValueError(f"holes must be in 1..{MAX_HOLES}, got {holes}")
    if n_points < 20 * holes:
        raise ValueError(f"need at least {20 * holes} points for {holes} holes")
    rng = np.random.default_rng(seed)
    shapes = random_configuration(holes, rng, pinched=pinched)
    areas = np.array([s.area for s in shapes])
    counts = rng.multinomial(n_points, areas / areas.sum())
    pts = np.vstack([_sample_in(s, rng, int(c)) for s, c in zip(shapes, counts)])
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, size=pts.shape)
    if return_shapes:
        return pts, shapes
    return pts
