"""Shared fixture builders for the test suite."""

import numpy as np

from circlemap.geometry import Curve, PunctureSet, build_domain


def disk(punctures=(), degrees=(), panels=128, radius=1.0, center=(0.0, 0.0)):
    return build_domain(
        Curve.circle(center, radius),
        punctures=PunctureSet(tuple(punctures), tuple(degrees)),
        panels=panels,
    )


def annulus(r_in=0.4, punctures=(), degrees=(), panels=128, center=(0.0, 0.0)):
    return build_domain(
        Curve.circle(center, 1.0),
        holes=(Curve.circle(center, r_in),),
        punctures=PunctureSet(tuple(punctures), tuple(degrees)),
        panels=panels,
    )


def wobbly_curve(center, radius, amp, mode, phase=0.0):
    """Star-shaped perturbed circle as a trigonometric curve.

    x + iy = c + (r + amp cos(mode t + phase)) e^{it}, expanded into the
    finite Fourier form expected by Curve.
    """
    cx, cy = center
    n = mode + 1
    ax = [cx] + [0.0] * n
    bx = [0.0] * (n + 1)
    ay = [cy] + [0.0] * n
    by = [0.0] * (n + 1)
    ax[1] += radius
    by[1] += radius
    # amp cos(mt+p) cos t = amp/2 [cos((m+1)t+p) + cos((m-1)t+p)]
    # amp cos(mt+p) sin t = amp/2 [sin((m+1)t+p) - sin((m-1)t+p)]
    for sgn in (+1, -1):
        k = mode + sgn
        if k < 0:
            continue
        ax[k] += 0.5 * amp * np.cos(phase)
        bx[k] += -0.5 * amp * np.sin(phase)
        ay[k] += 0.5 * amp * np.sin(phase) * sgn
        by[k] += 0.5 * amp * np.cos(phase) * sgn
    return Curve.fourier(ax, bx, ay, by)


def transformed_circle(center, radius, angle, shift):
    """Circle rotated by `angle` about the origin (with its parametrization)
    and then translated by `shift`."""
    c, s = np.cos(angle), np.sin(angle)
    cx, cy = center
    rcx, rcy = c * cx - s * cy, s * cx + c * cy
    return Curve.fourier(
        ax=(rcx + shift[0], radius * c),
        bx=(0.0, -radius * s),
        ay=(rcy + shift[1], radius * s),
        by=(0.0, radius * c),
    )
