"""Scoring helpers for keypoint matching."""


def pair_score(elevation_a, elevation_b):
    return abs(elevation_a - elevation_b)
