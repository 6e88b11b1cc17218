#!/usr/bin/env python3
"""Regenerates the bundled fixtures under data/.

    python3 tools/make_fixtures.py [data_dir]
"""
import math
import os
import random
import sys


def grid_network(n=4, spacing=200.0, speed=13.9, lanes=1):
    nid = lambda r, c: f"n{r}{c}"
    lines = ["# 4x4 signalized grid, 200 m blocks", "[nodes]", "id,x,y,signalized,sensor_site"]
    for r in range(n):
        for c in range(n):
            lines.append(f"{nid(r, c)},{c * spacing:g},{r * spacing:g},1,1")

    segs = []  # (id, from, to, label, horizontal)
    for r in range(n):
        for c in range(n - 1):
            a, b = nid(r, c), nid(r, c + 1)
            segs.append((f"{a}_{b}", a, b, f"row{r}", True))
            segs.append((f"{b}_{a}", b, a, f"row{r}", True))
    for c in range(n):
        for r in range(n - 1):
            a, b = nid(r, c), nid(r + 1, c)
            segs.append((f"{a}_{b}", a, b, f"col{c}", False))
            segs.append((f"{b}_{a}", b, a, f"col{c}", False))

    lines += ["", "[segments]", "id,from,to,length_m,lanes,speed_limit_mps,road_label"]
    for sid, a, b, label, _ in segs:
        lines.append(f"{sid},{a},{b},{spacing:g},{lanes},{speed:g},{label}")

    # two phases per node: east-west approaches, then north-south approaches
    lines += ["", "[signals]", "node_id,phase_index,permitted_segment_ids,duration_s"]
    for r in range(n):
        for c in range(n):
            node = nid(r, c)
            ew = [s for s, _, b, _, h in segs if b == node and h]
            ns = [s for s, _, b, _, h in segs if b == node and not h]
            lines.append(f"{node},0,{';'.join(ew)},30")
            lines.append(f"{node},1,{';'.join(ns)},30")

    # entries and exits on the non-corner boundary nodes
    sides = {
        "north": [nid(0, 1), nid(0, 2)],
        "south": [nid(n - 1, 1), nid(n - 1, 2)],
        "west": [nid(1, 0), nid(2, 0)],
        "east": [nid(1, n - 1), nid(2, n - 1)],
    }
    opposite = {"north": "south", "south": "north", "west": "east", "east": "west"}
    lines += ["", "[terminals]", "node_id,entry_weight,exit_weight"]
    for side in sides.values():
        for node in side:
            lines.append(f"{node},1,1")
    # straight-through trips cross the centre of the grid and are weighted up
    lines += ["", "[od]", "origin,destination,weight"]
    for side, nodes in sides.items():
        for k, o in enumerate(nodes):
            for j, d in enumerate(sides[opposite[side]]):
                lines.append(f"{o},{d},{3 if j == k else 1}")
    return "\n".join(lines) + "\n"


def highway_network(n=9, spacing=1609.0, ramp=300.0):
    lines = ["# 8-mile three-lane highway with an on and off ramp at each interior junction",
             "[nodes]", "id,x,y,signalized,sensor_site"]
    for i in range(n):
        lines.append(f"M{i},{i * spacing:g},0,0,{1 if 0 < i < n - 1 else 0}")
    for i in range(1, n - 1):
        d = ramp / math.sqrt(2.0)
        lines.append(f"A{i},{i * spacing - d:.1f},{-d:.1f},0,0")
        lines.append(f"B{i},{i * spacing + d:.1f},{-d:.1f},0,0")
    lines += ["", "[segments]", "id,from,to,length_m,lanes,speed_limit_mps,road_label"]
    for i in range(n - 1):
        lines.append(f"M{i}_M{i + 1},M{i},M{i + 1},{spacing:g},3,29,mainline")
    for i in range(1, n - 1):
        lines.append(f"A{i}_M{i},A{i},M{i},{ramp:g},1,20,on{i}")
        lines.append(f"M{i}_B{i},M{i},B{i},{ramp:g},1,20,off{i}")
    lines += ["", "[terminals]", "node_id,entry_weight,exit_weight"]
    lines.append(f"M0,6,0")
    lines.append(f"M{n - 1},0,6")
    for i in range(1, n - 1):
        lines.append(f"A{i},0.5,0")
        lines.append(f"B{i},0,0.5")
    return "\n".join(lines) + "\n"


def tempe_like_counts(seed=20240601, roads=12, bins=96, bin_s=900):
    """Diurnal two-peak profile per road with per-road scale and noise."""
    rng = random.Random(seed)
    rows = ["road_label,start_time_s,bin_s,count"]
    for r in range(roads):
        scale = rng.uniform(0.7, 1.3)
        shift = rng.uniform(-1800.0, 1800.0)
        for k in range(bins):
            t = k * bin_s + shift
            day = -math.cos(2 * math.pi * t / 86400.0)
            peaks = -math.cos(4 * math.pi * t / 86400.0)
            mean = scale * (180.0 + 100.0 * day + 45.0 * peaks)
            count = max(0, round(rng.gauss(mean, 0.08 * mean + 4.0)))
            rows.append(f"road{r + 1:02d},{k * bin_s},{bin_s},{count}")
    return "\n".join(rows) + "\n"


def two_sinusoid_counts(seed=5, bins=96, bin_s=900, sigma=0.5):
    """Known two-sinusoid flow plus Gaussian noise, one road."""
    rng = random.Random(seed)
    rows = ["road_label,start_time_s,bin_s,count"]
    for k in range(bins):
        t = k * bin_s
        f = (40.0 * math.sin(2 * math.pi / 86400.0 * t + 0.4)
             + 15.0 * math.sin(4 * math.pi / 86400.0 * t - 1.1) + 150.0)
        rows.append(f"road01,{t},{bin_s},{f + rng.gauss(0.0, sigma):.6f}")
    return "\n".join(rows) + "\n"


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out, exist_ok=True)
    for name, text in [("grid4x4.net", grid_network()), ("highway.net", highway_network()),
                       ("tempe_like_counts.csv", tempe_like_counts()),
                       ("two_sinusoid_counts.csv", two_sinusoid_counts())]:
        with open(os.path.join(out, name), "w") as f:
            f.write(text)


if __name__ == "__main__":
    main()
