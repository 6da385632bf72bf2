#!/usr/bin/env python3
"""Generate the shipped scenario corpus, alias databases and demo config.

World is 8 x 8 m tiled by four 4 x 4 m cameras at 256 px/m. Every scenario is
re-simulated here (same motion rules as the C++ simulator) and checked:
ordinary scenarios keep every pair of entities at least MARGIN apart, collision
scenarios have exactly one designated contact that is a clean, deepening
overlap before the last capture tick.

Usage: tools/gen_corpus.py [--root DIR]
"""

import argparse
import json
import math
import random
from pathlib import Path

from shapely.geometry import Point, Polygon

DT = 0.005
SCALE = 256.0
SIZE = 1024
PERIOD = 100
MARGIN = 0.03
VEH_HX, VEH_HY = 0.21, 0.10
PED_R = 0.06

CAMERAS = {
    "cam-nw": (0.0, 4.0),
    "cam-ne": (4.0, 4.0),
    "cam-sw": (0.0, 0.0),
    "cam-se": (4.0, 0.0),
}

COLLISION_SCENARIOS = {3, 7, 11, 15, 19, 24, 28}


def rect(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def ngon(cx, cy, r, n=16, phase=0.0):
    return [(cx + r * math.cos(phase + 2 * math.pi * k / n), cy + r * math.sin(phase + 2 * math.pi * k / n))
            for k in range(n)]


# Sections in camera-local meters, in precedence order.
SECTIONS = {
    "cam-nw": [
        ("the roundabout", ngon(2.0, 2.0, 1.1)),
        ("Section A", rect(1.5, 2.9, 2.5, 4.0)),
        ("Section B", rect(2.9, 1.5, 4.0, 2.5)),
        ("Section C", rect(1.5, 0.0, 2.5, 1.1)),
        ("Section D", rect(0.0, 1.5, 1.1, 2.5)),
    ],
    "cam-ne": [
        ("the three-way junction", rect(1.5, 1.5, 2.5, 2.5)),
        ("the west arm", rect(0.0, 1.5, 1.5, 2.5)),
        ("the east arm", rect(2.5, 1.5, 4.0, 2.5)),
        ("the south arm", rect(1.5, 0.0, 2.5, 1.5)),
    ],
    "cam-sw": [
        ("the four-way intersection", rect(1.5, 1.5, 2.5, 2.5)),
        ("the north road", rect(1.5, 2.5, 2.5, 4.0)),
        ("the south road", rect(1.5, 0.0, 2.5, 1.5)),
        ("the east road", rect(2.5, 1.5, 4.0, 2.5)),
        ("the west road", rect(0.0, 1.5, 1.5, 2.5)),
    ],
    "cam-se": [
        ("Section E", rect(0.0, 2.5, 1.4, 3.5)),
        ("the middle section", rect(1.4, 2.5, 2.6, 3.5)),
        ("Section F", rect(2.6, 2.5, 4.0, 3.5)),
        ("the driveway", rect(1.6, 1.9, 2.4, 2.5)),
        ("the parking lot", rect(0.4, 0.2, 3.6, 1.9)),
    ],
}

NAMES = {
    "cam-nw": {"the roundabout": "Harbor Circle", "Section A": "Elm Street", "Section B": "Birch Lane",
               "Section C": "Cedar Way", "Section D": "Pine Drive"},
    "cam-ne": {"the three-way junction": "Maple Junction", "the west arm": "Third Street West",
               "the east arm": "Third Street East", "the south arm": "Maple Avenue"},
    "cam-sw": {"the four-way intersection": "Oak and Main", "the north road": "Oak Avenue North",
               "the south road": "Oak Avenue South", "the east road": "Main Street East",
               "the west road": "Main Street West"},
    "cam-se": {"Section E": "Riverside Drive West", "the middle section": "Riverside Drive Center",
               "Section F": "Riverside Drive East", "the driveway": "Market Entrance",
               "the parking lot": "Market Parking"},
}


def ring(start_deg, end_deg, r=0.75, cx=2.0, cy=2.0):
    """Counter-clockwise ring vertices from start to end, on multiples of 22.5 deg."""
    pts = []
    a = start_deg
    while True:
        pts.append((cx + r * math.cos(math.radians(a)), cy + r * math.sin(math.radians(a))))
        if a % 360 == end_deg % 360 and len(pts) > 1:
            break
        a += 22.5
    return pts


# Vehicle routes in camera-local meters. Right-hand traffic.
ROUTES = {
    "cam-sw": [
        [(2.25, 0.3), (2.25, 3.7)],
        [(1.75, 3.7), (1.75, 0.3)],
        [(0.3, 1.75), (3.7, 1.75)],
        [(3.7, 2.25), (0.3, 2.25)],
        [(2.25, 0.3), (2.25, 1.75), (3.7, 1.75)],
        [(2.25, 0.3), (2.25, 2.25), (0.3, 2.25)],
        [(1.75, 3.7), (1.75, 2.25), (0.3, 2.25)],
        [(0.3, 1.75), (1.75, 1.75), (1.75, 0.3)],
        [(3.7, 2.25), (2.25, 2.25), (2.25, 3.7)],
    ],
    "cam-ne": [
        [(0.3, 1.75), (3.7, 1.75)],
        [(3.7, 2.25), (0.3, 2.25)],
        [(2.25, 0.3), (2.25, 1.75), (3.7, 1.75)],
        [(2.25, 0.3), (2.25, 2.25), (0.3, 2.25)],
        [(0.3, 1.75), (1.75, 1.75), (1.75, 0.3)],
        [(3.7, 2.25), (1.75, 2.25), (1.75, 0.3)],
    ],
    "cam-nw": [
        [(1.8, 3.7), (1.8, 3.0)] + ring(112.5, 270.0) + [(2.2, 1.0), (2.2, 0.3)],
        [(1.8, 3.7), (1.8, 3.0)] + ring(112.5, 360.0) + [(3.0, 2.2), (3.7, 2.2)],
        [(2.2, 0.3), (2.2, 1.0)] + ring(292.5, 90.0) + [(1.8, 3.0), (1.8, 3.7)],
        [(0.3, 1.8), (1.0, 1.8)] + ring(202.5, 0.0) + [(3.0, 2.2), (3.7, 2.2)],
        [(3.7, 2.2), (3.0, 2.2)] + ring(22.5, 180.0) + [(1.0, 1.8), (0.3, 1.8)],
        ring(0.0, 337.5),
        ring(180.0, 157.5),
    ],
    "cam-se": [
        [(0.3, 2.75), (3.7, 2.75)],
        [(3.7, 3.25), (0.3, 3.25)],
        [(0.3, 2.75), (1.85, 2.75), (1.85, 1.0)],
        [(2.15, 1.0), (2.15, 2.75), (3.7, 2.75)],
        [(2.15, 1.0), (2.15, 3.25), (0.3, 3.25)],
    ],
}

# Pedestrian walkways, mostly off the mapped area.
WALKS = {
    "cam-sw": [[(0.3, 1.2), (1.2, 1.2), (1.2, 0.3)], [(2.8, 3.7), (2.8, 2.8), (3.7, 2.8)],
               [(1.3, 1.1), (2.7, 1.1)], [(2.8, 0.3), (2.8, 1.2)]],
    "cam-ne": [[(0.3, 1.2), (1.2, 1.2), (1.2, 0.3)], [(0.3, 2.8), (3.7, 2.8)], [(2.8, 0.3), (2.8, 1.2)],
               [(1.0, 1.3), (1.0, 2.7)]],
    "cam-nw": [[(0.3, 3.2), (1.2, 3.7)], [(2.9, 0.3), (3.7, 1.1)], [(0.3, 0.9), (0.9, 0.3)]],
    "cam-se": [[(0.3, 3.8), (3.7, 3.8)], [(0.3, 2.2), (1.4, 2.2)], [(2.6, 2.2), (3.7, 2.2)],
               [(1.0, 2.4), (1.0, 3.6)]],
}

PARKING = [(x, 0.7) for x in (0.8, 1.3, 2.7, 3.2)] + [(x, 1.5) for x in (0.8, 1.3, 2.7, 3.2)]


def statics_for(cam):
    ox, oy = CAMERAS[cam]
    out = []

    def add(kind, x, y, heading=0.0, light=None):
        s = {"id": f"{cam}-{kind}-{len(out) + 1}", "kind": kind,
             "pose": {"x": round(ox + x, 4), "y": round(oy + y, 4), "heading": heading}}
        if light:
            s["light_id"] = light
        out.append(s)

    if cam == "cam-sw":
        add("traffic-light", 2.65, 1.35, 0.0, "sw-ns")
        add("traffic-light", 1.35, 2.65, 0.0, "sw-ns")
        add("traffic-light", 2.65, 2.65, 0.0, "sw-ew")
        add("traffic-light", 1.35, 1.35, 0.0, "sw-ew")
        add("crosswalk", 2.0, 1.3, math.pi / 2)
        add("crosswalk", 2.7, 2.0, 0.0)
        add("tree", 0.6, 0.6)
        add("tree", 3.4, 3.4)
        add("bench", 0.7, 3.3)
        add("pole", 3.3, 0.7)
    elif cam == "cam-ne":
        add("stop-sign", 2.65, 1.3)
        add("yield-sign", 1.3, 2.65)
        add("crosswalk", 1.0, 2.0, 0.0)
        add("tree", 3.3, 0.6)
        add("tree", 0.6, 3.4)
        add("pole", 2.9, 3.2)
        add("bench", 3.3, 1.1)
    elif cam == "cam-nw":
        add("roundabout-sign", 1.35, 3.2)
        add("roundabout-sign", 2.65, 0.8)
        add("yield-sign", 3.2, 2.65)
        add("yield-sign", 0.8, 1.35)
        add("tree", 2.0, 2.0)
        add("tree", 3.4, 3.4)
        add("pole", 0.6, 0.4)
    else:
        add("crosswalk", 2.0, 3.0, 0.0)
        add("traffic-light", 2.3, 3.65, 0.0, "se-mid")
        add("bench", 0.6, 2.15)
        add("bench", 3.4, 2.15)
        add("tree", 0.2, 1.0)
        add("tree", 3.8, 1.0)
        add("pole", 1.5, 2.2)
    return out


LIGHTS = [
    {"id": "sw-ns", "green_ticks": 250, "yellow_ticks": 50, "red_ticks": 300, "offset_ticks": 0},
    {"id": "sw-ew", "green_ticks": 250, "yellow_ticks": 50, "red_ticks": 300, "offset_ticks": 300},
    {"id": "se-mid", "green_ticks": 200, "yellow_ticks": 40, "red_ticks": 160, "offset_ticks": 120},
]

# ---------------------------------------------------------------- motion


def seg_len(a, b):
    return math.hypot(b[0] - a[0], b[1] - a[1])


def path_length(path):
    return sum(seg_len(path[i], path[i + 1]) for i in range(len(path) - 1))


def point_along(spec, s):
    path = spec["path"]
    if len(path) == 1:
        return path[0][0], path[0][1], spec.get("heading", 0.0), True
    start = 0.0
    for i in range(len(path) - 1):
        a, b = path[i], path[i + 1]
        ln = seg_len(a, b)
        heading = math.atan2(b[1] - a[1], b[0] - a[0])
        if s < start + ln:
            t = (s - start) / ln
            return a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, heading, False
        start += ln
        if i + 2 == len(path):
            return b[0], b[1], heading, True
    return path[-1][0], path[-1][1], 0.0, True


def shape(spec, x, y, h):
    if spec["kind"] == "vehicle":
        c, s = math.cos(h), math.sin(h)
        pts = []
        for dx, dy in ((VEH_HX, VEH_HY), (-VEH_HX, VEH_HY), (-VEH_HX, -VEH_HY), (VEH_HX, -VEH_HY)):
            pts.append((x + dx * c - dy * s, y + dx * s + dy * c))
        return Polygon(pts)
    return Point(x, y).buffer(PED_R, 64)


def gap(spec_a, pose_a, spec_b, pose_b):
    """Separation distance; exact for circles, 0 when overlapping."""
    pa, pb = pose_a, pose_b
    if spec_a["kind"] == "pedestrian" and spec_b["kind"] == "pedestrian":
        return max(0.0, math.hypot(pa[0] - pb[0], pa[1] - pb[1]) - 2 * PED_R)
    if spec_a["kind"] == "pedestrian":
        spec_a, pa, spec_b, pb = spec_b, pb, spec_a, pa
    if spec_b["kind"] == "pedestrian":
        return max(0.0, shape(spec_a, *pa).distance(Point(pb[0], pb[1])) - PED_R)
    return shape(spec_a, *pa).distance(shape(spec_b, *pb))


def bound(spec):
    return math.hypot(VEH_HX, VEH_HY) if spec["kind"] == "vehicle" else PED_R


def trajectory(entity, duration, stop_tick=None):
    """Per-tick (x, y, heading, active). Motion halts from stop_tick on."""
    out = []
    travelled = 0.0
    speed = 0.0
    length = path_length(entity["path"])
    for tick in range(duration + 1):
        if tick > 0 and speed > 0:
            travelled = min(length, travelled + entity["speed"] * DT)
        x, y, h, finished = point_along(entity, travelled)
        active = tick >= entity.get("spawn_tick", 0)
        stopped = stop_tick is not None and tick >= stop_tick
        speed = entity["speed"] if active and not stopped and not finished else 0.0
        out.append((x, y, h, active))
    return out


def pair_gaps(a, ta, b, tb):
    """Minimum gap over time and the first tick of contact (or None)."""
    reach = bound(a) + bound(b) + MARGIN
    best = math.inf
    first = None
    for tick, (pa, pb) in enumerate(zip(ta, tb)):
        if not (pa[3] and pb[3]):
            continue
        if math.hypot(pa[0] - pb[0], pa[1] - pb[1]) > reach:
            continue
        g = gap(a, pa[:3], b, pb[:3])
        best = min(best, g)
        if g == 0.0 and first is None:
            first = tick
    return best, first


def free_pose(entity, ticks):
    """Pose after `ticks` ticks of uninterrupted motion."""
    s = min(path_length(entity["path"]), entity["speed"] * DT * max(0, ticks))
    return point_along(entity, s)[:3]


def penetration_area(a, b, extra_ticks):
    """Overlap area when both keep moving extra_ticks past the contact tick."""
    pa, pb = free_pose(a, a["_t"] + extra_ticks), free_pose(b, b["_t"] + extra_ticks)
    return shape(a, *pa).intersection(shape(b, *pb)).area


# ---------------------------------------------------------------- building


def to_world(cam, pts):
    ox, oy = CAMERAS[cam]
    return [(round(ox + x, 6), round(oy + y, 6)) for x, y in pts]


def trim(path, d):
    """Path starting d meters along `path`."""
    out = []
    start = 0.0
    for i in range(len(path) - 1):
        a, b = path[i], path[i + 1]
        ln = seg_len(a, b)
        if start + ln > d:
            t = max(0.0, (d - start) / ln)
            if not out:
                out.append((a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t))
            out.append(b)
        start += ln
    return out


def vehicle(eid, cam, route, offset, speed, spawn=0):
    path = to_world(cam, trim(route, offset))
    return {"id": eid, "kind": "vehicle", "footprint": {"hx": VEH_HX, "hy": VEH_HY},
            "path": [list(p) for p in path], "speed": round(speed, 3), "spawn_tick": spawn}


def parked(eid, cam, x, y, heading):
    ox, oy = CAMERAS[cam]
    return {"id": eid, "kind": "vehicle", "footprint": {"hx": VEH_HX, "hy": VEH_HY},
            "path": [[round(ox + x, 6), round(oy + y, 6)]], "speed": 0.0, "spawn_tick": 0,
            "heading": heading}


def pedestrian(eid, cam, walk, offset, speed):
    path = to_world(cam, trim(walk, offset))
    return {"id": eid, "kind": "pedestrian", "footprint": {"radius": PED_R},
            "path": [list(p) for p in path], "speed": round(speed, 3), "spawn_tick": 0}


def candidate(rng, cam, eid):
    roll = rng.random()
    if roll < 0.12 and cam == "cam-se":
        x, y = rng.choice(PARKING)
        return parked(eid, cam, x, y, math.pi / 2)
    if roll < 0.2:
        # Waiting at the edge of an approach.
        route = rng.choice(ROUTES[cam])
        p = trim(route, rng.uniform(0.0, 0.4))
        h = math.atan2(p[1][1] - p[0][1], p[1][0] - p[0][0])
        return parked(eid, cam, p[0][0], p[0][1], round(h, 6))
    if roll < 0.38:
        walk = rng.choice(WALKS[cam])
        return pedestrian("p-" + eid, cam, walk, rng.uniform(0, path_length(walk) * 0.5), rng.uniform(0.15, 0.35))
    route = rng.choice(ROUTES[cam])
    length = path_length(route)
    return vehicle(eid, cam, route, rng.uniform(0, length * 0.6), rng.uniform(0.3, 0.8))


def collision_pair(rng, cam, duration, tag):
    """Two entities whose only contact is a clean crossing before the last capture."""
    last_capture = duration - duration % PERIOD
    while True:
        ra, rb = rng.sample(ROUTES[cam], 2) if rng.random() < 0.8 else [rng.choice(ROUTES[cam])] * 2
        a = vehicle(f"{tag}-a", cam, ra, rng.uniform(0, 0.8), rng.uniform(0.3, 0.8))
        if rng.random() < 0.2:
            walk = rng.choice(WALKS[cam])
            b = pedestrian(f"p-{tag}-b", cam, walk, rng.uniform(0, 0.5), rng.uniform(0.2, 0.35))
        else:
            b = vehicle(f"{tag}-b", cam, rb, rng.uniform(0, 0.8), rng.uniform(0.3, 0.8))
        _, t = pair_gaps(a, trajectory(a, duration), b, trajectory(b, duration))
        if t is None or not (60 <= t <= last_capture - PERIOD // 2):
            continue
        a["_t"] = b["_t"] = t
        need = 0.004 if b["kind"] == "vehicle" else 0.002
        deep = penetration_area(a, b, 6) > need
        clear_before = penetration_area(a, b, -2) == 0.0
        del a["_t"], b["_t"]
        if deep and clear_before:
            return [a, b], t


def build_scenario(index):
    rng = random.Random(1000 + index)
    sid = f"s{index:02d}"
    duration = 600 if index <= 20 else 500
    collision = index in COLLISION_SCENARIOS
    entities = []
    cams = {}
    trajs = []
    contact = None
    collision_cam = None
    if collision:
        collision_cam = list(CAMERAS)[sorted(COLLISION_SCENARIOS).index(index) % 4]
        pair, contact = collision_pair(rng, collision_cam, duration, f"{sid}-{collision_cam}-x")
        for e in pair:
            entities.append(e)
            cams[e["id"]] = collision_cam
            trajs.append(trajectory(e, duration, contact))
    for cam in CAMERAS:
        want = rng.randint(1, 5)
        placed = sum(1 for e in entities if cams[e["id"]] == cam)
        attempts = 0
        k = 0
        while placed < want and attempts < 200:
            attempts += 1
            cand = candidate(rng, cam, f"{sid}-{cam}-{k}")
            tc = trajectory(cand, duration)
            ok = True
            for e, te in zip(entities, trajs):
                if cams[e["id"]] != cam:
                    continue
                g, _ = pair_gaps(cand, tc, e, te)
                if g < MARGIN:
                    ok = False
                    break
            if ok:
                entities.append(cand)
                cams[cand["id"]] = cam
                trajs.append(tc)
                placed += 1
                k += 1
    statics = [s for cam in CAMERAS for s in statics_for(cam)]
    scenario = {
        "id": sid,
        "seed": index,
        "duration_ticks": duration,
        "tick_dt": DT,
        "collision_expected": collision,
        "entities": entities,
        "statics": statics,
        "lights": LIGHTS,
    }
    return scenario, contact, collision_cam


def alias_db(cam):
    ox, oy = CAMERAS[cam]

    def px(pts):
        return [[round(x * SCALE, 3), round(SIZE - 1 - y * SCALE, 3)] for x, y in pts]

    return {"camera_id": cam,
            "sections": [{"alias": a, "polygon": px(poly)} for a, poly in SECTIONS[cam]],
            "names": NAMES[cam]}


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--root", default=Path(__file__).resolve().parent.parent, type=Path)
    args = parser.parse_args()
    root = args.root

    (root / "config" / "aliases").mkdir(parents=True, exist_ok=True)
    (root / "scenarios").mkdir(exist_ok=True)
    for cam in CAMERAS:
        (root / "config" / "aliases" / f"{cam}.json").write_text(json.dumps(alias_db(cam), indent=2) + "\n")

    demo = {
        "cameras": [{"id": cam, "origin": list(CAMERAS[cam]), "scale": SCALE, "width": SIZE, "height": SIZE,
                     "capture_period_ticks": PERIOD, "alias_db": f"aliases/{cam}.json"} for cam in CAMERAS],
        "scenario_dir": "../scenarios",
        "store_root": "../store",
        "endpoints": {},
        "limits": {"max_in_flight": 4, "timeout_ms": 5000, "retries": 2, "max_jobs": 2},
        "listen": {"host": "127.0.0.1", "port": 8080},
    }
    (root / "config" / "demo.json").write_text(json.dumps(demo, indent=2) + "\n")

    frames = 0
    for index in range(1, 31):
        scenario, contact, cam = build_scenario(index)
        (root / "scenarios" / f"{scenario['id']}.json").write_text(json.dumps(scenario, indent=2) + "\n")
        frames += 4 * (scenario["duration_ticks"] // PERIOD + 1)
        vehicles = sum(e["kind"] == "vehicle" for e in scenario["entities"])
        peds = len(scenario["entities"]) - vehicles
        note = f" contact at tick {contact} on {cam}" if contact is not None else ""
        print(f"{scenario['id']}: {vehicles} vehicles, {peds} pedestrians{note}")
    print(f"frames: {frames}")


if __name__ == "__main__":
    main()
