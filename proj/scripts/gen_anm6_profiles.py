#!/usr/bin/env python3
"""Generate the ANM6-Easy daily profile file and its SHA-256 checksum.

The curves are smooth synthetic day shapes (reference values, not measured
data): a residential load peaking in the evening, an industrial load with a
daytime plateau, an EV garage charging overnight and at the evening return,
a solar farm following a midday bell and a wind farm with slow variation.

Values are rounded to 6 decimals and written in per-unit on a 100 MVA base.
Run from the repository root:

    python3 scripts/gen_anm6_profiles.py data/anm6_easy
"""

import hashlib
import json
import math
import pathlib
import sys

STEPS_PER_DAY = 96  # 0.25 h resolution


def bump(h, centre, width):
    d = (h - centre + 12.0) % 24.0 - 12.0
    return math.exp(-0.5 * (d / width) ** 2)


def residential(h):
    # p_min = -0.1 p.u.
    shape = 0.25 + 0.35 * bump(h, 8.0, 1.5) + 0.75 * bump(h, 19.0, 2.0)
    return -0.1 * min(shape, 1.0)


def industrial(h):
    # p_min = -0.3 p.u.
    day = 1.0 / (1.0 + math.exp(-(h - 7.0) * 1.5)) * 1.0 / (1.0 + math.exp((h - 18.0) * 1.5))
    return -0.3 * (0.2 + 0.75 * day)


def ev_garage(h):
    # p_min = -0.3 p.u.
    shape = 0.05 + 0.6 * bump(h, 2.0, 2.5) + 0.5 * bump(h, 18.5, 1.5)
    return -0.3 * min(shape, 1.0)


def solar(h):
    # p_max = 0.3 p.u.
    if h <= 6.0 or h >= 20.0:
        return 0.0
    return 0.3 * math.sin(math.pi * (h - 6.0) / 14.0) ** 2


def wind(h):
    # p_max = 0.5 p.u.
    v = 0.55 + 0.25 * math.cos(2.0 * math.pi * (h - 3.0) / 24.0) \
        + 0.1 * math.sin(2.0 * math.pi * 3.0 * h / 24.0)
    return 0.5 * min(max(v, 0.0), 1.0)


def series(fn):
    return [round(fn(k * 24.0 / STEPS_PER_DAY), 6) + 0.0 for k in range(STEPS_PER_DAY)]


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/anm6_easy")
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "steps_per_day": STEPS_PER_DAY,
        "demand": {"1": series(residential), "3": series(industrial), "5": series(ev_garage)},
        "potential": {"2": series(solar), "4": series(wind)},
    }
    text = json.dumps(doc, indent=1) + "\n"
    path = out / "profiles.json"
    path.write_text(text)
    digest = hashlib.sha256(text.encode()).hexdigest()
    (out / "profiles.json.sha256").write_text(f"{digest}  profiles.json\n")
    print(digest)


if __name__ == "__main__":
    main()
