# Copyright 2026 The Imagine Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates action_corpus.jsonl.

Each line holds a reply, the state it is parsed in and the expected action.
Labels come from the templates, never from the parser under test.
"""

import json
import pathlib
import random

LETTERS = "abcd"
WORDS = {"a": "up", "b": "down", "c": "left", "d": "right"}

PREFIXES = [
    "",
    "The target is still some distance away.\n",
    "Looking at the current image, the cursor has not reached the object yet. ",
    "Step by step: the crosshair sits on the background.\n\n",
    "I compare the previous and current images; the cursor moved closer. ",
]

ANSWERS = ["3", "7", "red cube", "left of the mug", "absent", "done", "12"]


def move(letter, kind="MoveCursor"):
    return {"kind": kind, "dir": letter}


def simple(kind):
    return {"kind": kind}


def fail():
    return {"failure": True}


def entry(text, mode, expect, run_mode="full", allow_rect=False):
    return {"mode": mode, "run_mode": run_mode, "allow_rect": allow_rect, "text": text, "expect": expect}


def generate(rng):
    out = []
    pick = rng.choice

    for _ in range(24):
        l = pick(LETTERS)
        out.append(entry(pick(PREFIXES) + f"MOVE {l}", "cursor", move(l)))
    for _ in range(10):
        l = pick(LETTERS)
        out.append(entry(f"I will move {WORDS[l]}.\n**MOVE {l}**", "cursor", move(l)))
    for _ in range(10):
        l = pick(LETTERS)
        out.append(entry(pick(PREFIXES) + f"MOVE {l}", "object", move(l, "MoveObject")))
    for _ in range(8):
        out.append(entry(pick(PREFIXES) + "FOCUS", "cursor", simple("RequestFocus")))
    for _ in range(8):
        out.append(entry("The outline covers the whole object.\nACCEPT", "verify", simple("AcceptFocus")))
    for _ in range(6):
        out.append(entry("That outline is the table, not the cup. REJECT", "verify", simple("RejectFocus")))
    for _ in range(5):
        out.append(entry(pick(PREFIXES) + "IGNORE", "object", simple("Ignore")))
    for _ in range(5):
        out.append(entry("The piece is in place. RELEASE", "object", simple("ReleaseObject")))

    # Last legal command wins.
    for _ in range(12):
        a, b = rng.sample(LETTERS, 2)
        out.append(entry(f"Maybe MOVE {a}? No, better: MOVE {b}", "cursor", move(b)))
    for _ in range(6):
        l = pick(LETTERS)
        out.append(entry(f"I could FOCUS now, but first MOVE {l}", "cursor", move(l)))
    for _ in range(6):
        out.append(entry("Not yet ACCEPT... actually REJECT", "verify", simple("RejectFocus")))
    # Later commands that are illegal in the state are skipped.
    for _ in range(6):
        l = pick(LETTERS)
        out.append(entry(f"MOVE {l}, then I will ACCEPT the outline", "cursor", move(l)))
    for _ in range(4):
        out.append(entry("ACCEPT. Afterwards I might MOVE d", "verify", simple("AcceptFocus")))

    for _ in range(14):
        ans = pick(ANSWERS)
        out.append(entry(pick(PREFIXES) + f"ANSWER: {ans}", pick(["cursor", "object"]), {"kind": "Answer", "text": ans}))
    for _ in range(4):
        out.append(entry("ANSWER: I would MOVE it left", "cursor", {"kind": "Answer", "text": "I would MOVE it left"}))

    for _ in range(8):
        x1, y1 = rng.randrange(0, 100), rng.randrange(0, 100)
        x2, y2 = x1 + rng.randrange(5, 100), y1 + rng.randrange(5, 100)
        sep = pick([",", ", ", " "])
        text = f"Zooming in. RECT {x1}{sep}{y1}{sep}{x2}{sep}{y2}"
        out.append(entry(text, "cursor", {"kind": "FocusRect", "rect": [x1, y1, x2, y2]}, allow_rect=True))
    for _ in range(3):
        out.append(entry("RECT 10,10,50,50", "cursor", fail()))

    for _ in range(5):
        out.append(entry("BOX", "cursor", simple("DrawBox"), run_mode="cursor-boxes"))
    for _ in range(4):
        out.append(entry("FOCUS", "cursor", fail(), run_mode="cursor-only"))

    # Bare direction letters.
    for _ in range(6):
        l = pick(LETTERS)
        out.append(entry(pick([l, l.upper(), f"({l})", f"{l}."]), "cursor", move(l)))
    for _ in range(6):
        l = pick(LETTERS)
        out.append(entry(f"Direction: {l}", "cursor", move(l)))
    for _ in range(5):
        l = pick(LETTERS)
        out.append(entry(f"The object is {WORDS[l]} of the cursor, so {l}", pick(["cursor", "object"]),
                         None))
        out[-1]["expect"] = move(l, "MoveCursor" if out[-1]["mode"] == "cursor" else "MoveObject")

    failures = [
        ("I am not sure what to do", "cursor"),
        ("move left", "cursor"),
        ("The cursor is FOCUSED on nothing", "cursor"),
        ("ACCEPT", "cursor"),
        ("MOVE e", "cursor"),
        ("MOVE", "object"),
        ("FOCUS", "verify"),
        ("RECT 1,2", "cursor"),
        ("ANSWER:", "cursor"),
        ("", "cursor"),
        ("c", "verify"),
    ]
    while len(out) < 200:
        text, mode = failures[(len(out)) % len(failures)]
        out.append(entry(text, mode, fail(), allow_rect=text.startswith("RECT")))
    return out[:200]


def main():
    rng = random.Random(20260918)
    rows = generate(rng)
    path = pathlib.Path(__file__).with_name("action_corpus.jsonl")
    with path.open("w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")
    print(f"wrote {len(rows)} entries to {path}")


if __name__ == "__main__":
    main()
