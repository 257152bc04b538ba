#!/usr/bin/env python3
"""Regenerate the committed fixture corpus under fixtures/.

Produces scripted-backend response files, batch answer files, canonical RAP
files for the coverage comparison, annotation files, and the experiment spec.
Everything is deterministic; rerunning rewrites identical content.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

sys.path.insert(0, str(ROOT / "src"))


def step(action, obj="none", position="", gripper_l="none", gripper_r="none", **extras):
    record = {
        "ACTION": action,
        "OBJECT": obj,
        "ROBOT POSITION": position,
        "GRIPPER_L": gripper_l,
        "GRIPPER_R": gripper_r,
    }
    record.update(extras)
    return record


def rap_text(steps, fenced=False):
    body = json.dumps(steps, indent=2, ensure_ascii=False)
    if fenced:
        return f"Here is the RAP.\n```json\n{body}\n```"
    return body


# --- task 1: Make scrambled egg. -------------------------------------------

EGG_RAP1 = [
    step("MOVE", "none", "kitchen"),
    step("FIND", "egg", "kitchen"),
    step("GRAB", "egg", "kitchen", gripper_r="egg"),
    step("MOVE", "none", "in front of the counter", gripper_r="egg"),
    step("CRACK", "egg", "in front of the counter", gripper_r="egg"),
    step("MIX", "egg", "in front of the counter", gripper_r="whisk"),
    step("MOVE", "none", "in front of the stove", gripper_l="bowl"),
    step("TURN_ON", "stove", "in front of the stove"),
    step("POUR", "egg", "in front of the stove", gripper_l="bowl"),
    step("MIX", "egg", "in front of the stove", gripper_r="spatula"),
    step("TURN_OFF", "stove", "in front of the stove"),
    step("PASS", "scrambled egg", "in front of the MASTER", gripper_r="plate"),
]

_FRIDGE_STEPS = [
    step("MOVE", "none", "in front of the refrigerator"),
    step("OPEN", "refrigerator", "in front of the refrigerator", gripper_l="refrigerator handle"),
    step("FIND", "egg", "in front of the refrigerator", LOCATION="refrigerator"),
    step("GRAB", "egg", "in front of the refrigerator", gripper_r="egg", LOCATION="refrigerator"),
    step("CLOSE", "refrigerator", "in front of the refrigerator", gripper_l="refrigerator handle"),
]

# Fridge retrieval and a cooking TIME, but serving still unresolved.
EGG_RAP2_PARTIAL = [
    step("MOVE", "none", "kitchen"),
    *_FRIDGE_STEPS,
    step("MOVE", "none", "in front of the counter", gripper_r="egg"),
    step("CRACK", "egg", "in front of the counter", gripper_r="egg"),
    step("MIX", "egg", "in front of the counter", gripper_r="whisk"),
    step("MOVE", "none", "in front of the stove", gripper_l="bowl"),
    step("TURN_ON", "stove", "in front of the stove"),
    step("POUR", "egg", "in front of the stove", gripper_l="bowl"),
    step("MIX", "egg", "in front of the stove", gripper_r="spatula", TIME="3 minutes"),
    step("TURN_OFF", "stove", "in front of the stove"),
    step("PASS", "scrambled egg", "in front of the MASTER", gripper_r="plate"),
]

# The complete final plan: fridge steps, TIME, and serving on a plate.
EGG_RAP_FINAL = [
    step("MOVE", "none", "kitchen"),
    *_FRIDGE_STEPS,
    step("MOVE", "none", "in front of the counter", gripper_r="egg"),
    step("CRACK", "egg", "in front of the counter", gripper_r="egg"),
    step("MIX", "egg", "in front of the counter", gripper_r="whisk"),
    step("MOVE", "none", "in front of the stove", gripper_l="bowl"),
    step("TURN_ON", "stove", "in front of the stove"),
    step("POUR", "egg", "in front of the stove", gripper_l="bowl"),
    step("MIX", "egg", "in front of the stove", gripper_r="spatula", TIME="3 minutes"),
    step("TURN_OFF", "stove", "in front of the stove"),
    step("PUT", "scrambled egg", "in front of the counter", gripper_r="spatula", LOCATION="plate"),
    step("PASS", "scrambled egg", "in front of the MASTER", gripper_r="plate"),
]

EGG_AN1_FULL = """Checking the RAP step by step:
1. The RAP does not say where the eggs are kept, so the robot cannot find them.
2. The cooking step has no duration, so a TIME item is missing.
3. The RAP does not say how the finished scrambled egg should be served.
Information that should be added to the RAP: the storage place of the eggs, the cooking time, and the serving method."""

EGG_QS1_FULL = """1. Where are the eggs kept?
2. How long should I cook the eggs?
3. How should I serve the scrambled egg?"""

EGG_AN1_TWO = """Checking the RAP step by step:
1. The RAP does not say where the eggs are kept, so the robot cannot find them.
2. The cooking step has no duration, so a TIME item is missing.
Information that should be added to the RAP: the storage place of the eggs and the cooking time."""

EGG_QS1_TWO = """1. Where are the eggs kept?
2. How long should I cook the eggs?"""

EGG_AN2_SERVING = """Checking the RAP step by step:
1. The RAP does not say how the finished scrambled egg should be served.
Information that should be added to the RAP: the serving method."""

EGG_QS2_SERVING = "1. How should I serve the scrambled egg?"

EGG_AN_DONE = """Checking the RAP step by step:
1. The eggs now carry a LOCATION item and the refrigerator is opened and closed around grabbing them.
2. The cooking step has a TIME item.
3. The serving steps name the plate and the hand-over to the MASTER.
none"""

EGG_AN_DONE_PARTIAL = """Checking the RAP step by step:
1. The eggs now carry a LOCATION item and the cooking step has a TIME item.
2. Serving on a plate from the counter is the standard default, so nothing blocks the robot.
none"""

EGG_AN2_MILD = """Checking the RAP step by step:
1. Serving was not specified, but handing the plate to the MASTER is the standard default, so it is determined well enough for the robot."""

EGG_TRIAL1 = [
    rap_text(EGG_RAP1),
    EGG_AN1_FULL,
    EGG_QS1_FULL,
    rap_text(EGG_RAP_FINAL),
    EGG_AN_DONE,
]
EGG_TRIAL1_ANSWERS = {
    "1": "In the refrigerator.",
    "2": "About 3 minutes.",
    "3": "Put it on a plate and bring it to me.",
}

EGG_TRIAL2 = [
    rap_text(EGG_RAP1, fenced=True),
    EGG_AN1_TWO,
    EGG_QS1_TWO,
    rap_text(EGG_RAP2_PARTIAL, fenced=True),
    EGG_AN2_SERVING,
    EGG_QS2_SERVING,
    rap_text(EGG_RAP_FINAL, fenced=True),
    EGG_AN_DONE,
]
EGG_TRIAL2_ANSWERS = {
    "1": "In the refrigerator.",
    "2": "About 3 minutes.",
    "3": "Put it on a plate and bring it to me.",
}

EGG_TRIAL3 = [
    rap_text(EGG_RAP1),
    EGG_AN1_TWO,
    EGG_QS1_TWO,
    rap_text(EGG_RAP2_PARTIAL),
    EGG_AN2_MILD,
    "none",
]
EGG_TRIAL3_ANSWERS = {
    "1": "In the refrigerator.",
    "2": "About 3 minutes.",
}

# --- task 2: Cut carrots. ---------------------------------------------------

CARROT_RAP1 = [
    step("MOVE", "none", "kitchen"),
    step("FIND", "carrot", "kitchen"),
    step("GRAB", "carrot", "kitchen", gripper_l="carrot"),
    step("FIND", "knife", "kitchen", gripper_l="carrot"),
    step("GRAB", "knife", "kitchen", gripper_l="carrot", gripper_r="knife"),
    step("MOVE", "none", "in front of the counter", gripper_l="carrot", gripper_r="knife"),
    step("PUT", "carrot", "in front of the counter", gripper_r="knife"),
    step("CUT", "carrot", "in front of the counter", gripper_r="knife"),
    step("PUT", "cut carrots", "in front of the counter"),
]


def carrot_final(cut_size, with_bowl):
    steps = [
        step("MOVE", "none", "kitchen"),
        step("FIND", "carrot", "kitchen"),
        step("GRAB", "carrot", "kitchen", gripper_l="carrot"),
        step("FIND", "knife", "kitchen", gripper_l="carrot"),
        step("GRAB", "knife", "kitchen", gripper_l="carrot", gripper_r="knife"),
        step("MOVE", "none", "in front of the counter", gripper_l="carrot", gripper_r="knife"),
        step(
            "FIND",
            "cutting board",
            "in front of the counter",
            gripper_l="carrot",
            gripper_r="knife",
            LOCATION="basket under the counter",
        ),
        step("PUT", "cutting board", "in front of the counter", gripper_r="knife"),
        step("PUT", "carrot", "in front of the counter", gripper_r="knife", LOCATION="cutting board"),
        step("CUT", "carrot", "in front of the counter", gripper_r="knife", CUT_SIZE=cut_size),
    ]
    if with_bowl:
        steps.append(
            step(
                "PUT",
                "cut carrots",
                "in front of the counter",
                LOCATION="bowl on the counter",
            )
        )
    else:
        steps.append(step("PUT", "cut carrots", "in front of the counter"))
    return steps


CARROT_AN1_FULL = """Checking the RAP step by step:
1. The RAP assumes a cutting board position, but its storage place is not recorded, so a LOCATION item is missing.
2. The CUT step does not say how large the pieces should be, so a CUT_SIZE item is missing.
3. The RAP does not say where the cut carrots should go afterwards.
Information that should be added to the RAP: the cutting board location, the cut size, and the destination of the cut carrots."""

CARROT_QS1_FULL = """1. Where is the cutting board kept?
2. How large should the carrot pieces be?
3. What should I do with the cut carrots?"""

CARROT_AN1_TWO = """Checking the RAP step by step:
1. The RAP assumes a cutting board position, but its storage place is not recorded, so a LOCATION item is missing.
2. The CUT step does not say how large the pieces should be, so a CUT_SIZE item is missing.
Information that should be added to the RAP: the cutting board location and the cut size."""

CARROT_QS1_TWO = """1. Where is the cutting board kept?
2. How large should the carrot pieces be?"""

CARROT_AN_DONE = """Checking the RAP step by step:
1. The cutting board now carries a LOCATION item.
2. The CUT step carries a CUT_SIZE item.
3. The cut carrots have a destination on the counter.
none"""

CARROT_AN2_REFUSED = """Checking the RAP step by step:
1. The MASTER did not specify a cut size, so the RAP uses bite-sized pieces as a standard choice."""

CARROT_TRIAL1 = [
    rap_text(CARROT_RAP1),
    CARROT_AN1_FULL,
    CARROT_QS1_FULL,
    rap_text(carrot_final("1 cm slices", with_bowl=True)),
    CARROT_AN_DONE,
]
CARROT_TRIAL1_ANSWERS = {
    "1": "In the basket under the counter.",
    "2": "About 1 cm slices.",
    "3": "Put them in the bowl on the counter.",
}

CARROT_TRIAL2 = [
    rap_text(CARROT_RAP1, fenced=True),
    CARROT_AN1_FULL,
    CARROT_QS1_FULL,
    rap_text(carrot_final("bite-sized pieces", with_bowl=True), fenced=True),
    CARROT_AN2_REFUSED,
    "none",
]
CARROT_TRIAL2_ANSWERS = {
    "1": "In the basket under the counter.",
    "2": "REFUSED",
    "3": "Put them in the bowl on the counter.",
}

CARROT_TRIAL3 = [
    rap_text(CARROT_RAP1),
    CARROT_AN1_TWO,
    CARROT_QS1_TWO,
    rap_text(carrot_final("1 cm slices", with_bowl=False)),
    CARROT_AN_DONE,
]
CARROT_TRIAL3_ANSWERS = {
    "1": "In the basket under the counter.",
    "2": "About 1 cm slices.",
}

# --- small auxiliary sessions ------------------------------------------------

REMOTE_RAP = [
    step("MOVE", "none", "living room"),
    step("FIND", "TV remote", "living room"),
    step("GRAB", "TV remote", "living room", gripper_r="TV remote"),
    step("PASS", "TV remote", "in front of the MASTER", gripper_r="TV remote"),
]

IMMEDIATE_NONE = [rap_text(REMOTE_RAP), "none"]

WINDOW_RAP = [
    step("MOVE", "none", "in front of the window"),
    step("OPEN", "window", "in front of the window", gripper_l="window handle"),
]

REPAIR_RECOVERY = [
    "I will walk to the window and open it with my left arm.",
    rap_text(WINDOW_RAP),
    "none",
]

SHELF_RAP1 = [
    step("MOVE", "none", "in front of the bookshelf"),
    step("FIND", "book", "in front of the bookshelf"),
    step("GRAB", "book", "in front of the bookshelf", gripper_r="book"),
    step("PUT", "book", "in front of the bookshelf", LOCATION="shelf"),
]

SHELF_AN1 = """Checking the RAP step by step:
1. The RAP does not say in what order the books should be arranged."""

SHELF_QS1 = "1. In what order should the books be arranged?"

SHELF_RAP2 = [
    step("MOVE", "none", "in front of the bookshelf"),
    step("FIND", "book", "in front of the bookshelf"),
    step("GRAB", "book", "in front of the bookshelf", gripper_r="book"),
    step("PUT", "book", "in front of the bookshelf", LOCATION="shelf", ORDER="by height"),
]

SHELF_AN2 = """Checking the RAP step by step:
1. The RAP does not say which shelf the arranged books belong on."""

SHELF_QS2 = "1. Which shelf should the arranged books go on?"

TRUNCATED_DEMO = [
    rap_text(SHELF_RAP1),
    SHELF_AN1,
    SHELF_QS1,
    rap_text(SHELF_RAP2),
    SHELF_AN2,
    SHELF_QS2,
]
TRUNCATED_DEMO_ANSWERS = {"1": "By height, tallest on the left."}

# --- coverage fixtures (terse vs elaborated command) -------------------------


def _with_extras(steps, extras_by_index):
    out = []
    for i, record in enumerate(steps, start=1):
        record = dict(record)
        record.update(extras_by_index.get(i, {}))
        out.append(record)
    return out


EGG_TERSE = EGG_RAP_FINAL

EGG_ELABORATED = _with_extras(
    EGG_RAP_FINAL,
    {
        4: {"COUNT": "2 eggs"},
        5: {"COUNT": "2 eggs"},
        8: {"COUNT": "2 eggs"},
        11: {"HEAT_LEVEL": "medium"},
        9: {"SEASONING": "salt and pepper"},
        16: {"SERVING": "on a plate, handed to the MASTER"},
    },
)

CARROT_TERSE = carrot_final("1 cm slices", with_bowl=True)

CARROT_ELABORATED = _with_extras(
    carrot_final("thin rounds", with_bowl=True),
    {
        3: {"COUNT": "2 carrots"},
        10: {"SHAPE": "thin rounds"},
        11: {"ARRANGEMENT": "fanned out on the plate"},
    },
)

EGG_ANNOTATIONS = [
    {"label": "number of eggs", "present_in": "b"},
    {"label": "heat level", "present_in": "b"},
    {"label": "seasoning", "present_in": "b"},
    {"label": "serving information", "present_in": "b"},
]

CARROT_ANNOTATIONS = [
    {"label": "carrot count", "present_in": "b"},
    {"label": "carrot shape", "present_in": "b"},
    {"label": "arrangement on the plate", "present_in": "b"},
]

EXPERIMENT_SPEC = {
    "config": {"max_iterations": 10},
    "tasks": [
        {
            "label": "task1-scrambled-egg",
            "command": "Make scrambled egg.",
            "backend": {
                "mode": "scripted",
                "scripts": [
                    "../scripts/egg_trial1.json",
                    "../scripts/egg_trial2.json",
                    "../scripts/egg_trial3.json",
                ],
                "answers": [
                    "../answers/egg_trial1.json",
                    "../answers/egg_trial2.json",
                    "../answers/egg_trial3.json",
                ],
            },
            "coverage": {
                "a": "../raps/egg_terse.json",
                "b": "../raps/egg_elaborated.json",
                "annotations": "../annotations/egg.json",
            },
        },
        {
            "label": "task2-cut-carrots",
            "command": "Cut carrots.",
            "backend": {
                "mode": "scripted",
                "scripts": [
                    "../scripts/carrots_trial1.json",
                    "../scripts/carrots_trial2.json",
                    "../scripts/carrots_trial3.json",
                ],
                "answers": [
                    "../answers/carrots_trial1.json",
                    "../answers/carrots_trial2.json",
                    "../answers/carrots_trial3.json",
                ],
            },
            "coverage": {
                "a": "../raps/carrots_terse.json",
                "b": "../raps/carrots_elaborated.json",
                "annotations": "../annotations/carrots.json",
            },
        },
    ],
}


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def main() -> None:
    scripts = {
        "egg_trial1": EGG_TRIAL1,
        "egg_trial2": EGG_TRIAL2,
        "egg_trial3": EGG_TRIAL3,
        "carrots_trial1": CARROT_TRIAL1,
        "carrots_trial2": CARROT_TRIAL2,
        "carrots_trial3": CARROT_TRIAL3,
        "immediate_none": IMMEDIATE_NONE,
        "repair_recovery": REPAIR_RECOVERY,
        "truncated_demo": TRUNCATED_DEMO,
    }
    for name, responses in scripts.items():
        write_json(FIXTURES / "scripts" / f"{name}.json", responses)

    answers = {
        "egg_trial1": EGG_TRIAL1_ANSWERS,
        "egg_trial2": EGG_TRIAL2_ANSWERS,
        "egg_trial3": EGG_TRIAL3_ANSWERS,
        "carrots_trial1": CARROT_TRIAL1_ANSWERS,
        "carrots_trial2": CARROT_TRIAL2_ANSWERS,
        "carrots_trial3": CARROT_TRIAL3_ANSWERS,
        "truncated_demo": TRUNCATED_DEMO_ANSWERS,
    }
    for name, mapping in answers.items():
        write_json(FIXTURES / "answers" / f"{name}.json", mapping)

    from clarify_plan.rap import make_plan, serialize_rap

    raps = {
        "egg_terse": EGG_TERSE,
        "egg_elaborated": EGG_ELABORATED,
        "carrots_terse": CARROT_TERSE,
        "carrots_elaborated": CARROT_ELABORATED,
    }
    rap_dir = FIXTURES / "raps"
    rap_dir.mkdir(parents=True, exist_ok=True)
    for name, steps in raps.items():
        plan = make_plan(steps)
        with open(rap_dir / f"{name}.json", "w", encoding="utf-8") as fh:
            fh.write(serialize_rap(plan) + "\n")

    write_json(FIXTURES / "annotations" / "egg.json", EGG_ANNOTATIONS)
    write_json(FIXTURES / "annotations" / "carrots.json", CARROT_ANNOTATIONS)
    write_json(FIXTURES / "experiments" / "cooking_tasks.json", EXPERIMENT_SPEC)
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
