#!/usr/bin/env python3
# Copyright 2026 The visdebate Authors
# SPDX-License-Identifier: Apache-2.0
"""Convert a SEED-Bench question file into the visdebate JSONL dataset format.

Only image questions of the nine spatial dimensions are kept; the temporal
dimensions (question_type_id 10-12) are dropped.
"""

import argparse
import json
import sys
from pathlib import Path

DIMENSIONS = {
    1: "scene_understanding",
    2: "instance_identity",
    3: "instance_attributes",
    4: "instance_location",
    5: "instance_counting",
    6: "spatial_relation",
    7: "instance_interaction",
    8: "visual_reasoning",
    9: "text_recognition",
}


def convert(questions, image_root, out):
    kept = 0
    for q in questions:
        dim = DIMENSIONS.get(int(q["question_type_id"]))
        if dim is None or q.get("data_type", "image") != "image":
            continue
        record = {
            "id": str(q["question_id"]),
            "dimension": dim,
            "image": str(Path(image_root) / q["data_id"]),
            "question": q["question"],
            "choices": [q[f"choice_{c}"] for c in "abcd"],
            "answer": q["answer"],
        }
        out.write(json.dumps(record, ensure_ascii=False) + "\n")
        kept += 1
    return kept


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("seed_json", help="SEED-Bench question file (e.g. SEED-Bench.json)")
    parser.add_argument("image_root", help="directory holding the images named by data_id")
    parser.add_argument("-o", "--output", default="-", help="output JSONL file (default stdout)")
    args = parser.parse_args()

    with open(args.seed_json, encoding="utf-8") as f:
        questions = json.load(f)["questions"]
    if args.output == "-":
        kept = convert(questions, args.image_root, sys.stdout)
    else:
        with open(args.output, "w", encoding="utf-8") as out:
            kept = convert(questions, args.image_root, out)
    print(f"wrote {kept} items", file=sys.stderr)


if __name__ == "__main__":
    main()
