#!/usr/bin/env python3
#
# Copyright 2026 The ntkal Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the per-digit JSON files of the `mnist` npm package to IDX.

Each file `<d>.json` holds {"data": [...]}: 784 pixel values in [0, 1] per
image, rounded to three decimals. Pixels are mapped back to bytes, the images
are shuffled with a fixed seed and written as a train/test pair of IDX files.
"""

import argparse
import json
import os
import random
import struct
import sys


def read_digits(directory):
    images, labels = [], []
    for digit in range(10):
        path = os.path.join(directory, f"{digit}.json")
        with open(path) as f:
            flat = json.load(f)["data"]
        if len(flat) % 784:
            sys.exit(f"{path}: {len(flat)} values is not a multiple of 784")
        for start in range(0, len(flat), 784):
            pixels = bytes(min(255, max(0, round(v * 255))) for v in flat[start:start + 784])
            images.append(pixels)
            labels.append(digit)
    return images, labels


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(img)


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("digits_dir", help="directory holding 0.json ... 9.json")
    parser.add_argument("out_dir")
    parser.add_argument("--train", type=int, default=8000, help="images in the training file")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    images, labels = read_digits(args.digits_dir)
    order = list(range(len(images)))
    random.Random(args.seed).shuffle(order)
    if not 0 < args.train < len(order):
        sys.exit(f"--train must be between 1 and {len(order) - 1}")
    train, test = order[:args.train], order[args.train:]

    os.makedirs(args.out_dir, exist_ok=True)
    write_images(os.path.join(args.out_dir, "train-images.idx"), [images[i] for i in train])
    write_labels(os.path.join(args.out_dir, "train-labels.idx"), [labels[i] for i in train])
    write_images(os.path.join(args.out_dir, "test-images.idx"), [images[i] for i in test])
    write_labels(os.path.join(args.out_dir, "test-labels.idx"), [labels[i] for i in test])
    print(f"wrote {len(train)} training and {len(test)} test images to {args.out_dir}")


if __name__ == "__main__":
    main()
