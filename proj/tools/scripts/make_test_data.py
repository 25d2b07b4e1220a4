"""Regenerates tests/data from scikit-image's bundled sample images."""
import json
import pathlib

from PIL import Image
from skimage import data

root = pathlib.Path(__file__).resolve().parents[2] / "tests" / "data"


def crop(img, top, left, size):
    return Image.fromarray(img[top:top + size, left:left + size])


root.mkdir(parents=True, exist_ok=True)
crop(data.astronaut(), 60, 180, 64).save(root / "natural_64.png")
crop(data.chelsea(), 60, 140, 128).save(root / "denoise_128.png")
crop(data.astronaut(), 300, 200, 64).save(root / "inpaint_64.png")

sr = root / "sr_set"
sr.mkdir(exist_ok=True)
images = []
for name, img, top, left in [("coffee", data.coffee(), 120, 220),
                             ("rocket", data.rocket(), 150, 180),
                             ("astronaut", data.astronaut(), 20, 160)]:
    crop(img, top, left, 128).save(sr / f"{name}.png")
    images.append({"name": name, "gt": f"{name}.png"})
(sr / "manifest.json").write_text(json.dumps({"images": images, "factor": 4}, indent=2) + "\n")
