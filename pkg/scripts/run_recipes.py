"""Run every recipe in ../recipes (or the ones named) into out/<recipe>/."""
import json
import sys
from pathlib import Path

from z2vqe.cli import run

ROOT = Path(__file__).resolve().parent.parent


def main(names):
    recipes = sorted((ROOT / "recipes").glob("*.json"))
    if names:
        recipes = [r for r in recipes if r.stem in names]
    status = 0
    for recipe in recipes:
        cfg_kind = json.loads(recipe.read_text())["experiment"]
        print(f"== {recipe.stem} ({cfg_kind})", flush=True)
        code = run([cfg_kind, "--config", str(recipe), "--output-dir", str(ROOT / "out" / recipe.stem)])
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
