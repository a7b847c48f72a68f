#!/usr/bin/env python3
"""Regenerate the packaged scenario JSON files from their builders."""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from crowdsim import scenarios  # noqa: E402
from crowdsim.scenario import serialize_scenario, validate_spec  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "crowdsim" / "scenarios" / "data"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name in scenarios.list_bundled():
        spec = scenarios.build(name)
        validate_spec(spec)
        path = OUT / f"{name}.json"
        path.write_text(serialize_scenario(spec), encoding="utf-8")
        print(f"wrote {path.relative_to(OUT.parents[3])} "
              f"({len(spec.agents)} agents, {len(spec.obstacles)} segments)")


if __name__ == "__main__":
    main()
