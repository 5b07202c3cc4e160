"""Dataset serialization: a directory tree with a manifest at the root and
one folder per scenario holding a scenario header, one JSON record per step,
and the step's rendered images.

    out/
      manifest.json
      scenarios/00000/scenario.json
      scenarios/00000/steps.jsonl
      scenarios/00000/0_rgb.png  0_depth.raw  0_depth_vis.png  ...

All JSON is written with sorted keys and fixed separators so a fixed seed
reproduces the records byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

from .annotate import DepInfo, StepAnnotation
from .errors import DatasetCorrupt
from .frames import (
    object_frame_from_dict,
    object_frame_to_dict,
    position_frame_from_dict,
    position_frame_to_dict,
)
from .generate import GenConfig, Scenario, Step, build_scenario
from .instructions import Instruction
from .render import BBox, export, render
from .world import Action, BlockState, Cell, Workspace

FORMAT_VERSION = 1

# conventions a consumer must know; surfaced here rather than buried in code
CONVENTIONS = {
    "last_remaining_indices": "all-prior-manipulations",
    "never_moved_implicit": "occlusion-index-only",
    "distance_bucket_reduction": "max",
    "abstain_scoring": "incorrect",
}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# --- converters -------------------------------------------------------------

def workspace_to_dict(ws: Workspace) -> dict:
    return {
        "grid_side": ws.grid_side,
        "time": ws.time,
        "manipulated": list(ws.manipulated),
        "blocks": [{"id": b.id, "color": b.color, "col": b.cell.col,
                    "row": b.cell.row, "level": b.level, "yaw": b.yaw}
                   for b in ws.blocks],
    }


def workspace_from_dict(d: dict) -> Workspace:
    blocks = tuple(BlockState(b["id"], b["color"], Cell(b["col"], b["row"]),
                              b["level"], b["yaw"]) for b in d["blocks"])
    return Workspace(d["grid_side"], blocks, d["time"], tuple(d["manipulated"]))


def dep_to_dict(dep: DepInfo) -> dict:
    return {"explicit": dep.explicit, "implicit": dep.implicit,
            "history_indices": list(dep.history_indices),
            "distances": list(dep.distances)}


def dep_from_dict(d: dict) -> DepInfo:
    return DepInfo(d["explicit"], d["implicit"],
                   tuple(d["history_indices"]), tuple(d["distances"]))


def instruction_to_dict(ins: Instruction) -> dict:
    return {
        "text": ins.text,
        "schema": ins.schema,
        "object_frame": object_frame_to_dict(ins.object_frame),
        "position_frame": position_frame_to_dict(ins.position_frame),
        "annotation": {"pick": dep_to_dict(ins.annotation.pick),
                       "place": dep_to_dict(ins.annotation.place)},
    }


def instruction_from_dict(d: dict) -> Instruction:
    ann = StepAnnotation(pick=dep_from_dict(d["annotation"]["pick"]),
                         place=dep_from_dict(d["annotation"]["place"]))
    return Instruction(d["text"], d["schema"],
                       object_frame_from_dict(d["object_frame"]),
                       position_frame_from_dict(d["position_frame"]), ann)


def step_to_dict(step: Step) -> dict:
    return {
        "time": step.time,
        "pre": workspace_to_dict(step.pre),
        "action": {"block": step.action.block,
                   "dest": [step.action.dest.col, step.action.dest.row]},
        "gt_object_box": list(step.gt_object_box),
        "gt_position_box": list(step.gt_position_box),
        "instructions": [instruction_to_dict(i) for i in step.instructions],
        "rgb": step.rgb, "depth": step.depth, "depth_vis": step.depth_vis,
    }


def step_from_dict(d: dict) -> Step:
    return Step(
        time=d["time"],
        pre=workspace_from_dict(d["pre"]),
        action=Action(d["action"]["block"], Cell(*d["action"]["dest"])),
        gt_object_box=BBox(*d["gt_object_box"]),
        gt_position_box=BBox(*d["gt_position_box"]),
        instructions=[instruction_from_dict(i) for i in d["instructions"]],
        rgb=d["rgb"], depth=d["depth"], depth_vis=d["depth_vis"])


# --- writing ------------------------------------------------------------------

def write_scenario(scenario: Scenario, dataset_dir, split: str,
                   images: bool = False, raster_px: int = 128) -> None:
    sdir = Path(dataset_dir) / "scenarios" / scenario.scenario_id
    sdir.mkdir(parents=True, exist_ok=True)
    header = {
        "id": scenario.scenario_id,
        "seed_key": list(scenario.seed_key),
        "split": split,
        "initial": workspace_to_dict(scenario.initial),
    }
    (sdir / "scenario.json").write_text(_dumps(header) + "\n")
    with open(sdir / "steps.jsonl", "w") as fh:
        for step in scenario.steps:
            fh.write(_dumps(step_to_dict(step)) + "\n")
    if images:
        for step in scenario.steps:
            raster = render(step.pre, raster_px)
            export(raster, sdir / step.rgb, sdir / step.depth,
                   sdir / step.depth_vis)


def read_scenario(dataset_dir, scenario_id: str) -> Scenario:
    sdir = Path(dataset_dir) / "scenarios" / scenario_id
    try:
        header = json.loads((sdir / "scenario.json").read_text())
        steps = [step_from_dict(json.loads(line))
                 for line in (sdir / "steps.jsonl").read_text().splitlines() if line]
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise DatasetCorrupt(f"scenario {scenario_id}: {e}") from e
    return Scenario(scenario_id=header["id"],
                    seed_key=tuple(header["seed_key"]),
                    initial=workspace_from_dict(header["initial"]),
                    steps=steps)


def build_manifest(cfg: GenConfig, scenarios: list[Scenario]) -> dict:
    split_of = split_assignment(cfg)
    return {
        "format_version": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "counts": {
            "tasks": len(scenarios),
            "images": sum(len(s.steps) for s in scenarios),
            "instructions": sum(len(st.instructions)
                                for s in scenarios for st in s.steps),
        },
        "splits": {
            "train": [s.scenario_id for s in scenarios
                      if split_of[s.scenario_id] == "train"],
            "test": [s.scenario_id for s in scenarios
                     if split_of[s.scenario_id] == "test"],
        },
        "conventions": dict(CONVENTIONS),
    }


def split_assignment(cfg: GenConfig) -> dict[str, str]:
    """Deterministic split: the first train_count scenario ids train."""
    return {f"{i:05d}": ("train" if i < cfg.train_count else "test")
            for i in range(cfg.n_tasks)}


def declared_manifest(cfg: GenConfig) -> dict:
    """Manifest skeleton for a config without generating scenarios: declares
    the task count and split sizes up front."""
    split_of = split_assignment(cfg)
    return {
        "format_version": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "counts": {"tasks": cfg.n_tasks, "images": None, "instructions": None},
        "splits": {
            "train": sorted(k for k, v in split_of.items() if v == "train"),
            "test": sorted(k for k, v in split_of.items() if v == "test"),
        },
        "conventions": dict(CONVENTIONS),
    }


def write_dataset(cfg: GenConfig, out_dir, images: bool = False,
                  progress=None) -> dict:
    """Generate and serialize the whole dataset; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    split_of = split_assignment(cfg)
    scenarios = []
    for index in range(cfg.n_tasks):
        scenario = build_scenario(cfg, index)
        write_scenario(scenario, out, split_of[scenario.scenario_id],
                       images=images, raster_px=cfg.raster_px)
        scenarios.append(scenario)
        if progress is not None:
            progress(index + 1, cfg.n_tasks)
    manifest = build_manifest(cfg, scenarios)
    (out / "manifest.json").write_text(_dumps(manifest) + "\n")
    return manifest


# --- reading ------------------------------------------------------------------

def read_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / "manifest.json"
    if not path.is_file():
        raise DatasetCorrupt(f"no manifest at {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DatasetCorrupt(f"bad manifest: {e}") from e


def iter_scenarios(dataset_dir) -> Iterator[Scenario]:
    manifest = read_manifest(dataset_dir)
    for sid in manifest["splits"]["train"] + manifest["splits"]["test"]:
        yield read_scenario(dataset_dir, sid)


def stats(dataset_dir) -> dict:
    """Recount the dataset and validate the declared ranges."""
    manifest = read_manifest(dataset_dir)
    cfg = GenConfig.from_dict(manifest["config"])
    tasks = images = instructions = 0
    for scenario in iter_scenarios(dataset_dir):
        tasks += 1
        n_steps = len(scenario.steps)
        lo = min(cfg.steps[0], cfg.n_blocks[1])
        if not lo <= n_steps <= cfg.steps[1]:
            raise DatasetCorrupt(
                f"scenario {scenario.scenario_id}: {n_steps} steps outside "
                f"[{cfg.steps[0]}, {cfg.steps[1]}]")
        for step in scenario.steps:
            images += 1
            k = len(step.instructions)
            if not cfg.instructions[0] <= k <= cfg.instructions[1]:
                raise DatasetCorrupt(
                    f"scenario {scenario.scenario_id} step {step.time}: "
                    f"{k} instructions outside "
                    f"[{cfg.instructions[0]}, {cfg.instructions[1]}]")
            instructions += k
    if tasks == 0:
        raise DatasetCorrupt("dataset has no scenarios")
    counts = {"tasks": tasks, "images": images, "instructions": instructions}
    if counts != manifest["counts"]:
        raise DatasetCorrupt(
            f"manifest counts {manifest['counts']} != recounted {counts}")
    return {
        "counts": counts,
        "splits": {k: len(v) for k, v in manifest["splits"].items()},
        "config": manifest["config"],
    }
