# Copyright 2026 The Imagine Authors
# SPDX-License-Identifier: Apache-2.0
"""Closed-loop visual reasoning: task generators, episodes and 3D segmentation.

The heavy lifting lives in the compiled ``_imagine`` extension; this package
re-exports it and adds thin wrappers over the command-line workflows.
"""

from ._imagine import (  # noqa: F401
    Camera,
    CountingInstance,
    GaussianScene,
    ImagineError,
    JigsawInstance,
    Observation,
    PlacementInstance,
    QaInstance,
    gen_counting,
    gen_jigsaw,
    gen_placement,
    gen_qa,
    grade_qa,
    inpaint,
    load_gaussians,
    load_instance,
    make_two_clusters,
    parse_action,
    parse_count,
    read_png,
    run_episode,
    save_gaussians,
    save_instance,
    score_counting,
    segment_with_labels,
    task_kind,
    trace_ray,
    write_png,
)
from . import _imagine


def generate(config):
    """Writes a dataset described by a config dict; returns the manifest."""
    return _imagine.cli_generate(config)


def run(config):
    """Runs a dataset; returns the results document."""
    return _imagine.cli_run(config)


def report(runs, out):
    """Writes comparison tables and SVG plots for run directories."""
    _imagine.cli_report([str(r) for r in runs], str(out))


def replay(trace, out, dataset=None):
    """Re-renders a trace into PNG frames; returns {frames, ok, first_mismatch}."""
    return _imagine.cli_replay(str(trace), str(out), None if dataset is None else str(dataset))
