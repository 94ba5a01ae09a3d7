"""Prompt catalog for reasoning backends.

These strings are the wire-level vocabulary shared with remote language and
vision-language backends; simulated backends read the structured context and
ignore the surface text, so both see identical queries.
"""

from __future__ import annotations

PRIOR_SYSTEM_PROMPT = (
    "You are a Spatial Commonsense Reasoner specializing in indoor environments. "
    "Your task is to generate physically plausible prior knowledge about spatial "
    "relationships using cognitive principles of spatial memory."
)

PRIOR_ELICIT_TEMPLATE = (
    "for the target {target}, please provide typical topological, directional "
    "and distance relationships"
)

GUIDANCE_SYSTEM_PROMPT = (
    "You are a Spatial Path Inference Engine for embodied agents. You are "
    "searching for a target object in an unfamiliar house. Based on the target "
    "and spatial layout knowledge, generate semantic cues for BLIP-2 matching."
)

LOCALIZE_PROMPT = (
    "Correlate visual features with DSRG nodes to determine agent's precise "
    "graph position"
)

CUE_INFERENCE_PROMPT = (
    "Given the current visual observation and the DSRG, infer the most "
    "informative semantic cues that can help the agent locate the target "
    "object more effectively."
)

REDETECT_TEMPLATE = (
    "Determine whether the {target} appears in the scene. If found, provide "
    "its bounding box coordinates"
)

VERIFY_PROMPT = (
    "Verify whether the detected {label} is truly present, considering the "
    "surrounding context and the known spatial relationships around it."
)

RELATION_OBJECT_PROMPT = (
    "Infer the topological, directional and distance relationships between "
    "{object} and {target}."
)

RELATION_ROOM_PROMPT = (
    "Infer the topological and distance relationships between the rooms "
    "{room_a} and {room_b}."
)

# Guidance sentence pair used by default: a region cue and an object cue,
# rendered side by side ("paired" template id).
REGION_CUE_SENTENCE = "Seems like a {cue} is ahead"
OBJECT_CUE_SENTENCE = "A {cue} can be in the vicinity"

# Alternative single-slot phrasings for the prompt-sensitivity sweep.
SINGLE_SLOT_TEMPLATES = {
    "ahead_there_is": "Seems like there is a {cue} ahead",
    "vicinity": "A {cue} can be in the vicinity.",
    "ahead_short": "Seems like a {cue} ahead",
    "nearby": "You may find {cue} nearby",
    "bare": "{cue}",
}

DEFAULT_TEMPLATE_ID = "paired"
TEMPLATE_IDS = (DEFAULT_TEMPLATE_ID, *SINGLE_SLOT_TEMPLATES)
