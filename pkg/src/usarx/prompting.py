"""Prompt assembly from frozen text assets.

The system text (environment description + behavior representation
description) and the three in-context examples are shipped as checksummed
asset files; any edit must update the pins here and the golden prompts, so
drift cannot happen silently.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

from .grid import ROLE_WIRE, Action, Role, RoomCoord
from .pathrepr import BehaviorRepresentation, render_action, render_br

# sha256 of the asset files, byte-exact including the trailing newline.
ASSET_SHA256 = {
    "env_description.txt": "5bd3ea28aeb574e3c586f24ba50c17100e5d90faf696fd1382a6c3a5a63f91b1",
    "br_description.txt": "0e0292b754988add2c2e0531b27b73cffdf0480003754d8d2b7a9ca09735e039",
    "icl_explore.txt": "6ab2b924dab859545816128dad39f68f8fbf828e0ba001d271397717efbac9c7",
    "icl_exploit.txt": "5aefd04a9c63b8b1c6ce62ca58da1d8dd0b6b63a9968702d524164596e516569",
    "icl_fixed.txt": "5fada2711ffbf4e5a437837eefacd425fbe7790d2313022c4b12d203d1538f56",
    "prediction_request.txt": "20b28410e3768dcb99c34627e1fb7e51722b53977df7c99b0639f610b902ce5d",
}

ICL_ORDER = ("icl_explore.txt", "icl_exploit.txt", "icl_fixed.txt")


class AssetIntegrityError(RuntimeError):
    """A frozen prompt asset does not match its pinned checksum."""


def load_asset(name: str) -> str:
    """Verified asset text, without the file's trailing newline."""
    if name not in ASSET_SHA256:
        raise KeyError(f"unknown asset {name!r}")
    raw = (resources.files("usarx") / "assets" / name).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != ASSET_SHA256[name]:
        raise AssetIntegrityError(f"{name}: sha256 {digest} != pinned {ASSET_SHA256[name]}")
    return raw.decode("utf-8").rstrip("\n")


@dataclass(frozen=True)
class PromptBundle:
    env_description: str
    br_description: str
    icl_examples: tuple[str, ...]
    query_block: str

    def system_text(self) -> str:
        return f"{self.env_description}\n\n{self.br_description}"

    def user_text(self) -> str:
        return "\n\n".join(self.icl_examples + (self.query_block,))


def build_query_block(
    br: BehaviorRepresentation, role: Role, from_room: RoomCoord, action: Action
) -> str:
    action_line = render_action(role, from_room, action)
    action_section = f"Action taken by the {ROLE_WIRE[role]}:\n\n{action_line}\n\nExplanation:"
    br_block = render_br(br)
    if br_block:
        return f"{br_block}\n\n{action_section}"
    return action_section


def build_prompt(
    br: BehaviorRepresentation, role: Role, from_room: RoomCoord, action: Action
) -> PromptBundle:
    """Deterministic four-part bundle: identical inputs give byte-identical
    text."""
    return PromptBundle(
        env_description=load_asset("env_description.txt"),
        br_description=load_asset("br_description.txt"),
        icl_examples=tuple(load_asset(name) for name in ICL_ORDER),
        query_block=build_query_block(br, role, from_room, action),
    )


def prediction_request_text(role: Role) -> str:
    return load_asset("prediction_request.txt").format(role=ROLE_WIRE[role])
