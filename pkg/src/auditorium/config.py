"""Server configuration: one TOML document, overridable by CLI flags.

Relative paths in the file resolve against the file's own directory, so a
dataset ships as a folder containing its config. validate() checks that
every referenced path exists and that the three ports are distinct; it is
the whole of `serve --check`.
"""

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import errors

ENV_CONFIG = "AUDITORIUM_CONFIG"

DEFAULT_HOST = "127.0.0.1"
DEFAULT_OSC_PORT = 9000
DEFAULT_NOTIFY_PORT = 9001
DEFAULT_WS_PORT = 8765


@dataclass
class ServerConfig:
    manifest: Path
    samples: tuple = ()
    decoder: Path | None = None          # None: built-in fallback decoder
    device: str = "null"                 # "null" paces wall-clock, no hardware
    block_size: int = 512
    host: str = DEFAULT_HOST
    osc_port: int = DEFAULT_OSC_PORT
    notify_port: int = DEFAULT_NOTIFY_PORT
    ws_port: int = DEFAULT_WS_PORT
    assessor: str = "anonymous"
    n_trials: int = 3
    seed: int = 0
    conditions: tuple = ()               # empty: session defaults
    out_dir: Path = field(default_factory=lambda: Path("results"))
    assets_dir: Path | None = None       # static files for the web UI

    def validate(self):
        if not self.manifest.is_file():
            raise errors.MissingFile(f"manifest not found: {self.manifest}")
        if not self.samples:
            raise errors.InvalidConfig("no source sample files configured")
        for p in self.samples:
            if not p.is_file():
                raise errors.MissingFile(f"source sample not found: {p}")
        if self.decoder is not None and not self.decoder.is_file():
            raise errors.MissingFile(f"decoder not found: {self.decoder}")
        if self.assets_dir is not None and not self.assets_dir.is_dir():
            raise errors.MissingFile(f"assets directory not found: {self.assets_dir}")
        if self.block_size < 8:
            raise errors.InvalidConfig(f"block size too small: {self.block_size}")
        ports = (self.osc_port, self.notify_port, self.ws_port)
        fixed = [p for p in ports if p != 0]  # 0 binds an ephemeral port
        if len(set(fixed)) != len(fixed):
            raise errors.InvalidConfig(f"ports must be distinct, got {ports}")
        for p in ports:
            if not 0 <= p <= 65535:
                raise errors.InvalidConfig(f"port out of range: {p}")
        if self.n_trials < 1 or not self.assessor.strip():
            raise errors.InvalidConfig("session needs an assessor and at least one trial")
        return self


_SCHEMA = {
    "dataset": {"manifest": str, "samples": list, "decoder": str},
    "audio": {"device": str, "block_size": int},
    "network": {"host": str, "osc_port": int, "notify_port": int, "ws_port": int},
    "session": {"assessor": str, "trials": int, "seed": int, "conditions": list},
    "output": {"directory": str, "assets": str},
}


def load_config(path) -> ServerConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise errors.MissingFile(f"config not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise errors.InvalidConfig(f"config is not valid TOML: {exc}")

    for section, keys in doc.items():
        if section not in _SCHEMA:
            raise errors.InvalidConfig(f"unknown config section [{section}]")
        if not isinstance(keys, dict):
            raise errors.InvalidConfig(f"[{section}] must be a table")
        for key, value in keys.items():
            want = _SCHEMA[section].get(key)
            if want is None:
                raise errors.InvalidConfig(f"unknown key {key!r} in [{section}]")
            if not isinstance(value, want) or isinstance(value, bool):
                raise errors.InvalidConfig(
                    f"{section}.{key} must be {want.__name__}, got {value!r}")

    base = path.resolve().parent

    def respath(value):
        p = Path(value)
        return p if p.is_absolute() else base / p

    dataset = doc.get("dataset", {})
    if "manifest" not in dataset:
        raise errors.InvalidConfig("config is missing dataset.manifest")
    audio = doc.get("audio", {})
    net = doc.get("network", {})
    sess = doc.get("session", {})
    out = doc.get("output", {})

    return ServerConfig(
        manifest=respath(dataset["manifest"]),
        samples=tuple(respath(s) for s in dataset.get("samples", ())),
        decoder=respath(dataset["decoder"]) if "decoder" in dataset else None,
        device=audio.get("device", "null"),
        block_size=audio.get("block_size", 512),
        host=net.get("host", DEFAULT_HOST),
        osc_port=net.get("osc_port", DEFAULT_OSC_PORT),
        notify_port=net.get("notify_port", DEFAULT_NOTIFY_PORT),
        ws_port=net.get("ws_port", DEFAULT_WS_PORT),
        assessor=sess.get("assessor", "anonymous"),
        n_trials=sess.get("trials", 3),
        seed=sess.get("seed", 0),
        conditions=tuple(sess.get("conditions", ())),
        out_dir=respath(out.get("directory", "results")),
        assets_dir=respath(out["assets"]) if "assets" in out else None,
    )


def apply_overrides(cfg: ServerConfig, **overrides) -> ServerConfig:
    """Return a copy with non-None overrides applied; unknown names are bugs."""
    fields = {f.name for f in dataclasses.fields(ServerConfig)}
    changes = {}
    for name, value in overrides.items():
        if name not in fields:
            raise errors.InvalidConfig(f"unknown config field {name!r}")
        if value is None:
            continue
        if name in ("manifest", "decoder", "out_dir", "assets_dir"):
            value = Path(value)
        if name == "samples":
            value = tuple(Path(v) for v in value)
        changes[name] = value
    return dataclasses.replace(cfg, **changes)


def config_path_from(flag_value) -> Path:
    """Config location: explicit flag wins, then the environment variable."""
    if flag_value:
        return Path(flag_value)
    env = os.environ.get(ENV_CONFIG)
    if env:
        return Path(env)
    raise errors.InvalidConfig(
        f"no config given: pass --config or set {ENV_CONFIG}")


def write_config(path, cfg: ServerConfig):
    """Emit a TOML document for a config (used by the dataset generator)."""
    path = Path(path)
    base = path.resolve().parent

    def rel(p):
        p = Path(p).resolve()
        try:
            return p.relative_to(base).as_posix()
        except ValueError:
            return p.as_posix()

    lines = [
        "[dataset]",
        f'manifest = "{rel(cfg.manifest)}"',
        "samples = [" + ", ".join(f'"{rel(s)}"' for s in cfg.samples) + "]",
    ]
    if cfg.decoder is not None:
        lines.append(f'decoder = "{rel(cfg.decoder)}"')
    lines += [
        "",
        "[audio]",
        f'device = "{cfg.device}"',
        f"block_size = {cfg.block_size}",
        "",
        "[network]",
        f'host = "{cfg.host}"',
        f"osc_port = {cfg.osc_port}",
        f"notify_port = {cfg.notify_port}",
        f"ws_port = {cfg.ws_port}",
        "",
        "[session]",
        f'assessor = "{cfg.assessor}"',
        f"trials = {cfg.n_trials}",
        f"seed = {cfg.seed}",
    ]
    if cfg.conditions:
        lines.append("conditions = ["
                     + ", ".join(f'"{c}"' for c in cfg.conditions) + "]")
    lines += ["", "[output]", f'directory = "{rel(cfg.out_dir)}"']
    if cfg.assets_dir is not None:
        lines.append(f'assets = "{rel(cfg.assets_dir)}"')
    path.write_text("\n".join(lines) + "\n")
    return path
