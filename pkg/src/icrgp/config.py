"""Flat ``key=value`` configuration files with a typed schema.

Config files are plain text: one ``key=value`` per line, ``#`` comments and
blank lines ignored.  The same syntax is accepted by ``--set`` overrides on
the command line.  Precedence, lowest to highest: schema defaults, config
file entries, ``--set`` overrides, dedicated command-line flags.
"""

from dataclasses import dataclass

__all__ = [
    "CONFIG_SCHEMA",
    "load_config_file",
    "parse_override",
    "resolve_config",
    "build_kernel",
    "build_chart",
]


def _parse_float(text):
    value = float(text)
    if value != value:  # NaN
        raise ValueError("must not be NaN")
    return value


def _parse_positive_float(text):
    value = _parse_float(text)
    if not value > 0.0:
        raise ValueError(f"must be > 0, got {text}")
    return value


def _parse_nonnegative_float(text):
    value = _parse_float(text)
    if value < 0.0:
        raise ValueError(f"must be >= 0, got {text}")
    return value


def _parse_ratio(text):
    value = _parse_float(text)
    if not value > 1.0:
        raise ValueError(f"must be > 1, got {text}")
    return value


def _parse_int(text):
    return int(str(text).strip())


def _parse_positive_int(text):
    value = _parse_int(text)
    if value < 1:
        raise ValueError(f"must be >= 1, got {text}")
    return value


def _parse_nonnegative_int(text):
    value = _parse_int(text)
    if value < 0:
        raise ValueError(f"must be >= 0, got {text}")
    return value


def _parse_string(text):
    return str(text).strip()


def _choice(*options):
    def parse(text):
        value = str(text).strip().lower()
        if value not in options:
            raise ValueError(f"must be one of {sorted(options)}, got {text!r}")
        return value

    return parse


def _parse_size_list(text):
    tokens = [tok.strip() for tok in str(text).split(",") if tok.strip()]
    if not tokens:
        raise ValueError("must be a comma-separated list of sizes")
    return tuple(_parse_positive_int(tok) for tok in tokens)


def _parse_window_list(text):
    """Comma-separated window shapes, each ``<n_csz>x<n_fsz>``."""
    tokens = [tok.strip() for tok in str(text).split(",") if tok.strip()]
    if not tokens:
        raise ValueError("must be a comma-separated list like 3x2,5x4")
    pairs = []
    for tok in tokens:
        parts = tok.lower().split("x")
        if len(parts) != 2:
            raise ValueError(f"window shape {tok!r} is not of the form 3x2")
        pairs.append((_parse_positive_int(parts[0]), _parse_positive_int(parts[1])))
    return tuple(pairs)


@dataclass(frozen=True)
class ConfigKey:
    parse: callable
    default: object
    doc: str


CONFIG_SCHEMA = {
    "kernel.family": ConfigKey(
        _choice("matern32", "rbf"), "matern32", "covariance family"
    ),
    "kernel.rho": ConfigKey(_parse_positive_float, 1.0, "kernel length scale"),
    "kernel.amplitude": ConfigKey(
        _parse_positive_float, 1.0, "kernel marginal variance"
    ),
    "chart.family": ConfigKey(
        _choice("identity", "affine", "logspaced", "log-experiment"),
        "identity",
        "coordinate chart mapping grid indices to modeled locations",
    ),
    "chart.scale": ConfigKey(_parse_positive_float, 1.0, "affine chart scale"),
    "chart.offset": ConfigKey(_parse_float, 0.0, "affine chart offset"),
    "chart.r0": ConfigKey(_parse_positive_float, None, "log chart radius scale"),
    "chart.a": ConfigKey(_parse_positive_float, None, "log chart growth rate"),
    "chart.spacing_ratio": ConfigKey(
        _parse_ratio, 2.0, "log-experiment chart largest/smallest gap ratio"
    ),
    "chart.max_gap": ConfigKey(
        _parse_positive_float, 1.0, "log-experiment chart largest gap"
    ),
    "spec.n_csz": ConfigKey(_parse_positive_int, 3, "coarse pixels per window"),
    "spec.n_fsz": ConfigKey(_parse_positive_int, 2, "fine pixels per window"),
    "spec.n_lvl": ConfigKey(_parse_nonnegative_int, 5, "number of refinement levels"),
    "spec.n0": ConfigKey(_parse_positive_int, None, "base grid size"),
    "spec.n": ConfigKey(
        _parse_positive_int, None, "target final size (alternative to spec.n0)"
    ),
    "spec.jitter": ConfigKey(
        _parse_positive_float, None, "refinement factorization jitter"
    ),
    "kiss.m": ConfigKey(
        _parse_positive_int, None, "inducing grid size (default: model size)"
    ),
    "kiss.padding": ConfigKey(
        _parse_nonnegative_float, 0.5, "inducing grid padding per side, as a fraction"
    ),
    "kiss.jitter": ConfigKey(_parse_positive_float, None, "interpolation jitter"),
    "kiss.cg_iters": ConfigKey(_parse_positive_int, 40, "conjugate-gradient steps"),
    "kiss.probes": ConfigKey(_parse_positive_int, 10, "log-determinant probe vectors"),
    "kiss.lanczos_iters": ConfigKey(_parse_positive_int, 15, "Lanczos steps per probe"),
    "bench.sizes": ConfigKey(
        _parse_size_list, (4096, 8192, 16384, 32768), "benchmark target sizes"
    ),
    "bench.reps": ConfigKey(_parse_positive_int, 5, "timed repetitions per size"),
    "bench.threads": ConfigKey(_parse_positive_int, None, "BLAS thread cap"),
    "sample.count": ConfigKey(_parse_positive_int, 1, "number of draws"),
    "select.candidates": ConfigKey(
        _parse_window_list,
        ((3, 2), (3, 4), (5, 2), (5, 4), (5, 6)),
        "window shapes to compare",
    ),
    "seed": ConfigKey(_parse_nonnegative_int, 0, "random seed"),
    "out": ConfigKey(_parse_string, None, "output path"),
}

# ``chart=log-experiment`` style shorthand for the chart family
_ALIASES = {"chart": "chart.family"}


def _parse_entry(key: str, value: str):
    key = key.strip()
    key = _ALIASES.get(key, key)
    if key not in CONFIG_SCHEMA:
        valid = ", ".join(sorted(CONFIG_SCHEMA))
        raise ValueError(f"unknown config key {key!r}; valid keys: {valid}")
    try:
        return key, CONFIG_SCHEMA[key].parse(value.strip())
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: {exc}") from None


def parse_override(token: str):
    """Parse one ``--set key=value`` token."""
    key, sep, value = token.partition("=")
    if not sep:
        raise ValueError(f"override {token!r} is not of the form key=value")
    return _parse_entry(key, value)


def load_config_file(path: str) -> dict:
    """Parse a ``key=value`` config file into validated settings."""
    entries = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(
                    f"{path}:{lineno}: expected key=value, got {line!r}"
                )
            try:
                key, parsed = _parse_entry(key, value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            entries[key] = parsed
    return entries


def resolve_config(config_path: str = None, overrides=()) -> dict:
    """Defaults, then config file, then ``--set`` overrides."""
    cfg = {key: entry.default for key, entry in CONFIG_SCHEMA.items()}
    if config_path is not None:
        cfg.update(load_config_file(config_path))
    for token in overrides:
        key, value = parse_override(token)
        cfg[key] = value
    return cfg


def build_kernel(cfg: dict):
    from .kernels import kernel_from_name

    return kernel_from_name(
        cfg["kernel.family"], rho=cfg["kernel.rho"], amplitude=cfg["kernel.amplitude"]
    )


def build_chart(cfg: dict):
    from . import charts

    family = cfg["chart.family"]
    if family == "identity":
        return charts.IdentityChart()
    if family == "affine":
        return charts.AffineChart(scale=cfg["chart.scale"], offset=cfg["chart.offset"])
    if family == "logspaced":
        if cfg["chart.r0"] is None or cfg["chart.a"] is None:
            raise ValueError("chart.family=logspaced requires chart.r0 and chart.a")
        return charts.LogSpacedChart(r0=cfg["chart.r0"], a=cfg["chart.a"])
    if family == "log-experiment":
        return charts.LogExperimentChart(
            spacing_ratio=cfg["chart.spacing_ratio"], max_gap=cfg["chart.max_gap"]
        )
    raise ValueError(f"unknown chart family {family!r}")
