"""Monte-Carlo BER experiments over the full transmit/receive chain.

One SimConfig describes everything: mapping, code, constellation build,
decoder settings, channel, interleaver, frame sizing, stopping rule, and the
Eb/N0 grid.  run_sweep covers the designed joint scheme; run_baseline covers
the orthogonal PSK and lattice-set comparisons.  Per-frame RNG streams are
derived from (seed, point index, frame index), so results do not depend on
execution order.  Reports are plain CSV plus a crossover summary.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .baselines import build_lattice_design, psk_detect, psk_map
from .channel import (
    ChannelRealization,
    Interleaver,
    apply_channel,
    calibrate_noise,
    make_rayleigh,
)
from .decoder import decode_two_layer, mlsd_exhaustive, viterbi_optimal
from .design import build_design
from .encoder import Frame, bit_errors, transmit_frame
from .errors import ConfigError, InvalidDimensions
from .mapping import build_mapping
from .outercode import MEMORY, conv_encode, viterbi_decode

__all__ = [
    "SimConfig",
    "BerRecord",
    "load_config",
    "config_hash",
    "run_sweep",
    "run_baseline",
    "run_branch_profile",
    "emit_report",
    "emit_branch_cdf",
    "read_records",
]

SCHEMES = ("tcm-noma", "ofdma", "lc-tcm")

_DEFAULTS = {
    "mapping": {"preset": "paper-fig1"},
    "q": 2,
    "code": {"r": 3, "V": 4, "parity_octal": None, "search": True},
    "constellation": {"base_size": 256, "shaping": "dynamic"},
    "decoder": {"mode": "two_layer", "lambda": 25, "radius_a": 5.0, "paper_literal": False},
    "channel": {"kind": "awgn", "doppler_hz": 50.0, "sample_period_s": 1.0 / 1800.0},
    "interleaver": {"rows": 32, "cols": 16},
    "frame": {"bits_per_user": 1000, "outer": False},
    "stop": {"min_errors": 100, "max_frames": 200},
    "ebn0_db": [8.0, 10.0, 12.0, 14.0],
    "seed": 1,
    "scheme": "tcm-noma",
}


# sections with alternative shapes; replaced wholesale, validated later
_PASSTHROUGH = {"mapping"}


def _merge(defaults, given, path=""):
    if not isinstance(given, dict):
        raise ConfigError(f"section {path or 'config'} must be a mapping")
    out = {}
    for key, dval in defaults.items():
        if key in given:
            gval = given[key]
            if not path and key in _PASSTHROUGH:
                if not isinstance(gval, dict):
                    raise ConfigError(f"section {key} must be a mapping")
                out[key] = dict(gval)
            elif isinstance(dval, dict):
                out[key] = _merge(dval, gval, f"{path}{key}.")
            else:
                out[key] = gval
        else:
            out[key] = dval
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config key {path}{sorted(unknown)[0]}")
    return out


@dataclass(frozen=True)
class SimConfig:
    """Resolved experiment description; `raw` is the canonical nested dict."""

    raw: dict = field(repr=False)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        resolved = _merge(_DEFAULTS, d or {})
        cfg = cls(raw=resolved)
        cfg.validate()
        return cfg

    def validate(self):
        r = self.raw
        if r["scheme"] not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if r["decoder"]["mode"] not in ("two_layer", "optimal", "exhaustive"):
            raise ConfigError("decoder.mode must be two_layer, optimal, or exhaustive")
        if r["channel"]["kind"] not in ("awgn", "rayleigh"):
            raise ConfigError("channel.kind must be awgn or rayleigh")
        if r["constellation"]["shaping"] not in ("dynamic", "static"):
            raise ConfigError("constellation.shaping must be dynamic or static")
        if int(r["decoder"]["lambda"]) < 1:
            raise ConfigError("decoder.lambda must be positive")
        if float(r["decoder"]["radius_a"]) <= 0:
            raise ConfigError("decoder.radius_a must be positive")
        if not r["ebn0_db"]:
            raise ConfigError("ebn0_db grid is empty")
        q = int(r["q"])
        bits = int(r["frame"]["bits_per_user"])
        if bits < 1 or bits % q:
            raise ConfigError(f"frame.bits_per_user must be a positive multiple of q={q}")
        if r["frame"]["outer"] and (bits % 2 or bits // 2 <= MEMORY):
            raise ConfigError("outer-coded frames need an even bit count above the tail")
        if int(r["stop"]["min_errors"]) < 1 or int(r["stop"]["max_frames"]) < 1:
            raise ConfigError("stop rule needs positive bounds")
        m = self.mapping_args()
        if (m["J"] * q) % m["K"]:
            raise ConfigError("J*q must divide evenly over K tones")

    def mapping_args(self) -> dict:
        m = self.raw["mapping"]
        if "preset" in m and set(m) == {"preset"}:
            if m["preset"] != "paper-fig1":
                raise ConfigError(f"unknown mapping preset {m['preset']!r}")
            return {"K": 4, "N": 2, "J": 6, "preset": "paper-fig1"}
        if set(m) == {"K", "N", "J"}:
            return {"K": int(m["K"]), "N": int(m["N"]), "J": int(m["J"]), "preset": None}
        raise ConfigError("mapping must be {preset: ...} or {K, N, J}")

    @property
    def q(self) -> int:
        return int(self.raw["q"])

    @property
    def outer(self) -> bool:
        return bool(self.raw["frame"]["outer"])

    @property
    def frame_bits(self) -> int:
        return int(self.raw["frame"]["bits_per_user"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def ebn0_grid(self) -> tuple:
        return tuple(float(x) for x in self.raw["ebn0_db"])

    def eff_bits_per_tone(self) -> float:
        m = self.mapping_args()
        eff = m["J"] * self.q / m["K"]
        return eff / 2.0 if self.outer else eff


def load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    return SimConfig.from_dict(data or {})


def config_hash(cfg: SimConfig) -> str:
    blob = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class BerRecord:
    scheme: str
    ebn0_db: float
    bits: int
    errors: int
    ber: float
    ci_lo: float
    ci_hi: float
    config_hash: str


_Z95 = 1.959963984540054


def wilson_interval(errors: int, bits: int) -> tuple:
    if bits < 1:
        raise InvalidDimensions("no bits counted")
    z2 = _Z95 * _Z95
    p = errors / bits
    denom = 1.0 + z2 / bits
    center = (p + z2 / (2 * bits)) / denom
    half = _Z95 * np.sqrt(p * (1 - p) / bits + z2 / (4 * bits * bits)) / denom
    # the boundary cases are exactly 0 and 1; drop the float residue
    lo = 0.0 if errors == 0 else float(max(center - half, 0.0))
    hi = 1.0 if errors == bits else float(min(center + half, 1.0))
    return lo, hi


# -- design/mapping caches ---------------------------------------------------

_CACHE: dict = {}


def _design_key(cfg: SimConfig, scheme: str):
    r = cfg.raw
    return json.dumps(
        {
            "scheme": scheme,
            "mapping": cfg.mapping_args(),
            "q": cfg.q,
            "code": r["code"],
            "constellation": r["constellation"] if scheme == "tcm-noma" else None,
        },
        sort_keys=True,
    )


def design_for(cfg: SimConfig, scheme: str):
    """Design bundle for a scheme (None for the orthogonal baseline), cached."""
    if scheme == "ofdma":
        return None
    key = _design_key(cfg, scheme)
    if key not in _CACHE:
        m = cfg.mapping_args()
        code = cfg.raw["code"]
        parity = None if code["search"] else tuple(str(p) for p in code["parity_octal"])
        if not code["search"] and not code["parity_octal"]:
            raise ConfigError("code.search false needs code.parity_octal")
        if scheme == "tcm-noma":
            con = cfg.raw["constellation"]
            _CACHE[key] = build_design(
                K=m["K"],
                N=m["N"],
                J=m["J"],
                preset=m["preset"],
                q=cfg.q,
                r=int(code["r"]),
                registers=int(code["V"]),
                parity_octal=parity,
                base_size=int(con["base_size"]),
                shaping=con["shaping"],
            )
        else:
            _CACHE[key] = build_lattice_design(
                K=m["K"],
                N=m["N"],
                J=m["J"],
                preset=m["preset"],
                q=cfg.q,
                r=int(code["r"]),
                registers=int(code["V"]),
                parity_octal=parity,
            )
    return _CACHE[key]


# -- per-frame pipelines -----------------------------------------------------


def _bits_to_words(bits: np.ndarray, q: int) -> np.ndarray:
    grouped = bits.reshape(-1, q)
    words = np.zeros(grouped.shape[0], dtype=np.int64)
    for i in range(q):
        words = (words << 1) | grouped[:, i]
    return words


def _words_to_bits(words: np.ndarray, q: int) -> np.ndarray:
    out = np.empty((words.size, q), dtype=np.int64)
    for i in range(q):
        out[:, i] = (words >> (q - 1 - i)) & 1
    return out.reshape(-1)


def _through_channel(x_grid, cfg: SimConfig, sigma2: float, rng):
    """Interleave, fade, add noise, deinterleave; returns (y, gains) aligned
    to the transmit grid."""
    T, K = x_grid.shape
    ch = cfg.raw["channel"]
    if ch["kind"] == "rayleigh":
        gains = make_rayleigh(
            K,
            T,
            doppler_hz=float(ch["doppler_hz"]),
            sample_period_s=float(ch["sample_period_s"]),
            rng=rng,
        ).gains
    else:
        gains = np.ones((T, K), dtype=np.complex128)
    il = Interleaver(int(cfg.raw["interleaver"]["rows"]), int(cfg.raw["interleaver"]["cols"]))
    x_phys = il.interleave(x_grid.reshape(-1)).reshape(T, K)
    y_phys = apply_channel(x_phys, ChannelRealization(gains, sigma2), rng)
    y = il.deinterleave(y_phys.reshape(-1)).reshape(T, K)
    h = il.deinterleave(gains.reshape(-1)).reshape(T, K)
    return y, h


def _decode(cfg: SimConfig, y, design, realization, collect_stats):
    dec = cfg.raw["decoder"]
    mode = dec["mode"]
    args = (y, design.mapping, design.diagram, design.labeling, realization)
    if mode == "exhaustive":
        return mlsd_exhaustive(*args)
    if mode == "optimal":
        return viterbi_optimal(*args)
    return decode_two_layer(
        *args,
        lam=int(dec["lambda"]),
        a=float(dec["radius_a"]),
        paper_literal=bool(dec["paper_literal"]),
        collect_stats=collect_stats,
    )


def _tcm_frame(cfg: SimConfig, design, sigma2: float, rng, collect_stats=False):
    """One joint-trellis frame; returns (bits_counted, bit_errors, stats)."""
    J = design.mapping.J
    q = design.q
    if cfg.outer:
        n_info = cfg.frame_bits // 2 - MEMORY
        info = rng.integers(0, 2, size=(J, n_info))
        words = np.stack([_bits_to_words(conv_encode(row), q) for row in info])
    else:
        words = rng.integers(0, 1 << q, size=(J, cfg.frame_bits // q))
    frame = Frame(q, words)
    tx = transmit_frame(frame, design.mapping, design.diagram, design.labeling)
    y, h = _through_channel(tx.positions, cfg, sigma2, rng)
    res = _decode(cfg, y, design, ChannelRealization(h, sigma2), collect_stats)
    if cfg.outer:
        errors = 0
        for j in range(J):
            decoded = viterbi_decode(_words_to_bits(res.words[j], q))
            errors += int(np.count_nonzero(decoded != info[j]))
        return J * n_info, errors, res.stats
    errors = bit_errors(frame.words, res.words, q)
    return J * cfg.frame_bits, errors, res.stats


def _ofdma_frame(cfg: SimConfig, mapping_args: dict, sigma2: float, rng):
    """Orthogonal baseline frame: one user per tone at J*q/K bits each."""
    J, K = mapping_args["J"], mapping_args["K"]
    bpt = J * cfg.q // K
    if cfg.outer:
        n_info = cfg.frame_bits // 2 - MEMORY
        info = rng.integers(0, 2, size=(J, n_info))
        streams = [conv_encode(row) for row in info]
    else:
        streams = [rng.integers(0, 2, size=cfg.frame_bits) for _ in range(J)]
    pad_u = (-len(streams[0])) % bpt
    padded = [np.concatenate([s, np.zeros(pad_u, dtype=np.int64)]) for s in streams]
    symbols = np.concatenate([psk_map(s, bpt) for s in padded])
    pad_g = (-symbols.size) % K
    grid = np.concatenate([symbols, np.zeros(pad_g, dtype=np.complex128)]).reshape(-1, K)
    y, h = _through_channel(grid, cfg, sigma2, rng)
    bits_hat = psk_detect(y.reshape(-1), h.reshape(-1), bpt)
    per_user = len(padded[0])
    errors = 0
    for j in range(J):
        got = bits_hat[j * per_user : (j + 1) * per_user]
        if cfg.outer:
            decoded = viterbi_decode(got[: len(streams[j])])
            errors += int(np.count_nonzero(decoded != info[j]))
        else:
            errors += int(np.count_nonzero(got[: cfg.frame_bits] != streams[j]))
    counted = J * (cfg.frame_bits // 2 - MEMORY if cfg.outer else cfg.frame_bits)
    return counted, errors, None


def _frame_runner(cfg: SimConfig, scheme: str):
    if scheme == "ofdma":
        margs = cfg.mapping_args()
        build_mapping(margs["K"], margs["N"], margs["J"], preset=margs["preset"])
        return 1.0, lambda sigma2, rng, stats=False: _ofdma_frame(cfg, margs, sigma2, rng)
    design = design_for(cfg, scheme)
    return design.mean_energy, lambda sigma2, rng, stats=False: _tcm_frame(
        cfg, design, sigma2, rng, collect_stats=stats
    )


def _run(cfg: SimConfig, scheme: str) -> list:
    energy, frame_fn = _frame_runner(cfg, scheme)
    eff = cfg.eff_bits_per_tone()
    chash = config_hash(cfg)
    min_errors = int(cfg.raw["stop"]["min_errors"])
    max_frames = int(cfg.raw["stop"]["max_frames"])
    records = []
    for pi, ebn0 in enumerate(cfg.ebn0_grid):
        sigma2 = calibrate_noise(ebn0, eff, energy)
        bits = errors = fi = 0
        while errors < min_errors and fi < max_frames:
            rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(pi, fi)))
            b, e, _ = frame_fn(sigma2, rng)
            bits += b
            errors += e
            fi += 1
        lo, hi = wilson_interval(errors, bits)
        records.append(BerRecord(scheme, ebn0, bits, errors, errors / bits, lo, hi, chash))
    return records


def run_sweep(cfg: SimConfig) -> list:
    return _run(cfg, cfg.raw["scheme"])


def run_baseline(cfg: SimConfig, scheme: str) -> list:
    if scheme not in ("ofdma", "lc-tcm"):
        raise ConfigError(f"baseline scheme must be ofdma or lc-tcm, got {scheme!r}")
    return _run(cfg, scheme)


def run_branch_profile(cfg: SimConfig, ebn0_db: float, n_frames: int, scheme: str = "tcm-noma"):
    """Decoder branch statistics over a fixed frame count at one Eb/N0."""
    if scheme == "ofdma":
        raise ConfigError("branch statistics only exist for trellis schemes")
    energy, frame_fn = _frame_runner(cfg, scheme)
    sigma2 = calibrate_noise(ebn0_db, cfg.eff_bits_per_tone(), energy)
    out = []
    for fi in range(n_frames):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0, fi)))
        _, _, stats = frame_fn(sigma2, rng, stats=True)
        if stats is not None:
            out.append(stats)
    return out


# -- reports -----------------------------------------------------------------


def emit_report(records, out_dir) -> list:
    """Write ber.csv and a crossover summary; returns written paths."""
    records = list(records)
    if not records:
        raise InvalidDimensions("no records to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    csv_path = out / "ber.csv"
    lines = ["scheme,ebn0_db,bits,errors,ber,ci_lo,ci_hi,config_hash"]
    for r in records:
        lines.append(
            f"{r.scheme},{r.ebn0_db!r},{r.bits},{r.errors},{r.ber!r},{r.ci_lo!r},{r.ci_hi!r},{r.config_hash}"
        )
    csv_path.write_text("\n".join(lines) + "\n")

    by_scheme: dict = {}
    for r in records:
        by_scheme.setdefault(r.scheme, {})[r.ebn0_db] = r
    sums = []
    names = sorted(by_scheme)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            shared = sorted(set(by_scheme[a]) & set(by_scheme[b]))
            crossings = []
            for lo, hi in zip(shared, shared[1:]):
                d_lo = by_scheme[a][lo].ber - by_scheme[b][lo].ber
                d_hi = by_scheme[a][hi].ber - by_scheme[b][hi].ber
                if d_lo == 0 or d_hi == 0 or (d_lo > 0) != (d_hi > 0):
                    crossings.append((lo, hi))
            for lo, hi in crossings:
                sums.append(f"crossover {a} vs {b} between {lo!r} and {hi!r} dB")
            if shared and not crossings:
                last = shared[-1]
                da, db = by_scheme[a][last].ber, by_scheme[b][last].ber
                if da == db:
                    sums.append(f"no crossover {a} vs {b}; tied at {last!r} dB")
                else:
                    lead = a if da < db else b
                    sums.append(f"no crossover {a} vs {b}; {lead} lower at {last!r} dB")
    summary_path = out / "summary.txt"
    summary_path.write_text("\n".join(sums) + "\n" if sums else "single scheme; no pairs\n")
    return [csv_path, summary_path]


def emit_branch_cdf(counts, probs, path) -> None:
    lines = ["c_tilde,prob"]
    for c, p in zip(counts, probs):
        lines.append(f"{int(c)},{float(p)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_records(csv_path) -> list:
    lines = Path(csv_path).read_text().strip().split("\n")
    if lines[0] != "scheme,ebn0_db,bits,errors,ber,ci_lo,ci_hi,config_hash":
        raise InvalidDimensions("unexpected CSV header")
    out = []
    for line in lines[1:]:
        s, e, b, n, p, lo, hi, h = line.split(",")
        out.append(BerRecord(s, float(e), int(b), int(n), float(p), float(lo), float(hi), h))
    return out
