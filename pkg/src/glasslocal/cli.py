"""Command-line entry point: experiment orchestration and structured output.

Every subcommand reads an optional JSON config (--config), applies flag
overrides, validates against the published schema, materializes defaults,
runs, and writes CSV/JSON results.  When a result goes to a file, the fully
resolved config is echoed to `<out>.config.json` so the run can be
reproduced byte-for-byte.  Floats are written with 17 significant digits.

Replica/seed parallelism is controlled by --threads (fallback: the
GLASSLOCAL_THREADS environment variable); results never depend on the
thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, rng
from .amp import amp_run
from .baselines import (
    SampleBatch,
    empirical_w2,
    exact_gibbs,
    exact_sample,
    glauber_run,
    read_batch_bits,
)
from .config import ConfigError, CONFIG_SCHEMA, dump_config, resolve_config
from .disorder import DisorderTensors, gen_planted, gen_random, read_tensors, write_tensors
from .experiments import chaos_experiment, stability_experiment
from .localization import SamplerParams, sample
from .mixture import MixtureSpec
from .state_evolution import mse_prediction, psi_star, q_schedule, se_recursion, thresholds
from .tap import TapParams, ftap_grad, ftap_value, relative_hessian_extremes
from .validate import run_validation

__all__ = ["main"]

#: Replicas are processed in fixed batches of this size (see _cmd_sample).
REPLICA_CHUNK = 64


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write_result(out: str | None, text: str, resolved: dict) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w") as f:
        f.write(text)
    with open(out + ".config.json", "w") as f:
        f.write(dump_config(resolved))


def _csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _spins_to_hex(x: np.ndarray) -> str:
    bits = ((np.asarray(x) + 1) / 2).astype(np.uint8)
    return np.packbits(bits).tobytes().hex()


def _hex_to_spins(h: str, n: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(h), dtype=np.uint8))[:n]
    return 2.0 * bits.astype(float) - 1.0


def _load_tensors(cfg: dict) -> DisorderTensors:
    if cfg.get("tensor_file"):
        return read_tensors(cfg["tensor_file"])
    spec = MixtureSpec.from_dict(cfg["mixture"])
    if cfg["gen"]["mode"] == "planted":
        x = _planted_x(cfg)
        return gen_planted(spec, cfg["n"], cfg["gen"]["planted_beta"], x, cfg["seed"])
    return gen_random(spec, cfg["n"], cfg["seed"])


def _planted_x(cfg: dict) -> np.ndarray:
    u = rng.stream(cfg["seed"], "planted-x").uniform(size=cfg["n"])
    return np.where(u < 0.5, -1.0, 1.0)


def _threads(cfg: dict, args) -> int:
    if args.threads is not None:
        return args.threads
    if "threads" in cfg and cfg["threads"]:
        return cfg["threads"]
    return int(os.environ.get("GLASSLOCAL_THREADS", "1"))


# --- subcommand handlers -----------------------------------------------------


def _cmd_gen_disorder(cfg: dict, args) -> None:
    if not cfg.get("out"):
        raise ConfigError("config field 'out': gen-disorder requires an output path")
    g = _load_tensors(cfg)
    write_tensors(cfg["out"], g)
    with open(cfg["out"] + ".config.json", "w") as f:
        f.write(dump_config(cfg))


def _cmd_thresholds(cfg: dict, args) -> None:
    spec = MixtureSpec.from_dict(cfg["mixture"])
    rep = thresholds(spec, c0=cfg["thresholds"]["c0"], dyn_ceiling=cfg["thresholds"]["dyn_ceiling"])
    _write_result(cfg.get("out"), json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n", cfg)


def _cmd_se(cfg: dict, args) -> None:
    spec = MixtureSpec.from_dict(cfg["mixture"])
    beta = cfg["beta"]
    ts = np.arange(0.0, cfg["se"]["t_max"] + cfg["se"]["t_step"] / 2, cfg["se"]["t_step"])
    rows = []
    for t in ts:
        prof = se_recursion(spec, beta, float(t), K=1)
        rows.append(
            [float(t), prof.q_star, psi_star(spec, beta, float(t)), 1.0 - prof.q_star]
        )
    _write_result(cfg.get("out"), _csv(["t", "q_star", "psi_star", "mmse"], rows), cfg)


def _cmd_amp(cfg: dict, args) -> None:
    spec = MixtureSpec.from_dict(cfg["mixture"])
    beta, t, K = cfg["beta"], cfg["amp"]["t"], cfg["amp"]["k"]
    if cfg["amp"]["planted"] and not cfg.get("tensor_file"):
        x = _planted_x(cfg)
        g = gen_planted(spec, cfg["n"], beta, x, cfg["seed"])
    else:
        g = _load_tensors(cfg)
        x = g.meta.get("x") if g.kind == "planted" else None
    z = rng.stream(cfg["seed"], "amp-y").standard_normal(g.n)
    y = t * (x if x is not None else 0.0) + math.sqrt(t) * z
    traj = amp_run(g, y, beta, K + 1, keep_history=True)
    prof = se_recursion(spec, beta, t, K=K + 2)
    rows = []
    for st, st_next in zip(traj[:-1], traj[1:]):
        mse_emp = float(np.mean((st.m_hat - x) ** 2)) if x is not None else float("nan")
        znorm = np.linalg.norm(st.z)
        ratio = np.linalg.norm(st_next.z - st.z) / znorm if znorm > 0 else float("nan")
        rows.append([st.k, st.q_hat, mse_emp, mse_prediction(prof, st.k), ratio])
    header = ["k", "q_hat", "mse_empirical", "mse_predicted", "z_increment_ratio"]
    _write_result(cfg.get("out"), _csv(header, rows), cfg)


def _cmd_tap(cfg: dict, args) -> None:
    spec = MixtureSpec.from_dict(cfg["mixture"])
    beta, t = cfg["beta"], cfg["tap"]["t"]
    g = _load_tensors(cfg)
    x = g.meta.get("x") if g.kind == "planted" else None
    if t > 0:
        z = rng.stream(cfg["seed"], "amp-y").standard_normal(g.n)
        y = t * (x if x is not None else 0.0) + math.sqrt(t) * z
    else:
        y = np.zeros(g.n)
    if cfg["tap"]["m_source"] == "amp":
        m = amp_run(g, y, beta, cfg["tap"]["k_amp"], keep_history=False)[-1].m_hat
        m = np.clip(m, -1 + 1e-12, 1 - 1e-12)
    else:
        m = np.zeros(g.n)
    params = TapParams(beta=beta, q=cfg["tap"]["q"], gamma_reg=cfg["tap"]["gamma"], y=y)
    report = {
        "ftap_value": ftap_value(g, m, params),
        "grad_norm": float(np.linalg.norm(ftap_grad(g, m, params))),
        "grad_norm_per_sqrt_n": float(np.linalg.norm(ftap_grad(g, m, params)) / math.sqrt(g.n)),
        "n": g.n,
        "q": cfg["tap"]["q"],
        "gamma": cfg["tap"]["gamma"],
    }
    if cfg["tap"]["spectrum"]:
        lo, hi = relative_hessian_extremes(g, m, params)
        report["relative_hessian_min"] = lo
        report["relative_hessian_max"] = hi
    _write_result(cfg.get("out"), json.dumps(report, indent=2, sort_keys=True) + "\n", cfg)


def _cmd_sample(cfg: dict, args) -> None:
    g = _load_tensors(cfg)
    sp = cfg["sampler"]
    params = SamplerParams(
        beta=cfg["beta"],
        delta=sp["delta"],
        L=sp["L"],
        k_amp=sp["k_amp"],
        k_ngd=sp["k_ngd"],
        eta=sp["eta"],
        gamma=sp["gamma"],
        seed=cfg["seed"],
        keep_trajectory=sp["keep_trajectory"],
    )
    n_rep = sp["replicas"]
    sched = q_schedule(g.spec, params.beta, params.delta, params.L)
    if not np.all(sched.converged):
        raise RuntimeError("q schedule did not converge")
    threads = _threads(cfg, args)
    # fixed chunk size: replica batches keep the same shape for every thread
    # count, so BLAS reduction order (and hence the bytes written) never
    # depends on --threads
    chunks = [
        np.arange(lo, min(lo + REPLICA_CHUNK, n_rep))
        for lo in range(0, n_rep, REPLICA_CHUNK)
    ]

    def run_chunk(idx):
        if idx.size == 0:
            return None
        return sample(
            g,
            params,
            n_replicas=idx.size,
            q_values=sched.values,
            replica_start=int(idx[0]),
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run_chunk, chunks))
    else:
        results = [run_chunk(c) for c in chunks]
    rows = []
    traj_parts = []
    r = 0
    for res in results:
        if res is None:
            continue
        mean = np.atleast_2d(res.mean_final)
        x = np.atleast_2d(res.x_alg)
        fq = np.atleast_1d(res.final_q)
        gn = np.atleast_1d(res.grad_norm_last)
        for i in range(mean.shape[0]):
            rows.append([r, cfg["seed"], fq[i], gn[i], _spins_to_hex(x[i])])
            r += 1
        if params.keep_trajectory:
            t = res.y_trajectory
            traj_parts.append(t[:, None, :] if t.ndim == 2 else t)
    header = ["replica", "seed", "final_q", "grad_norm_last", "x_bits_hex"]
    _write_result(cfg.get("out"), _csv(header, rows), cfg)
    if params.keep_trajectory and cfg.get("out"):
        traj = np.concatenate(traj_parts, axis=1)  # (L+1, replicas, n)
        with open(cfg["out"] + ".traj.bin", "wb") as f:
            f.write(np.ascontiguousarray(traj.transpose(1, 0, 2), dtype="<f8").tobytes())


def _cmd_exact(cfg: dict, args) -> None:
    g = _load_tensors(cfg)
    dist = exact_gibbs(g, cfg["beta"])
    batch = exact_sample(dist, cfg["exact"]["m_samples"], cfg["seed"])
    rows = [[i, _spins_to_hex(x)] for i, x in enumerate(batch.spins)]
    _write_result(cfg.get("out"), _csv(["sample", "x_bits_hex"], rows), cfg)


def _cmd_glauber(cfg: dict, args) -> None:
    g = _load_tensors(cfg)
    gb = cfg["glauber"]
    x0 = np.ones(g.n)
    batch = glauber_run(
        g, cfg["beta"], x0, gb["sweeps"], cfg["seed"], burn_in=gb["burn_in"], thin=gb["thin"]
    )
    rows = [[i, _spins_to_hex(x)] for i, x in enumerate(batch.spins)]
    _write_result(cfg.get("out"), _csv(["state", "x_bits_hex"], rows), cfg)


def _read_batch_csv(path: str) -> SampleBatch:
    with open(path + ".config.json") as f:
        paired = json.load(f)
    n = paired["n"]
    spins = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        col = header.index("x_bits_hex")
        for line in f:
            if line.strip():
                spins.append(_hex_to_spins(line.strip().split(",")[col], n))
    return SampleBatch(spins=np.array(spins), provenance="file")


def _read_batch(path: str) -> SampleBatch:
    if path.endswith(".bits"):
        return read_batch_bits(path)
    return _read_batch_csv(path)


def _cmd_w2(cfg: dict, args) -> None:
    a = _read_batch(cfg["w2"]["batch_a"])
    b = _read_batch(cfg["w2"]["batch_b"])
    _write_result(cfg.get("out"), _csv(["w2"], [[empirical_w2(a, b)]]), cfg)


def _cmd_chaos(cfg: dict, args) -> None:
    spec = MixtureSpec.from_dict(cfg["mixture"])
    ch = cfg["chaos"]
    seeds = [cfg["seed"] + i for i in range(ch["n_seeds"])]
    threads = _threads(cfg, args)

    def per_seed(s):
        return chaos_experiment(
            spec, cfg["n"], cfg["beta"], ch["s_list"], [s], batch_size=ch["batch_size"]
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(per_seed, seeds))
    else:
        parts = [per_seed(s) for s in seeds]
    rows = [
        [r["s"], r["seed"], r["overlap_moment"], r["w2"]] for part in parts for r in part
    ]
    _write_result(cfg.get("out"), _csv(["s", "seed", "overlap_moment", "w2"], rows), cfg)


def _cmd_stability(cfg: dict, args) -> None:
    spec = MixtureSpec.from_dict(cfg["mixture"])
    st = cfg["stability"]
    sp = cfg["sampler"]
    params = SamplerParams(
        beta=cfg["beta"],
        delta=sp["delta"],
        L=sp["L"],
        k_amp=sp["k_amp"],
        k_ngd=sp["k_ngd"],
        eta=sp["eta"],
        gamma=sp["gamma"],
        seed=cfg["seed"],
    )
    seeds = [cfg["seed"] + i for i in range(st["n_seeds"])]
    threads = _threads(cfg, args)

    def per_seed(s):
        return stability_experiment(
            spec, cfg["n"], cfg["beta"], st["s_list"], params, [s], n_replicas=st["replicas"]
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(per_seed, seeds))
    else:
        parts = [per_seed(s) for s in seeds]
    rows = [
        [r["s"], r["seed"], r["spin_distance"], r["mean_distance"]]
        for part in parts
        for r in part
    ]
    _write_result(
        cfg.get("out"), _csv(["s", "seed", "spin_distance", "mean_distance"], rows), cfg
    )


def _cmd_validate(cfg: dict, args) -> None:
    failures = run_validation(verbose=True)
    if failures:
        raise SystemExit(1)


_HANDLERS = {
    "gen-disorder": _cmd_gen_disorder,
    "thresholds": _cmd_thresholds,
    "se": _cmd_se,
    "amp": _cmd_amp,
    "tap": _cmd_tap,
    "sample": _cmd_sample,
    "exact": _cmd_exact,
    "glauber": _cmd_glauber,
    "w2": _cmd_w2,
    "chaos": _cmd_chaos,
    "stability": _cmd_stability,
    "validate": _cmd_validate,
}

# flat flags that overwrite top-level config keys
_FLAG_KEYS = ["n", "beta", "seed", "out", "tensor_file"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glasslocal",
        description="Diffusion-based sampler for mixed p-spin Gibbs measures",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in _HANDLERS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--print-schema", action="store_true", help="print the config schema and exit")
        p.add_argument("--mixture", help='JSON mixture, e.g. \'{"2": 0.5}\'')
        p.add_argument("--n", type=int)
        p.add_argument("--beta", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out")
        p.add_argument("--tensor-file", dest="tensor_file")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a nested config key, e.g. --set sampler.L=100",
        )
    return parser


def _apply_overrides(cfg: dict, args) -> dict:
    if args.mixture is not None:
        cfg["mixture"] = json.loads(args.mixture)
    for key in _FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.threads is not None:
        cfg["threads"] = args.threads
    for item in args.set:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        path, raw = item.split("=", 1)
        section, key = path.split(".", 1)
        cfg.setdefault(section, {})[key] = json.loads(raw)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.print_schema:
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return 0
    try:
        cfg = {}
        if args.config:
            with open(args.config) as f:
                cfg = json.load(f)
        if "kind" in cfg and cfg["kind"] != args.kind:
            raise ConfigError(f"config field 'kind': {cfg['kind']!r} != subcommand {args.kind!r}")
        cfg["kind"] = args.kind
        cfg = _apply_overrides(cfg, args)
        cfg = resolve_config(cfg)
        _HANDLERS[args.kind](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, FloatingPointError, OSError) as e:
        print(f"error [{type(e).__name__}]: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
