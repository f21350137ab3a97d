"""Command-line driver: demo assets, degradation, restoration, benchmarks.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import datasets, degrade, fileio, metrics
from .flowfield import Condition, sample_mixture
from .integrate import DriftDivergedError, trajectory_to_csv
from .pipeline import PdlsConfig, restore

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

CONFIG_KEYS = ("gamma", "eta_max", "n_steps", "init", "base", "schedule", "seed")


def config_hash(cfg: PdlsConfig, extra: dict | None = None) -> str:
    items = {
        "gamma": cfg.gamma,
        "eta_max": cfg.eta_max,
        "n_steps": cfg.n_steps,
        "init": cfg.init_mode,
        "base": cfg.base_condition,
        "schedule": cfg.schedule_kind,
    }
    if extra:
        items.update(extra)
    blob = ",".join(f"{k}={items[k]}" for k in sorted(items))
    return hashlib.sha256(blob.encode()).hexdigest()[:10]


def read_config_file(path) -> dict:
    """Flat key=value config; '#' starts a comment."""
    out = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        if not val:
            raise ValueError(f"malformed config line {ln}: {line!r}")
        out[key.strip()] = val.strip()
    return out


def build_config(args) -> PdlsConfig:
    vals = {
        "gamma": 0.5, "eta_max": 0.5, "n_steps": 28,
        "init": "structural", "base": "prompt", "schedule": "cosine",
    }
    if getattr(args, "config", None):
        file_vals = read_config_file(args.config)
        unknown = set(file_vals) - set(vals) - {"seed"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        vals.update({k: v for k, v in file_vals.items() if k != "seed"})
    for key, attr in (("gamma", "gamma"), ("eta_max", "eta_max"), ("n_steps", "steps"),
                      ("init", "init"), ("base", "base"), ("schedule", "schedule")):
        flag = getattr(args, attr, None)
        if flag is not None:
            vals[key] = flag
    return PdlsConfig(
        gamma=float(vals["gamma"]),
        eta_max=float(vals["eta_max"]),
        n_steps=int(vals["n_steps"]),
        init_mode=str(vals["init"]),
        base_condition=str(vals["base"]),
        schedule_kind=str(vals["schedule"]),
    )


def parse_seeds(text: str) -> list[int]:
    """Either 'a:b' (half-open range) or a comma list."""
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b)))
    return [int(s) for s in text.split(",")]


# ---------------------------------------------------------------- demo


def cmd_demo(args) -> int:
    out = Path(args.out)
    img_dir = out / "shapes32"
    img_dir.mkdir(parents=True, exist_ok=True)
    dataset = datasets.shapes32_dataset(args.n_per_class, args.seed)
    index = []
    counts: dict[str, int] = {}
    for img, label in dataset:
        i = counts.get(label, 0)
        counts[label] = i + 1
        name = f"{label}_{i:03d}.pgm"
        fileio.write_pgm(img_dir / name, img)
        index.append({"file": f"shapes32/{name}", "label": label})
    fileio.write_mixture(out / "toy2d.mix", datasets.toy2d_mixture())
    fileio.write_mixture(out / "shapes32.mix",
                         datasets.exemplar_mixture(dataset, args.bandwidth))
    (out / "index.json").write_text(json.dumps(index, indent=1))
    print(f"wrote {len(dataset)} demo images and mixture files to {out}")
    return 0


# ---------------------------------------------------------------- degrade


def _load_inputs(args):
    """(ImageGrid, label, name) triples from --demo or an image directory."""
    if args.demo:
        dataset = datasets.shapes32_dataset(args.n_per_class, args.demo_seed)
        items = [(img, label, f"{label}_{i:03d}") for i, (img, label) in enumerate(dataset)]
    else:
        paths = sorted(Path(args.images).glob("*.pgm"))
        if not paths:
            raise FileNotFoundError(f"no PGM images in {args.images}")
        items = [(fileio.read_pgm(p), p.stem.split("_")[0], p.stem) for p in paths]
    if args.limit:
        items = items[: args.limit]
    return items


def cmd_degrade(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    items = _load_inputs(args)
    shape = items[0][0].pixels.shape
    op = degrade.parse_descriptor(args.op, image_shape=shape)
    records = []
    for i, (img, label, name) in enumerate(items):
        if isinstance(op, degrade.Downsample) and (
                img.height % op.factor or img.width % op.factor):
            raise ValueError("factor must divide dimensions")
        noise = degrade.NoiseModel(args.sigma_y, seed=args.seed + i)
        observed = degrade.apply(op, img, noise)
        obs_name = f"{name}_observed.pgm"
        src_name = f"{name}_source.pgm"
        fileio.write_pgm(out / obs_name, observed)
        fileio.write_pgm(out / src_name, img)
        records.append({
            "id": name, "label": label,
            "source": src_name, "observed": obs_name,
            "height": img.height, "width": img.width,
        })
    manifest = {
        "operator": op.descriptor(),
        "sigma_y": args.sigma_y,
        "seed": args.seed,
        "records": records,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    print(f"degraded {len(records)} images ({op.descriptor()}) into {out}")
    return 0


# ---------------------------------------------------------------- restore


def _prompt_for(args, label) -> Condition:
    if args.prompt == "auto":
        return Condition.of(label)
    if args.prompt == "none":
        return Condition.null()
    return Condition.of(args.prompt)


def _restore_input(observed: degrade.ImageGrid, operator: str,
                   full_shape: tuple[int, int]) -> np.ndarray:
    """Lift the observation back to the restoration dimension."""
    if operator.startswith("sr:"):
        factor = full_shape[0] // observed.height
        return degrade.block_replicate(observed.pixels, factor).ravel()
    return observed.flatten()


def _run_image_restores(args, cfg: PdlsConfig, out: Path) -> list[dict]:
    manifest = json.loads(Path(args.manifest).read_text())
    mdir = Path(args.manifest).parent
    if args.mixture:
        mixture = fileio.read_mixture(args.mixture)
    else:
        mixture = datasets.shapes32_mixture(args.n_per_class, args.demo_seed,
                                            args.bandwidth)
    seeds = parse_seeds(args.seeds)
    task = manifest["operator"].split(":")[0]
    jobs = []
    for rec in manifest["records"]:
        observed = fileio.read_pgm(mdir / rec["observed"])
        source = fileio.read_pgm(mdir / rec["source"])
        x_obs = _restore_input(observed, manifest["operator"],
                               (rec["height"], rec["width"]))
        for seed in seeds:
            jobs.append((rec, observed, source, x_obs, seed))

    def run(job):
        rec, observed, source, x_obs, seed = job
        prompt = _prompt_for(args, rec["label"])
        result = restore(x_obs, mixture, prompt, cfg, seed)
        recon = degrade.ImageGrid.from_vector(result.restored, rec["height"], rec["width"])
        rep = metrics.report(recon, source, mixture, rec["label"])
        name = f"{rec['id']}_s{seed}_recon.pgm"
        fileio.write_pgm(out / name, recon)
        return {
            "task": task, "input": rec["id"], "seed": seed,
            "config": config_hash(cfg, {"prompt": args.prompt}),
            "mse": rep.mse, "psnr_db": rep.psnr_db, "ssim": rep.ssim,
            "class_acc": rep.class_accuracy, "recon_path": name,
        }, result

    rows = []
    first_result = None
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(run, jobs))
    else:
        outputs = [run(j) for j in jobs]
    for row, result in outputs:
        rows.append(row)
        if first_result is None:
            first_result = result
    if first_result is not None:
        _write_diagnostics(out / "diagnostics.csv", first_result.diagnostics)
    return rows


def _run_toy_restores(args, cfg: PdlsConfig, out: Path) -> list[dict]:
    mixture = fileio.read_mixture(args.mixture) if args.mixture else datasets.toy2d_mixture()
    seeds = parse_seeds(args.seeds)

    def run(seed):
        rng = np.random.default_rng(seed)
        clean, labels = sample_mixture(mixture, 1, rng)
        clean, label = clean[0], labels[0]
        observed = clean + args.sigma_y * rng.standard_normal(clean.shape)
        prompt = _prompt_for(args, label)
        result = restore(observed, mixture, prompt, cfg, seed)
        err = float(np.mean((result.restored - clean) ** 2))
        return {
            "task": "toy2d", "input": f"seed{seed}", "seed": seed,
            "config": config_hash(cfg, {"prompt": args.prompt}),
            "mse": err, "psnr_db": metrics.psnr(result.restored, clean),
            "ssim": None,
            "class_acc": metrics.class_accuracy(result.restored, mixture, label),
            "recon_path": "",
        }, result

    outputs = [run(s) for s in seeds]
    rows = [row for row, _ in outputs]
    # trajectory dump for the first seed feeds the bench plot
    _, first = outputs[0]
    (out / "structural_path.csv").write_text(trajectory_to_csv(first.paths.structural))
    (out / "semantic_path.csv").write_text(trajectory_to_csv(first.paths.semantic))
    (out / "steered_path.csv").write_text(trajectory_to_csv(first.generated))
    _write_diagnostics(out / "diagnostics.csv", first.diagnostics)
    return rows


def _write_diagnostics(path, diag) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "t", "eta", "dist_to_target"])
        writer.writerows(diag)


def _write_metrics(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "input", "seed", "config", "mse", "psnr_db",
                         "ssim", "class_acc", "recon_path"])
        for r in rows:
            writer.writerow([r["task"], r["input"], r["seed"], r["config"],
                             repr(r["mse"]), repr(r["psnr_db"]),
                             "" if r["ssim"] is None else repr(r["ssim"]),
                             "" if r["class_acc"] is None else r["class_acc"],
                             r["recon_path"]])


def cmd_restore(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = build_config(args)
    if args.task == "toy2d":
        rows = _run_toy_restores(args, cfg, out)
    else:
        if not args.manifest:
            raise ValueError("image tasks need --manifest (from 'pdls degrade')")
        rows = _run_image_restores(args, cfg, out)
    _write_metrics(out / "metrics.csv", rows)
    print(f"restored {len(rows)} runs; metrics in {out / 'metrics.csv'}")
    return 0


# ---------------------------------------------------------------- bench


def _read_metrics(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def aggregate(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["task"], r["config"]), []).append(r)
    table = []
    for (task, cfg), grp in sorted(groups.items()):
        entry = {"task": task, "config": cfg, "n": len(grp)}
        for col in ("mse", "psnr_db", "ssim", "class_acc"):
            vals = [float(r[col]) for r in grp if r[col] not in ("", None)]
            vals = [v for v in vals if np.isfinite(v)]
            if vals:
                entry[f"{col}_mean"] = float(np.mean(vals))
                entry[f"{col}_std"] = float(np.std(vals))
        table.append(entry)
    return table


def _svg_polyline(points, color) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'


def write_toy2d_svg(path, named_paths) -> None:
    """Overlay of (name, states-array) 2-D paths: one polyline + markers each."""
    allpts = np.vstack([s for _, s in named_paths])
    lo, hi = allpts.min(axis=0) - 0.5, allpts.max(axis=0) + 0.5
    size = 480.0

    def to_px(p):
        q = (p - lo) / np.maximum(hi - lo, 1e-9)
        return q[0] * size, (1 - q[1]) * size

    colors = {"structural": "#1f77b4", "semantic": "#d62728", "steered": "#2ca02c"}
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}">']
    for name, states in named_paths:
        color = colors.get(name, "#444444")
        pix = [to_px(p) for p in states]
        parts.append(_svg_polyline(pix, color))
        for x, y in pix:
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="{color}"/>')
        parts.append(f'<text x="8" y="{16 * (len(parts) % 8 + 1)}" fill="{color}">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def write_image_strip(path, images: list[degrade.ImageGrid]) -> None:
    """Horizontal PGM montage with 1-pixel separators."""
    h = images[0].height
    sep = np.ones((h, 1))
    cols = []
    for img in images:
        cols.extend([img.pixels, sep])
    fileio.write_pgm(path, degrade.ImageGrid(np.hstack(cols[:-1])))


def cmd_bench(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    missing = []
    for mpath in args.metrics:
        if not Path(mpath).exists():
            missing.append(mpath)
            continue
        batch = _read_metrics(mpath)
        rows.extend(batch)
        for r in batch:
            if r["recon_path"]:
                p = Path(mpath).parent / r["recon_path"]
                if not p.exists():
                    missing.append(str(p))
    if missing:
        print("missing runs:\n" + "\n".join(missing), file=sys.stderr)
        return 1
    table = aggregate(rows)
    cols = ["task", "config", "n"] + [f"{c}_{s}" for c in ("mse", "psnr_db", "ssim", "class_acc")
                                      for s in ("mean", "std")]
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(table)
    for entry in table:
        print(" ".join(f"{k}={v}" for k, v in entry.items()))

    traj_dir = Path(args.trajectories) if args.trajectories else None
    if traj_dir:
        from .integrate import trajectory_from_csv
        named = []
        for name in ("structural", "semantic", "steered"):
            p = traj_dir / f"{name}_path.csv"
            if p.exists():
                named.append((name, trajectory_from_csv(p.read_text()).states))
        if named:
            write_toy2d_svg(out / "trajectories.svg", named)
    if args.strip:
        src = Path(args.metrics[0]).parent
        imgs = [fileio.read_pgm(src / r["recon_path"]) for r in rows[: args.strip]
                if r["recon_path"]]
        if imgs:
            write_image_strip(out / "strip.pgm", imgs)
    return 0


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdls",
                                     description="Dual-path flow inversion toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo", help="write builtin demo assets")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bandwidth", type=float, default=0.01)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("degrade", help="apply a degradation operator")
    p.add_argument("--out", required=True)
    p.add_argument("--op", required=True, help="e.g. gblur:size=7,sigma=1.5")
    p.add_argument("--sigma-y", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--images", help="directory of PGM inputs")
    p.add_argument("--demo", action="store_true", help="use builtin shapes32 inputs")
    p.add_argument("--demo-seed", type=int, default=0)
    p.add_argument("--n-per-class", type=int, default=30)
    p.add_argument("--limit", type=int, default=0)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("restore", help="run the dual-path restoration")
    p.add_argument("--out", required=True)
    p.add_argument("--task", default="image", choices=["image", "toy2d"])
    p.add_argument("--manifest")
    p.add_argument("--mixture")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--gamma", type=float)
    p.add_argument("--eta-max", dest="eta_max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--init", choices=["structural", "semantic", "mixed"])
    p.add_argument("--base", choices=["prompt", "null"])
    p.add_argument("--schedule", choices=["cosine", "constant"])
    p.add_argument("--prompt", default="auto", help="'auto', 'none', or a label")
    p.add_argument("--seeds", default="0:1")
    p.add_argument("--sigma-y", type=float, default=0.01, help="toy2d observation noise")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--demo-seed", type=int, default=0)
    p.add_argument("--n-per-class", type=int, default=30)
    p.add_argument("--bandwidth", type=float, default=1e-4,
                   help="kernel bandwidth for the builtin exemplar mixture")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("bench", help="aggregate metrics and emit plots")
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", nargs="+", required=True)
    p.add_argument("--trajectories", help="directory with *_path.csv dumps")
    p.add_argument("--strip", type=int, default=0, help="montage the first N reconstructions")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except DriftDivergedError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (fileio.FormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
