"""Command-line pipeline driver: phantom | segment | features | evaluate | serve.

Every command runs off a JSON configuration file (``--config``) and writes
artifacts only under the configured work directory::

    work_dir/
      masks/      one mask container + growth trace per segmented case
      features/   one feature CSV per feature mode
      reports/    evaluation reports (JSON + CSV) and run comparisons
      status/     one CaseStatus JSON per case

Relative paths in the config resolve against the config file's directory.
Reruns with identical inputs and seeds produce byte-identical artifacts:
nothing here records wall-clock data and every stochastic step is seeded.
``--seed`` overrides both the pipeline run seed and the phantom dataset seed;
``--mode`` overrides the evaluation balance mode.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .evaluation import (
    FeatureDataset,
    PipelineConfig,
    compare_runs,
    loco_evaluate,
    report_case_csv,
    report_roc_csv,
)
from .phantom import ManifestRecord, PhantomSpec, generate_dataset, load_manifest
from .radiomics.extract import extract_volume_features, read_feature_csv, write_feature_csv
from .seeding import derive_seed
from .segmentation import GrowthError, Seed, SegmentationParams, propagate_volume
from .volume_io import CtVolume, SegmentationMask, load_mask, load_volume, save_mask

logger = logging.getLogger(__name__)

STAGE_IMPORTED = "imported"
STAGE_SEEDED = "seeded"
STAGE_SEGMENTED = "segmented"
STAGE_ACCEPTED = "accepted"
STAGE_FEATURED = "featured"
STAGES = [STAGE_IMPORTED, STAGE_SEEDED, STAGE_SEGMENTED, STAGE_ACCEPTED, STAGE_FEATURED]


@dataclass
class CaseStatus:
    """Workflow state of one case; stages advance imported -> ... -> featured.

    Re-segmenting resets an accepted case to ``segmented`` (the old acceptance
    covered a mask that no longer exists) and deleting a mask resets to
    ``seeded``; otherwise stages only move forward.
    """

    case_id: str
    stage: str = STAGE_IMPORTED
    seed: dict | None = None  # {"z", "x", "y"}
    mask_path: str | None = None  # relative to the work directory
    label: int | None = None
    n_slices: int | None = None

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "stage": self.stage,
            "seed": self.seed,
            "mask_path": self.mask_path,
            "label": self.label,
            "n_slices": self.n_slices,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CaseStatus":
        status = cls(**{k: data.get(k) for k in ("case_id", "stage", "seed", "mask_path", "label", "n_slices")})
        if status.stage not in STAGES:
            raise ValueError(f"unknown stage {status.stage!r}")
        return status

    def advance(self, stage: str) -> None:
        if STAGES.index(stage) > STAGES.index(self.stage):
            self.stage = stage


class StatusStore:
    """CaseStatus persistence: one JSON file per case under work_dir/status."""

    def __init__(self, work_dir):
        self.dir = Path(work_dir) / "status"
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, case_id: str) -> Path:
        return self.dir / f"{case_id}.json"

    def load(self, case_id: str) -> CaseStatus:
        path = self._path(case_id)
        if not path.exists():
            raise KeyError(case_id)
        return CaseStatus.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def load_or_init(self, record: ManifestRecord) -> CaseStatus:
        """Existing status, or a fresh 'seeded' one from the manifest record."""
        try:
            return self.load(record.case_id)
        except KeyError:
            return CaseStatus(
                case_id=record.case_id,
                stage=STAGE_SEEDED,
                seed={"z": record.seed.z, "x": record.seed.x, "y": record.seed.y},
                label=record.label,
            )

    def save(self, status: CaseStatus) -> None:
        payload = json.dumps(status.to_dict(), sort_keys=True, indent=2) + "\n"
        with self._lock:
            self._path(status.case_id).write_text(payload, encoding="utf-8")


# ---------------------------------------------------------------------------
# Configuration


_CONFIG_KEYS = {"dataset_manifest", "work_dir", "pipeline", "phantom", "serve"}
_TUPLE_SPEC_KEYS = ("dims", "spacing_mm", "lesion_radii")


@dataclass
class RunConfig:
    dataset_manifest: Path
    work_dir: Path
    pipeline: PipelineConfig
    phantom_positive: int
    phantom_negative: int
    phantom_seed: int
    phantom_spec: PhantomSpec
    serve_host: str
    serve_port: int
    serve_static: Path | None


def load_run_config(path, seed: int | None = None, mode: str | None = None) -> RunConfig:
    """Parse a config file; ``seed``/``mode`` are the CLI flag overrides."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    base = path.resolve().parent

    try:
        pipeline = PipelineConfig(**raw.get("pipeline", {}))
    except TypeError as exc:  # dataclasses report unknown keys as TypeError
        raise ValueError(f"bad pipeline config: {exc}") from exc
    if seed is not None:
        pipeline.run_seed = seed
    if mode is not None:
        pipeline.balance_mode = mode

    phantom = dict(raw.get("phantom", {}))
    spec_kwargs = dict(phantom.pop("spec", {}))
    for key in _TUPLE_SPEC_KEYS:  # JSON has no tuples
        if key in spec_kwargs:
            spec_kwargs[key] = tuple(spec_kwargs[key])
    phantom_seed = int(phantom.pop("seed", 1234)) if seed is None else seed
    if seed is not None:
        phantom.pop("seed", None)
    n_positive = int(phantom.pop("n_positive", 30))
    n_negative = int(phantom.pop("n_negative", 10))
    if phantom:
        raise ValueError(f"unknown phantom config keys: {sorted(phantom)}")

    serve = dict(raw.get("serve", {}))
    host = str(serve.pop("host", "127.0.0.1"))
    port = int(serve.pop("port", 8765))
    static = serve.pop("static_dir", None)
    if serve:
        raise ValueError(f"unknown serve config keys: {sorted(serve)}")

    try:
        spec = PhantomSpec(**spec_kwargs)
    except TypeError as exc:
        raise ValueError(f"bad phantom spec: {exc}") from exc

    return RunConfig(
        dataset_manifest=base / raw.get("dataset_manifest", "dataset/manifest.csv"),
        work_dir=base / raw.get("work_dir", "work"),
        pipeline=pipeline,
        phantom_positive=n_positive,
        phantom_negative=n_negative,
        phantom_seed=phantom_seed,
        phantom_spec=spec,
        serve_host=host,
        serve_port=port,
        serve_static=(base / static) if static else None,
    )


# ---------------------------------------------------------------------------
# Shared segmentation persistence (used by cmd_segment and the HTTP server)


def segment_case_artifacts(
    status: CaseStatus,
    volume: CtVolume,
    params: SegmentationParams,
    work_dir,
    store: StatusStore,
) -> dict:
    """Run 3D propagation and persist mask, trace, and status.

    Returns the trace dict written to disk; raises GrowthError when the seed
    slice detects nothing.  The caller is expected to hold any per-case lock.
    """
    if status.seed is None:
        raise ValueError(f"case {status.case_id} has no seed")
    work_dir = Path(work_dir)
    masks_dir = work_dir / "masks"
    masks_dir.mkdir(parents=True, exist_ok=True)
    seed = Seed(z=int(status.seed["z"]), x=int(status.seed["x"]), y=int(status.seed["y"]))
    result = propagate_volume(volume, seed, params)

    mask_rel = f"masks/{status.case_id}.ptv"
    save_mask(SegmentationMask(case_id=status.case_id, bits=result.mask), work_dir / mask_rel)
    trace = {
        "case_id": status.case_id,
        "seed_used": {"z": result.seed_used.z, "x": result.seed_used.x, "y": result.seed_used.y},
        "per_slice": {str(z): info for z, info in sorted(result.per_slice.items())},
    }
    (masks_dir / f"{status.case_id}_trace.json").write_text(
        json.dumps(trace, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    status.mask_path = mask_rel
    status.n_slices = int(volume.voxels.shape[0])
    # a fresh mask invalidates any earlier acceptance
    status.stage = STAGE_SEGMENTED
    store.save(status)
    return trace


def _pool_size(n_jobs: int) -> int:
    return max(1, min(n_jobs, os.cpu_count() or 1, 8))


# ---------------------------------------------------------------------------
# Subcommands


def cmd_phantom(cfg: RunConfig) -> int:
    out_dir = cfg.dataset_manifest.parent
    manifest = generate_dataset(
        cfg.phantom_spec, cfg.phantom_positive, cfg.phantom_negative, cfg.phantom_seed, out_dir
    )
    records = load_manifest(manifest)
    store = StatusStore(cfg.work_dir)
    for rec in records:
        status = store.load_or_init(rec)
        status.n_slices = cfg.phantom_spec.dims[2]
        store.save(status)
    logger.info("wrote %d cases to %s", len(records), manifest)
    return 0


def cmd_segment(cfg: RunConfig, case_filter: list[str] | None = None) -> int:
    records = load_manifest(cfg.dataset_manifest)
    by_id = {r.case_id: r for r in records}
    if case_filter:
        missing = [cid for cid in case_filter if cid not in by_id]
        if missing:
            logger.error("unknown case ids: %s", ", ".join(missing))
            return 1
        selected = [by_id[cid] for cid in case_filter]
    else:
        selected = records
    store = StatusStore(cfg.work_dir)
    params = SegmentationParams(run_seed=cfg.pipeline.run_seed)

    def run_one(rec: ManifestRecord) -> tuple[str, str]:
        status = store.load_or_init(rec)
        if status.seed is None:
            logger.warning("case %s has no seed; skipped", rec.case_id)
            return rec.case_id, "skipped"
        try:
            volume = load_volume(rec.volume_path)
            trace = segment_case_artifacts(status, volume, params, cfg.work_dir, store)
        except GrowthError as exc:
            logger.warning("case %s: growth failed (%s); skipped", rec.case_id, exc)
            return rec.case_id, "skipped"
        n_slices = len(trace["per_slice"])
        return rec.case_id, f"segmented ({n_slices} slices)"

    with ThreadPoolExecutor(max_workers=_pool_size(len(selected))) as pool:
        outcomes = dict(pool.map(run_one, selected))
    for rec in selected:
        logger.info("%s: %s", rec.case_id, outcomes[rec.case_id])
    segmented = sum(1 for v in outcomes.values() if v != "skipped")
    if selected and segmented == 0:
        logger.error("all %d selected cases were skipped", len(selected))
        return 2
    return 0


def cmd_features(cfg: RunConfig) -> int:
    records = load_manifest(cfg.dataset_manifest)
    store = StatusStore(cfg.work_dir)
    mode = cfg.pipeline.feature_mode

    ready: list[tuple[ManifestRecord, CaseStatus]] = []
    for rec in records:
        try:
            status = store.load(rec.case_id)
        except KeyError:
            logger.warning("case %s has no status; skipped", rec.case_id)
            continue
        if status.mask_path is None or STAGES.index(status.stage) < STAGES.index(STAGE_SEGMENTED):
            logger.warning("case %s is not segmented; skipped", rec.case_id)
            continue
        ready.append((rec, status))

    def extract_one(item: tuple[ManifestRecord, CaseStatus]):
        rec, status = item
        volume = load_volume(rec.volume_path)
        mask = load_mask(cfg.work_dir / status.mask_path)
        return extract_volume_features(volume, mask.bits, mode)

    with ThreadPoolExecutor(max_workers=_pool_size(len(ready) or 1)) as pool:
        rows = list(pool.map(extract_one, ready))

    features_dir = cfg.work_dir / "features"
    features_dir.mkdir(parents=True, exist_ok=True)
    out = features_dir / f"{mode}.csv"
    ids = [rec.case_id for rec, _ in ready]
    labels = [rec.label for rec, _ in ready]
    write_feature_csv(out, ids, labels, rows)
    for _, status in ready:
        status.advance(STAGE_FEATURED)
        store.save(status)
    logger.info("wrote %d feature rows (%s) to %s", len(ready), mode, out)
    return 0


def cmd_evaluate(cfg: RunConfig, compare: bool = False) -> int:
    mode = cfg.pipeline.feature_mode
    features_path = cfg.work_dir / "features" / f"{mode}.csv"
    if not features_path.exists():
        logger.error("feature matrix %s not found; run `features` first", features_path)
        return 1
    ids, labels, matrix = read_feature_csv(features_path)
    dataset = FeatureDataset(case_ids=ids, x=matrix, y=labels)
    reports_dir = cfg.work_dir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)

    def run(reducer: str):
        pipeline = replace(cfg.pipeline, reducer=reducer)
        report = loco_evaluate(dataset, pipeline)
        stem = f"{mode}_{reducer}_{pipeline.balance_mode}"
        (reports_dir / f"report_{stem}.json").write_text(report.to_json(), encoding="utf-8")
        (reports_dir / f"cases_{stem}.csv").write_text(report_case_csv(report), encoding="utf-8")
        (reports_dir / f"roc_{stem}.csv").write_text(report_roc_csv(report), encoding="utf-8")
        logger.info(
            "%s: auc %.4f +/- %.4f, accuracy %.4f over %d cases",
            stem, report.auc, report.auc_std, report.accuracy, len(report.cases),
        )
        return report

    if compare:
        report_a = run("rpa")
        report_b = run("pca")
        result = compare_runs(
            report_a,
            report_b,
            n_resamples=cfg.pipeline.bootstrap_samples,
            seed=derive_seed(cfg.pipeline.run_seed, "compare"),
        )
        payload = {"reducer_a": "rpa", "reducer_b": "pca", **result.to_json_dict()}
        out = reports_dir / f"compare_{mode}_{cfg.pipeline.balance_mode}.json"
        out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        logger.info(
            "compare rpa vs pca: delta_auc %.4f, p %.4f", result.delta_auc, result.p_value
        )
    else:
        run(cfg.pipeline.reducer)
    return 0


def cmd_serve(cfg: RunConfig) -> int:
    from . import server  # deferred: server imports this module's status types

    records = load_manifest(cfg.dataset_manifest)
    store = StatusStore(cfg.work_dir)
    params = SegmentationParams(run_seed=cfg.pipeline.run_seed)
    ctx = server.ApiContext(records=records, work_dir=cfg.work_dir, store=store, params=params)
    httpd = server.build_server(ctx, cfg.serve_host, cfg.serve_port, cfg.serve_static)
    host, port = httpd.server_address[:2]
    logger.info("serving %d cases on http://%s:%d", len(records), host, port)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        logger.info("shutting down")
    finally:
        httpd.server_close()
    return 0


# ---------------------------------------------------------------------------
# Entry point


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="JSON run configuration")
    sub.add_argument("--seed", type=int, default=None, help="override the run seed")
    sub.add_argument(
        "--mode", choices=["global", "strict"], default=None, help="override the balance mode"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctcad", description="seeded CT lesion segmentation, radiomics, and evaluation"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("phantom", help="generate the synthetic dataset"))
    p_segment = sub.add_parser("segment", help="segment seeded cases")
    _add_common(p_segment)
    p_segment.add_argument("cases", nargs="*", help="case ids (default: all)")
    _add_common(sub.add_parser("features", help="extract the feature matrix"))
    p_eval = sub.add_parser("evaluate", help="run leave-one-case-out evaluation")
    _add_common(p_eval)
    p_eval.add_argument(
        "--compare", action="store_true", help="run both reducers and compare them"
    )
    _add_common(sub.add_parser("serve", help="serve the HTTP annotation API"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    try:
        cfg = load_run_config(args.config, seed=args.seed, mode=args.mode)
        if args.command == "phantom":
            return cmd_phantom(cfg)
        if args.command == "segment":
            return cmd_segment(cfg, args.cases or None)
        if args.command == "features":
            return cmd_features(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, compare=args.compare)
        if args.command == "serve":
            return cmd_serve(cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except (OSError, ValueError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
