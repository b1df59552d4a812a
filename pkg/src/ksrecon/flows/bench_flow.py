"""Rate x seed x method sweep over a noisy phantom, run as a Prefect flow."""

import math
from pathlib import Path

from prefect import flow, get_run_logger, task
from prefect.cache_policies import NONE
from prefect.task_runners import ThreadPoolTaskRunner
from pydantic import BaseModel, Field

from ksrecon.metrics.report import MetricsReport, MetricsRow, build_report
from ksrecon.metrics.scoring import score_volume
from ksrecon.persistence.mask_store import load_mask, save_mask
from ksrecon.persistence.report_store import (
    write_aggregate,
    write_loss_traces,
    write_results,
    write_ttests,
)
from ksrecon.persistence.volume_store import load_real_volume, load_volume, save_real_volume, save_volume
from ksrecon.phantom.generator import (
    add_noise,
    default_phantom_spec,
    gen_phantom,
    gen_sensitivities,
    simulate_kspace,
)
from ksrecon.sampling.poisson import gen_poisson_mask
from ksrecon.sraki.config import Method, ReconConfig
from ksrecon.sraki.pipeline import coil_combine, reconstruct


class BenchConfig(BaseModel):
    out_dir: str
    rates: list[float] = Field(default_factory=lambda: [2.0, 3.0, 4.0, 5.0], min_length=1)
    seeds: int = Field(default=3, ge=1)
    methods: list[Method] = Field(
        default_factory=lambda: [Method.SPIRIT, Method.L1SPIRIT, Method.SRAKI], min_length=1
    )
    dims: tuple[int, int, int] = (64, 64, 32)
    coils: int = Field(default=8, ge=1)
    snr_db: float | None = 15.0
    acs: tuple[int, int] = (40, 10)
    calib_iters: int = Field(default=1000, ge=1)
    iters: int | None = Field(default=None, ge=1)


class BenchJob(BaseModel):
    method: Method
    rate: float
    seed: int
    kspace: str
    mask: str
    reference: str
    job_dir: str
    calib_iters: int
    iters: int | None = None


@task(name="Simulate phantom k-space", cache_policy=NONE)
def simulate_task(config: BenchConfig) -> dict[str, str]:
    """Clean reference image plus one noisy k-space volume per seed"""
    logger = get_run_logger()
    root = Path(config.out_dir) / "phantom"
    spec = default_phantom_spec(config.dims, 0)
    image = gen_phantom(spec)
    maps = gen_sensitivities(config.coils, config.dims, 0)
    clean = simulate_kspace(image, maps)
    paths = {"reference": str(save_real_volume(root / "reference", coil_combine(clean))[1])}
    for seed in range(config.seeds):
        snr = math.inf if config.snr_db is None else config.snr_db
        noisy = add_noise(clean, snr, seed + 1)
        paths[f"kspace{seed}"] = str(save_volume(root / f"kspace_seed{seed}", noisy)[0])
    logger.info(f"Simulated {config.seeds} noisy phantom volume(s) at {config.dims}")
    return paths


@task(name="Generate sampling mask", cache_policy=NONE)
def mask_task(config: BenchConfig, rate: float, seed: int) -> str:
    _, ny, nz = config.dims
    mask = gen_poisson_mask(ny, nz, rate, config.acs, seed)
    return str(save_mask(Path(config.out_dir) / "masks" / f"R{rate:g}_seed{seed}.msk", mask))


@task(name="Reconstruct and score", cache_policy=NONE)
def recon_task(job: BenchJob) -> MetricsRow:
    logger = get_run_logger()
    label = f"{job.method.value} R={job.rate:g} seed={job.seed}"
    try:
        vol = load_volume(job.kspace)
        mask = load_mask(job.mask)
        ref = load_real_volume(job.reference)
        config = ReconConfig(
            method=job.method, iters=job.iters, calib_iters=job.calib_iters, seed=job.seed
        )
        result = reconstruct(vol, mask, config, max_workers=1)
        job_dir = Path(job.job_dir)
        save_real_volume(job_dir / "recon", result.image)
        write_loss_traces(job_dir / "losses.csv", result.traces)
        spec = default_phantom_spec(vol.dims, 0)
        error, sharpness = score_volume(result.image, ref, spec)
    except Exception as e:
        logger.error(f"Job {label} failed: {type(e).__name__}: {e}")
        raise
    logger.info(f"Job {label}: nmse {error:.4e}, sharpness {sharpness:.4f}, {result.runtime_s:.1f}s")
    return MetricsRow(
        method=job.method.value,
        rate=job.rate,
        seed=job.seed,
        nmse=error,
        sharpness_rca=sharpness,
        runtime_s=result.runtime_s,
    )


@flow(name="ksrecon-bench")
def bench_flow(config: BenchConfig) -> MetricsReport:
    logger = get_run_logger()
    root = Path(config.out_dir)
    volumes = simulate_task(config)
    mask_futures = {
        (rate, seed): mask_task.submit(config, rate, seed)
        for rate in config.rates
        for seed in range(config.seeds)
    }
    jobs = [
        BenchJob(
            method=method,
            rate=rate,
            seed=seed,
            kspace=volumes[f"kspace{seed}"],
            mask=mask_futures[(rate, seed)].result(),
            reference=volumes["reference"],
            job_dir=str(root / "jobs" / f"R{rate:g}" / f"seed{seed}" / method.value),
            calib_iters=config.calib_iters,
            iters=config.iters,
        )
        for rate in config.rates
        for seed in range(config.seeds)
        for method in config.methods
    ]
    logger.info(f"Submitting {len(jobs)} reconstruction jobs")
    futures = [recon_task.submit(job) for job in jobs]
    rows = [f.result() for f in futures]
    report = build_report(rows)

    write_results(root / "results.csv", sorted(rows, key=lambda r: (r.method, r.rate, r.seed)))
    write_aggregate(root / "aggregate.csv", report.aggregates)
    write_ttests(root / "ttest.csv", report.ttests)
    logger.info(f"Bench finished: {len(rows)} jobs aggregated into {len(report.aggregates)} rows")
    return report


def run_bench(config: BenchConfig, workers: int) -> tuple[MetricsReport, list[Path]]:
    """Run the flow with a thread pool of ``workers`` task slots; returns the report and CSV paths"""
    runner = ThreadPoolTaskRunner(max_workers=max(workers, 1))
    report = bench_flow.with_options(task_runner=runner)(config)
    root = Path(config.out_dir)
    return report, [root / "results.csv", root / "aggregate.csv", root / "ttest.csv"]
