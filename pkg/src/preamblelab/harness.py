"""Seeded Monte Carlo engine: transmitter -> impairments -> receiver -> estimator.

Every trial draws from its own counter-based stream keyed by
``(base_seed, snr_index, trial_index)``.  Results are reduced in trial
order, so a run is a pure function of its configuration whatever the
worker count.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy.stats import binomtest

from . import chan, est, rx, seq, txgen
from .errors import ConfigError, NoPaths, NoPeak, OutOfBounds, PreambleLabError
from .txgen import HALF, N, PREAMBLE_LEN

log = logging.getLogger(__name__)

LEAD_SAMPLES = 1536
TRAIL_SAMPLES = 1024
BATCH = 1000


@dataclass
class ExperimentConfig:
    channel: str | chan.ChannelProfile = "AWGN"
    snr_grid_db: list[float] = field(default_factory=lambda: [10.0])
    # None draws per trial: m_int uniform on [-m_int_range, m_int_range],
    # f_frac uniform on (-0.5, 0.5], signaling uniform on [0, 510]
    m_int: int | None = None
    m_int_range: int = 10
    f_frac: float | None = None
    signaling: int | None = None
    trials: int = 10_000
    # stop a point once both signaling and IFO errors reach this count;
    # `trials` is then the cap
    min_errors: int | None = None
    base_seed: int = 0
    sample_interval_us: float = txgen.DEFAULT_TS_US
    timing_jitter: int = 100
    p_th_rel: float = est.DEFAULT_THRESHOLD_REL
    p_th_noise: float = est.DEFAULT_NOISE_FACTOR
    guard: int = est.DEFAULT_GUARD
    # 0 assumes the preamble is present; set >0 to count missed detections
    detect_threshold: float = 0.0
    refine_passes: int = 8
    # off: skip fine timing and channel MSE (SER/IFOER-only curves)
    channel_estimation: bool = True
    lfsr_taps: tuple[int, ...] = seq.DEFAULT_TAPS
    decimation: int = seq.DEFAULT_DECIMATION
    workers: int = 1
    record_wall_time: bool = False

    def validate(self) -> ExperimentConfig:
        if isinstance(self.channel, str):
            try:
                chan.get_profile(self.channel)
            except chan.UnknownProfile as exc:
                raise ConfigError(str(exc), key="channel") from None
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must list at least one SNR", key="snr_grid_db")
        if any(not math.isfinite(s) and s != math.inf for s in self.snr_grid_db):
            raise ConfigError("snr_grid_db entries must be numbers", key="snr_grid_db")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1", key="trials")
        if self.min_errors is not None and self.min_errors < 1:
            raise ConfigError("min_errors must be >= 1", key="min_errors")
        if self.m_int is not None and not -N // 2 <= self.m_int < N // 2:
            raise ConfigError("m_int must lie in [-512, 511]", key="m_int")
        if not 0 <= self.m_int_range < N // 2:
            raise ConfigError("m_int_range must lie in [0, 511]", key="m_int_range")
        if self.f_frac is not None and not -0.5 < self.f_frac <= 0.5:
            raise ConfigError("f_frac must lie in (-0.5, 0.5]", key="f_frac")
        if self.signaling is not None and not 0 <= self.signaling < seq.M:
            raise ConfigError("signaling must lie in [0, 510]", key="signaling")
        if not self.sample_interval_us > 0:
            raise ConfigError("sample_interval_us must be positive", key="sample_interval_us")
        if not 0 <= self.timing_jitter <= 512:
            raise ConfigError("timing_jitter must lie in [0, 512]", key="timing_jitter")
        if not self.p_th_rel > 0:
            raise ConfigError("p_th_rel must be positive", key="p_th_rel")
        if not self.p_th_noise >= 0:
            raise ConfigError("p_th_noise must be >= 0", key="p_th_noise")
        if self.guard < 0:
            raise ConfigError("guard must be >= 0", key="guard")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1", key="workers")
        if self.refine_passes < 1:
            raise ConfigError("refine_passes must be >= 1", key="refine_passes")
        try:
            seq.preamble_sequences(seq.LfsrSpec(9, tuple(self.lfsr_taps)), self.decimation)
        except (ValueError, PreambleLabError) as exc:
            raise ConfigError(f"bad sequence settings: {exc}", key="lfsr_taps") from None
        return self

    def profile(self) -> chan.ChannelProfile:
        if isinstance(self.channel, chan.ChannelProfile):
            return self.channel
        return chan.get_profile(self.channel)


@dataclass(frozen=True)
class MetricsRecord:
    snr_db: float
    trials_run: int
    ser: float
    ser_lo: float
    ser_hi: float
    ifoer: float
    ifoer_lo: float
    ifoer_hi: float
    timing_rmse_samples: float
    coarse_rmse_samples: float
    chan_mse: float
    chan_mse_perfect: float
    missed: int
    wall_time: float | None = None


@dataclass(frozen=True)
class _Context:
    cfg: ExperimentConfig
    seqs: seq.PreambleSequences
    channel: chan.DiscreteChannel


def _context(cfg: ExperimentConfig) -> _Context:
    seqs = seq.preamble_sequences(seq.LfsrSpec(9, tuple(cfg.lfsr_taps)), cfg.decimation)
    return _Context(cfg, seqs, chan.discretize(cfg.profile(), cfg.sample_interval_us))


def trial_rng(base_seed: int, snr_index: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([base_seed, snr_index, trial_index])))


def _embedded_truth(channel: chan.DiscreteChannel, offset: int, phase: float) -> np.ndarray:
    """Ground-truth CIR at the estimator's scale, taps shifted by ``offset``."""
    g = np.zeros(N, dtype=complex)
    idx = (np.arange(channel.length) + offset) % N
    np.add.at(g, idx, channel.cir * np.sqrt(N) * np.exp(1j * phase))
    return g


def _cir_at(stream, start, ffo, m_int, spectrum_tx):
    spectrum = rx.extract_and_transform(stream, rx.CoarseSync(start, ffo, 0.0))
    h = est.ls_estimate(rx.undo_ifo(spectrum, m_int), spectrum_tx)
    return est.to_cir(h, start)


def run_trial(ctx: _Context, snr_db: float, snr_index: int, trial_index: int) -> tuple:
    """One seeded trial.

    Returns ``(sig_err, ifo_err, timing_err, coarse_err, mse, mse_perfect)``;
    timing and MSE entries are NaN when the detector finds nothing.
    """
    cfg = ctx.cfg
    rng = trial_rng(cfg.base_seed, snr_index, trial_index)

    dphi = cfg.signaling if cfg.signaling is not None else int(rng.integers(seq.M))
    m_int = cfg.m_int if cfg.m_int is not None else int(rng.integers(-cfg.m_int_range, cfg.m_int_range + 1))
    f_frac = cfg.f_frac if cfg.f_frac is not None else float(0.5 - rng.random())
    jitter = int(rng.integers(-cfg.timing_jitter, cfg.timing_jitter + 1))
    cfo = chan.CfoSpec(m_int, f_frac)

    spectrum_tx, preamble = txgen.preamble_for(ctx.seqs, dphi)
    start = LEAD_SAMPLES + jitter
    total = LEAD_SAMPLES + cfg.timing_jitter + PREAMBLE_LEN + TRAIL_SAMPLES
    data = rng.standard_normal((2, total))
    stream = (data[0] + 1j * data[1]) / np.sqrt(2)
    stream[start : start + PREAMBLE_LEN] = preamble

    faded = chan.apply_cfo(chan.apply_multipath(stream, ctx.channel), cfo)
    power = float(np.mean(np.abs(faded[start : start + PREAMBLE_LEN]) ** 2))
    received = chan.add_awgn(faded, snr_db, rng, signal_power=power)

    mse_perfect = math.nan
    if cfg.channel_estimation:
        # perfect sync reference: true timing and CFO, known signaling
        cir = _cir_at(received, start, f_frac, m_int, spectrum_tx)
        truth = _embedded_truth(ctx.channel, 0, 2 * np.pi * cfo.total * (start + HALF) / N)
        mse_perfect = float(np.sum(np.abs(cir.taps - truth) ** 2) / N)

    try:
        report = rx.detect(received, ctx.seqs, threshold=cfg.detect_threshold)
    except NoPeak:
        return True, True, math.nan, math.nan, math.nan, mse_perfect

    # an IFO error is judged on the total CFO so that FFO wrap-around
    # (f_hat near -f, m_hat = m +/- 1) is not miscounted
    cfo_hat = report.m_int_hat + report.coarse.ffo_hat
    # (the total CFO is itself only defined modulo N)
    ifo_err = abs((cfo_hat - cfo.total + N / 2) % N - N / 2) >= 0.5
    sig_err = ifo_err or report.delta_phi_hat != dphi
    coarse_err = float(report.coarse.start_index - start)
    if not cfg.channel_estimation:
        return sig_err, ifo_err, math.nan, coarse_err, math.nan, mse_perfect

    # fine timing from the estimated CIR, using the decoded preamble
    known = txgen.build_spectrum(ctx.seqs.d_a, ctx.seqs.d_b, report.delta_phi_hat)
    window = report.coarse.start_index
    ffo = report.coarse.ffo_hat
    m_hat = report.m_int_hat
    # the estimator parks the window `guard` samples ahead of the first
    # path, so the frame-start estimate is window + shift + guard
    frame_start = window
    visited = {window}
    for _ in range(cfg.refine_passes):
        try:
            cir = _cir_at(received, window, ffo, m_hat, known)
            paths = est.detect_paths(cir, est.path_threshold(cir, cfg.p_th_rel, cfg.p_th_noise))
        except (NoPaths, OutOfBounds):
            break
        shift = est.timing_offset(paths, cfg.guard)
        frame_start = window + shift + cfg.guard
        if shift == 0 or not 0 <= window + shift <= received.size - PREAMBLE_LEN:
            break
        window += shift
        if window in visited:
            break
        visited.add(window)
    try:
        cir = _cir_at(received, window, ffo, m_hat, known)
    except OutOfBounds:
        cir = None

    if cir is not None:
        truth = _embedded_truth(ctx.channel, start - window, 2 * np.pi * cfo.total * (window + HALF) / N)
        mse = float(np.sum(np.abs(cir.taps - truth) ** 2) / N)
    else:
        mse = math.nan
    return (
        sig_err,
        ifo_err,
        float(frame_start - start),
        coarse_err,
        mse,
        mse_perfect,
    )


def _run_chunk(args) -> np.ndarray:
    ctx, snr_db, snr_index, first, count = args
    return np.array([run_trial(ctx, snr_db, snr_index, i) for i in range(first, first + count)], dtype=float)


def _run_range(ctx, snr_db, snr_index, first, count, pool) -> np.ndarray:
    if pool is None:
        return _run_chunk((ctx, snr_db, snr_index, first, count))
    workers = ctx.cfg.workers
    size = -(-count // workers)
    jobs = [
        (ctx, snr_db, snr_index, s, min(size, first + count - s))
        for s in range(first, first + count, size)
    ]
    return np.concatenate(list(pool.map(_run_chunk, jobs)))


def _wilson(k: int, n: int) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _rms(x: np.ndarray) -> float:
    x = x[np.isfinite(x)]
    return float(np.sqrt(np.mean(x**2))) if x.size else math.nan


def _mean(x: np.ndarray) -> float:
    x = x[np.isfinite(x)]
    return float(np.mean(x)) if x.size else math.nan


def _summarize(snr_db: float, rows: np.ndarray, wall: float | None) -> MetricsRecord:
    n = rows.shape[0]
    k_sig = int(rows[:, 0].sum())
    k_ifo = int(rows[:, 1].sum())
    return MetricsRecord(
        snr_db=float(snr_db),
        trials_run=n,
        ser=k_sig / n,
        ser_lo=_wilson(k_sig, n)[0],
        ser_hi=_wilson(k_sig, n)[1],
        ifoer=k_ifo / n,
        ifoer_lo=_wilson(k_ifo, n)[0],
        ifoer_hi=_wilson(k_ifo, n)[1],
        timing_rmse_samples=_rms(rows[:, 2]),
        coarse_rmse_samples=_rms(rows[:, 3]),
        chan_mse=_mean(rows[:, 4]),
        chan_mse_perfect=_mean(rows[:, 5]),
        missed=int(np.sum(~np.isfinite(rows[:, 3]))),
        wall_time=wall,
    )


def _point(ctx: _Context, snr_db: float, snr_index: int, pool) -> MetricsRecord:
    cfg = ctx.cfg
    t0 = time.perf_counter()
    if cfg.min_errors is None:
        rows = _run_range(ctx, snr_db, snr_index, 0, cfg.trials, pool)
    else:
        parts = []
        done = 0
        while done < cfg.trials:
            count = min(BATCH, cfg.trials - done)
            parts.append(_run_range(ctx, snr_db, snr_index, done, count, pool))
            done += count
            rows = np.concatenate(parts)
            reached = np.minimum(np.cumsum(rows[:, 0]), np.cumsum(rows[:, 1])) >= cfg.min_errors
            if reached.any():
                rows = rows[: int(np.argmax(reached)) + 1]
                break
    wall = time.perf_counter() - t0 if cfg.record_wall_time else None
    record = _summarize(snr_db, rows, wall)
    log.info("snr %.2f dB: %d trials, ser %.3g, ifoer %.3g", snr_db, record.trials_run, record.ser, record.ifoer)
    return record


def run_point(cfg: ExperimentConfig, snr_db: float, snr_index: int = 0) -> MetricsRecord:
    cfg.validate()
    ctx = _context(cfg)
    if cfg.workers == 1:
        return _point(ctx, snr_db, snr_index, None)
    with ProcessPoolExecutor(cfg.workers) as pool:
        return _point(ctx, snr_db, snr_index, pool)


def run_curve(cfg: ExperimentConfig) -> list[MetricsRecord]:
    """Run every grid SNR; records come back sorted by SNR."""
    cfg.validate()
    ctx = _context(cfg)
    # the SNR index keys the RNG, so it follows the configured grid order
    order = sorted(range(len(cfg.snr_grid_db)), key=lambda i: cfg.snr_grid_db[i])
    if cfg.workers == 1:
        records = [_point(ctx, cfg.snr_grid_db[i], i, None) for i in order]
    else:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = [_point(ctx, cfg.snr_grid_db[i], i, pool) for i in order]
    return records


def papr_survey(
    lfsr_taps: tuple[int, ...] = seq.DEFAULT_TAPS, decimation: int = seq.DEFAULT_DECIMATION
) -> np.ndarray:
    """PAPR in dB of the 2048-sample preamble for every signaling value."""
    seqs = seq.preamble_sequences(seq.LfsrSpec(9, tuple(lfsr_taps)), decimation)
    return np.array([txgen.papr_db(txgen.preamble_for(seqs, d)[1]) for d in range(seq.M)])


def config_fields() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **changes)


def record_dict(record: MetricsRecord) -> dict:
    return asdict(record)
