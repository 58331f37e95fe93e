"""Monte Carlo engine for N-step products and the limit-theorem experiments.

All product folding happens in the weight-adapted basis in double
precision, chunked over replicas.  Reproducibility contract: the master
seed is split into one child stream per chunk through numpy's
SeedSequence spawn mechanism, chunk boundaries are fixed by the config
(never by the worker count), and partial results merge in chunk order, so
identical configs give bit-identical estimates no matter how many workers
run.

Recentering modes: none, right translation by -N*X (mean recentering), or
the variable version -N*X * -D_sqrt(N) Y that aims the window at density
point Y.  The gradually truncated walk multiplies increments drawn from a
schedule of clipped lifts of the law and projects back; for compactly
supported laws and large N its sample paths coincide with the plain walk
stream for stream.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .filtration import WeightFiltration
from .measures import Measure

# -- results -------------------------------------------------------------------


@dataclass
class ExperimentResult:
    experiment: str
    n_steps: int
    n_replicas: int
    estimate: float
    stderr: float
    target: Optional[float] = None
    seed: int = 0
    config_digest: str = ""
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def csv_row(self) -> dict:
        return {
            "experiment": self.experiment,
            "N": self.n_steps,
            "M": self.n_replicas,
            "estimate": repr(self.estimate),
            "stderr": repr(self.stderr),
            "target": "" if self.target is None else repr(self.target),
            "seed": self.seed,
            "config_digest": self.config_digest,
        }

    def within(self, rel_tol: float, sigmas: float = 3.0) -> bool:
        """Noise-aware acceptance rule: |estimate - target| within
        max(sigmas * stderr, rel_tol * |target|)."""
        if self.target is None:
            raise ValueError("no target recorded")
        allow = max(sigmas * self.stderr, rel_tol * abs(self.target))
        return abs(self.estimate - self.target) <= allow


# -- configuration ----------------------------------------------------------------


@dataclass
class WalkConfig:
    filtration: WeightFiltration
    measure: Measure
    n_steps: int
    n_replicas: int
    seed: int = 0
    recenter: str = "none"  # none | mean | variable
    variable_shift: Optional[Sequence[float]] = None  # Y, original coordinates
    chunk_size: int = 250_000
    workers: int = 1

    def __post_init__(self):
        if self.n_steps < 1 or self.n_replicas < 1:
            raise ValueError("n_steps and n_replicas must be >= 1")
        if self.recenter not in ("none", "mean", "variable"):
            raise ValueError(f"unknown recentering mode {self.recenter!r}")
        if self.recenter == "variable" and self.variable_shift is None:
            raise ValueError("variable recentering needs a shift point Y")

    @property
    def algebra(self):
        return self.filtration.algebra

    def chunk_plan(self) -> list[int]:
        sizes = []
        left = self.n_replicas
        while left > 0:
            m = min(self.chunk_size, left)
            sizes.append(m)
            left -= m
        return sizes

    def chunk_streams(self) -> list[np.random.Generator]:
        ss = np.random.SeedSequence(self.seed)
        return [np.random.default_rng(child) for child in ss.spawn(len(self.chunk_plan()))]


def drift_vector_adapted(cfg: WalkConfig) -> np.ndarray:
    """X = E[x^(1)] in adapted coordinates (the layer-1 mean)."""
    wf = cfg.filtration
    mean_ad = wf.to_adapted_float(cfg.measure.mean_float())
    return np.where(wf.layer_mask(1), mean_ad, 0.0)


def recentering_vector_adapted(cfg: WalkConfig) -> np.ndarray:
    """The right-translation applied to every product, adapted coordinates."""
    wf = cfg.filtration
    if cfg.recenter == "none":
        return np.zeros(wf.algebra.dim)
    shift = -cfg.n_steps * drift_vector_adapted(cfg)
    if cfg.recenter == "mean":
        return shift
    y_ad = wf.to_adapted_float(np.asarray(cfg.variable_shift, dtype=float))
    scale = np.power(float(cfg.n_steps), wf._weights_arr / 2.0)
    prod = wf.adapted_algebra.product_map()
    return prod(shift[None, :], (-scale * y_ad)[None, :])[0]


# -- core streams --------------------------------------------------------------------


def _fold_chunk(cfg: WalkConfig, rng: np.random.Generator, m: int,
                product: Callable, shift: np.ndarray) -> np.ndarray:
    wf = cfg.filtration
    s = np.zeros((m, wf.algebra.dim))
    for _ in range(cfg.n_steps):
        x = wf.to_adapted_float(cfg.measure.sample(rng, m))
        s = product(s, x)
    if np.any(shift):
        s = product(s, shift[None, :])
    return s


def product_stream(cfg: WalkConfig) -> Iterator[np.ndarray]:
    """Chunks of recentered product samples in adapted coordinates."""
    product = cfg.filtration.adapted_algebra.product_map()
    shift = recentering_vector_adapted(cfg)
    plan = cfg.chunk_plan()
    streams = cfg.chunk_streams()
    if cfg.workers <= 1:
        for m, rng in zip(plan, streams):
            yield _fold_chunk(cfg, rng, m, product, shift)
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [
                pool.submit(_fold_chunk, cfg, rng, m, product, shift)
                for m, rng in zip(plan, streams)
            ]
            for fut in futures:  # chunk order, not completion order
                yield fut.result()


def run_products(cfg: WalkConfig) -> np.ndarray:
    """All recentered product samples, original coordinates (small M only)."""
    chunks = [cfg.filtration.from_adapted_float(c) for c in product_stream(cfg)]
    return np.concatenate(chunks, axis=0)


# -- gradual truncation ----------------------------------------------------------------


def truncation_schedule(n_steps: int, gamma0: float, step: int) -> list[tuple[int, int]]:
    """[(level_a, count_a)] with exponents gamma_a = gamma0/(32 s)^a, vanishing
    at a = s so that the last level is exactly N."""
    if not 0 < gamma0 < 1:
        raise ValueError("gamma0 must lie in (0, 1)")
    levels = []
    prev_edge = 0
    for a in range(1, step + 1):
        gamma_a = gamma0 * (32 * step) ** (-a) if a < step else 0.0
        edge = int(math.floor(n_steps ** (1.0 - gamma_a)))
        count = edge - prev_edge
        if count > 0:
            levels.append((edge, count))
        prev_edge = edge
    total = sum(c for _, c in levels)
    if total != n_steps:
        raise RuntimeError("schedule does not cover all steps")
    return levels


@dataclass
class LiftedTruncation:
    """Layer clipping of the drift-lifted law, on adapted base coordinates.

    A lifted increment is the pair (x, t=1): the extra coordinate is
    central, carries weight 2, and the lifted first layer is x^(1) - t X.
    Clipping therefore acts on (adapted x, t) directly; the base part of a
    product of unclipped increments coincides bit for bit with the plain
    walk's fold.
    """

    filtration: WeightFiltration
    level: int
    c_layer1: np.ndarray   # recentering constant for the lifted first layer
    drift_layer1: np.ndarray
    trivial: bool          # zero drift: the extension is the identity

    def clip(self, coords: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Apply the layer rule to (M, d) adapted coords with lift weight t.

        All clip decisions use the original layers (the rule acts on each
        layer of the decomposed element independently); writes happen
        afterwards, lift weight first, since the first layer of a clipped
        element is reconstructed as t*X + c.
        """
        wf = self.filtration
        out = np.array(coords, copy=True)
        t_out = np.array(t, copy=True)
        altered = np.zeros(coords.shape[0], dtype=bool)
        bads: dict[int, np.ndarray] = {}
        for b in range(1, wf.max_weight + 1):
            idx = np.flatnonzero(wf.layer_mask(b))
            if b == 1 and not self.trivial:
                block = coords[:, idx] - np.asarray(t)[:, None] * self.drift_layer1
                norms = np.linalg.norm(block, axis=-1)
            elif b == 2 and not self.trivial:
                sq = np.asarray(t) ** 2
                if idx.size:
                    sq = sq + (coords[:, idx] ** 2).sum(axis=-1)
                norms = np.sqrt(sq)
            elif idx.size:
                norms = np.linalg.norm(coords[:, idx], axis=-1)
            else:
                continue
            bad = norms > float(self.level) ** (b / 2.0)
            if bad.any():
                bads[b] = bad
                altered |= bad
        if not self.trivial and 2 in bads:
            t_out[bads[2]] = 0.0
        for b, bad in bads.items():
            idx = np.flatnonzero(wf.layer_mask(b))
            if b == 1:
                if self.trivial:
                    out[np.ix_(bad, idx)] = self.c_layer1
                else:
                    out[np.ix_(bad, idx)] = t_out[bad, None] * self.drift_layer1 + self.c_layer1
            elif idx.size:
                out[np.ix_(bad, idx)] = 0.0
        return out, t_out, altered


def lifted_truncation(cfg: WalkConfig, level: int, mc_samples: int = 100_000,
                      seed_salt: int = 977) -> LiftedTruncation:
    """Truncation of the lifted law at the given level.

    The recentering constant follows the same conditional-mean formula as
    the plain truncation, applied to the lifted first layer x^(1) - X;
    estimated by Monte Carlo on a dedicated deterministic stream.
    """
    wf = cfg.filtration
    x_full = drift_vector_adapted(cfg)
    idx1 = np.flatnonzero(wf.layer_mask(1))
    x1 = x_full[idx1]
    trivial = not np.any(x1)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, seed_salt, level]))
    xs = wf.to_adapted_float(cfg.measure.sample(rng, mc_samples))
    layer1 = xs[:, idx1] - (0.0 if trivial else x1)
    norms = np.linalg.norm(layer1, axis=1)
    bad = norms > math.sqrt(level)
    p = float(bad.mean())
    if p == 0.0:
        c = np.zeros(idx1.size)
    else:
        c = -layer1[~bad].sum(axis=0) / mc_samples / p
    return LiftedTruncation(filtration=wf, level=level, c_layer1=c,
                            drift_layer1=x1, trivial=trivial)


def gradual_truncation_stream(cfg: WalkConfig, gamma0: float) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Chunks of (samples, altered counts) for the gradually truncated walk.

    Yields samples in adapted base coordinates (already projected back from
    the drift extension, which for the base part is a no-op) and, per
    chunk, the number of increments the clip actually changed.  Uses the
    same per-chunk rng layout as the plain stream: with a compactly
    supported law and N past the squared support radius the two streams
    produce identical paths, bit for bit.
    """
    wf = cfg.filtration
    schedule = truncation_schedule(cfg.n_steps, gamma0, wf.algebra.step)
    truncs = [lifted_truncation(cfg, level) for level, _ in schedule]
    product = wf.adapted_algebra.product_map()
    plan = cfg.chunk_plan()
    streams = cfg.chunk_streams()
    for m, rng in zip(plan, streams):
        s = np.zeros((m, wf.algebra.dim))
        altered_count = 0
        ones = np.ones(m)
        for (level, count), trunc in zip(schedule, truncs):
            for _ in range(count):
                raw = wf.to_adapted_float(cfg.measure.sample(rng, m))
                clipped, _t, altered = trunc.clip(raw, ones)
                altered_count += int(altered.sum())
                s = product(s, clipped)
        yield s, np.array([altered_count])


# -- deviation sets -----------------------------------------------------------------


@dataclass(frozen=True)
class DeviationSpec:
    """Moderate-deviation boxes used to pick translation points.

    kind 'polynomial': ||x^(i)|| <= N^(i/2 + slack/s) per layer.
    kind 'polynomial-drift': ||x^(i)|| <= N^(i/2 + slack) per layer, up to
        sliding along the drift direction by |t| <= N^(1 + slack).
    kind 'loglaw': ||x^(i)|| <= slack * (N log N)^(i/2).
    """

    kind: str
    slack: float

    def contains(self, filtration: WeightFiltration, n_steps: int, x: Sequence[float],
                 adapted: bool = False) -> bool:
        wf = filtration
        c = np.asarray(x, dtype=float)
        if not adapted:
            c = wf.to_adapted_float(c)
        if self.kind == "polynomial-drift":
            x_mu = wf.to_adapted_float(np.array([float(v) for v in wf.drift_in_supplement]))
            nrm2 = float(x_mu @ x_mu)
            if nrm2 > 0:
                t = float(c @ x_mu) / nrm2
                bound = n_steps ** (1.0 + self.slack)
                t = min(max(t, -bound), bound)
                c = c - t * x_mu
        for b in range(1, wf.max_weight + 1):
            idx = wf.layer_indices(b)
            if not idx:
                continue
            norm = float(np.linalg.norm(c[idx]))
            if self.kind == "polynomial":
                ok = norm <= n_steps ** (b / 2.0 + self.slack / wf.algebra.step)
            elif self.kind == "polynomial-drift":
                ok = norm <= n_steps ** (b / 2.0 + self.slack)
            elif self.kind == "loglaw":
                ok = norm <= self.slack * (n_steps * math.log(n_steps)) ** (b / 2.0)
            else:
                raise ValueError(f"unknown deviation kind {self.kind!r}")
            if not ok:
                return False
        return True


def loglaw_boundary_point(filtration: WeightFiltration, n_steps: int, c: float,
                          layers: Optional[Iterable[int]] = None) -> np.ndarray:
    """A point on the boundary of the loglaw window, original coordinates.

    Each requested layer gets norm exactly c (N log N)^(i/2) along its first
    adapted direction.
    """
    wf = filtration
    base = n_steps * math.log(n_steps)
    coords = np.zeros(wf.algebra.dim)
    wanted = set(layers) if layers is not None else {b for b in range(1, wf.max_weight + 1)}
    for b in sorted(wanted):
        idx = wf.layer_indices(b)
        if idx:
            coords[idx[0]] = c * base ** (b / 2.0)
    return wf.from_adapted_float(coords)


# -- experiments ------------------------------------------------------------------------


def box_indicator(box: Sequence[tuple[float, float]]) -> Callable[[np.ndarray], np.ndarray]:
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])

    def inside(x: np.ndarray) -> np.ndarray:
        return ((x >= lo) & (x <= hi)).all(axis=-1)

    return inside


def box_volume(box: Sequence[tuple[float, float]]) -> float:
    v = 1.0
    for lo, hi in box:
        v *= hi - lo
    return v


def llt_box_experiment(cfg: WalkConfig, box: Sequence[tuple[float, float]],
                       config_digest: str = "") -> ExperimentResult:
    """N^(hom_dim/2) times the box hit-rate of the recentered product.

    The box lives in original coordinates.  Zero hits are flagged as a
    low-power result, not an error.
    """
    t0 = time.time()
    wf = cfg.filtration
    inside = box_indicator(box)
    hits = 0
    for chunk in product_stream(cfg):
        hits += int(inside(wf.from_adapted_float(chunk)).sum())
    m = cfg.n_replicas
    p = hits / m
    scale = float(cfg.n_steps) ** (wf.hom_dim / 2.0)
    est = scale * p
    se = scale * math.sqrt(max(p * (1 - p), 1e-300) / m)
    return ExperimentResult(
        experiment="llt_box", n_steps=cfg.n_steps, n_replicas=m,
        estimate=est, stderr=se, seed=cfg.seed, config_digest=config_digest,
        wall_time=time.time() - t0,
        extra={
            "hits": hits,
            "box_volume": box_volume(box),
            "low_power": hits < 10,
            "per_volume": est / box_volume(box),
            "per_volume_stderr": se / box_volume(box),
        },
    )


def clt_experiment(cfg: WalkConfig, histogram_bins: int = 0,
                   config_digest: str = "") -> dict:
    """Rescale products by D_(1/sqrt N) and report per-layer moments.

    Returns empirical mean and covariance in adapted coordinates, the
    per-layer covariance blocks, and optional per-coordinate histograms.
    """
    t0 = time.time()
    wf = cfg.filtration
    d = wf.algebra.dim
    scale = np.power(float(cfg.n_steps), -wf._weights_arr / 2.0)
    total = np.zeros(d)
    total2 = np.zeros((d, d))
    count = 0
    edges = np.linspace(-5.0, 5.0, histogram_bins + 1) if histogram_bins else None
    hists = np.zeros((d, histogram_bins), dtype=np.int64) if histogram_bins else None
    for chunk in product_stream(cfg):
        z = chunk * scale
        total += z.sum(axis=0)
        total2 += z.T @ z
        count += z.shape[0]
        if histogram_bins:
            for j in range(d):
                hists[j] += np.histogram(z[:, j], bins=edges)[0]
    mean = total / count
    cov = total2 / count - np.outer(mean, mean)
    layers = {}
    for b in range(1, wf.max_weight + 1):
        idx = wf.layer_indices(b)
        if idx:
            layers[b] = cov[np.ix_(idx, idx)].tolist()
    out = {
        "experiment": "clt",
        "N": cfg.n_steps,
        "M": cfg.n_replicas,
        "mean_adapted": mean.tolist(),
        "cov_adapted": cov.tolist(),
        "layer_cov": layers,
        "moment_stderr": float(1.0 / math.sqrt(count)),
        "seed": cfg.seed,
        "config_digest": config_digest,
        "wall_time": time.time() - t0,
    }
    if histogram_bins:
        out["histogram_edges"] = edges.tolist()
        out["histograms"] = hists.tolist()
    return out


def ratio_experiment(cfg: WalkConfig, box: Sequence[tuple[float, float]],
                     nu_samples_adapted: np.ndarray,
                     g: Optional[Sequence[float]] = None,
                     h: Optional[Sequence[float]] = None,
                     config_digest: str = "") -> ExperimentResult:
    """Ratio of walk and limit-law masses of a common translated box.

    Numerator: P(g * S_N * h in box) from the walk.  Denominator: the same
    probability with S_N replaced by D_sqrt(N) of a limit sample.  The
    standard error combines both sides by the delta method.
    """
    t0 = time.time()
    wf = cfg.filtration
    prod = wf.adapted_algebra.product_map()
    inside = box_indicator(box)
    g_ad = None if g is None else wf.to_adapted_float(np.asarray(g, dtype=float))[None, :]
    h_ad = None if h is None else wf.to_adapted_float(np.asarray(h, dtype=float))[None, :]

    def translate(z: np.ndarray) -> np.ndarray:
        if g_ad is not None:
            z = prod(np.broadcast_to(g_ad, z.shape), z)
        if h_ad is not None:
            z = prod(z, np.broadcast_to(h_ad, z.shape))
        return z

    hits_walk = 0
    for chunk in product_stream(cfg):
        hits_walk += int(inside(wf.from_adapted_float(translate(chunk))).sum())
    m_walk = cfg.n_replicas
    p_walk = hits_walk / m_walk

    dil = np.power(float(cfg.n_steps), wf._weights_arr / 2.0)
    scaled = nu_samples_adapted * dil
    hits_nu = int(inside(wf.from_adapted_float(translate(scaled))).sum())
    m_nu = scaled.shape[0]
    p_nu = hits_nu / m_nu

    if hits_nu == 0:
        ratio, se = math.inf, math.inf
    else:
        ratio = p_walk / p_nu
        rel = math.sqrt(
            max(1 - p_walk, 0.0) / max(hits_walk, 1) + max(1 - p_nu, 0.0) / hits_nu
        )
        se = ratio * rel
    return ExperimentResult(
        experiment="ratio", n_steps=cfg.n_steps, n_replicas=m_walk,
        estimate=ratio, stderr=se, target=1.0, seed=cfg.seed,
        config_digest=config_digest, wall_time=time.time() - t0,
        extra={"hits_walk": hits_walk, "hits_nu": hits_nu, "nu_samples": m_nu,
               "p_walk": p_walk, "p_nu": p_nu},
    )


def lipschitz_family(filtration: WeightFiltration, count: int, seed: int) -> list[tuple[str, Callable]]:
    """Bounded 1-Lipschitz test functions: clamped distances and sinusoids."""
    rng = np.random.default_rng(seed)
    d = filtration.algebra.dim
    fams: list[tuple[str, Callable]] = []
    for i in range(count):
        if i % 2 == 0:
            p = rng.uniform(-2, 2, d)

            def f(x, p=p):
                return np.minimum(1.0, np.linalg.norm(x - p, axis=-1))

            fams.append((f"clamp_dist_{i}", f))
        else:
            theta = rng.standard_normal(d)
            theta /= np.linalg.norm(theta)

            def f(x, theta=theta):
                return np.sin(2 * np.pi * (x @ theta)) / (2 * np.pi)

            fams.append((f"sinusoid_{i}", f))
    return fams


def pixel_experiment(cfg: WalkConfig, nu_samples_adapted: np.ndarray,
                     tests: Optional[list[tuple[str, Callable]]] = None,
                     config_digest: str = "") -> dict:
    """Gap between walk and dilated-limit expectations of Lipschitz tests.

    The limit side evaluates F on D_sqrt(N)(limit sample) * N X, matching
    the walk without recentering.
    """
    t0 = time.time()
    wf = cfg.filtration
    if cfg.recenter != "none":
        raise ValueError("pixel comparison expects the raw walk (recenter='none')")
    if tests is None:
        tests = lipschitz_family(wf, 6, seed=cfg.seed + 101)

    sums = np.zeros(len(tests))
    count = 0
    for chunk in product_stream(cfg):
        x = wf.from_adapted_float(chunk)
        for j, (_, f) in enumerate(tests):
            sums[j] += float(f(x).sum())
        count += chunk.shape[0]
    walk_means = sums / count

    dil = np.power(float(cfg.n_steps), wf._weights_arr / 2.0)
    prod = wf.adapted_algebra.product_map()
    shift = cfg.n_steps * drift_vector_adapted(cfg)
    z = nu_samples_adapted * dil
    if np.any(shift):
        z = prod(z, shift[None, :])
    znat = wf.from_adapted_float(z)
    nu_means = np.array([float(f(znat).mean()) for _, f in tests])

    gaps = np.abs(walk_means - nu_means)
    noise = 1.0 / math.sqrt(count) + 1.0 / math.sqrt(z.shape[0])
    return {
        "experiment": "pixel",
        "N": cfg.n_steps,
        "M": cfg.n_replicas,
        "tests": [name for name, _ in tests],
        "walk_means": walk_means.tolist(),
        "limit_means": nu_means.tolist(),
        "gaps": gaps.tolist(),
        "max_gap": float(gaps.max()),
        "noise_scale": noise,
        "seed": cfg.seed,
        "config_digest": config_digest,
        "wall_time": time.time() - t0,
    }


def theta_experiment(cfg: WalkConfig, gamma0: float, config_digest: str = "") -> dict:
    """Sample the gradually truncated product and report the clip rate."""
    t0 = time.time()
    wf = cfg.filtration
    total = np.zeros(wf.algebra.dim)
    total2 = np.zeros(wf.algebra.dim)
    altered = 0
    count = 0
    for samples, alt in gradual_truncation_stream(cfg, gamma0):
        ad = wf.to_adapted_float(samples)
        total += ad.sum(axis=0)
        total2 += (ad**2).sum(axis=0)
        altered += int(alt[0])
        count += samples.shape[0]
    mean = total / count
    var = total2 / count - mean**2
    return {
        "experiment": "theta",
        "N": cfg.n_steps,
        "M": cfg.n_replicas,
        "gamma0": gamma0,
        "schedule": truncation_schedule(cfg.n_steps, gamma0, wf.algebra.step),
        "altered_fraction": altered / (count * cfg.n_steps),
        "mean_adapted": mean.tolist(),
        "var_adapted": var.tolist(),
        "seed": cfg.seed,
        "config_digest": config_digest,
        "wall_time": time.time() - t0,
    }
