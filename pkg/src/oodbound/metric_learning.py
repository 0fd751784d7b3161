"""Linear projection learning with large-margin cosine or triplet objectives.

The projection is a single bias-free linear map trained with Adam so that
same-class embeddings land close together on the unit sphere and different
classes land far apart. Both losses operate on L2-normalized projections and
come with hand-derived gradients; `gradient_check` verifies those against
central finite differences.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError, NumericError

logger = logging.getLogger(__name__)

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class Projection:
    """A bias-free linear map stored as a (dim_out, dim_in) weight matrix."""

    weights: np.ndarray
    dim_in: int
    dim_out: int

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=np.float64)
        if W.shape != (self.dim_out, self.dim_in):
            raise DataError(f"weights shape {W.shape} != ({self.dim_out}, {self.dim_in})")
        if not np.isfinite(W).all():
            raise DataError("projection weights must be finite")
        if self.dim_out < 2:
            raise DataError("projection output dimension must be >= 2")
        W = W.copy()
        W.setflags(write=False)
        object.__setattr__(self, "weights", W)


@dataclass(frozen=True)
class LmclHead:
    """Per-class direction vectors plus the cosine-softmax scale and margin."""

    class_directions: np.ndarray
    scale: float
    margin: float

    def __post_init__(self):
        V = np.asarray(self.class_directions, dtype=np.float64)
        if V.ndim != 2 or V.shape[0] < 1:
            raise DataError("class_directions must be a (k, dim_out) matrix")
        if not np.isfinite(V).all():
            raise DataError("class_directions must be finite")
        if np.any(np.linalg.norm(V, axis=1) == 0.0):
            raise DataError("class_directions rows must be nonzero")
        V = V.copy()
        V.setflags(write=False)
        object.__setattr__(self, "class_directions", V)
        if self.scale <= 0:
            raise DataError("scale must be positive")
        if self.margin < 0:
            raise DataError("margin must be non-negative")


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "lmcl"
    learning_rate: float = 1e-3
    epochs: int = 30
    batch_size: int = 64
    seed: int = 0
    lmcl_scale: float = 64.0
    lmcl_margin: float = 0.35
    triplet_margin: float = 1.0
    dim_out: int | None = None

    def __post_init__(self):
        if self.loss not in ("lmcl", "triplet"):
            raise DataError(f"loss must be 'lmcl' or 'triplet', got {self.loss!r}")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.batch_size < 2:
            raise DataError("batch_size must be >= 2")
        if self.seed < 0:
            raise DataError("seed must be non-negative")
        if self.lmcl_scale <= 0:
            raise DataError("lmcl_scale must be positive")
        if self.lmcl_margin < 0:
            raise DataError("lmcl_margin must be non-negative")
        if self.triplet_margin <= 0:
            raise DataError("triplet_margin must be positive")
        if self.dim_out is not None and self.dim_out < 2:
            raise DataError("dim_out must be >= 2 when given")


@dataclass(frozen=True)
class TrainReport:
    loss_curve: tuple[float, ...]
    final_loss: float
    epochs_run: int


def init_params(
    dim_in: int,
    dim_out: int,
    k: int,
    seed: int,
    scale: float = 64.0,
    margin: float = 0.35,
) -> tuple[Projection, LmclHead]:
    """Seeded uniform init for the projection, unit-row init for the head.

    Weights are drawn from [-a, a] with a = sqrt(6 / (dim_in + dim_out));
    class directions are normalized Gaussian rows.
    """
    if dim_in < 1 or dim_out < 2 or k < 1:
        raise DataError(f"bad shapes: dim_in={dim_in}, dim_out={dim_out}, k={k}")
    rng = np.random.default_rng(int(seed))
    a = np.sqrt(6.0 / (dim_in + dim_out))
    W = rng.uniform(-a, a, size=(dim_out, dim_in))
    V = rng.standard_normal((k, dim_out))
    V = V / np.linalg.norm(V, axis=1)[:, None]
    proj = Projection(weights=W, dim_in=dim_in, dim_out=dim_out)
    head = LmclHead(class_directions=V, scale=scale, margin=margin)
    return proj, head


def apply(proj: Projection, x: np.ndarray) -> np.ndarray:
    """Project a vector (or a stack of row vectors). Raw output, not normalized."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        if x.shape[0] != proj.dim_in:
            raise DataError(f"input dimension {x.shape[0]} != projection dim_in {proj.dim_in}")
        return proj.weights @ x
    if x.ndim == 2:
        if x.shape[1] != proj.dim_in:
            raise DataError(f"input dimension {x.shape[1]} != projection dim_in {proj.dim_in}")
        return x @ proj.weights.T
    raise DataError(f"expected a 1-D or 2-D array, got ndim={x.ndim}")


def _project_normalized(X: np.ndarray, proj: Projection) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (Z, row_norms, U) where U are unit rows of Z = X W^T."""
    Z = X @ proj.weights.T
    zn = np.linalg.norm(Z, axis=1)
    bad = np.nonzero(zn == 0.0)[0]
    if bad.size:
        raise NumericError(
            f"projected vector at batch index {int(bad[0])} has zero norm; "
            "projection is degenerate"
        )
    return Z, zn, Z / zn[:, None]


def _check_batch(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("batch must be a nonempty (n, dim_in) array")
    if y.shape != (X.shape[0],):
        raise DataError("need exactly one class index per batch row")
    return X, y


def lmcl_loss(
    X: np.ndarray, y: np.ndarray, proj: Projection, head: LmclHead
) -> tuple[float, np.ndarray, np.ndarray]:
    """Large-margin cosine loss and analytic gradients.

    Each projected input is L2-normalized and scored against every class
    direction by cosine similarity; the true class's cosine is reduced by the
    margin before the scaled softmax. Returns (mean loss, d/d weights,
    d/d class_directions); both gradients flow through the normalizations.
    """
    X, y = _check_batch(X, y)
    V = head.class_directions
    k = V.shape[0]
    if np.any(y < 0) or np.any(y >= k):
        raise DataError(f"class index out of range for k={k}")
    if X.shape[1] != proj.dim_in:
        raise DataError(f"batch dimension {X.shape[1]} != projection dim_in {proj.dim_in}")

    n = X.shape[0]
    Z, zn, U = _project_normalized(X, proj)
    vn = np.linalg.norm(V, axis=1)
    Vh = V / vn[:, None]

    C = U @ Vh.T
    logits = head.scale * C
    rows = np.arange(n)
    logits[rows, y] = head.scale * (C[rows, y] - head.margin)

    shift = logits - logits.max(axis=1, keepdims=True)
    expl = np.exp(shift)
    denom = expl.sum(axis=1)
    log_probs = shift - np.log(denom)[:, None]
    loss = float(-log_probs[rows, y].mean())

    G = expl / denom[:, None]
    G[rows, y] -= 1.0
    G /= n
    dC = head.scale * G

    dU = dC @ Vh
    dVh = dC.T @ U
    # back through u = z / |z|: dz = (du - (du . u) u) / |z|, same for rows of V
    dZ = (dU - (dU * U).sum(axis=1, keepdims=True) * U) / zn[:, None]
    dV = (dVh - (dVh * Vh).sum(axis=1, keepdims=True) * Vh) / vn[:, None]
    dW = dZ.T @ X
    return loss, dW, dV


def _pairwise_unit_distances(U: np.ndarray) -> np.ndarray:
    # |u_i - u_j| via the Gram matrix; clip guards tiny negative round-off
    G = U @ U.T
    sq = np.clip(2.0 - 2.0 * G, 0.0, None)
    return np.sqrt(sq)


def _select_triplets(D: np.ndarray, y: np.ndarray) -> list[tuple[int, int, int]]:
    """Per anchor: hardest positive, then the semi-hard negative.

    The positive is the same-class item at maximal distance. The negative is
    the closest different-class item among those farther than the positive;
    if none is farther, the closest one overall.
    """
    n = D.shape[0]
    triplets: list[tuple[int, int, int]] = []
    for a in range(n):
        pos = np.nonzero((y == y[a]) & (np.arange(n) != a))[0]
        if pos.size == 0:
            continue
        p = pos[np.argmax(D[a, pos])]
        neg = np.nonzero(y != y[a])[0]
        if neg.size == 0:
            continue
        farther = neg[D[a, neg] > D[a, p]]
        pool = farther if farther.size else neg
        nidx = pool[np.argmin(D[a, pool])]
        triplets.append((a, int(p), int(nidx)))
    return triplets


def triplet_loss(
    X: np.ndarray, y: np.ndarray, proj: Projection, margin: float
) -> tuple[float, np.ndarray]:
    """Within-batch mined triplet loss on normalized projections.

    Loss is the mean over anchors that have a same-class partner of
    max(0, d(a,p) - d(a,n) + margin) with semi-hard negatives (see
    _select_triplets). Raises DataError on a single-class batch so the
    caller can resample.
    """
    X, y = _check_batch(X, y)
    if X.shape[1] != proj.dim_in:
        raise DataError(f"batch dimension {X.shape[1]} != projection dim_in {proj.dim_in}")
    if margin <= 0:
        raise DataError("margin must be positive")
    if np.unique(y).size < 2:
        raise DataError("triplet batch needs at least 2 distinct classes")

    Z, zn, U = _project_normalized(X, proj)
    D = _pairwise_unit_distances(U)
    triplets = _select_triplets(D, y)
    if not triplets:
        raise DataError("triplet batch has no anchor with a same-class partner")

    n_anchors = len(triplets)
    loss = 0.0
    dU = np.zeros_like(U)
    for a, p, nn in triplets:
        h = D[a, p] - D[a, nn] + margin
        if h <= 0.0:
            continue
        loss += h
        w = 1.0 / n_anchors
        if D[a, p] > 0.0:
            g = (U[a] - U[p]) / D[a, p]
            dU[a] += w * g
            dU[p] -= w * g
        if D[a, nn] > 0.0:
            g = (U[a] - U[nn]) / D[a, nn]
            dU[a] -= w * g
            dU[nn] += w * g
    loss /= n_anchors

    dZ = (dU - (dU * U).sum(axis=1, keepdims=True) * U) / zn[:, None]
    dW = dZ.T @ X
    return float(loss), dW


def _triplet_batch_order(
    counts: dict[int, list[int]], rng: np.random.Generator, batch_size: int
) -> list[list[int]]:
    """Group same-class items into pairs, shuffle the pairs, chunk into batches.

    Keeping pairs intact means every batch that holds one has a usable
    positive; a leftover odd item per class rides along as extra negatives.
    """
    units: list[list[int]] = []
    for cls in sorted(counts):
        idx = list(counts[cls])
        rng.shuffle(idx)
        units.extend([idx[i : i + 2] for i in range(0, len(idx), 2)])
    order = rng.permutation(len(units))
    batches: list[list[int]] = []
    cur: list[int] = []
    for ui in order:
        unit = units[ui]
        if len(cur) + len(unit) > batch_size and cur:
            batches.append(cur)
            cur = []
        cur.extend(unit)
    if cur:
        batches.append(cur)
    return batches


class _Adam:
    def __init__(self, shape: tuple[int, ...], lr: float):
        self.lr = lr
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = _ADAM_BETA1 * self.m + (1 - _ADAM_BETA1) * grad
        self.v = _ADAM_BETA2 * self.v + (1 - _ADAM_BETA2) * grad * grad
        mhat = self.m / (1 - _ADAM_BETA1**self.t)
        vhat = self.v / (1 - _ADAM_BETA2**self.t)
        return param - self.lr * mhat / (np.sqrt(vhat) + _ADAM_EPS)


def train(dataset: Dataset, config: TrainConfig) -> tuple[Projection, TrainReport]:
    """Mini-batch Adam over shuffled epochs; deterministic per (dataset, config)."""
    vocab = dataset.label_vocab
    k = len(vocab)
    if k < 2:
        raise DataError(f"training needs >= 2 classes, got {k}")
    counts = dataset.class_counts()
    if config.loss == "triplet":
        thin = [lab for lab in vocab if counts[lab] < 2]
        if thin:
            raise DataError(f"triplet training needs >= 2 examples per class; too few in {thin}")

    X = dataset.matrix()
    y = dataset.label_indices()
    dim_in = dataset.dim
    dim_out = config.dim_out if config.dim_out is not None else dim_in
    proj, head = init_params(
        dim_in, dim_out, k, config.seed, scale=config.lmcl_scale, margin=config.lmcl_margin
    )
    W = proj.weights.copy()
    V = head.class_directions.copy()

    rng = np.random.default_rng(int(config.seed))
    opt_w = _Adam(W.shape, config.learning_rate)
    opt_v = _Adam(V.shape, config.learning_rate)
    by_class: dict[int, list[int]] = {c: list(np.nonzero(y == c)[0]) for c in range(k)}

    curve: list[float] = []
    n = len(dataset)
    for epoch in range(config.epochs):
        if config.loss == "lmcl":
            perm = rng.permutation(n)
            batches = [
                list(perm[i : i + config.batch_size]) for i in range(0, n, config.batch_size)
            ]
        else:
            batches = _triplet_batch_order(by_class, rng, config.batch_size)

        total = 0.0
        ran = 0
        for b, idx in enumerate(batches):
            bx, by = X[idx], y[idx]
            if config.loss == "lmcl":
                cur_proj = Projection(weights=W, dim_in=dim_in, dim_out=dim_out)
                cur_head = LmclHead(class_directions=V, scale=head.scale, margin=head.margin)
                loss, dW, dV = lmcl_loss(bx, by, cur_proj, cur_head)
                W = opt_w.step(W, dW)
                V = opt_v.step(V, dV)
                V = V / np.linalg.norm(V, axis=1)[:, None]
            else:
                if np.unique(by).size < 2:
                    logger.debug("epoch %d batch %d: single class, skipped", epoch, b)
                    continue
                cur_proj = Projection(weights=W, dim_in=dim_in, dim_out=dim_out)
                loss, dW = triplet_loss(bx, by, cur_proj, config.triplet_margin)
                W = opt_w.step(W, dW)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
            total += loss
            ran += 1
        if ran == 0:
            raise DataError(
                f"epoch {epoch}: every batch had a single class; increase batch_size"
            )
        curve.append(total / ran)

    report = TrainReport(
        loss_curve=tuple(curve), final_loss=curve[-1], epochs_run=config.epochs
    )
    return Projection(weights=W, dim_in=dim_in, dim_out=dim_out), report


@dataclass(frozen=True)
class GradCheckReport:
    worst_rel_err: float
    trials: int
    passed: bool
    tolerance: float


def _central_diff(f, arr: np.ndarray, h: float) -> np.ndarray:
    """Central finite differences of a scalar function over every array entry."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        orig = arr[ix]
        arr[ix] = orig + h
        fp = f()
        arr[ix] = orig - h
        fm = f()
        arr[ix] = orig
        g[ix] = (fp - fm) / (2.0 * h)
    return g


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / denom))


def gradient_check(
    trials: int = 20,
    seed: int = 0,
    h: float = 1e-6,
    tolerance: float = 1e-5,
    corrupt: bool = False,
) -> GradCheckReport:
    """Compare analytic gradients of both losses to central differences.

    Runs `trials` random small instances per loss and reports the worst
    relative error (with a unit floor in the denominator so near-zero entries
    are judged absolutely). `corrupt` deliberately perturbs the analytic
    gradients; it exists as a negative control for the CLI wiring.
    """
    if trials < 1:
        raise DataError("trials must be >= 1")
    worst = 0.0
    for trial in range(trials):
        rng = np.random.default_rng([int(seed), trial])
        d_in = int(rng.integers(3, 9))
        d_out = int(rng.integers(2, d_in + 1))
        k = int(rng.integers(2, 5))
        n = int(rng.integers(k + 1, 9))

        X = rng.standard_normal((n, d_in))
        # every class present, plus one guaranteed same-class pair for triplet
        y = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        y[-1] = y[0]
        W = rng.standard_normal((d_out, d_in)) * 0.5
        V = rng.standard_normal((k, d_out))
        V = V / np.linalg.norm(V, axis=1)[:, None]
        s = float(rng.uniform(1.0, 16.0))
        m = float(rng.uniform(0.0, 0.5))
        t_margin = float(rng.uniform(0.2, 1.5))

        def mk_proj() -> Projection:
            return Projection(weights=W, dim_in=d_in, dim_out=d_out)

        def mk_head() -> LmclHead:
            return LmclHead(class_directions=V, scale=s, margin=m)

        _, dW, dV = lmcl_loss(X, y, mk_proj(), mk_head())
        if corrupt:
            dW = dW + 1e-3
        fd_w = _central_diff(lambda: lmcl_loss(X, y, mk_proj(), mk_head())[0], W, h)
        fd_v = _central_diff(lambda: lmcl_loss(X, y, mk_proj(), mk_head())[0], V, h)
        worst = max(worst, _rel_err(dW, fd_w), _rel_err(dV, fd_v))

        _, dWt = triplet_loss(X, y, mk_proj(), t_margin)
        if corrupt:
            dWt = dWt + 1e-3
        fd_wt = _central_diff(lambda: triplet_loss(X, y, mk_proj(), t_margin)[0], W, h)
        worst = max(worst, _rel_err(dWt, fd_wt))

    return GradCheckReport(
        worst_rel_err=worst, trials=trials, passed=worst < tolerance, tolerance=tolerance
    )
