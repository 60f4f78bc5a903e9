"""Evaluation of equilibrium opinions against ground-truth labels.

All functions take per-user vectors aligned with an integer label array
``y`` (index into the opinion space).  Pair statistics are computed over
unordered pairs of distinct users.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .classify import class_weights, fit_binary, train_classifier
from .discord import DiscordStore, discord_approx, discord_exact, sample_pairs
from .equilibrium import OpinionMatrix, SolverConfig, solve_equilibrium, zealot_exposure
from .errors import DomainError, VoterError
from .network import Network

log = logging.getLogger(__name__)

TABLE_FIELDS = (
    "acc_argmax", "acc_classifier", "mean_own", "mean_other",
    "dist_within", "dist_cross", "discord_within", "discord_cross", "acc_discord",
)

_ROW_CHUNK = 1024


def ground_truth(net: Network, ids) -> np.ndarray:
    """Label index for each id; every id must be labelled."""
    y = np.array([net.truth[net.index_of(i)] for i in ids], dtype=np.int64)
    if np.any(y < 0):
        missing = [i for i, t in zip(ids, y) if t < 0]
        raise DomainError(f"{len(missing)} evaluated users lack a ground-truth label, "
                          f"e.g. {missing[0]!r}")
    return y


def argmax_accuracy(U, y, K: int | None = None, tie_tol: float = 0.0) -> dict:
    """Share of users whose true label attains the maximum of their vector.

    A user counts as correct when its label is among the maximizers, so all
    coordinates within ``tie_tol`` of the row maximum are accepted.
    """
    U = np.asarray(U, dtype=float)
    y = np.asarray(y)
    if U.shape[0] == 0:
        raise DomainError("argmax accuracy of an empty node set")
    K = U.shape[1] if K is None else K
    hit = U[np.arange(y.size), y] >= U.max(axis=1) - tie_tol
    per = {}
    for s in range(K):
        m = y == s
        per[s] = float(hit[m].mean()) if m.any() else None
    return {"overall": float(hit.mean()), "per_party": per}


def pooled_distributions(U, y, K: int | None = None, bins: int = 50) -> dict:
    """Own-party values ``u_i^{y_i}`` and other-party values ``u_i^t``, ``t != y_i``."""
    U = np.asarray(U, dtype=float)
    y = np.asarray(y)
    K = U.shape[1] if K is None else K
    edges = np.linspace(0.0, 1.0, bins + 1)
    own_all = U[np.arange(y.size), y]
    mask = np.ones_like(U, dtype=bool)
    mask[np.arange(y.size), y] = False
    other_all = U[mask]
    parties, missing = {}, []
    for s in range(K):
        rows = y == s
        if not rows.any():
            missing.append(s)
            continue
        own = U[rows, s]
        other = np.delete(U[rows], s, axis=1).ravel()
        parties[s] = {
            "count": int(rows.sum()),
            "own_mean": float(own.mean()), "own_std": float(own.std()),
            "other_mean": float(other.mean()) if other.size else None,
            "other_std": float(other.std()) if other.size else None,
            "own_hist": np.histogram(own, bins=edges)[0].tolist(),
            "other_hist": np.histogram(other, bins=edges)[0].tolist(),
            "own": own, "other": other,
        }
    if missing:
        log.warning("parties without supporters omitted: %s", missing)
    return {
        "parties": parties,
        "missing": missing,
        "own_mean": float(own_all.mean()),
        "other_mean": float(other_all.mean()) if other_all.size else None,
        "edges": edges.tolist(),
        "own_hist": np.histogram(own_all, bins=edges)[0].tolist(),
        "other_hist": np.histogram(other_all, bins=edges)[0].tolist(),
    }


def separation_distances(U, y, K: int | None = None) -> dict:
    """Mean Euclidean distance between supporters of each pair of parties.

    Entry ``(s, t)`` averages ``||u_i - u_j||`` over ``i`` in party ``s``,
    ``j`` in party ``t``, ``i != j``; entries without pairs are NaN.  Also
    returns the pooled within-party and cross-party means.
    """
    U = np.asarray(U, dtype=float)
    y = np.asarray(y)
    if U.shape[0] < 2:
        raise DomainError("need at least two nodes for pair distances")
    K = U.shape[1] if K is None else K
    onehot = np.zeros((y.size, K))
    onehot[np.arange(y.size), y] = 1.0
    sums = np.zeros((K, K))
    sq = np.einsum("ij,ij->i", U, U)
    for lo in range(0, y.size, _ROW_CHUNK):
        blk = U[lo:lo + _ROW_CHUNK]
        d2 = sq[lo:lo + _ROW_CHUNK, None] + sq[None, :] - 2.0 * blk @ U.T
        D = np.sqrt(np.maximum(d2, 0.0))
        D[np.arange(blk.shape[0]), np.arange(lo, lo + blk.shape[0])] = 0.0
        sums += onehot[lo:lo + _ROW_CHUNK].T @ (D @ onehot)
    n = onehot.sum(axis=0)
    counts = np.outer(n, n) - np.diag(n)
    with np.errstate(invalid="ignore", divide="ignore"):
        mat = np.where(counts > 0, sums / np.where(counts > 0, counts, 1), np.nan)
    diag = np.eye(K, dtype=bool)
    wc, cc = counts[diag].sum(), counts[~diag].sum()
    return {
        "matrix": mat,
        "within": float(sums[diag].sum() / wc) if wc else None,
        "cross": float(sums[~diag].sum() / cc) if cc else None,
    }


def discord_statistics(rho: DiscordStore, y_of_row: np.ndarray, K: int, bins: int = 50) -> dict:
    """Within/cross means, party-by-party means and histograms of discord."""
    yi, yj = y_of_row[rho.i], y_of_row[rho.j]
    same = yi == yj
    sums = np.zeros((K, K))
    counts = np.zeros((K, K))
    np.add.at(sums, (yi, yj), rho.rho)
    np.add.at(counts, (yi, yj), 1)
    sums, counts = sums + sums.T - np.diag(np.diag(sums)), counts + counts.T - np.diag(np.diag(counts))
    with np.errstate(invalid="ignore", divide="ignore"):
        mat = np.where(counts > 0, sums / np.where(counts > 0, counts, 1), np.nan)
    edges = np.linspace(0.0, 1.0, bins + 1)
    return {
        "within": float(rho.rho[same].mean()) if same.any() else None,
        "cross": float(rho.rho[~same].mean()) if (~same).any() else None,
        "matrix": mat,
        "pairs_within": int(same.sum()),
        "pairs_cross": int((~same).sum()),
        "edges": edges.tolist(),
        "within_hist": np.histogram(rho.rho[same], bins=edges)[0].tolist(),
        "cross_hist": np.histogram(rho.rho[~same], bins=edges)[0].tolist(),
    }


def discord_discrimination(rho: DiscordStore, y_of_row: np.ndarray, seed: int = 0,
                           positive: str = "cross") -> dict:
    """Balanced 1-D logistic regression separating same-party from cross-party pairs.

    Identical ``(rho, class)`` observations are merged into weighted samples,
    which leaves the objective unchanged.  Scores within 1e-12 of zero go
    to the majority class.  The cutoff is the discord value where the two
    classes are equally likely.
    """
    del seed
    if positive not in ("cross", "within"):
        raise DomainError(f"positive must be 'cross' or 'within', got {positive!r}")
    cross = y_of_row[rho.i] != y_of_row[rho.j]
    if cross.all() or not cross.any():
        raise DomainError("discord discrimination needs both same-party and cross-party pairs")
    target = cross if positive == "cross" else ~cross
    sw = class_weights(target.astype(int), "balanced")
    keys = np.stack([rho.rho, target.astype(float)], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    weight = np.bincount(inv, weights=sw)
    X = uniq[:, :1]
    yy = np.where(uniq[:, 1] > 0, 1.0, -1.0)
    w, b, epochs, _ = fit_binary(X, yy, weight, "logistic", n_total=rho.rho.size)
    w = float(w[0])
    score = w * rho.rho + b
    majority = target.mean() >= 0.5
    pred = np.where(np.abs(score) <= 1e-12, majority, score > 0)
    pred_cross = pred if positive == "cross" else ~pred
    ok = pred_cross == cross
    return {
        "accuracy": float(ok.mean()),
        "recall_within": float(ok[~cross].mean()),
        "recall_cross": float(ok[cross].mean()),
        "cutoff": float(-b / w) if w != 0 else None,
        "coef": float(w),
        "intercept": float(b),
        "epochs": int(epochs),
    }


@dataclass
class MetricsReport:
    acc_argmax: float
    acc_argmax_party: dict
    acc_classifier: float
    acc_classifier_party: dict
    mean_own: float
    mean_other: float
    party_means: dict
    dist_within: float
    dist_cross: float
    dist_matrix: list
    discord_within: float | None = None
    discord_cross: float | None = None
    discord_matrix: list | None = None
    acc_discord: float | None = None
    discord_recall_within: float | None = None
    discord_recall_cross: float | None = None
    discord_cutoff: float | None = None
    discord_mode: str | None = None
    n_users: int = 0
    n_pairs: int = 0
    labels: tuple = ()
    histograms: dict = field(default_factory=dict, repr=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in TABLE_FIELDS}

    def to_dict(self, histograms: bool = False) -> dict:
        d = asdict(self)
        if not histograms:
            d.pop("histograms")
        return _jsonable(d)

    def to_text(self) -> str:
        lab = self.labels
        lines = [f"{'users':<28}{self.n_users}", f"{'pairs':<28}{self.n_pairs}"]
        for k in TABLE_FIELDS:
            v = getattr(self, k)
            lines.append(f"{k:<28}{'-' if v is None else f'{v:.4f}'}")
        lines.append("per party " + " ".join(f"{s:>8}" for s in lab))
        for name, per in (("argmax", self.acc_argmax_party), ("classifier", self.acc_classifier_party)):
            vals = [per.get(k) for k in range(len(lab))]
            lines.append(f"  {name:<8}" + " ".join(f"{'-':>8}" if v is None else f"{v:8.3f}" for v in vals))
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if np.isnan(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def evaluate(net: Network, x: OpinionMatrix, rho: DiscordStore | None = None,
             seed: int = 0, bins: int = 50, tie_tol: float = 0.0) -> MetricsReport:
    """Full metric set for one network, its opinions and (optionally) discord."""
    K = net.K
    y = ground_truth(net, x.ids)
    U = x.values
    am = argmax_accuracy(U, y, K, tie_tol)
    clf, acc_clf = train_classifier(U, y, "hinge", "none", seed)
    pred = clf.predict(U)
    clf_party = {s: (float(np.mean(pred[y == s] == s)) if np.any(y == s) else None)
                 for s in range(K)}
    pooled = pooled_distributions(U, y, K, bins)
    dist = separation_distances(U, y, K)
    hist = {
        "edges": pooled["edges"],
        "own": pooled["own_hist"],
        "other": pooled["other_hist"],
        "party_own": {net.space.labels[s]: p["own_hist"] for s, p in pooled["parties"].items()},
        "party_other": {net.space.labels[s]: p["other_hist"] for s, p in pooled["parties"].items()},
    }
    rep = MetricsReport(
        acc_argmax=am["overall"],
        acc_argmax_party=am["per_party"],
        acc_classifier=acc_clf,
        acc_classifier_party=clf_party,
        mean_own=pooled["own_mean"],
        mean_other=pooled["other_mean"],
        party_means={s: {k: p[k] for k in ("count", "own_mean", "own_std", "other_mean", "other_std")}
                     for s, p in pooled["parties"].items()},
        dist_within=dist["within"],
        dist_cross=dist["cross"],
        dist_matrix=dist["matrix"].tolist(),
        n_users=len(x),
        labels=net.space.labels,
    )
    if rho is not None:
        if rho.ids != x.ids:
            raise DomainError("discord store and opinion matrix cover different users")
        ds = discord_statistics(rho, y, K, bins)
        rep.discord_within, rep.discord_cross = ds["within"], ds["cross"]
        rep.discord_matrix = ds["matrix"].tolist()
        rep.n_pairs = len(rho)
        rep.discord_mode = rho.mode
        hist["discord_edges"] = ds["edges"]
        hist["discord_within"] = ds["within_hist"]
        hist["discord_cross"] = ds["cross_hist"]
        if ds["pairs_within"] and ds["pairs_cross"]:
            dd = discord_discrimination(rho, y, seed)
            rep.acc_discord = dd["accuracy"]
            rep.discord_recall_within = dd["recall_within"]
            rep.discord_recall_cross = dd["recall_cross"]
            rep.discord_cutoff = dd["cutoff"]
    rep.histograms = hist
    return rep


def pipeline(net: Network, cfg: SolverConfig = SolverConfig(), discord_mode: str = "approx",
             max_pairs: int = 1_000_000, seed: int = 0) -> MetricsReport:
    """Solve, compute discord on a (sampled) pair set, and evaluate."""
    if discord_mode not in ("exact", "approx"):
        raise DomainError(f"unknown discord mode {discord_mode!r}")
    x = solve_equilibrium(net, cfg)
    n = len(x)
    pairs = "all" if n * (n - 1) // 2 <= max_pairs else sample_pairs(x, max_pairs, seed)
    if discord_mode == "approx":
        rho = discord_approx(x, pairs)
    else:
        rho = discord_exact(net, x, pairs, cfg)
    return evaluate(net, x, rho, seed)


def compare_networks(variants, cfg: SolverConfig = SolverConfig(), discord_mode: str = "approx",
                     max_pairs: int = 1_000_000, seed: int = 0) -> list[dict]:
    """One row of the comparison table per ``(name, network)`` variant."""
    rows = []
    for name, net in variants:
        try:
            rep = pipeline(net, cfg, discord_mode, max_pairs, seed)
        except VoterError as exc:
            exc.args = (f"[{name}] {exc}",) + exc.args[1:]
            raise
        rows.append({"network": name, **rep.row()})
    return rows


def zealot_baseline_compare(x: OpinionMatrix, z: OpinionMatrix, y, seed: int = 0) -> dict:
    """Equilibrium opinions versus direct zealot exposure as predictors.

    Only users with some zealot exposure are compared.
    """
    if x.ids != z.ids:
        raise DomainError("opinion and exposure matrices cover different users")
    y = np.asarray(y)
    exposed = z.values.sum(axis=1) > 0
    if not exposed.any():
        raise DomainError("no user has positive zealot exposure")
    out = {"excluded_share": float(1.0 - exposed.mean()), "users": int(exposed.sum())}
    yy = y[exposed]
    for name, U in (("x", x.values[exposed]), ("z", z.values[exposed])):
        row = {"acc_argmax": argmax_accuracy(U, yy)["overall"]}
        if np.unique(yy).size >= 2:
            row["acc_classifier"] = train_classifier(U, yy, "hinge", "none", seed)[1]
        else:
            row["acc_classifier"] = None
        pooled = pooled_distributions(U, yy)
        row["mean_own"], row["mean_other"] = pooled["own_mean"], pooled["other_mean"]
        if U.shape[0] >= 2:
            dist = separation_distances(U, yy)
            row["dist_within"], row["dist_cross"] = dist["within"], dist["cross"]
        else:
            row["dist_within"] = row["dist_cross"] = None
        out[name] = row
    return out


def baseline_report(net: Network, x: OpinionMatrix, seed: int = 0) -> dict:
    return zealot_baseline_compare(x, zealot_exposure(net), ground_truth(net, x.ids), seed)
