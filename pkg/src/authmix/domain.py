"""Shared value types: datasets, hyperparameters, sampler states, chains.

Unit indexing conventions.  Groups are labeled 1..m and levels 1..k in every
public structure and report; string labels from data files are mapped to
those indices in first-appearance order and kept alongside the arrays.
Random-effect atoms are pk-vectors laid out level-block by level-block, so
the contribution of an atom to a unit at level l is the l-th p-block
(`z_apply`).  In the authentication design the fixed-effect covariate of a
unit is the one-hot indicator of its group (`design_row`), giving one
p-vector of means per group.

Dataset CSV schema: header ``group,level,y1,...,yp[,x1,...,xq]``; group and
level are arbitrary strings, responses and covariates are floats written in
round-trip precision.  Chains persist as a small JSON document plus an .npz
sidecar holding the draw arrays; both are byte-stable for identical inputs.
"""

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .randmat import check_spd

SCHEMA_VERSION = 1


def design_row(group, m):
    """One-hot fixed-effect covariate row for a unit of `group` (1..m).

    Applies to the authentication design, where the only fixed covariates
    are the group indicators (q = m).
    """
    if not 1 <= group <= m:
        raise ValueError(f"group {group} outside 1..{m}")
    x = np.zeros(m)
    x[group - 1] = 1.0
    return x


def z_apply(level, alpha, p):
    """The p-subvector of a stacked atom at block `level` (1-based).

    Equals the product of the level-selection design (indicator of `level`
    kronecker identity) with alpha, without materializing the matrix.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or alpha.size % p:
        raise ValueError(f"atom of size {alpha.size} not divisible by p={p}")
    k = alpha.size // p
    if not 1 <= level <= k:
        raise ValueError(f"level {level} outside 1..{k}")
    return alpha[(level - 1) * p: level * p].copy()


def level_block(mat, level, p):
    """Diagonal p x p block of a pk x pk matrix at `level` (1-based)."""
    mat = np.asarray(mat)
    k = mat.shape[0] // p
    if not 1 <= level <= k:
        raise ValueError(f"level {level} outside 1..{k}")
    s = slice((level - 1) * p, level * p)
    return mat[s, s].copy()


@dataclasses.dataclass
class Dataset:
    """Multivariate responses with group and level structure.

    y: (n, p) responses; x: (n, q) fixed covariates; group, level: (n,)
    1-based integer codes.  k and m are stored explicitly so subsets keep
    the full design even when a level drops out of the rows.
    """

    y: np.ndarray
    x: np.ndarray
    group: np.ndarray
    level: np.ndarray
    k: int
    m: int
    group_labels: tuple = ()
    level_labels: tuple = ()

    def __post_init__(self):
        self.y = np.atleast_2d(np.asarray(self.y, dtype=np.float64))
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        self.group = np.asarray(self.group, dtype=np.int64)
        self.level = np.asarray(self.level, dtype=np.int64)
        n = self.y.shape[0]
        if self.x.shape[0] != n or self.group.shape != (n,) or self.level.shape != (n,):
            raise ValueError("y, x, group, level must agree on the number of units")
        if n < 1:
            raise ValueError("dataset must contain at least one unit")
        if self.group.min() < 1 or self.group.max() > self.m:
            raise ValueError(f"group codes outside 1..{self.m}")
        if self.level.min() < 1 or self.level.max() > self.k:
            raise ValueError(f"level codes outside 1..{self.k}")
        if not self.group_labels:
            self.group_labels = tuple(str(u) for u in range(1, self.m + 1))
        if not self.level_labels:
            self.level_labels = tuple(str(l) for l in range(1, self.k + 1))
        if len(self.group_labels) != self.m or len(self.level_labels) != self.k:
            raise ValueError("label lists must match m and k")

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def p(self):
        return self.y.shape[1]

    @property
    def q(self):
        return self.x.shape[1]

    def group_counts(self):
        return np.bincount(self.group, minlength=self.m + 1)[1:]

    def subset(self, indices):
        """Row subset keeping the full group/level design and labels."""
        idx = np.asarray(indices)
        return Dataset(self.y[idx], self.x[idx], self.group[idx], self.level[idx],
                       self.k, self.m, self.group_labels, self.level_labels)

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = (["group", "level"]
                      + [f"y{j}" for j in range(1, self.p + 1)]
                      + [f"x{j}" for j in range(1, self.q + 1)])
            writer.writerow(header)
            for i in range(self.n):
                row = [self.group_labels[self.group[i] - 1],
                       self.level_labels[self.level[i] - 1]]
                row += [repr(float(v)) for v in self.y[i]]
                row += [repr(float(v)) for v in self.x[i]]
                writer.writerow(row)

    @classmethod
    def load_csv(cls, path):
        """Parse the dataset schema; labels map to codes by first appearance."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        if header[:2] != ["group", "level"]:
            raise ValueError(f"{path}: header must start with group,level")
        p = 0
        while 2 + p < len(header) and header[2 + p] == f"y{p + 1}":
            p += 1
        if p == 0:
            raise ValueError(f"{path}: no response columns y1..yp found")
        q = 0
        while 2 + p + q < len(header) and header[2 + p + q] == f"x{q + 1}":
            q += 1
        if 2 + p + q != len(header):
            raise ValueError(f"{path}: unrecognized trailing columns {header[2 + p + q:]}")
        groups, levels = [], []
        gmap, lmap = {}, {}
        y = np.empty((len(rows) - 1, p))
        x = np.empty((len(rows) - 1, q)) if q else None
        for r, row in enumerate(rows[1:]):
            if len(row) != len(header):
                raise ValueError(f"{path}: row {r + 2} has {len(row)} fields, expected {len(header)}")
            g, l = row[0], row[1]
            groups.append(gmap.setdefault(g, len(gmap) + 1))
            levels.append(lmap.setdefault(l, len(lmap) + 1))
            y[r] = [float(v) for v in row[2:2 + p]]
            if q:
                x[r] = [float(v) for v in row[2 + p:]]
        m, k = len(gmap), len(lmap)
        g_arr = np.array(groups, dtype=np.int64)
        if x is None:
            x = np.zeros((len(g_arr), m))
            x[np.arange(len(g_arr)), g_arr - 1] = 1.0
        else:
            g_arr, gmap = _recode_by_design(x, g_arr, gmap)
        return cls(y, x, g_arr, np.array(levels, dtype=np.int64), k, m,
                   tuple(gmap), tuple(lmap))


def _recode_by_design(x, g_arr, gmap):
    """Align group codes with one-hot design columns when x encodes them.

    When every x row is a unit vector whose hot column is constant within a
    group label and distinct across labels, the hot column is the group's
    design position, so the code becomes hot column + 1.  That keeps code u
    paired with design row e_u no matter which label the file happens to
    list first; any other x is left alone along with the first-appearance
    codes.
    """
    m = len(gmap)
    if x.shape[1] != m:
        return g_arr, gmap
    hot = {}
    for r in range(x.shape[0]):
        nz = np.nonzero(x[r])[0]
        if nz.size != 1 or x[r, nz[0]] != 1.0:
            return g_arr, gmap
        col = int(nz[0])
        if hot.setdefault(int(g_arr[r]), col) != col:
            return g_arr, gmap
    if sorted(hot.values()) != list(range(m)):
        return g_arr, gmap
    recode = {old: col + 1 for old, col in hot.items()}
    labels = [None] * m
    for label, old in gmap.items():
        labels[recode[old] - 1] = label
    new_g = np.array([recode[int(c)] for c in g_arr], dtype=np.int64)
    return new_g, {label: i + 1 for i, label in enumerate(labels)}


def _expand_matrix(value, dim, name):
    """Hyperparameter matrix from either a scalar (value * I) or nested lists."""
    if np.isscalar(value):
        return float(value) * np.eye(dim)
    mat = np.asarray(value, dtype=np.float64)
    if mat.shape != (dim, dim):
        raise ValueError(f"{name} has shape {mat.shape}, expected ({dim}, {dim})")
    return mat


def _expand_vector(value, dim, name):
    if np.isscalar(value):
        return np.full(dim, float(value))
    vec = np.asarray(value, dtype=np.float64)
    if vec.shape != (dim,):
        raise ValueError(f"{name} has shape {vec.shape}, expected ({dim},)")
    return vec


@dataclasses.dataclass
class Hyperparameters:
    """Prior settings for the mixed models.

    Matrix dimensions: alpha0, tau0, Q0, L0, Phi0 act on the p response
    coordinates; R0 acts on stacked pk atoms.  Degrees of freedom must make
    each inverse-Wishart proper (df > dim - 1); a1, a2 are the gamma shape
    and rate of the concentration prior, mean a1 / a2.
    """

    alpha0: np.ndarray
    tau0: np.ndarray
    Q0: np.ndarray
    nu0: float
    L0: np.ndarray
    t0: float
    R0: np.ndarray
    r0: float
    Phi0: np.ndarray
    gamma0: float
    a1: float
    a2: float

    def __post_init__(self):
        self.alpha0 = np.asarray(self.alpha0, dtype=np.float64)
        p = self.alpha0.size
        pk = np.asarray(self.R0).shape[0]
        self.tau0 = check_spd(self.tau0, "tau0")
        self.Q0 = check_spd(self.Q0, "Q0")
        self.L0 = check_spd(self.L0, "L0")
        self.R0 = check_spd(self.R0, "R0")
        self.Phi0 = check_spd(self.Phi0, "Phi0")
        for mat, name in ((self.tau0, "tau0"), (self.Q0, "Q0"),
                          (self.L0, "L0"), (self.Phi0, "Phi0")):
            if mat.shape != (p, p):
                raise ValueError(f"{name} must be {p} x {p}, got {mat.shape}")
        if pk % p:
            raise ValueError(f"R0 dimension {pk} is not a multiple of p={p}")
        for df, dim, name in ((self.nu0, p, "nu0"), (self.t0, p, "t0"),
                              (self.gamma0, p, "gamma0"), (self.r0, pk, "r0")):
            if df <= dim - 1:
                raise ValueError(f"{name}={df} must exceed dim - 1 = {dim - 1}")
        if self.a1 <= 0 or self.a2 <= 0:
            raise ValueError("a1 and a2 must be positive")

    @property
    def p(self):
        return self.alpha0.size

    @property
    def k(self):
        return self.R0.shape[0] // self.p

    @classmethod
    def from_spec(cls, spec, p, k):
        """Build from a plain dict; scalar entries expand to multiples of I."""
        spec = dict(spec)
        spec.pop("schema_version", None)
        spec.pop("comment", None)
        file_p = spec.pop("p", p)
        file_k = spec.pop("k", k)
        if (file_p, file_k) != (p, k) and any(
                not np.isscalar(spec[key]) for key in ("tau0", "Q0", "L0", "R0", "Phi0")
                if key in spec):
            raise ValueError(
                f"hyperparameter file targets p={file_p}, k={file_k} "
                f"but the data has p={p}, k={k}")
        required = {"alpha0", "tau0", "Q0", "nu0", "L0", "t0", "R0", "r0",
                    "Phi0", "gamma0", "a1", "a2"}
        missing = required - spec.keys()
        if missing:
            raise ValueError(f"hyperparameter spec missing entries: {sorted(missing)}")
        extra = spec.keys() - required
        if extra:
            raise ValueError(f"unrecognized hyperparameter entries: {sorted(extra)}")
        return cls(alpha0=_expand_vector(spec["alpha0"], p, "alpha0"),
                   tau0=_expand_matrix(spec["tau0"], p, "tau0"),
                   Q0=_expand_matrix(spec["Q0"], p, "Q0"),
                   nu0=float(spec["nu0"]),
                   L0=_expand_matrix(spec["L0"], p, "L0"),
                   t0=float(spec["t0"]),
                   R0=_expand_matrix(spec["R0"], p * k, "R0"),
                   r0=float(spec["r0"]),
                   Phi0=_expand_matrix(spec["Phi0"], p, "Phi0"),
                   gamma0=float(spec["gamma0"]),
                   a1=float(spec["a1"]), a2=float(spec["a2"]))

    @classmethod
    def from_file(cls, path, p, k):
        with open(path) as fh:
            return cls.from_spec(json.load(fh), p, k)

    def to_jsonable(self):
        return {"schema_version": SCHEMA_VERSION,
                "alpha0": self.alpha0.tolist(), "tau0": self.tau0.tolist(),
                "Q0": self.Q0.tolist(), "nu0": self.nu0,
                "L0": self.L0.tolist(), "t0": self.t0,
                "R0": self.R0.tolist(), "r0": self.r0,
                "Phi0": self.Phi0.tolist(), "gamma0": self.gamma0,
                "a1": self.a1, "a2": self.a2}


@dataclasses.dataclass
class McmcSettings:
    """Chain length controls; draws are kept when t > burn_in and
    (t - burn_in) is a multiple of thinning."""

    iterations: int = 10000
    burn_in: int = 2000
    thinning: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0 or self.iterations <= self.burn_in:
            raise ValueError("need iterations > burn_in >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.draw_count < 1:
            raise ValueError("settings leave no draws after burn-in and thinning")

    @property
    def draw_count(self):
        return (self.iterations - self.burn_in) // self.thinning

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("schema_version", None)
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclasses.dataclass
class BspState:
    """One configuration of the semiparametric sampler.

    atoms maps cluster label -> stacked pk atom; config holds each unit's
    label.  Labels are arbitrary identifiers: any relabeling describes the
    same state.
    """

    B: np.ndarray
    theta: np.ndarray
    config: np.ndarray
    atoms: dict
    Sigma: np.ndarray
    tau: np.ndarray
    R: np.ndarray
    beta0: np.ndarray
    Lambda: np.ndarray
    M: float

    def n_clusters(self):
        return len(self.atoms)

    def cluster_sizes(self):
        labels, counts = np.unique(self.config, return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))

    def validate(self):
        n = self.theta.shape[0]
        sizes = self.cluster_sizes()
        if set(sizes) != set(self.atoms):
            raise ValueError("config labels and atom labels disagree")
        if any(c < 1 for c in sizes.values()):
            raise ValueError("every atom must have at least one member")
        if len(self.atoms) > n:
            raise ValueError("more clusters than units")
        if self.M <= 0:
            raise ValueError("concentration must be positive")

    def relabeled(self, mapping):
        """Same state under a label bijection; for invariance checks."""
        config = np.array([mapping[c] for c in self.config.tolist()])
        atoms = {mapping[c]: v.copy() for c, v in self.atoms.items()}
        return dataclasses.replace(self, config=config, atoms=atoms)


@dataclasses.dataclass
class BpState:
    """One configuration of the parametric reference sampler (single atom)."""

    B: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray
    Sigma: np.ndarray
    tau: np.ndarray
    R: np.ndarray
    beta0: np.ndarray
    Lambda: np.ndarray


_BSP_ARRAYS = ("B", "theta", "config", "n_clusters", "atoms", "counts",
               "Sigma", "tau", "R", "beta0", "Lambda", "M")
_BP_ARRAYS = ("B", "theta", "alpha", "Sigma", "tau", "R", "beta0", "Lambda")


class PosteriorChain:
    """Recorded draws of one chain plus everything needed to replay it.

    Draw arrays are stacked along the first axis (draw index).  For the
    semiparametric model the per-draw atoms live in a padded (draws, n, pk)
    array with the first n_clusters[j] rows valid.
    """

    def __init__(self, model, settings, dims, arrays, r_update="atoms",
                 group_labels=(), level_labels=(), meta=None):
        if model not in ("bsp", "bp"):
            raise ValueError(f"unknown model tag {model!r}")
        expected = _BSP_ARRAYS if model == "bsp" else _BP_ARRAYS
        missing = set(expected) - set(arrays)
        if missing:
            raise ValueError(f"chain is missing arrays: {sorted(missing)}")
        self.model = model
        self.settings = settings
        self.dims = dict(dims)
        self.arrays = {k: np.asarray(v) for k, v in arrays.items()}
        self.r_update = r_update
        self.group_labels = tuple(group_labels) or tuple(
            str(u) for u in range(1, self.dims["m"] + 1))
        self.level_labels = tuple(level_labels) or tuple(
            str(l) for l in range(1, self.dims["k"] + 1))
        self.meta = dict(meta or {})
        n_draws = self.arrays["B"].shape[0]
        if n_draws != settings.draw_count:
            raise ValueError(f"{n_draws} draws recorded, settings imply {settings.draw_count}")

    def __len__(self):
        return self.arrays["B"].shape[0]

    def state(self, j):
        a = self.arrays
        if self.model == "bp":
            return BpState(B=a["B"][j], theta=a["theta"][j], alpha=a["alpha"][j],
                           Sigma=a["Sigma"][j], tau=a["tau"][j], R=a["R"][j],
                           beta0=a["beta0"][j], Lambda=a["Lambda"][j])
        K = int(a["n_clusters"][j])
        atoms = {c: a["atoms"][j, c].copy() for c in range(K)}
        return BspState(B=a["B"][j], theta=a["theta"][j],
                        config=a["config"][j].copy(), atoms=atoms,
                        Sigma=a["Sigma"][j], tau=a["tau"][j], R=a["R"][j],
                        beta0=a["beta0"][j], Lambda=a["Lambda"][j],
                        M=float(a["M"][j]))

    def __iter__(self):
        return (self.state(j) for j in range(len(self)))

    def save(self, path):
        """Write `<path>` (JSON header) and `<stem>.npz` (draw arrays)."""
        path = Path(path)
        sidecar = path.with_suffix(".npz")
        np.savez(sidecar, **{k: self.arrays[k] for k in sorted(self.arrays)})
        doc = {"schema_version": SCHEMA_VERSION,
               "model": self.model,
               "settings": self.settings.to_dict(),
               "dims": self.dims,
               "r_update": self.r_update,
               "group_labels": list(self.group_labels),
               "level_labels": list(self.level_labels),
               "meta": self.meta,
               "draw_count": len(self),
               "array_file": sidecar.name}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        path = Path(path)
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported chain schema {doc.get('schema_version')}")
        with np.load(path.parent / doc["array_file"]) as data:
            arrays = {k: data[k] for k in data.files}
        return cls(doc["model"], McmcSettings.from_dict(doc["settings"]),
                   doc["dims"], arrays, doc.get("r_update", "atoms"),
                   doc.get("group_labels", ()), doc.get("level_labels", ()),
                   doc.get("meta"))
