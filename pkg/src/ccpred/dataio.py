"""Dataset schema, loading and validation, splits, metrics, noise
injection, similarity partitioning, and the synthetic-data generator.

One record is one chromatographic run: a compound, a column size class,
an eluent ratio, loading conditions, and the detected start/end times.
Times of -1/-1 mark invalid runs; such rows load but are flagged and
excluded from training.  Volume targets derive from times and flow
rate.

The synthetic generator stands in for bench data at desk scale.  It
samples a built-in corpus of 60 structures spanning the usual polarity
range and produces start volumes from a fixed retention law

    v_start = v0 * (1 + exp(c0 + c1*tpsa/100 + c2*hbd - c3*ln(1 + 9*ea)))

with the column dead-volume scale v0 per size class, a fixed relative
window width for the end volume, and seeded lognormal noise.  The
noiseless law values are published alongside the records so tests can
use them as ground truth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import chemfeat, graphrep, molparse
from .sepplan.elution import OrderError, volumes_from_times

SCHEMA_FIELDS = (
    "smiles", "cas", "column_spec", "flow_rate_ml_min", "pe_ea_ratio",
    "purity", "density_g_ml", "sample_mass_mg", "loading_solvent",
    "loading_volume_ml", "t1_min", "t2_min",
)

SIMILARITY_THRESHOLDS = (0.65, 0.55, 0.45, 0.35, 0.25, 0.15)

ELUENT_RATIOS = ("100/1", "50/1", "20/1", "10/1", "5/1", "2/1", "1/1")


class SchemaError(ValueError):
    """Dataset header does not match the documented schema."""


class RecordParseError(ValueError):
    """A cell failed to parse; message carries row and column."""


class BadProportionsError(ValueError):
    """Split proportions are negative or do not sum to one."""


class KTooLargeError(ValueError):
    """More folds requested than records available."""


class RatioOutOfRangeError(ValueError):
    """Noise ratio outside [0, 1]."""


class LengthMismatchError(ValueError):
    """Metric inputs differ in length."""


@dataclass(frozen=True)
class ExperimentRecord:
    """One dataset row; ``valid`` is False for -1/-1 sentinel rows."""

    smiles: str
    column_spec: str
    flow_rate_ml_min: float
    pe_ea_ratio: str
    sample_mass_mg: float
    loading_solvent: str
    loading_volume_ml: float
    t1_min: float
    t2_min: float
    purity: float = 1.0
    cas: str | None = None
    density_g_ml: float | None = None

    @property
    def valid(self) -> bool:
        return self.t1_min != -1.0 and self.t2_min != -1.0

    def volumes(self) -> tuple[float, float, float]:
        """Start/end/window volumes in mL (raises on sentinel rows)."""
        return volumes_from_times(self.flow_rate_ml_min, self.t1_min,
                                  self.t2_min)

    def conditions(self) -> graphrep.ExperimentalFeatures:
        return graphrep.ExperimentalFeatures.from_conditions(
            self.column_spec, self.pe_ea_ratio, self.sample_mass_mg,
            self.loading_solvent, self.loading_volume_ml)


@dataclass
class RejectionReport:
    """What the loader kept, flagged, and refused."""

    n_rows: int = 0
    n_valid: int = 0
    n_sentinel: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)

    def summary(self) -> str:
        lines = [f"rows: {self.n_rows}  valid: {self.n_valid}  "
                 f"sentinel: {self.n_sentinel}  rejected: {len(self.rejected)}"]
        for row, reason in self.rejected:
            lines.append(f"  row {row}: {reason}")
        return "\n".join(lines)


def _parse_cell(value: str, kind, row: int, column: str):
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise RecordParseError(
            f"row {row}, column {column!r}: cannot parse {value!r}") from exc


def load_records(path) -> tuple[list[ExperimentRecord], RejectionReport]:
    """Read a dataset file, validating the header and every row.

    Rows whose times are the -1 sentinel load with ``valid=False``;
    rows violating domain rules (end before start, unknown column,
    nonpositive flow) are dropped and listed in the report.

    Raises:
        SchemaError: header differs from the documented schema.
        RecordParseError: a cell fails to parse (row/column reported).
    """
    records: list[ExperimentRecord] = []
    report = RejectionReport()
    known_columns = set(graphrep.column_table())
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != SCHEMA_FIELDS:
            raise SchemaError(
                f"header {header} does not match schema {list(SCHEMA_FIELDS)}")
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SCHEMA_FIELDS):
                raise RecordParseError(
                    f"row {row_number}: expected {len(SCHEMA_FIELDS)} cells, "
                    f"got {len(row)}")
            cells = dict(zip(SCHEMA_FIELDS, row))
            report.n_rows += 1
            record = ExperimentRecord(
                smiles=cells["smiles"],
                cas=cells["cas"] or None,
                column_spec=cells["column_spec"],
                flow_rate_ml_min=_parse_cell(cells["flow_rate_ml_min"], float,
                                             row_number, "flow_rate_ml_min"),
                pe_ea_ratio=cells["pe_ea_ratio"],
                purity=_parse_cell(cells["purity"], float, row_number, "purity"),
                density_g_ml=(_parse_cell(cells["density_g_ml"], float,
                                          row_number, "density_g_ml")
                              if cells["density_g_ml"] else None),
                sample_mass_mg=_parse_cell(cells["sample_mass_mg"], float,
                                           row_number, "sample_mass_mg"),
                loading_solvent=cells["loading_solvent"],
                loading_volume_ml=_parse_cell(cells["loading_volume_ml"], float,
                                              row_number, "loading_volume_ml"),
                t1_min=_parse_cell(cells["t1_min"], float, row_number, "t1_min"),
                t2_min=_parse_cell(cells["t2_min"], float, row_number, "t2_min"),
            )
            if record.column_spec not in known_columns:
                report.rejected.append(
                    (row_number, f"unknown column_spec {record.column_spec!r}"))
                continue
            if record.flow_rate_ml_min <= 0:
                report.rejected.append((row_number, "nonpositive flow rate"))
                continue
            if not record.valid:
                report.n_sentinel += 1
                records.append(record)
                continue
            try:
                record.volumes()
            except OrderError as exc:
                report.rejected.append((row_number, f"OrderError: {exc}"))
                continue
            except ValueError as exc:
                report.rejected.append((row_number, str(exc)))
                continue
            report.n_valid += 1
            records.append(record)
    return records, report


def save_records(path, records: list[ExperimentRecord]) -> None:
    """Write records in schema order; floats use shortest round-trip
    form so a load/save cycle is bit-exact."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SCHEMA_FIELDS)
        for record in records:
            writer.writerow([
                record.smiles,
                record.cas or "",
                record.column_spec,
                repr(record.flow_rate_ml_min),
                record.pe_ea_ratio,
                repr(record.purity),
                "" if record.density_g_ml is None else repr(record.density_g_ml),
                repr(record.sample_mass_mg),
                record.loading_solvent,
                repr(record.loading_volume_ml),
                repr(record.t1_min),
                repr(record.t2_min),
            ])


def valid_records(records: list[ExperimentRecord]) -> list[ExperimentRecord]:
    return [r for r in records if r.valid]


def volume_targets(records: list[ExperimentRecord]) -> np.ndarray:
    """(n, 2) array of start/end volumes for valid records."""
    return np.array([r.volumes()[:2] for r in records])


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint, covering train/validation/test index lists."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int
    proportions: tuple[float, float, float]


def split_random(n: int, proportions=(0.8, 0.1, 0.1),
                 seed: int = 0) -> DatasetSplit:
    """Seeded random split with sizes within one record of targets.

    Raises:
        BadProportionsError: proportions negative or not summing to 1.
    """
    proportions = tuple(float(p) for p in proportions)
    if len(proportions) != 3 or any(p < 0 for p in proportions) \
            or abs(sum(proportions) - 1.0) > 1e-9:
        raise BadProportionsError(f"bad proportions {proportions}")
    order = np.random.default_rng(seed).permutation(n)
    sizes = _apportion(n, proportions)
    train = order[:sizes[0]]
    validation = order[sizes[0]:sizes[0] + sizes[1]]
    test = order[sizes[0] + sizes[1]:]
    return DatasetSplit(np.sort(train), np.sort(validation), np.sort(test),
                        seed, proportions)


def _apportion(n: int, proportions: tuple[float, ...]) -> list[int]:
    """Largest-remainder apportionment of n items."""
    raw = [n * p for p in proportions]
    base = [int(math.floor(r)) for r in raw]
    remainder = n - sum(base)
    leftovers = sorted(range(len(raw)), key=lambda i: raw[i] - base[i],
                       reverse=True)
    for i in leftovers[:remainder]:
        base[i] += 1
    return base


def kfold(n: int, k: int = 20, seed: int = 0) -> list[np.ndarray]:
    """k disjoint covering folds whose sizes differ by at most one.

    Raises:
        KTooLargeError: k exceeds n.
    """
    if k > n:
        raise KTooLargeError(f"k={k} exceeds n={n}")
    if k < 1:
        raise ValueError("k must be >= 1")
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(fold) for fold in np.array_split(order, k)]


def similarity_partition(train_fps: list[chemfeat.Fingerprint],
                         test_fps: list[chemfeat.Fingerprint],
                         thresholds=SIMILARITY_THRESHOLDS,
                         ) -> dict[float, list[int]]:
    """Group test molecules by their nearest-training similarity.

    For each threshold, the group lists the test indices having at
    least one training molecule at tanimoto similarity >= threshold.
    An empty training set yields empty groups.
    """
    best = np.zeros(len(test_fps))
    for i, test_fp in enumerate(test_fps):
        best[i] = max(
            (chemfeat.tanimoto(test_fp, train_fp) for train_fp in train_fps),
            default=-1.0)
    return {
        float(threshold): [i for i in range(len(test_fps))
                           if best[i] >= threshold]
        for threshold in thresholds
    }


def inject_noise(targets: np.ndarray, ratio: float, seed: int = 0,
                 indices: np.ndarray | None = None) -> np.ndarray:
    """Additive Gaussian noise with sd = ratio x sd(targets), per column.

    Only rows in ``indices`` (default: all) are perturbed, so the same
    call can leave validation/test targets untouched.

    Raises:
        RatioOutOfRangeError: ratio outside [0, 1].
    """
    if not 0.0 <= ratio <= 1.0:
        raise RatioOutOfRangeError(f"noise ratio {ratio} outside [0, 1]")
    targets = np.array(targets, dtype=float)
    if ratio == 0.0:
        return targets
    if indices is None:
        indices = np.arange(targets.shape[0])
    rng = np.random.default_rng(seed)
    subset = targets[indices]
    scale = ratio * subset.std(axis=0)
    targets[indices] = subset + rng.normal(0.0, 1.0, size=subset.shape) * scale
    return targets


def r_squared(pred, truth) -> float:
    """Coefficient of determination; NaN when the truth has no variance."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise LengthMismatchError(f"{pred.shape} vs {truth.shape}")
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        return float("nan")
    ss_res = float(np.sum((truth - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def mae(pred, truth) -> float:
    """Mean absolute error."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise LengthMismatchError(f"{pred.shape} vs {truth.shape}")
    return float(np.mean(np.abs(pred - truth)))


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

# 60 structures spanning nonpolar hydrocarbons through amides; every
# entry parses with the in-package grammar subset.
SYNTH_CORPUS: tuple[tuple[str, str], ...] = (
    ("hexane", "CCCCCC"),
    ("heptane", "CCCCCCC"),
    ("cyclohexane", "C1CCCCC1"),
    ("methylcyclohexane", "CC1CCCCC1"),
    ("1-hexene", "C=CCCCC"),
    ("benzene", "c1ccccc1"),
    ("toluene", "Cc1ccccc1"),
    ("p-xylene", "Cc1ccc(C)cc1"),
    ("mesitylene", "Cc1cc(C)cc(C)c1"),
    ("ethylbenzene", "CCc1ccccc1"),
    ("styrene", "C=Cc1ccccc1"),
    ("naphthalene", "c1ccc2ccccc2c1"),
    ("chlorobenzene", "Clc1ccccc1"),
    ("bromobenzene", "Brc1ccccc1"),
    ("1-chlorobutane", "CCCCCl"),
    ("benzyl-chloride", "ClCc1ccccc1"),
    ("4-bromotoluene", "Cc1ccc(Br)cc1"),
    ("diethyl-ether", "CCOCC"),
    ("dibutyl-ether", "CCCCOCCCC"),
    ("anisole", "COc1ccccc1"),
    ("4-chloroanisole", "COc1ccc(Cl)cc1"),
    ("tetrahydrofuran", "C1CCOC1"),
    ("allyl-phenyl-ether", "C=CCOc1ccccc1"),
    ("ethyl-acetate", "CCOC(C)=O"),
    ("butyl-acetate", "CCCCOC(C)=O"),
    ("ethyl-propanoate", "CCOC(=O)CC"),
    ("methyl-benzoate", "COC(=O)c1ccccc1"),
    ("ethyl-benzoate", "CCOC(=O)c1ccccc1"),
    ("methyl-salicylate", "COC(=O)c1ccccc1O"),
    ("acetone", "CC(C)=O"),
    ("2-butanone", "CCC(C)=O"),
    ("cyclohexanone", "O=C1CCCCC1"),
    ("acetophenone", "CC(=O)c1ccccc1"),
    ("benzaldehyde", "O=Cc1ccccc1"),
    ("4-methylbenzaldehyde", "Cc1ccc(C=O)cc1"),
    ("ethanol", "CCO"),
    ("1-butanol", "CCCCO"),
    ("2-propanol", "CC(C)O"),
    ("cyclohexanol", "OC1CCCCC1"),
    ("benzyl-alcohol", "OCc1ccccc1"),
    ("2-phenylethanol", "OCCc1ccccc1"),
    ("phenol", "Oc1ccccc1"),
    ("p-cresol", "Cc1ccc(O)cc1"),
    ("2-allylphenol", "C=CCc1ccccc1O"),
    ("acetic-acid", "CC(O)=O"),
    ("benzoic-acid", "OC(=O)c1ccccc1"),
    ("aniline", "Nc1ccccc1"),
    ("n-methylaniline", "CNc1ccccc1"),
    ("triethylamine", "CCN(CC)CC"),
    ("benzylamine", "NCc1ccccc1"),
    ("acetanilide", "CC(=O)Nc1ccccc1"),
    ("dimethylformamide", "CN(C)C=O"),
    ("n-methylacetamide", "CNC(C)=O"),
    ("acetonitrile", "CC#N"),
    ("benzonitrile", "N#Cc1ccccc1"),
    ("pyridine", "c1ccncc1"),
    ("2-methylpyridine", "Cc1ccccn1"),
    ("furan", "c1ccoc1"),
    ("thiophene", "c1ccsc1"),
    ("nitrobenzene", "O=[N+]([O-])c1ccccc1"),
)

# Retention-law constants (fixed; published with the truth table).
GEN_C0 = -0.6
GEN_C1 = 2.4
GEN_C2 = 0.6
GEN_C3 = 1.1
GEN_WIDTH = 0.35
GEN_SIGMA_START = 0.08
GEN_SIGMA_WIDTH = 0.18

# Dead-volume scale per column size class, mL.
GEN_V0 = {"4g": 6.0, "8g": 12.0, "25g": 30.0, "40g": 48.0}

SYNTH_SAMPLE_MASSES = (20.0, 40.0, 80.0, 160.0)
SYNTH_LOADING_VOLUMES = (0.5, 1.0)


def generator_law(tpsa: float, hbd: float, ea_fraction: float,
                  v0: float) -> tuple[float, float]:
    """Noiseless start/end volumes of the synthetic retention law."""
    exponent = (GEN_C0 + GEN_C1 * tpsa / 100.0 + GEN_C2 * hbd
                - GEN_C3 * math.log(1.0 + 9.0 * ea_fraction))
    v_start = v0 * (1.0 + math.exp(exponent))
    return v_start, v_start * (1.0 + GEN_WIDTH)


@dataclass(frozen=True)
class SynthDataset:
    """Generated records plus the noiseless law values per record."""

    records: list[ExperimentRecord]
    truth: np.ndarray  # (n, 2) noiseless start/end volumes
    seed: int


def synth_dataset(n: int, seed: int = 0, column_specs=("4g",),
                  noise_scale: float = 1.0) -> SynthDataset:
    """Generate n records with known ground truth.

    Args:
        n: number of records (>= 1).
        seed: RNG seed; the dataset is deterministic per seed.
        column_specs: size classes to sample uniformly.
        noise_scale: multiplies both lognormal noise widths; 0 makes
            records equal the closed-form law.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    descriptor_cache: dict[str, tuple[float, float]] = {}
    for _, smiles in SYNTH_CORPUS:
        desc = chemfeat.descriptor_vector(molparse.parse_smiles(smiles))
        descriptor_cache[smiles] = (desc.tpsa, desc.hbd)

    records: list[ExperimentRecord] = []
    truth = np.empty((n, 2))
    for i in range(n):
        name, smiles = SYNTH_CORPUS[rng.integers(len(SYNTH_CORPUS))]
        column = column_specs[rng.integers(len(column_specs))]
        ratio = ELUENT_RATIOS[rng.integers(len(ELUENT_RATIOS))]
        mass = SYNTH_SAMPLE_MASSES[rng.integers(len(SYNTH_SAMPLE_MASSES))]
        load_volume = SYNTH_LOADING_VOLUMES[rng.integers(len(SYNTH_LOADING_VOLUMES))]
        flow = graphrep.column_flow_rate(column)
        tpsa, hbd = descriptor_cache[smiles]
        _, ea_fraction = graphrep.parse_eluent_ratio(ratio)
        v_start_law, v_end_law = generator_law(tpsa, hbd, ea_fraction,
                                               GEN_V0[column])
        truth[i] = (v_start_law, v_end_law)
        start_noise = math.exp(noise_scale * GEN_SIGMA_START * rng.standard_normal())
        width_noise = math.exp(noise_scale * GEN_SIGMA_WIDTH * rng.standard_normal())
        v_start = v_start_law * start_noise
        v_end = v_start * (1.0 + GEN_WIDTH * width_noise)
        records.append(ExperimentRecord(
            smiles=smiles,
            cas=None,
            column_spec=column,
            flow_rate_ml_min=flow,
            pe_ea_ratio=ratio,
            purity=round(float(rng.uniform(0.95, 1.0)), 4),
            density_g_ml=None,
            sample_mass_mg=mass,
            loading_solvent="DCM",
            loading_volume_ml=load_volume,
            t1_min=v_start / flow,
            t2_min=v_end / flow,
        ))
    return SynthDataset(records, truth, seed)


# ---------------------------------------------------------------------------
# Robustness sweeps
# ---------------------------------------------------------------------------

TRAIN_PROPORTION_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
NOISE_RATIO_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


def sweep(records: list[ExperimentRecord], kind: str, grid=None,
          config=None, seed: int = 0) -> list[dict]:
    """Train one model per grid point against a shared test set.

    ``kind`` is "proportion" (training-set fraction of the whole
    dataset) or "noise" (additive noise ratio on training targets).
    Returns one row per grid point with r2/mae for both volume targets.
    """
    from .models import training  # deferred: models depend on this module

    records = valid_records(records)
    if kind == "proportion":
        grid = TRAIN_PROPORTION_GRID if grid is None else tuple(grid)
        if max(grid) > 0.7:
            raise ValueError("training proportion above 0.7 would overlap "
                             "the fixed validation/test blocks")
    elif kind == "noise":
        grid = NOISE_RATIO_GRID if grid is None else tuple(grid)
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")

    n = len(records)
    order = np.random.default_rng(seed).permutation(n)
    n_test = max(1, int(round(0.2 * n)))
    n_val = max(1, int(round(0.1 * n)))
    test_idx = order[:n_test]
    val_idx = order[n_test:n_test + n_val]
    pool_idx = order[n_test + n_val:]
    test = [records[i] for i in test_idx]
    validation = [records[i] for i in val_idx]
    test_truth = volume_targets(test)

    rows: list[dict] = []
    for value in grid:
        if kind == "proportion":
            n_train = max(1, int(round(value * n)))
            train = [records[i] for i in pool_idx[:n_train]]
            train_targets = None
        else:
            train = [records[i] for i in pool_idx]
            train_targets = inject_noise(volume_targets(train), value,
                                         seed=seed + 1)
        model = training.fit(train, validation, config,
                             train_targets=train_targets)
        predicted = model.predict_records(test)
        rows.append({
            "grid": float(value),
            "r2_v_start": r_squared(predicted[:, 0, 1], test_truth[:, 0]),
            "r2_v_end": r_squared(predicted[:, 1, 1], test_truth[:, 1]),
            "mae_v_start": mae(predicted[:, 0, 1], test_truth[:, 0]),
            "mae_v_end": mae(predicted[:, 1, 1], test_truth[:, 1]),
            "n_train": len(train),
        })
    return rows


def write_table(path, rows: list[dict]) -> None:
    """Write a list of uniform dicts as comma-separated text."""
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
