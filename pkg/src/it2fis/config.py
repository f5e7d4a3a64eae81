"""Key=value configuration covering every tunable default.

A config file is plain text: one `key=value` per line, `#` comments and blank
lines ignored.  Values stay strings until a typed getter converts them, so
file contents and built-in defaults go through identical parsing.  Unknown
keys are rejected (typo protection); keys starting with `outlier.` are open
ended, each defining one outlier rule as `col=value&col2=value2` conjunctions
(an empty value disables that rule).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError
from .learning import TuneConfig
from .preprocess import COVID_CATEGORICAL, OutlierRule, PreprocessConfig
from .rules import InferenceConfig

DEFAULTS = {
    # data pipeline
    "label_column": "icu",
    "corr_threshold": "0.85",
    "missing_codes": "97,98,99",
    "drop_columns": "id,entry_date,date_symptoms,date_died",
    "categorical_columns": ",".join(COVID_CATEGORICAL),
    "outlier.male_pregnancy": "sex=2&pregnancy=1",
    # clustering
    "fuzziness": "2.0",
    "c_max": "10",
    "cluster_tol": "1e-6",
    "cluster_max_iter": "300",
    "selection_seeds": "5",
    "gk_regularization": "1e-3",
    "cluster_scan_subsample": "20000",
    # tuning
    "learning_rate": "0.01",
    "epochs": "100",
    "patience": "10",
    "batch": "full",
    "spread": "0.2",
    "threshold_sweep": "101",
    # inference
    "defuzzifier": "centroid",
    "yager_w": "2.0",
    "aggregation": "weighted",
    # evaluation
    "train_ratio": "0.7",
    "stratified": "true",
    "knn_k": "5",
    "nb_alpha": "1.0",
}


@dataclass(frozen=True)
class Config:
    values: dict

    @classmethod
    def defaults(cls) -> "Config":
        return cls(dict(DEFAULTS))

    def updated(self, overrides: dict) -> "Config":
        merged = dict(self.values)
        for k, v in overrides.items():
            if k not in DEFAULTS and not k.startswith("outlier."):
                raise DataError(f"unknown config key {k!r}")
            merged[k] = v
        return Config(merged)

    def get(self, key) -> str:
        return self.values[key]

    def get_float(self, key) -> float:
        try:
            return float(self.values[key])
        except ValueError:
            raise DataError(
                f"config {key}={self.values[key]!r} is not a number"
            ) from None

    def get_int(self, key) -> int:
        try:
            return int(self.values[key])
        except ValueError:
            raise DataError(
                f"config {key}={self.values[key]!r} is not an integer"
            ) from None

    def get_bool(self, key) -> bool:
        v = self.values[key].strip().lower()
        if v in ("true", "yes", "on", "1"):
            return True
        if v in ("false", "no", "off", "0"):
            return False
        raise DataError(f"config {key}={self.values[key]!r} is not a boolean")

    def get_list(self, key) -> tuple:
        v = self.values[key].strip()
        return tuple(p.strip() for p in v.split(",") if p.strip()) if v else ()

    def outlier_rules(self) -> tuple:
        rules = []
        for k, v in self.values.items():
            if not k.startswith("outlier."):
                continue
            v = v.strip()
            if not v:
                continue  # empty value disables the rule
            conditions = []
            for clause in v.split("&"):
                col, sep, val = clause.strip().partition("=")
                if not sep or not col.strip():
                    raise DataError(
                        f"config {k}: expected col=value clauses, got {clause!r}"
                    )
                conditions.append((col.strip(), val.strip()))
            rules.append(OutlierRule(k[len("outlier."):], tuple(conditions)))
        return tuple(rules)


def parse_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    out = {}
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise DataError(f"config {path} line {i}: expected key=value")
        out[key.strip()] = value.strip()
    return out


def load_config(path=None, overrides=None) -> Config:
    cfg = Config.defaults()
    if path is not None:
        cfg = cfg.updated(parse_config_file(path))
    if overrides:
        cfg = cfg.updated({k: str(v) for k, v in overrides.items() if v is not None})
    return cfg


def preprocess_config(cfg: Config) -> PreprocessConfig:
    missing = cfg.get_list("missing_codes") + ("",)  # empty cell always missing
    return PreprocessConfig(
        label_column=cfg.get("label_column"),
        corr_threshold=cfg.get_float("corr_threshold"),
        missing_codes=missing,
        drop_columns=cfg.get_list("drop_columns"),
        categorical_columns=cfg.get_list("categorical_columns"),
        outlier_rules=cfg.outlier_rules(),
    )


def tune_config(cfg: Config, seed=0) -> TuneConfig:
    return TuneConfig(
        learning_rate=cfg.get_float("learning_rate"),
        epochs=cfg.get_int("epochs"),
        batch=cfg.get("batch"),
        patience=cfg.get_int("patience"),
        seed=seed,
    )


def inference_config(cfg: Config, threshold=None) -> InferenceConfig:
    try:
        return InferenceConfig(
            tnorm="product",
            defuzzifier=cfg.get("defuzzifier"),
            yager_w=cfg.get_float("yager_w"),
            aggregation=cfg.get("aggregation"),
            threshold=threshold,
        )
    except ValueError as exc:
        raise DataError(str(exc)) from None
