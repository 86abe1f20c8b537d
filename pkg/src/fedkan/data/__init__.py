from .dataset import (
    CsvSchema,
    DataError,
    Dataset,
    Standardizer,
    load_csv,
    prepare_split,
    train_test_split,
)
from .partition import ClientShard, check_partition, partition_dirichlet, partition_uneven
from .schemas import SCHEMAS, get_schema
from .synthetic import SyntheticSpec, synth_generate

__all__ = [
    "ClientShard",
    "CsvSchema",
    "DataError",
    "Dataset",
    "SCHEMAS",
    "Standardizer",
    "SyntheticSpec",
    "check_partition",
    "get_schema",
    "load_csv",
    "partition_dirichlet",
    "partition_uneven",
    "prepare_split",
    "synth_generate",
    "train_test_split",
]
