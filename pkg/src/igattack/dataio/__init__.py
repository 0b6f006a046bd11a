from .datasets import (
    DataError,
    Dataset,
    load_csv,
    read_schema,
    schema_path_for,
    synth_blobs,
    train_test_split,
    write_csv,
    write_schema,
)
from .modelfile import (
    DimensionError,
    FormatVersionError,
    ModelFileError,
    TruncatedPayloadError,
    dumps_model,
    load_model,
    loads_model,
    save_model,
)
from .reports import dumps_record, loads_record, read_records, write_records
from .training import TrainingError, TrainResult, accuracy, train_mlp
