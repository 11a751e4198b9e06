from .metrics import doa_error, energy_ratio_db, si_sdr
from .records import EvalRecord, read_records, write_records
from .report import BucketReport, bucket_report
