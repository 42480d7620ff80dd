"""File formats, configuration, synthetic inputs and the pipeline driver."""
from .config import OUTPUT_ENV, PipelineConfig
from .formats import (BANK_COLUMNS, DEMO_COLUMNS, LOAN_COLUMNS, PANEL_COLUMNS, STORM_COLUMNS, Diagnostic,
                      ParseResult, StormSpec, ValidationError, read_banks, read_basin, read_demographics,
                      read_field, read_loans, read_panel, read_storm_specs, read_storms, read_table,
                      write_banks, write_basin, write_demographics, write_diagnostics, write_field,
                      write_loans, write_panel, write_storms, write_table)
from .pipeline import Dataset, PipelineError, RunState, build_classification, parse_inputs, run_pipeline
from .synth import SCALES, SynthBundle, SynthParams, synth_generate
