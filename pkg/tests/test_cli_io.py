import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surgerisk.cli_io import (LOAN_COLUMNS, PipelineConfig, ValidationError, parse_inputs, read_banks,
                              read_basin, read_demographics, read_loans, read_panel, read_storm_specs,
                              run_pipeline, synth_generate, write_loans)
from surgerisk.cli_io.cli import EXIT_INVALID, EXIT_NUMERICAL, exit_code, main
from surgerisk.cli_io.pipeline import PipelineError
from surgerisk.econometrics import RankDeficientError
from surgerisk.exposure import LoanRecord
from surgerisk.geo_index import load_dem, load_polygons_geojson, load_zones_geojson
from surgerisk.surge_sim import SimulationError

HEADER = ",".join(LOAN_COLUMNS)
GOOD = "2012,Z1,200000,1,first,owner,250000,0,1,full,B01,bank"


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


# parsers

def test_empty_loans_file(tmp_path):
    res = read_loans(write_lines(tmp_path / "l.csv", [HEADER]))
    assert res.records == [] and res.diagnostics == [] and res.rows == 0
    res.check()


def test_negative_amount_rejected_with_line(tmp_path):
    bad = GOOD.replace("200000", "-5")
    res = read_loans(write_lines(tmp_path / "l.csv", [HEADER, GOOD, bad, GOOD]))
    assert len(res.records) == 2
    [d] = res.diagnostics
    assert d.line == 3 and "amount" in d.message


def test_bad_header_is_fatal(tmp_path):
    path = write_lines(tmp_path / "l.csv", [HEADER.replace("amount", "amt"), GOOD])
    with pytest.raises(ValidationError, match="expected .*amount.*found .*amt"):
        read_loans(path)


def test_bad_row_fraction_limit(tmp_path):
    bad = GOOD.replace("first", "second")
    few = read_loans(write_lines(tmp_path / "a.csv", [HEADER] + [GOOD] * 199 + [bad]))
    few.check(0.01)  # 0.5%
    many = read_loans(write_lines(tmp_path / "b.csv", [HEADER] + [GOOD] * 99 + [bad]))
    with pytest.raises(ValidationError, match="1 of 100"):
        many.check(0.01)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(["good", "neg", "short", "lien", "year", "blank"]), max_size=30))
def test_every_line_accepted_or_diagnosed(tmp_path_factory, kinds):
    rows = {"good": GOOD, "neg": GOOD.replace("200000", "-1"), "short": "2012,Z1",
            "lien": GOOD.replace("first", "junior"), "year": GOOD.replace("2012", "20x2"), "blank": ""}
    path = write_lines(tmp_path_factory.mktemp("p") / "l.csv", [HEADER] + [rows[k] for k in kinds])
    res = read_loans(path)
    data = [k for k in kinds if k != "blank"]
    assert res.rows == len(data)
    assert len(res.records) + len(res.diagnostics) == len(data)
    assert len(res.records) == data.count("good")
    bad_lines = [i + 2 for i, k in enumerate(kinds) if k not in ("good", "blank")]
    assert [d.line for d in res.diagnostics] == bad_lines


def test_loans_round_trip(tmp_path):
    loans = [LoanRecord(2010 + k % 3, f"Z{k}", 1000 + k, agency=k % 2 == 0, io=k % 3 == 0,
                        doc_type=("full", "low", "nina")[k % 3], lender_kind=("bank", "nonbank")[k % 2],
                        property_value=5000 + k) for k in range(20)]
    write_loans(tmp_path / "l.csv", loans)
    assert read_loans(tmp_path / "l.csv").records == loans


# config

def test_config_validation(tmp_path):
    with pytest.raises(ValidationError, match="ascending"):
        PipelineConfig(thresholds=(10.0, 5.0))
    with pytest.raises(ValidationError, match="comparator"):
        PipelineConfig(comparator="lt")
    (tmp_path / "c.json").write_text(json.dumps({"loanz": "x.csv"}))
    with pytest.raises(ValidationError, match="unknown config keys"):
        PipelineConfig.from_json(tmp_path / "c.json")


def test_config_paths_relative_and_env(tmp_path, monkeypatch):
    (tmp_path / "c.json").write_text(json.dumps({"loans": "data/l.csv", "output_dir": "o"}))
    cfg = PipelineConfig.from_json(tmp_path / "c.json")
    assert cfg.loans == str(tmp_path / "data/l.csv")
    assert cfg.resolved_output_dir() == tmp_path / "o"
    monkeypatch.setenv("SURGERISK_OUTPUT_DIR", str(tmp_path / "env"))
    assert cfg.resolved_output_dir() == tmp_path / "env"


def test_primary_threshold_override():
    cfg = PipelineConfig(thresholds=(5.0, 7.0, 15.0), primary_threshold_ft=7.0)
    assert cfg.primary_flag == "surge7_cat4_high"
    assert PipelineConfig().primary_flag == "surge5_cat4_high"


# synthetic bundle

def test_synth_bounds(synth_bundle):
    b = synth_bundle
    assert b.basin.shape[0] <= 200 and b.basin.shape[1] <= 200
    assert len(b.zones) <= 100 and len(b.loans) <= 50_000
    zone_ids = {z.zone_id for z in b.zones}
    assert {ln.zone_id for ln in b.loans} <= zone_ids
    assert {d.zone_id for d in b.demographics} == zone_ids
    assert {r[0] for r in b.panel} == zone_ids
    assert {s.category for s in b.storms} == {3, 4}


def test_synth_round_trip(synth_bundle, synth_config):
    d = synth_config.parent
    b = synth_bundle
    assert read_loans(d / "loans.csv").records == b.loans
    assert read_banks(d / "banks.csv").records == b.banks
    assert read_demographics(d / "demographics.csv").records == b.demographics
    assert read_panel(d / "panel.csv").records == b.panel
    assert read_storm_specs(d / "storms.csv").records == b.storms
    basin = read_basin(d / "basin.txt")
    assert basin.same_grid(b.basin)
    assert np.array_equal(basin.cell_elevation, b.basin.cell_elevation)
    assert np.array_equal(basin.friction_coeff, b.basin.friction_coeff) and basin.pole == b.basin.pole
    dem = load_dem(d / "dem.asc", d / "sea_mask.asc")
    assert np.array_equal(dem.values, b.dem.values, equal_nan=True)
    assert np.array_equal(dem.sea_mask, b.dem.sea_mask)
    assert (dem.xll, dem.yll, dem.cellsize) == (b.dem.xll, b.dem.yll, b.dem.cellsize)
    zones = load_zones_geojson(d / "zones.geojson")
    assert [z.zone_id for z in zones] == [z.zone_id for z in b.zones]
    assert all(z.geometry.equals_exact(o.geometry, 0.0) for z, o in zip(zones, b.zones))
    sfha = load_polygons_geojson(d / "sfha.geojson")
    assert all(g.equals_exact(o, 0.0) for g, o in zip(sfha, b.sfha))


def test_synth_deterministic(synth_bundle, tmp_path):
    again = synth_generate(0, "small")
    again.write(tmp_path)
    first = synth_bundle.write(tmp_path / "first").parent
    for f in sorted(first.iterdir()):
        if f.is_file() and f.name != "pipeline.json":
            assert f.read_bytes() == (tmp_path / f.name).read_bytes(), f.name


def test_synth_rejects_unknown_scale():
    with pytest.raises(ValueError):
        synth_generate(0, "huge")


@pytest.fixture(scope="module")
def pipeline_state(synth_config, tmp_path_factory):
    cfg = PipelineConfig.from_json(synth_config, output_dir=str(tmp_path_factory.mktemp("run")))
    return run_pipeline(cfg)


def test_pipeline_io_gap(pipeline_state):
    s = pipeline_state.summary
    gap = s["io_share_in_zone"] - s["io_share_other"]
    assert abs(gap - 0.08) < 0.005
    rows = list(open(pipeline_state.out / "table2_surge5_cat4_high.csv"))[1:]
    by_year = {}
    for r in rows:
        f = r.strip().split(",")
        by_year.setdefault(f[0], {})[f[1]] = int(f[3]) / int(f[2])
    for year, sides in by_year.items():
        assert abs(sides["in"] - sides["out"] - 0.08) < 0.005, year


def test_pipeline_manifest(pipeline_state, synth_config):
    m = json.loads((pipeline_state.out / "manifest.json").read_text())
    assert m["inputs"]["loans"]["file"] == "loans.csv"
    assert set(m["outputs"]) == set(pipeline_state.outputs)
    for name, digest in m["outputs"].items():
        assert len(digest) == 64
        assert not os.path.isabs(name)
    assert m["unavailable"] == []


def test_pipeline_without_sfha(synth_config, tmp_path):
    cfg = PipelineConfig.from_json(synth_config, output_dir=str(tmp_path))
    cfg = PipelineConfig(**{**cfg.__dict__, "sfha": None})
    state = run_pipeline(cfg, ("classify", "exposure"))
    assert (tmp_path / "table1_surge5_cat4_high.csv").exists()
    assert (tmp_path / "table2_surge5_cat4_high.csv").exists()
    assert not (tmp_path / "table1_sfha_any.csv").exists()
    un = json.loads((tmp_path / "manifest.json").read_text())["unavailable"]
    assert "table1_sfha_any.csv" in un and "layer:sfha" in un
    assert "table4_lenders.csv:sfha" in un and "table3_demographics.csv:sfha" in un


def test_fatal_stage_keeps_diagnostics(synth_config, tmp_path):
    bad = tmp_path / "loans.csv"
    write_lines(bad, ["year,zone"])
    cfg = PipelineConfig.from_json(synth_config, output_dir=str(tmp_path / "o"), loans=str(bad))
    with pytest.raises(PipelineError) as ei:
        run_pipeline(cfg)
    assert ei.value.stage == "parse"
    diags = [json.loads(l) for l in open(tmp_path / "o" / "diagnostics.jsonl")]
    assert diags[-1]["severity"] == "fatal" and diags[-1]["stage"] == "parse"


def test_parse_inputs_requires_zones(synth_config):
    cfg = PipelineConfig.from_json(synth_config)
    cfg = PipelineConfig(**{**cfg.__dict__, "zones": None})
    with pytest.raises(ValidationError, match="zones"):
        parse_inputs(cfg)


# command line

def test_exit_codes():
    assert exit_code(ValidationError("x")) == EXIT_INVALID
    assert exit_code(PipelineError("simulate", SimulationError("nan"))) == EXIT_NUMERICAL
    assert exit_code(PipelineError("regress", RankDeficientError("rank"))) == EXIT_NUMERICAL
    assert exit_code(PipelineError("parse", ValueError("bad"))) == EXIT_INVALID


def test_cli_bad_header_exit_2(synth_config, tmp_path, capsys):
    cfg = json.loads(synth_config.read_text())
    bad = tmp_path / "loans.csv"
    write_lines(bad, ["year,zone"])
    cfg.update({k: str(synth_config.parent / v) for k, v in cfg.items()
                if isinstance(v, str) and k in ("storms", "dem", "sea_mask", "zones", "sfha", "banks",
                                                 "demographics", "panel")})
    cfg["basins"] = [str(synth_config.parent / b) for b in cfg["basins"]]
    cfg["loans"] = str(bad)
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    code = main(["exposure", "--config", str(tmp_path / "c.json"), "--output-dir", str(tmp_path / "o")])
    assert code == EXIT_INVALID
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["stage"] == "parse" and "bad header" in err["message"]


def test_cli_classify_flags(synth_config, tmp_path):
    out = tmp_path / "o"
    code = main(["classify", "--config", str(synth_config), "--output-dir", str(out),
                 "--threshold-ft", "8", "--comparator", "gt", "--tide", "mean", "--category", "3"])
    assert code == 0
    header = (out / "classification.csv").read_text().splitlines()[0]
    assert "surge8_cat3_mean" in header
    m = json.loads((out / "manifest.json").read_text())
    assert m["settings"]["comparator"] == "gt" and m["settings"]["primary_threshold_ft"] == 8.0
