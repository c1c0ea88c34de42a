import json

import numpy as np
import pytest

from biasprobe.errors import TraceFormatError
from biasprobe.objectives import Objective
from biasprobe.optimizers import GaConfig, PsoConfig, ga_run, pso_run
from biasprobe.rng import Lcg48Engine
from biasprobe.traceio import (TraceWriter, read_final_best, read_first_snapshot,
                               read_header_and_final, read_trace, write_trace)


@pytest.fixture
def trace():
    tr = ga_run(GaConfig(5, budget=500), Objective.named("ackley", 3), None, Lcg48Engine(1),
                snapshot_every=100)
    tr.seed, tr.master_seed, tr.run_index = 1, 0, 0
    return tr


def test_roundtrip_bit_exact(tmp_path, trace):
    p = tmp_path / "t.jsonl"
    write_trace(p, trace)
    back = read_trace(p)
    assert back.algorithm == "ga" and back.config == trace.config
    assert back.objective == trace.objective and back.seed == 1
    assert len(back.snapshots) == len(trace.snapshots)
    for a, b in zip(trace.snapshots, back.snapshots):
        assert a.evaluations_used == b.evaluations_used
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.fitnesses, b.fitnesses)
    assert np.array_equal(back.final_best.position, trace.final_best.position)
    assert back.final_best.fitness == trace.final_best.fitness
    assert back.final_best.index == trace.final_best.index


def test_roundtrip_extreme_floats(tmp_path, trace):
    s = trace.snapshots[0]
    s.positions[0, 0] = 5e-324
    s.positions[0, 1] = 1 - 2 ** -53
    s.fitnesses[0] = 0.1 + 0.2
    p = tmp_path / "x.jsonl"
    write_trace(p, trace)
    b = read_trace(p).snapshots[0]
    assert np.array_equal(b.positions, s.positions) and np.array_equal(b.fitnesses, s.fitnesses)


def test_fast_readers(tmp_path, trace):
    p = tmp_path / "t.jsonl"
    write_trace(p, trace)
    header, best = read_header_and_final(p)
    assert header["algorithm"] == "ga" and header["type"] == "header"
    assert best.fitness == trace.final_best.fitness
    assert read_final_best(p).index == trace.final_best.index
    first = read_first_snapshot(p)
    assert np.array_equal(first.positions, trace.snapshots[0].positions)


def test_writer_streams_and_renames(tmp_path):
    p = tmp_path / "s.jsonl"
    w = TraceWriter(p, {"type": "header", "algorithm": "pso", "config": {}, "objective":
                        Objective.named("f0", 2).to_dict()})
    tr = pso_run(PsoConfig(3, budget=30), Objective.named("f0", 2), None, Lcg48Engine(2),
                 snapshot_every=10, sink=w, keep_snapshots=False)
    assert not p.exists()
    assert len((tmp_path / "s.jsonl.part").read_text().splitlines()) == 5
    w.close(tr.final_best)
    assert p.exists() and not (tmp_path / "s.jsonl.part").exists()
    assert [s.evaluations_used for s in read_trace(p).snapshots] == [3, 10, 20, 30]


def test_writer_requires_a_snapshot(tmp_path, trace):
    w = TraceWriter(tmp_path / "e.jsonl", {"type": "header"})
    with pytest.raises(TraceFormatError):
        w.close(trace.final_best)


def test_keys_in_fixed_order(tmp_path, trace):
    p = tmp_path / "t.jsonl"
    write_trace(p, trace)
    lines = p.read_text().splitlines()
    assert lines[1].startswith('{"type":"snapshot","evaluations_used":5,')
    assert lines[-1].startswith('{"type":"final_best","evaluations_used":500,')
    assert list(json.loads(lines[0])) == sorted(json.loads(lines[0]))


def _write(tmp_path, text):
    p = tmp_path / "bad.jsonl"
    p.write_text(text)
    return p


def test_malformed_json_reports_line(tmp_path, trace):
    good = tmp_path / "g.jsonl"
    write_trace(good, trace)
    lines = good.read_text().splitlines()
    lines[2] = lines[2][:-5]
    p = _write(tmp_path, "\n".join(lines) + "\n")
    with pytest.raises(TraceFormatError, match="bad.jsonl:3"):
        read_trace(p)


def test_truncated_trace(tmp_path, trace):
    good = tmp_path / "g.jsonl"
    write_trace(good, trace)
    lines = good.read_text().splitlines()
    p = _write(tmp_path, "\n".join(lines[:-1]) + "\n")
    with pytest.raises(TraceFormatError, match="truncated"):
        read_trace(p)
    with pytest.raises(TraceFormatError):
        read_header_and_final(p)


@pytest.mark.parametrize("text,pattern", [
    ("", "empty"),
    ('{"type":"snapshot"}\n', "header"),
    ('{"algorithm":"ga"}\n', "type"),
    ('{"type":"header","algorithm":"ga","config":{},"objective":{}}\n{"type":"oops"}\n', "unknown"),
    ('{"type":"header","algorithm":"ga","config":{},"objective":{}}\n'
     '{"type":"snapshot","evaluations_used":1,"positions":[[0.1]],"fitnesses":[0.1,0.2]}\n',
     "disagree"),
    ('{"type":"header","config":{},"objective":{}}\n', "lacks 'algorithm'"),
])
def test_malformed_records(tmp_path, text, pattern):
    with pytest.raises(TraceFormatError, match=pattern):
        read_trace(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(TraceFormatError, match="cannot open"):
        read_trace(tmp_path / "nope.jsonl")
