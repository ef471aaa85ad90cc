import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlcc import MultilayerInstance, validate
from mlcc.bench.cli import main
from mlcc.bench.harness import (
    CSV_COLUMNS,
    BenchRecord,
    format_table,
    load_instances,
    parse_config,
    read_csv,
    records_to_csv,
    run_bench,
    write_gnuplot,
)
from mlcc.bench.network import (
    MultilayerNetwork,
    generate_instance,
    parse_edgelist,
    planted_network,
    write_edgelist,
)
from mlcc.errors import InstanceFormatError
from mlcc.instance import read_instance, write_instance

from helpers import random_general


# ---------------------------------------------------------------- ingestion


def test_ingest_two_lines():
    net = parse_edgelist(["1 2 1 3.0", "2 3 2 1.0"], 2)
    assert net.n == 3 and [len(l) for l in net.layers] == [1, 1]
    assert net.layers[0] == {(0, 1): 3.0} and net.layers[1] == {(1, 2): 1.0}


def test_ingest_empty():
    net = parse_edgelist([], 3)
    assert net.n == 0 and net.num_edges() == 0


def test_ingest_self_loop(caplog):
    with caplog.at_level(logging.WARNING):
        net = parse_edgelist(["1 1 1 2.0", "1 2 1 1.0"], 1)
    assert net.self_loops == 1 and net.num_edges() == 1
    assert "self-loop" in caplog.text


def test_ingest_zero_based_and_duplicates():
    net = parse_edgelist(["0 1 0 1.5", "1 0 0 2.0", "# c", "", "2 1 1 1.0"], 2)
    assert net.n == 3 and net.layers[0] == {(0, 1): 3.5}


@pytest.mark.parametrize(
    "lines,lineno",
    [(["1 2 1"], 1), (["1 2 1 1.0", "1 2 3 1.0"], 2), (["1 2 1 -1"], 1), (["1 2 1 1.0", "a 2 1 1"], 2)],
)
def test_ingest_errors(lines, lineno):
    with pytest.raises(InstanceFormatError) as err:
        parse_edgelist(lines, 2)
    assert err.value.line == lineno


def test_edgelist_file_roundtrip(tmp_path):
    net = planted_network(12, 3, seed=2)
    write_edgelist(net, tmp_path / "e.txt")
    from mlcc.bench.network import ingest_edgelist

    back = ingest_edgelist(tmp_path / "e.txt", 3)
    assert back.layers == net.layers


# ---------------------------------------------------------------- generation


def test_generate_single_edge():
    net = MultilayerNetwork(2, [{(0, 1): 4.0}])
    inst = generate_instance(net, "probability", seed=0)
    assert inst.weights(0, 0, 1) == (1.0, 0.0)
    assert generate_instance(net, "general", seed=0).weights(0, 0, 1) == (1.0, 0.0)


def test_generate_half_weight():
    net = MultilayerNetwork(3, [{(0, 1): 4.0, (1, 2): 2.0}])
    assert generate_instance(net, "probability").weights(0, 1, 2) == (0.75, 0.25)


def test_generate_reproducible():
    net = planted_network(10, 2, seed=1)
    a, b, c = (generate_instance(net, "probability", seed=s) for s in (1, 1, 2))
    assert a == b and a != c


def test_generate_non_edges_follow_protocol():
    net = planted_network(14, 2, seed=3)
    w_max = net.max_weight()
    for mode in ("general", "probability"):
        inst = generate_instance(net, mode, seed=5)
        assert validate(inst) == []
        iu, ju = np.triu_indices(14, 1)
        for l, edges in enumerate(net.layers):
            pool = {0.5 + w / w_max / 2 if mode == "probability" else w / w_max for w in edges.values()}
            for k, key in enumerate(zip(iu.tolist(), ju.tolist())):
                wp, wm = inst.plus[l, k], inst.minus[l, k]
                if key in edges:
                    assert wm == pytest.approx(1 - wp if mode == "probability" else 0.0)
                elif mode == "general":
                    assert wp == 0.0 and (wm == 0.0 or wm in pool)
                else:
                    assert (wp, wm) == (0.5, 0.5) or wm in pool


def test_generate_empty_layer_warns():
    net = MultilayerNetwork(3, [{(0, 1): 1.0}, {}])
    with pytest.warns(RuntimeWarning):
        inst = generate_instance(net, "probability")
    assert np.all(inst.plus[1] == 0.5)
    with pytest.raises(ValueError):
        generate_instance(MultilayerNetwork(0, [{}]), "general")


# ---------------------------------------------------------------- harness


def bad_triangle():
    # + + - triangle: the LP bound is tight at 1
    return MultilayerInstance.from_pairs(3, [{(0, 1): (1, 0), (1, 2): (1, 0), (0, 2): (0, 1)}])


def test_bench_exact_and_rg_ratios():
    recs = run_bench([("tri", bad_triangle()), ("rand", random_general(1, 6, 2))], ["exact", "rg"], "inf", timeout=None)
    assert [r.algorithm for r in recs] == ["exact", "rg", "exact", "rg"]
    assert all(r.status == "ok" and r.ratio >= 1 - 1e-9 for r in recs)
    assert recs[0].ratio == pytest.approx(1.0)


def test_bench_timeout_all_ot():
    inst = random_general(3, 8, 2)
    recs = run_bench([("a", inst)], ["rg", "pickbest", "agg", "exact"], "inf", timeout=0.001)
    assert recs and all(r.status == "OT" for r in recs)


def test_bench_repeats_and_modes():
    from mlcc.bench.network import planted_network

    inst = generate_instance(planted_network(8, 2, seed=0), "probability", seed=0)
    recs = run_bench([("p", inst)], ["threshold", "aggpr", "kwik"], 2, seed=5, repeats=3, timeout=None)
    by = {}
    for r in recs:
        by.setdefault(r.algorithm, []).append(r.seed)
    assert by == {"threshold": [5], "aggpr": [5, 6, 7], "kwik": [5, 6, 7]}
    # probability-only algorithms skip general instances
    assert run_bench([("g", random_general(0, 5, 1))], ["threshold"], "inf") == []
    with pytest.raises(ValueError):
        run_bench([("g", inst)], ["magic"])


def test_bench_record_validation():
    with pytest.raises(ValueError):
        BenchRecord("d", 3, 1, "inf", "rg", 0, 1.0, 2.0, 0.5, 0.1, "ok")
    rec = BenchRecord("d", "3", "1", "inf", "rg", "0", "1.5", "1.0", "1.5", "0.1", "ok")
    assert rec.n == 3 and rec.objective == 1.5


def same_record(a, b):
    for name in CSV_COLUMNS:
        x, y = getattr(a, name), getattr(b, name)
        if isinstance(x, float) and math.isnan(x):
            assert math.isnan(y)
        else:
            assert x == y


def test_csv_roundtrip(tmp_path):
    recs = run_bench([("tri", bad_triangle())], ["rg", "exact"], 2, timeout=None)
    recs.append(BenchRecord("x", 4, 2, "inf", "agg", 0, math.nan, 0.3, math.nan, 1.0, "OT"))
    text = records_to_csv(recs)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    path = tmp_path / "r.csv"
    path.write_text(text)
    for a, b in zip(recs, read_csv(path)):
        same_record(a, b)
    with pytest.raises(ValueError):
        read_csv("a,b\n1,2\n")


@settings(max_examples=40, deadline=None)
@given(st.floats(1, 1e6, allow_nan=False), st.floats(1e-3, 1, allow_nan=False), st.integers(0, 2**31))
def test_csv_floats_lossless(obj, lb_frac, seed):
    lb = obj * lb_frac
    rec = BenchRecord("d,x", 5, 2, "2", "rg", seed, obj, lb, obj / lb, 0.25, "ok")
    (back,) = read_csv(records_to_csv([rec]))
    same_record(rec, back)


def test_bench_csv_deterministic():
    inst = [("a", random_general(4, 7, 2))]
    a = records_to_csv(run_bench(inst, ["rg", "agg", "pickbest"], "inf", timeout=None), include_time=False)
    b = records_to_csv(run_bench(inst, ["rg", "agg", "pickbest"], "inf", timeout=None), include_time=False)
    assert a == b and "time_s" not in a.splitlines()[0]


def test_table_and_gnuplot(tmp_path):
    recs = run_bench([("tri", bad_triangle()), ("r", random_general(2, 6, 2))], ["rg", "agg"], "inf", timeout=None)
    table = format_table(recs)
    lines = table.splitlines()
    assert "Region growing" in lines[0] and "Aggregate" in lines[0]
    assert len(lines[0]) == len(lines[1]) and "*" in table
    dat, gp = write_gnuplot(recs, tmp_path / "plot")
    assert dat.read_text().splitlines()[0].split()[:2] == ["#", "dataset"]
    assert "plot 'plot.dat'" in gp.read_text()


def test_workers_keep_order():
    inst = [("a", random_general(5, 6, 2)), ("b", random_general(6, 6, 2))]
    serial = run_bench(inst, ["rg", "agg"], "inf", timeout=None)
    parallel = run_bench(inst, ["rg", "agg"], "inf", timeout=None, workers=2)
    assert records_to_csv(serial, False) == records_to_csv(parallel, False)


# ---------------------------------------------------------------- config and CLI


CONFIG = """
# small desk run
name = tiny
mode = general
p = inf
algorithms = rg, agg
repeats = 2
timeout = none
synthetic = n=8 L=2 seeds=0-1
instance = inst.mlcc
edgelist = net.txt layers=2 seeds=3
"""


def test_config_parse_and_load(tmp_path):
    write_instance(random_general(0, 5, 2), tmp_path / "inst.mlcc")
    write_edgelist(planted_network(6, 2, seed=0), tmp_path / "net.txt")
    cfg = parse_config(CONFIG, base=tmp_path)
    assert cfg.algorithms == ("rg", "agg") and cfg.timeout is None and cfg.repeats == 2
    names = [name for name, _ in load_instances(cfg)]
    assert names == ["synth-n8-L2-s0", "synth-n8-L2-s1", "inst", "net-s3"]
    with pytest.raises(ValueError):
        parse_config("bogus = 1")
    with pytest.raises(ValueError):
        parse_config("just words")


def test_cli_validate(tmp_path, capsys):
    good = tmp_path / "g.mlcc"
    write_instance(random_general(0, 4, 1), good)
    assert main(["validate", str(good)]) == 0
    bad = tmp_path / "b.mlcc"
    bad.write_text("mlcc general n=3 L=1\n0 0 1 1 1\n")
    assert main(["validate", str(bad)]) == 1
    assert "both + and - weights nonzero" in capsys.readouterr().out


def test_cli_gen_and_solve_deterministic(tmp_path, capsys):
    path = tmp_path / "x.mlcc"
    assert main(["gen", "--n", "9", "--L", "2", "--seed", "4", "-o", str(path)]) == 0
    assert validate(read_instance(path)) == []
    outs = []
    for _ in range(2):
        assert main(["solve", str(path), "--alg", "rg", "--p", "inf", "--bound"]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1] and "objective" in outs[0] and "time_s" not in outs[0]
    assert main(["solve", str(path), "--alg", "exact", "--time"]) == 0
    assert "time_s" in capsys.readouterr().out


@pytest.mark.parametrize("alg", ["kwik", "lpkwik", "threshold", "aggpr", "pickbest", "agg", "exact", "rg"])
def test_cli_solve_every_algorithm(tmp_path, capsys, alg):
    path = tmp_path / "p.mlcc"
    assert main(["gen", "--n", "7", "--L", "2", "--mode", "probability", "--seed", "1", "-o", str(path)]) == 0
    assert main(["solve", str(path), "--alg", alg, "--p", "2", "--seed", "3"]) == 0
    first = capsys.readouterr().out
    main(["solve", str(path), "--alg", alg, "--p", "2", "--seed", "3"])
    assert capsys.readouterr().out == first


def test_cli_errors(tmp_path, capsys):
    path = tmp_path / "g.mlcc"
    write_instance(random_general(0, 4, 1), path)
    assert main(["solve", str(path), "--alg", "threshold"]) == 2
    assert main(["solve", str(tmp_path / "missing")]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_bench(tmp_path, capsys):
    cfg = tmp_path / "b.conf"
    cfg.write_text("name = t\nalgorithms = rg, agg, exact\nrepeats = 1\nsynthetic = n=7 L=2 seeds=0-1\n")
    out = tmp_path / "out"
    assert main(["bench", "--config", str(cfg), "-o", str(out), "--no-time"]) == 0
    first = (out / "t.csv").read_text()
    assert main(["bench", "--config", str(cfg), "-o", str(out), "--no-time"]) == 0
    assert (out / "t.csv").read_text() == first
    assert (out / "t.txt").exists() and (out / "t.dat").exists() and (out / "t.gp").exists()
    assert "Region growing" in capsys.readouterr().out
