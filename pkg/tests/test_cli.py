import csv
import json

from hypothesis import given, strategies as st

from qmemlearn.cli import CSV_COLUMNS, RunConfig, build_parser, config_from_args, main


def test_wg_unitary_table(capsys):
    assert main(["wg", "--group", "u", "--k", "2", "--d", "4"]) == 0
    assert capsys.readouterr().out.splitlines() == ["[1,1] 1/15", "[2] -1/60"]


def test_wg_orthogonal_and_symplectic(capsys):
    assert main(["wg", "--group", "o", "--k", "2", "--d", "5"]) == 0
    assert capsys.readouterr().out.splitlines() == ["[1,1] 3/70", "[2] -1/140"]
    assert main(["wg", "--group", "sp", "--k", "1", "--d", "6"]) == 0
    assert capsys.readouterr().out.splitlines() == ["[1] 1/6"]


def test_wg_usage_errors(capsys):
    assert main(["wg", "--group", "sp", "--k", "2", "--d", "5"]) == 2
    assert main(["wg", "--group", "u", "--k", "9", "--d", "5"]) == 2
    assert main(["wg", "--group", "x", "--k", "2", "--d", "5"]) == 2
    assert main([]) == 2


def test_unknown_pair_lists_valid_pairs(capsys):
    code = main(["run", "--task", "purity", "--learner", "bell", "--n", "2", "--t", "4", "--trials", "2",
                 "--seed", "0"])
    assert code == 2
    assert "purity/memoryless" in capsys.readouterr().err


def test_run_writes_csv(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["run", "--task", "channel", "--learner", "memory", "--n", "3", "--t", "6", "--trials", "20",
                 "--seed", "1", "--out", str(out), "--jobs", "1"])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert out.read_text().splitlines()[0] == "task,learner,n,T,trials,successes,rate,ci_lo,ci_hi,copies,seed"
    assert rows[0]["task"] == "channel" and rows[0]["trials"] == "20"


def test_sweep_csv_and_jsonl_agree(tmp_path):
    base = ["sweep", "--task", "purity", "--learner", "memoryless", "--n-list", "2,3", "--t-list", "4,8",
            "--trials", "30", "--seed", "5", "--jobs", "1"]
    c, j = tmp_path / "s.csv", tmp_path / "s.jsonl"
    assert main(base + ["--out", str(c)]) == 0
    assert main(base + ["--out", str(j), "--format", "jsonl"]) == 0
    rows = list(csv.DictReader(c.open()))
    lines = [json.loads(x) for x in j.read_text().splitlines()]
    assert len(rows) == len(lines) == 4
    for r, js in zip(rows, lines):
        assert list(js) == list(CSV_COLUMNS)
        assert {k: str(v) for k, v in js.items()} == r


def test_sweep_independent_of_jobs(tmp_path):
    base = ["sweep", "--task", "channel", "--learner", "memory", "--n-list", "3", "--t-list", "2,4",
            "--trials", "20", "--seed", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(base + ["--out", str(a), "--jobs", "1"])
    main(base + ["--out", str(b), "--jobs", "2"])
    assert a.read_text() == b.read_text()


def test_verify_is_deterministic(capsys):
    args = ["verify", "--seed", "7", "--draws", "20000", "--jobs", "1"]
    first = main(args)
    out1 = capsys.readouterr().out
    second = main(args)
    out2 = capsys.readouterr().out
    assert out1 == out2
    # the symplectic lower envelope check fails, so the suite reports failure
    assert first == second == 1
    assert "FAIL g.wg_bounds [group=sp,k=2,d=128" in out1


def test_verify_subset_passes(capsys):
    assert main(["verify", "--only", "a,b,d", "--jobs", "1"]) == 0


def test_parsed_config_round_trips():
    args = build_parser().parse_args(["sweep", "--task", "purity", "--learner", "memoryless", "--n-list", "4,6",
                                      "--t-list", "8,16", "--trials", "3", "--seed", "1", "--out", "x.csv"])
    cfg = config_from_args(args)
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    assert cfg.n_list == [4, 6] and cfg.t_list == [8, 16]


@given(st.builds(
    RunConfig,
    command=st.sampled_from(["run", "sweep"]),
    task=st.sampled_from(["pauli", "purity", "channel"]),
    learner=st.sampled_from(["naive", "memoryless"]),
    n_list=st.lists(st.integers(1, 12), min_size=1, max_size=4),
    t_list=st.lists(st.integers(1, 10 ** 6), min_size=1, max_size=4),
    trials=st.integers(1, 1000),
    seed=st.integers(0, 2 ** 63 - 1),
    out=st.one_of(st.none(), st.text(min_size=1, max_size=10)),
    format=st.sampled_from(["csv", "jsonl"]),
    epsilon=st.floats(0.01, 0.3),
    m=st.integers(2, 64),
    group=st.sampled_from(["u", "o", "sp"]),
    jobs=st.integers(1, 8),
))
def test_run_config_round_trip(cfg):
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
