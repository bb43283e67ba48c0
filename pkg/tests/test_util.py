from hategraph.util import (config_hash, data_lines, fmt, provenance_line,
                            write_delimited)


def test_config_hash_order_independent():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 12


def test_provenance_line_carries_seeds():
    line = provenance_line("diffuse", {"seed": 3, "walk_seed": 9, "cap": 5})
    assert line.startswith("# hategraph ")
    assert "stage=diffuse" in line
    assert "seed=3" in line and "walk_seed=9" in line
    assert "cap" not in line.split("config_hash=")[1].split()[1:]


def test_provenance_line_no_wall_clock():
    a = provenance_line("x", {"seed": 1})
    b = provenance_line("x", {"seed": 1})
    assert a == b


def test_write_delimited_roundtrip(tmp_path):
    path = tmp_path / "out.csv"
    write_delimited(path, ["a", "b"], [[1, fmt(0.5)], [2, fmt(1.25)]],
                    stage="t", params={"seed": 0})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "a,b"
    assert lines[2] == "1,0.5"
    parsed = list(data_lines(path))
    assert parsed[0][1] == "a,b"   # provenance line skipped
    assert len(parsed) == 3


def test_fmt_round_trips_floats():
    import numpy as np
    for x in (0.1, 1 / 3, 1e-17, 12345.6789):
        assert float(fmt(x)) == x
        assert float(fmt(np.float64(x))) == x
    assert fmt(np.float64(0.25)) == "0.25"
    assert fmt(7) == "7"
    assert fmt("s") == "s"
