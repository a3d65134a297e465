import json

import numpy as np
import pytest

from graffopt import coords, io
from graffopt import problems as pr
from graffopt.errors import InvalidInput


@pytest.mark.parametrize("binary", [False, True])
def test_stiefel_roundtrip(tmp_path, binary):
    Y = coords.random_point(5, 2, 0)
    path = io.write_matrix(tmp_path / "y.graff", Y, binary=binary)
    back = io.read_matrix(path)
    assert isinstance(back, coords.StiefelPoint)
    assert np.array_equal(back.Y, Y.Y)


@pytest.mark.parametrize("binary", [False, True])
def test_projection_roundtrip(tmp_path, binary):
    P = coords.stiefel_to_projection(coords.random_point(4, 1, 1))
    back = io.read_matrix(io.write_matrix(tmp_path / "p.graff", P, binary=binary))
    assert isinstance(back, coords.ProjectionPoint) and back.k == 1
    assert np.array_equal(back.P, P.P)


def test_text_header(tmp_path):
    path = io.write_matrix(tmp_path / "m.txt", np.eye(3), "matrix", 1)
    assert path.read_text().splitlines()[0] == "GRAFF v1 2 1 form=matrix"


def test_bad_files(tmp_path):
    p = tmp_path / "bad"
    p.write_text("GRAFF v2 2 1 form=stiefel\n1 0\n0 1\n0 0\n")
    with pytest.raises(InvalidInput):
        io.read_matrix(p)
    p.write_text("GRAFF v1 2 1 form=stiefel\n1 0\n0 1\n")
    with pytest.raises(InvalidInput):
        io.read_matrix(p)
    with pytest.raises(InvalidInput):
        io.write_matrix(tmp_path / "x", np.eye(2))


@pytest.mark.parametrize("binary", [False, True])
def test_instances_roundtrip(tmp_path, binary):
    q = pr.quad_random(4, 1, 3)
    loaded = io.load_instance(io.save_instance(tmp_path / "q", q, "quadratic", binary))
    assert np.array_equal(loaded.M, q.M) and (loaded.n, loaded.k, loaded.seed) == (4, 1, 3)
    m = pr.mean_random(5, 2, 3, 7)
    loaded = io.load_instance(io.save_instance(tmp_path / "m", m, "mean", binary))
    assert len(loaded.points) == 3
    for a, b in zip(loaded.points, m.points):
        assert np.array_equal(a.Y, b.Y)


def test_checksum_detects_tampering(tmp_path):
    path = io.save_instance(tmp_path, pr.quad_random(3, 0, 0), "quadratic")
    manifest = json.loads(path.read_text())
    f = tmp_path / manifest["files"][0]
    f.write_text(f.read_text() + "\n")
    with pytest.raises(InvalidInput):
        io.load_instance(path)
