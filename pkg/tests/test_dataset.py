import numpy as np
import pytest

from mteband import Dataset, load_csv
from mteband.exceptions import EmptyData, MissingColumn, NonBinaryTreatment


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_missing_rows_dropped_with_count(tmp_path):
    path = _write(
        tmp_path,
        "y,d,x1,z1\n"
        "1.0,1,0.2,0.5\n"
        ",0,0.1,0.4\n"
        "2.0,1,0.3,0.6\n"
        "3.0,0,0.4,0.7\n"
        "4.0,0,0.5,0.8\n",
    )
    data = load_csv(path, y="y", d="d", x=["x1"], z=["x1", "z1"])
    assert data.n == 4
    assert data.dropped_rows == 1
    assert data.x_names == ("x1",)
    assert data.z_names == ("x1", "z1")


def test_non_binary_treatment(tmp_path):
    path = _write(tmp_path, "y,d,x1,z1\n1.0,2,0.2,0.5\n2.0,0,0.1,0.4\n")
    with pytest.raises(NonBinaryTreatment):
        load_csv(path, y="y", d="d", x=["x1"], z=["x1", "z1"])


def test_missing_column(tmp_path):
    path = _write(tmp_path, "y,d,x1\n1.0,1,0.2\n")
    with pytest.raises(MissingColumn):
        load_csv(path, y="y", d="d", x=["x1"], z=["x1", "nope"])


def test_all_rows_incomplete(tmp_path):
    path = _write(tmp_path, "y,d,x1,z1\n,1,0.2,0.5\n,0,0.1,0.4\n")
    with pytest.raises(EmptyData):
        load_csv(path, y="y", d="d", x=["x1"], z=["x1", "z1"])


def test_derived_squared_scaled_column(tmp_path):
    path = _write(tmp_path, "y,d,exper,z1\n1.0,1,10,0.5\n2.0,0,20,0.4\n")
    data = load_csv(
        path, y="y", d="d", x=["exper^2/100"], z=["exper^2/100", "z1"]
    )
    assert np.allclose(data.x[:, 0], [1.0, 4.0])


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(
            y=np.zeros(3), d=np.zeros(2), x=np.zeros((3, 1)), z=np.zeros((3, 1))
        )
    with pytest.raises(NonBinaryTreatment):
        Dataset(
            y=np.zeros(3),
            d=np.array([0.0, 1.0, 0.5]),
            x=np.zeros((3, 1)),
            z=np.zeros((3, 1)),
        )


def test_subset_preserves_order():
    data = Dataset(
        y=np.arange(5.0),
        d=np.array([0.0, 1.0, 0.0, 1.0, 0.0]),
        x=np.arange(5.0)[:, None],
        z=np.arange(5.0)[:, None],
    )
    sub = data.subset(np.array([True, False, True, True, False]))
    assert np.array_equal(sub.y, [0.0, 2.0, 3.0])
    assert sub.n == 3
