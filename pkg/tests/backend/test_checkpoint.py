from __future__ import annotations

import struct

import numpy as np
import pytest

from mktcube.autodiff import ModelCheckpoint, OptimizerState, Tensor, adam_step, load_checkpoint, save_checkpoint
from mktcube.exceptions import FileFormatError, MissingInputError


@pytest.fixture
def trained_checkpoint() -> ModelCheckpoint:
    params = {
        "w": Tensor.parameter(np.array([[0.1, -0.2], [0.3, 1.0 / 3.0]])),
        "b": Tensor.parameter(np.array([np.pi])),
    }
    state = OptimizerState(learning_rate=0.01)
    adam_step(params, {"w": np.ones((2, 2)), "b": np.array([0.5])}, state)
    return ModelCheckpoint.capture(
        params,
        state,
        extras={"norm.min": np.array([-1.5, 2.0])},
        metadata={"model": "ma", "horizon": 5, "stock_order": ["S000", "S001"]},
    )


def test_checkpoint_round_trip_is_bit_exact(tmp_path, trained_checkpoint: ModelCheckpoint) -> None:
    path = save_checkpoint(trained_checkpoint, tmp_path / "nested" / "ma-h5.mktc")

    loaded = load_checkpoint(path)

    assert loaded.params.keys() == trained_checkpoint.params.keys()
    for name, values in trained_checkpoint.params.items():
        assert loaded.params[name].tobytes() == values.tobytes()
    assert loaded.optimizer is not None
    assert loaded.optimizer.step == 1
    assert loaded.optimizer.learning_rate == 0.01
    np.testing.assert_array_equal(loaded.optimizer.first_moment["w"], trained_checkpoint.optimizer.first_moment["w"])
    np.testing.assert_array_equal(loaded.optimizer.second_moment["b"], trained_checkpoint.optimizer.second_moment["b"])
    np.testing.assert_array_equal(loaded.extras["norm.min"], [-1.5, 2.0])
    assert loaded.metadata == {"model": "ma", "horizon": 5, "stock_order": ["S000", "S001"]}


def test_checkpoint_without_optimizer_round_trips() -> None:
    checkpoint = ModelCheckpoint(params={"scalar": np.array(2.5)})

    loaded = ModelCheckpoint.from_bytes(checkpoint.to_bytes())

    assert loaded.optimizer is None
    assert loaded.params["scalar"].shape == ()
    assert float(loaded.params["scalar"]) == 2.5


def test_capture_copies_live_parameters() -> None:
    weight = Tensor.parameter(np.zeros(3))
    checkpoint = ModelCheckpoint.capture({"weight": weight})

    weight.data[:] = 7.0

    np.testing.assert_array_equal(checkpoint.params["weight"], np.zeros(3))


def test_restore_into_overwrites_matching_parameters(trained_checkpoint: ModelCheckpoint) -> None:
    params = {"w": Tensor.parameter(np.zeros((2, 2))), "b": Tensor.parameter(np.zeros(1))}

    trained_checkpoint.restore_into(params)

    np.testing.assert_array_equal(params["w"].data, trained_checkpoint.params["w"])
    np.testing.assert_array_equal(params["b"].data, trained_checkpoint.params["b"])


def test_restore_into_rejects_mismatched_parameter_sets(trained_checkpoint: ModelCheckpoint) -> None:
    with pytest.raises(KeyError):
        trained_checkpoint.restore_into({"w": Tensor.parameter(np.zeros((2, 2)))})
    with pytest.raises(ValueError):
        trained_checkpoint.restore_into({"w": Tensor.parameter(np.zeros((3, 2))), "b": Tensor.parameter(np.zeros(1))})


def test_bad_magic_is_reported_at_offset_zero(trained_checkpoint: ModelCheckpoint) -> None:
    payload = b"XXXX" + trained_checkpoint.to_bytes()[4:]

    with pytest.raises(FileFormatError) as excinfo:
        ModelCheckpoint.from_bytes(payload, source="corrupt.mktc")

    assert excinfo.value.offset == 0
    assert "corrupt.mktc" in str(excinfo.value)


def test_unsupported_version_is_rejected(trained_checkpoint: ModelCheckpoint) -> None:
    payload = trained_checkpoint.to_bytes()
    payload = payload[:4] + struct.pack("<I", 99) + payload[8:]

    with pytest.raises(FileFormatError, match="version 99"):
        ModelCheckpoint.from_bytes(payload)


def test_truncated_checkpoint_reports_offset(trained_checkpoint: ModelCheckpoint) -> None:
    payload = trained_checkpoint.to_bytes()

    with pytest.raises(FileFormatError, match="truncated") as excinfo:
        ModelCheckpoint.from_bytes(payload[:40])

    assert 0 < excinfo.value.offset <= 40


def test_trailing_bytes_are_rejected(trained_checkpoint: ModelCheckpoint) -> None:
    with pytest.raises(FileFormatError, match="trailing"):
        ModelCheckpoint.from_bytes(trained_checkpoint.to_bytes() + b"\x00")


def test_missing_checkpoint_raises_missing_input(tmp_path) -> None:
    with pytest.raises(MissingInputError):
        load_checkpoint(tmp_path / "absent.mktc")
