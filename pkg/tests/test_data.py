import gzip

import numpy as np
import pytest

from coherentfl.schemas.models import PartitionMode
from coherentfl.services.data.dataset_service import DatasetService
from coherentfl.services.data.idx import (
    TYPE_CODES,
    IdxTensor,
    load_idx_file,
    parse_idx,
    serialize_idx,
)
from coherentfl.services.learning.federated_service import FederatedService
from coherentfl.services.learning.models import LogisticProblem
from coherentfl.utils.errors import (
    ConfigurationError,
    DimensionError,
    IdxDimensionOverflowError,
    IdxMagicError,
    IdxParseError,
    IdxTruncatedError,
)

LABELS = bytes.fromhex("00000801" "00000003" "050009")
IMAGE = bytes.fromhex("00000803" "00000001" "00000002" "00000002" "00010203")


class TestParseIdx:
    def test_label_file(self):
        tensor = parse_idx(LABELS)
        assert tensor.shape == (3,)
        np.testing.assert_array_equal(tensor.data, [5, 0, 9])

    def test_image_file(self):
        tensor = parse_idx(IMAGE)
        assert tensor.shape == (1, 2, 2)
        np.testing.assert_array_equal(tensor.data[0], [[0, 1], [2, 3]])

    def test_truncated_payload(self):
        with pytest.raises(IdxTruncatedError) as info:
            parse_idx(IMAGE[:-1])
        assert info.value.offset == 16 + 3

    def test_bad_magic(self):
        with pytest.raises(IdxMagicError) as info:
            parse_idx(b"\x01" + LABELS[1:])
        assert info.value.offset == 0

    def test_unknown_type_code(self):
        with pytest.raises(IdxMagicError) as info:
            parse_idx(bytes.fromhex("00000701" "00000000"))
        assert info.value.offset == 2

    def test_dimension_overflow(self):
        header = bytes.fromhex("00000803" "00010000" "00010000" "00000002")
        with pytest.raises(IdxDimensionOverflowError) as info:
            parse_idx(header)
        assert info.value.offset == 12

    def test_truncated_header(self):
        with pytest.raises(IdxTruncatedError):
            parse_idx(bytes.fromhex("00000803" "00000001"))

    def test_trailing_bytes(self):
        with pytest.raises(IdxParseError) as info:
            parse_idx(LABELS + b"\x00")
        assert not isinstance(info.value, IdxTruncatedError)
        assert info.value.offset == 11

    def test_round_trip(self, rng):
        codes = sorted(TYPE_CODES)
        for _ in range(1000):
            code = codes[rng.integers(len(codes))]
            shape = tuple(int(s) for s in rng.integers(1, 5, size=rng.integers(1, 4)))
            dtype = TYPE_CODES[code]
            if dtype.kind == "f":
                data = rng.standard_normal(shape).astype(dtype)
            else:
                info = np.iinfo(dtype)
                data = rng.integers(info.min, info.max, size=shape, endpoint=True).astype(dtype)
            raw = serialize_idx(IdxTensor(data=data, type_code=code))
            assert serialize_idx(parse_idx(raw)) == raw

    def test_gzip_file(self, tmp_path):
        path = tmp_path / "labels.idx.gz"
        path.write_bytes(gzip.compress(LABELS))
        np.testing.assert_array_equal(load_idx_file(path).data, [5, 0, 9])

    def test_plain_file(self, tmp_path):
        path = tmp_path / "images.idx"
        path.write_bytes(IMAGE)
        assert load_idx_file(path).shape == (1, 2, 2)

    @pytest.mark.parametrize("cut", [0, 12])
    def test_corrupt_gzip(self, tmp_path, cut):
        packed = gzip.compress(LABELS)
        path = tmp_path / "labels.idx.gz"
        path.write_bytes(packed[: len(packed) - cut] if cut else packed[:2] + b"\xff" * 20)
        with pytest.raises(IdxParseError) as info:
            load_idx_file(path)
        assert info.value.exit_code == 2


class TestFromIdx:
    def test_normalized_features(self):
        images = IdxTensor(data=np.array([[[0, 255], [51, 102]]], dtype=np.uint8))
        labels = IdxTensor(data=np.array([3], dtype=np.uint8))
        dataset = DatasetService.from_idx(images, labels)
        np.testing.assert_array_equal(dataset.features, [[0.0, 1.0, 0.2, 0.4]])
        assert dataset.classes == 4

    def test_raw_features(self):
        labels = parse_idx(bytes.fromhex("00000801" "00000001" "05"))
        dataset = DatasetService.from_idx(parse_idx(IMAGE), labels, normalize=False)
        np.testing.assert_array_equal(dataset.features, [[0.0, 1.0, 2.0, 3.0]])
        assert dataset.classes == 6

    def test_count_mismatch(self):
        with pytest.raises(DimensionError):
            DatasetService.from_idx(parse_idx(IMAGE), parse_idx(LABELS))

    def test_no_samples(self):
        images = parse_idx(bytes.fromhex("00000803" "00000000" "00000002" "00000002"))
        labels = parse_idx(bytes.fromhex("00000801" "00000000"))
        with pytest.raises(ConfigurationError):
            DatasetService.from_idx(images, labels)

    def test_load_pair(self, tmp_path):
        (tmp_path / "images").write_bytes(gzip.compress(IMAGE))
        (tmp_path / "labels").write_bytes(bytes.fromhex("00000801" "00000001" "07"))
        dataset = DatasetService.load_idx_dataset(
            str(tmp_path / "images"), str(tmp_path / "labels")
        )
        assert dataset.n == 1
        assert dataset.labels[0] == 7


class TestSynthetic:
    def test_same_seed_same_data(self):
        a = DatasetService.synthetic_classification(100, 4, 3, 2.0, seed=1)
        b = DatasetService.synthetic_classification(100, 4, 3, 2.0, seed=1)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_needs_two_classes(self):
        with pytest.raises(ConfigurationError):
            DatasetService.synthetic_classification(10, 2, 1, 1.0, seed=0)

    @staticmethod
    def trained_accuracy(separation: float) -> float:
        full = DatasetService.synthetic_classification(4000, 5, 4, separation, seed=6)
        train, test = DatasetService.train_test_split(full, 0.5, seed=6)
        problem = LogisticProblem(5, 4, l2=1e-3)
        fed = FederatedService(problem)
        theta, _ = fed.centralized_optimum([train], [1.0], np.zeros(problem.dim), 0.5, 300)
        return problem.accuracy(theta, test)

    def test_no_separation_is_chance_level(self):
        assert abs(self.trained_accuracy(0.0) - 0.25) < 0.05

    def test_large_separation_is_separable(self):
        assert self.trained_accuracy(10.0) > 0.99

    def test_quadratic_clusters(self):
        data = DatasetService.synthetic_quadratic(60, 3, 3, 0.5, seed=2)
        assert data.n == 60
        assert set(np.unique(data.labels)) == {0, 1, 2}


class TestPartition:
    def test_single_device_gets_everything(self):
        data = DatasetService.synthetic_classification(50, 2, 2, 1.0, seed=0)
        (only,) = DatasetService.partition(data, 1)
        np.testing.assert_array_equal(only.features, data.features)
        np.testing.assert_array_equal(only.labels, data.labels)

    def test_iid_sizes(self):
        data = DatasetService.synthetic_classification(100, 2, 2, 1.0, seed=0)
        parts = DatasetService.partition(data, 4, PartitionMode.IID)
        assert [p.n for p in parts] == [25, 25, 25, 25]

    def test_label_shards_are_nearly_pure(self):
        data = DatasetService.synthetic_classification(400, 2, 4, 1.0, seed=0)
        parts = DatasetService.partition(data, 4, PartitionMode.LABEL_SHARD, 1, seed=3)
        for part in parts:
            assert np.bincount(part.labels).max() / part.n >= 0.9

    @pytest.mark.parametrize("mode", list(PartitionMode))
    def test_complete_and_disjoint(self, mode):
        data = DatasetService.synthetic_classification(103, 2, 3, 1.0, seed=0)
        parts = DatasetService.partition(data, 5, mode, 2, seed=1)
        assert sum(p.n for p in parts) == data.n
        rows = np.concatenate([p.features for p in parts])
        assert len({tuple(r) for r in rows}) == data.n
        assert {tuple(r) for r in rows} == {tuple(r) for r in data.features}

    def test_too_few_samples(self):
        data = DatasetService.synthetic_classification(3, 2, 2, 1.0, seed=0)
        with pytest.raises(ConfigurationError):
            DatasetService.partition(data, 4)

    def test_train_test_split(self):
        data = DatasetService.synthetic_classification(100, 2, 2, 1.0, seed=0)
        train, test = DatasetService.train_test_split(data, 0.2, seed=0)
        assert (train.n, test.n) == (80, 20)
