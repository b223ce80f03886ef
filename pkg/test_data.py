#!/usr/bin/env python3
"""
Tests for corpus ingest, stratified splits and batch iteration
"""

import gzip
import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from feature_capsnet.config import build_config
from feature_capsnet.data import (
    BatchIterator,
    Dataset,
    load_idx,
    load_image_dir,
    permutation,
    prototype_patterns,
    split,
    toy_blobs,
    write_idx,
)
from feature_capsnet.data.sources import resolve_data
from feature_capsnet.errors import IngestError, UsageError

MASK = (1 << 64) - 1


def reference_permutation(n, seed, stream=0):
    """Independent rendition of the shuffle: splitmix64 seeding, xorshift64*, Fisher-Yates"""

    def mix(z):
        z = (z + 0x9E3779B97F4A7C15) & MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    state = mix(seed ^ mix(stream)) or 0x9E3779B97F4A7C15
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        state ^= state >> 12
        state ^= (state << 25) & MASK
        state ^= state >> 27
        j = (((state * 0x2545F4914F6CDD1D) & MASK) * (i + 1)) >> 64
        order[i], order[j] = order[j], order[i]
    return order


def write_raw_idx(path, magic, dims, payload):
    path.write_bytes(struct.pack(f">{1 + len(dims)}I", magic, *dims) + bytes(payload))


def write_pgm(path, pixels):
    height, width = pixels.shape
    path.write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.astype(np.uint8).tobytes())


@pytest.fixture
def idx_pair(tmp_path):
    """Three 2x2 images with labels 0, 1, 2"""
    pixels = [0, 255, 51, 102] * 3
    write_raw_idx(tmp_path / "images", 0x803, (3, 2, 2), pixels)
    write_raw_idx(tmp_path / "labels", 0x801, (3,), [0, 1, 2])
    return tmp_path / "images", tmp_path / "labels"


class TestIdx:
    def test_load(self, idx_pair):
        dataset = load_idx(*map(str, idx_pair))
        assert len(dataset) == 3
        assert dataset.image_size == (2, 2)
        assert dataset.class_count == 3
        assert_array_equal(dataset.labels, [0, 1, 2])

    def test_pixel_scaling(self, idx_pair):
        dataset = load_idx(*map(str, idx_pair))
        assert dataset.images[0, 0, 0, 1] == 1.0
        assert dataset.images[0, 0, 0, 0] == 0.0
        assert dataset.images[0, 0, 1, 0] == pytest.approx(0.2)

    def test_explicit_class_count(self, idx_pair):
        assert load_idx(*map(str, idx_pair), class_count=10).class_count == 10

    def test_bad_magic(self, tmp_path, idx_pair):
        write_raw_idx(tmp_path / "images", 0x802, (3, 2, 2), [0] * 12)
        with pytest.raises(IngestError, match="unexpected magic") as info:
            load_idx(*map(str, idx_pair))
        assert info.value.offset == 0

    def test_truncated_payload(self, tmp_path, idx_pair):
        write_raw_idx(tmp_path / "images", 0x803, (3, 2, 2), [0] * 10)
        with pytest.raises(IngestError, match="Truncated") as info:
            load_idx(*map(str, idx_pair))
        assert info.value.path == str(tmp_path / "images")

    def test_count_mismatch(self, tmp_path, idx_pair):
        write_raw_idx(tmp_path / "labels", 0x801, (2,), [0, 1])
        with pytest.raises(IngestError, match="does not match"):
            load_idx(*map(str, idx_pair))

    def test_label_beyond_class_count(self, idx_pair):
        with pytest.raises(IngestError, match="exceeds class count"):
            load_idx(*map(str, idx_pair), class_count=2)

    def test_gzip_and_write(self, tmp_path):
        original = prototype_patterns(4, 12, (6, 6), seed=3)
        images, labels = tmp_path / "i.gz", tmp_path / "l.gz"
        write_idx(original, str(images), str(labels))
        with gzip.open(images, "rb") as f:
            assert struct.unpack(">I", f.read(4))[0] == 0x803
        loaded = load_idx(str(images), str(labels), class_count=4)
        assert_array_equal(loaded.labels, original.labels)
        assert np.abs(loaded.images - original.images).max() <= 0.5 / 255 + 1e-6


class TestImageDir:
    def test_manifest_of_three_lines(self, tmp_path):
        for i in range(3):
            write_pgm(tmp_path / f"{i}.pgm", np.full((4, 5), 50 * i))
        (tmp_path / "manifest.csv").write_text("0.pgm,0\n1.pgm,1\n2.pgm,1\n")
        dataset = load_image_dir(str(tmp_path), size=(6, 6))
        assert len(dataset) == 3
        assert dataset.image_size == (6, 6)
        assert dataset.class_count == 2
        assert_array_equal(dataset.labels, [0, 1, 1])

    def test_header_row_skipped(self, tmp_path):
        write_pgm(tmp_path / "a.pgm", np.zeros((3, 3)))
        (tmp_path / "manifest.csv").write_text("path,label\na.pgm,0\n")
        assert len(load_image_dir(str(tmp_path), size=(3, 3))) == 1

    def test_non_integer_label_names_line(self, tmp_path):
        write_pgm(tmp_path / "a.pgm", np.zeros((3, 3)))
        (tmp_path / "manifest.csv").write_text("a.pgm,0\na.pgm,cat\n")
        with pytest.raises(IngestError, match="line 2") as info:
            load_image_dir(str(tmp_path), size=(3, 3))
        assert info.value.line == 2

    def test_missing_image_names_line(self, tmp_path):
        (tmp_path / "manifest.csv").write_text("gone.pgm,0\n")
        with pytest.raises(IngestError) as info:
            load_image_dir(str(tmp_path), size=(3, 3))
        assert info.value.line == 1

    @pytest.mark.parametrize("policy", ["pad", "resize"])
    def test_resize_policies_keep_range(self, tmp_path, policy):
        write_pgm(tmp_path / "a.pgm", np.arange(20).reshape(4, 5) * 12)
        (tmp_path / "manifest.csv").write_text("a.pgm,0\n")
        dataset = load_image_dir(str(tmp_path), size=(8, 8), resize_policy=policy)
        assert dataset.image_size == (8, 8)
        assert 0.0 <= dataset.images.min() and dataset.images.max() <= 1.0


class TestDataset:
    def test_rejects_out_of_range_labels(self):
        with pytest.raises(UsageError):
            Dataset(np.zeros((2, 1, 3, 3)), [0, 3], 3)

    def test_fingerprint_tracks_content(self):
        a = toy_blobs(4, (8, 8), seed=0)
        assert a.fingerprint() == toy_blobs(4, (8, 8), seed=0).fingerprint()
        assert a.fingerprint() != toy_blobs(4, (8, 8), seed=1).fingerprint()


class TestSplit:
    def test_sixty_samples(self):
        corpus = prototype_patterns(3, 60, (6, 6))
        train, test = split(corpus, 2 / 3, seed=0)
        assert (len(train), len(test)) == (40, 20)

    def test_per_class_quotas(self):
        corpus = prototype_patterns(3, 90, (6, 6))
        train, test = split(corpus, 2 / 3, seed=5)
        assert_array_equal(train.class_counts(), [20, 20, 20])
        assert_array_equal(test.class_counts(), [10, 10, 10])

    def test_partition(self):
        corpus = prototype_patterns(4, 50, (6, 6))
        train, test = split(corpus, 0.7, seed=2)
        seen = np.concatenate([train.images, test.images]).reshape(50, -1)
        assert len(train) + len(test) == 50
        assert len({row.tobytes() for row in seen}) == len({row.tobytes() for row in corpus.images.reshape(50, -1)})

    def test_same_seed_same_split(self):
        corpus = prototype_patterns(3, 45, (6, 6))
        a, _ = split(corpus, 2 / 3, seed=9)
        b, _ = split(corpus, 2 / 3, seed=9)
        assert a.fingerprint() == b.fingerprint()

    @pytest.mark.parametrize("ratio", [0.0, 1.0, 1.5])
    def test_bad_ratio(self, ratio):
        with pytest.raises(UsageError):
            split(toy_blobs(4, (6, 6)), ratio, seed=0)


class TestShuffle:
    def test_matches_reference(self):
        for seed, stream in [(0, 0), (1, 0), (42, 3), (2**40 + 7, 11)]:
            assert permutation(37, seed, stream).tolist() == reference_permutation(37, seed, stream)

    def test_is_permutation(self):
        assert sorted(permutation(100, 7).tolist()) == list(range(100))

    def test_different_seeds_differ(self):
        assert permutation(100, 1).tolist() != permutation(100, 2).tolist()

    def test_trivial_sizes(self):
        assert permutation(0, 3).tolist() == []
        assert permutation(1, 3).tolist() == [0]


class TestBatchIterator:
    def test_epoch_covers_every_sample_once(self):
        iterator = BatchIterator(toy_blobs(23, (6, 6)), batch_size=5, seed=4)
        batches = list(iterator.epoch(0))
        assert len(batches) == len(iterator) == 5
        assert [len(b.labels) for b in batches] == [5, 5, 5, 5, 3]
        assert sorted(np.concatenate([b.indices for b in batches]).tolist()) == list(range(23))

    def test_order_depends_on_seed_and_epoch_only(self):
        dataset = toy_blobs(30, (6, 6))
        a = BatchIterator(dataset, 8, seed=1)
        b = BatchIterator(dataset, 8, seed=1)
        assert_array_equal(a.order(3), b.order(3))
        assert a.order(0).tolist() != a.order(1).tolist()

    def test_no_shuffle(self):
        assert_array_equal(BatchIterator(toy_blobs(6, (6, 6)), 4, shuffle=False).order(2), np.arange(6))

    def test_bad_batch_size(self):
        with pytest.raises(UsageError):
            BatchIterator(toy_blobs(4, (6, 6)), 0)


class TestResolveData:
    def test_synthetic_blobs(self, tiny_config):
        config = tiny_config(n_class=2, image_height=12, image_width=12)
        train, test = resolve_data("synthetic:blobs", config)
        assert (len(train), len(test)) == (20, 10)
        assert (train.split, test.split) == ("train", "test")
        assert train.image_size == (12, 12)

    def test_synthetic_patterns_counts(self, tiny_config):
        config = tiny_config()
        train, test = resolve_data("synthetic:patterns:12:6", config)
        assert (len(train), len(test)) == (12, 6)
        assert train.class_count == 3

    def test_bad_synthetic_counts(self):
        with pytest.raises(IngestError):
            resolve_data("synthetic:patterns:many:6", build_config())

    def test_unknown_synthetic(self):
        with pytest.raises(IngestError, match="Unknown synthetic"):
            resolve_data("synthetic:nope", build_config())

    def test_idx_directory(self, tmp_path, tiny_config):
        corpus = prototype_patterns(3, 9, (6, 6))
        write_idx(corpus, str(tmp_path / "train-images-idx3-ubyte"), str(tmp_path / "train-labels-idx1-ubyte"))
        config = tiny_config(n_class=5, image_height=8, image_width=8)
        train, test = resolve_data(str(tmp_path), config)
        assert test is None
        assert train.class_count == 5
        assert train.image_size == (8, 8)

    def test_manifest_directory(self, tmp_path, tiny_config):
        lines = []
        for i in range(9):
            write_pgm(tmp_path / f"{i}.pgm", np.full((4, 4), 20 * i))
            lines.append(f"{i}.pgm,{i % 3}")
        (tmp_path / "manifest.csv").write_text("\n".join(lines) + "\n")
        train, test = resolve_data(str(tmp_path), tiny_config(image_height=6, image_width=6))
        assert (len(train), len(test)) == (6, 3)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(IngestError):
            resolve_data(str(tmp_path / "absent"), build_config())

    def test_empty_directory(self, tmp_path):
        with pytest.raises(IngestError, match="neither"):
            resolve_data(str(tmp_path), build_config())
