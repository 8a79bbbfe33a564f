"""Codecs and persistence: PGM, the binary model container, corpus sampling."""

import numpy as np
import pytest
from scipy.stats import chisquare

from patchdenoise.errors import CodecError, DataError, PersistenceError
from patchdenoise.io import (
    load_corpus,
    load_model,
    load_pgm,
    sample_patch_corpus,
    save_corpus,
    save_model,
    save_pgm,
)
from patchdenoise.io.modelfile import MAGIC

from conftest import make_natural_image, random_dae, random_gdbm, random_grbm


class TestPgm:
    def test_payload_scaling(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
        img = load_pgm(path)
        np.testing.assert_allclose(
            img, [[0.0, 1.0], [128 / 255, 64 / 255]], atol=1e-15)

    def test_save_load_save_is_byte_identical(self, tmp_path, rng):
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        save_pgm(rng.random((9, 13)), a)
        save_pgm(load_pgm(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_header_comments_are_skipped(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 1\n# another\n255\n" + bytes([7, 9]))
        img = load_pgm(path)
        assert img.shape == (1, 2)

    def test_wrong_magic_is_named(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P4\n2 2\n255\n" + bytes(4))
        with pytest.raises(CodecError, match="P4"):
            load_pgm(path)

    def test_truncated_payload_reports_offset(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + bytes(5))
        with pytest.raises(CodecError, match="byte offset"):
            load_pgm(path)

    def test_sixteen_bit_rejected(self, tmp_path):
        path = tmp_path / "deep.pgm"
        path.write_bytes(b"P5\n1 1\n65535\n" + bytes(2))
        with pytest.raises(CodecError):
            load_pgm(path)


class TestPng:
    def test_rgb_png_loads_as_channel_average(self, tmp_path):
        pytest.importorskip("PIL")
        from PIL import Image

        from patchdenoise.io import load_image

        arr = np.zeros((4, 5, 3), dtype=np.uint8)
        arr[..., 0] = 30
        arr[..., 1] = 60
        arr[..., 2] = 90
        path = tmp_path / "c.png"
        Image.fromarray(arr, mode="RGB").save(path)
        img = load_image(path)
        np.testing.assert_allclose(img, 60 / 255, atol=1e-12)

    def test_grayscale_png_roundtrip(self, tmp_path, rng):
        pytest.importorskip("PIL")
        from PIL import Image

        from patchdenoise.io import load_image

        gray = (rng.random((6, 7)) * 255).astype(np.uint8)
        path = tmp_path / "g.png"
        Image.fromarray(gray, mode="L").save(path)
        np.testing.assert_allclose(load_image(path), gray / 255.0, atol=1e-12)


class TestModelFile:
    @pytest.mark.parametrize("maker,kind", [
        (lambda r: random_grbm(r), "grbm"),
        (lambda r: random_gdbm(r), "gdbm"),
        (lambda r: random_dae(r, sizes=(4, 3)), "dae"),
    ])
    def test_roundtrip_is_bitwise(self, tmp_path, rng, maker, kind):
        params = maker(rng)
        path = tmp_path / "m.pdz"
        save_model(params, path, patch_size=2,
                   metadata={"seed": 1, "epochs": 5})
        loaded, info = load_model(path, expect_kind=kind)
        assert info["kind"] == kind
        assert info["metadata"]["epochs"] == 5
        if kind == "grbm":
            np.testing.assert_array_equal(loaded.W, params.W)
            np.testing.assert_array_equal(loaded.b, params.b)
            np.testing.assert_array_equal(loaded.c, params.c)
        elif kind == "gdbm":
            np.testing.assert_array_equal(loaded.W, params.W)
            for a, b in zip(loaded.U, params.U):
                np.testing.assert_array_equal(a, b)
            for a, b in zip(loaded.c, params.c):
                np.testing.assert_array_equal(a, b)
        else:
            for a, b in zip(loaded.W, params.W):
                np.testing.assert_array_equal(a, b)

    def test_save_is_deterministic(self, tmp_path, rng):
        params = random_grbm(rng)
        p1, p2 = tmp_path / "a.pdz", tmp_path / "b.pdz"
        save_model(params, p1, patch_size=2, metadata={"seed": 3})
        save_model(params, p2, patch_size=2, metadata={"seed": 3})
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncation_is_a_persistence_error(self, tmp_path, rng):
        path = tmp_path / "m.pdz"
        save_model(random_grbm(rng), path, patch_size=2)
        blob = path.read_bytes()
        path.write_bytes(blob[:len(blob) // 2])
        with pytest.raises(PersistenceError):
            load_model(path)

    def test_bitflip_fails_checksum(self, tmp_path, rng):
        path = tmp_path / "m.pdz"
        save_model(random_grbm(rng), path, patch_size=2)
        blob = bytearray(path.read_bytes())
        blob[len(MAGIC) + 40] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(PersistenceError, match="checksum"):
            load_model(path)

    def test_cross_kind_load_is_rejected(self, tmp_path, rng):
        path = tmp_path / "m.pdz"
        save_model(random_gdbm(rng), path, patch_size=2)
        with pytest.raises(PersistenceError, match="kind"):
            load_model(path, expect_kind="grbm")

    def test_bad_magic_is_rejected(self, tmp_path):
        path = tmp_path / "junk.pdz"
        path.write_bytes(b"NOTAMODELFILE" + bytes(64))
        with pytest.raises(PersistenceError, match="magic"):
            load_model(path)


class TestCorpus:
    def test_single_anchor_image_gives_identical_patches(self, tmp_path, rng):
        img = rng.random((8, 8))
        save_pgm(img, tmp_path / "only.pgm")
        corpus = sample_patch_corpus(tmp_path, 6, 8, per_image=2, seed=4)
        quantized = np.rint(img * 255) / 255
        for patch in corpus.patches:
            np.testing.assert_allclose(patch, quantized.ravel(), atol=1e-12)

    def test_same_seed_reproduces_file_bytes(self, tmp_path, rng):
        for i in range(3):
            save_pgm(make_natural_image(rng, 16, 16), tmp_path / f"i{i}.pgm")
        out1, out2 = tmp_path / "c1.pdz", tmp_path / "c2.pdz"
        save_corpus(sample_patch_corpus(tmp_path, 50, 4, seed=12), out1)
        save_corpus(sample_patch_corpus(tmp_path, 50, 4, seed=12), out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_corpus_roundtrip(self, tmp_path, rng):
        save_pgm(rng.random((10, 10)), tmp_path / "a.pgm")
        corpus = sample_patch_corpus(tmp_path, 20, 4, seed=3)
        save_corpus(corpus, tmp_path / "c.pdz")
        loaded = load_corpus(tmp_path / "c.pdz")
        np.testing.assert_array_equal(loaded.patches, corpus.patches)
        np.testing.assert_array_equal(loaded.anchors, corpus.anchors)
        assert loaded.files == corpus.files
        assert loaded.seed == 3

    def test_anchor_positions_are_uniform(self, tmp_path, rng):
        save_pgm(rng.random((12, 12)), tmp_path / "a.pgm")
        corpus = sample_patch_corpus(tmp_path, 16200, 4, per_image=2, seed=9)
        cells = corpus.anchors[:, 1] * 9 + corpus.anchors[:, 2]  # 9x9 anchors
        counts = np.bincount(cells, minlength=81)
        assert chisquare(counts).pvalue > 0.01

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(DataError):
            sample_patch_corpus(tmp_path, 10, 4)

    def test_undersized_images_rejected(self, tmp_path, rng):
        save_pgm(rng.random((3, 3)), tmp_path / "small.pgm")
        with pytest.raises(DataError):
            sample_patch_corpus(tmp_path, 10, 8)
