import json

import numpy as np
import pytest

from refdense.domain.errors import AlignmentError, SchemaError, ValidationError
from refdense.domain.features import TextEmbeddingTable, VideoSequence, crop_for_training
from refdense.domain.labels import DenseLabelGrid
from refdense.infra.blob_codec import save_blob
from refdense.infra.feature_store import FileFeatureStore, load_text_table
from refdense.infra.label_files import save_vocabulary, write_labels


def _seq(T, C=2, D=3, seq_id="s"):
    return VideoSequence(
        seq_id=seq_id,
        features=np.arange(T * D, dtype=np.float64).reshape(T, D),
        frame_features=np.zeros((T, D)),
        labels=DenseLabelGrid(np.zeros((T, C), dtype=np.uint8)),
    )


class TestVideoSequence:
    def test_length_mismatch(self):
        with pytest.raises(AlignmentError, match="T mismatch"):
            VideoSequence(
                seq_id="x",
                features=np.zeros((100, 3)),
                frame_features=np.zeros((100, 3)),
                labels=DenseLabelGrid(np.zeros((99, 2), dtype=np.uint8)),
            )

    def test_non_finite_feature(self):
        F = np.zeros((4, 3))
        F[2, 1] = np.nan
        with pytest.raises(ValidationError):
            VideoSequence(
                seq_id="x", features=F, frame_features=np.zeros((4, 3)),
                labels=DenseLabelGrid(np.zeros((4, 2), dtype=np.uint8)),
            )

    def test_features_are_read_only(self):
        seq = _seq(3)
        with pytest.raises(ValueError):
            seq.features[0, 0] = 1.0


class TestCrop:
    def test_exact_length_is_identity(self):
        seq = _seq(64)
        assert crop_for_training(seq, 64, np.random.default_rng(0)) is seq

    def test_short_sequence_is_whole(self):
        seq = _seq(10)
        assert crop_for_training(seq, 256, np.random.default_rng(0)).T == 10

    def test_long_sequence_window(self):
        seq = _seq(300, D=1)
        starts = set()
        for s in range(50):
            out = crop_for_training(seq, 256, np.random.default_rng(s))
            assert out.T == 256
            start = int(out.features[0, 0])
            assert 0 <= start <= 44
            assert np.array_equal(out.features[:, 0], np.arange(start, start + 256))
            starts.add(start)
        assert len(starts) > 1

    def test_reproducible_with_same_seed(self):
        seq = _seq(300, D=1)
        a = crop_for_training(seq, 256, np.random.default_rng(7))
        b = crop_for_training(seq, 256, np.random.default_rng(7))
        assert np.array_equal(a.features, b.features)


class TestTextEmbeddingTable:
    def test_rows_normalized(self):
        table = TextEmbeddingTable(tables={"ent": np.array([[3.0, 4.0], [0.0, 2.0]])})
        assert np.allclose(table.family("ent"), [[0.6, 0.8], [0.0, 1.0]])
        assert table.dim("ent") == 2

    def test_zero_row_rejected(self):
        with pytest.raises(SchemaError):
            TextEmbeddingTable(tables={"mot": np.array([[1.0, 0.0], [0.0, 0.0]])})

    def test_row_count_must_match_vocabulary(self, tmp_path, small_vocab):
        path = tmp_path / "text_table.rfdn"
        save_blob(path, {"u_ent": np.ones((2, 4)), "u_mot": np.ones((3, 4))})
        with pytest.raises(SchemaError, match="expects 3"):
            load_text_table(path, small_vocab)


class TestFileFeatureStore:
    def test_loads_written_dataset(self, tiny_data_dir, tiny_dataset):
        store = FileFeatureStore(tiny_data_dir)
        train = store.sequences("train")
        assert [s.seq_id for s in train] == [s.seq_id for s in tiny_dataset.train]
        for a, b in zip(train, tiny_dataset.train):
            assert np.array_equal(a.features, b.features)
            assert np.array_equal(a.frame_features, b.frame_features)
            assert np.array_equal(a.labels.bits, b.labels.bits)
        assert len(store.sequences("test")) == len(tiny_dataset.test)
        assert np.allclose(store.text_table().family("mot"), tiny_dataset.text_table.family("mot"))
        assert store.vocabulary == tiny_dataset.vocabulary

    def test_manifest_file_path_accepted(self, tiny_data_dir):
        store = FileFeatureStore(tiny_data_dir / "manifest.json")
        assert store.root == tiny_data_dir

    def test_misaligned_files_raise(self, tmp_path, small_vocab):
        save_vocabulary(tmp_path / "vocabulary.json", small_vocab)
        write_labels(tmp_path / "labels.ndjson", [("s0", DenseLabelGrid(np.zeros((99, 4), dtype=np.uint8)))])
        save_blob(tmp_path / "s0.rfdn", {"F": np.zeros((100, 3)), "Fimg": np.zeros((100, 3))})
        save_blob(tmp_path / "text_table.rfdn", {"u_ent": np.eye(3), "u_mot": np.eye(3)})
        manifest = {
            "sequences": [
                {"id": "s0", "split": "test", "features": "s0.rfdn", "frame_features": "s0.rfdn", "labels": "labels.ndjson"}
            ],
            "text_table": "text_table.rfdn",
            "vocabulary": "vocabulary.json",
        }
        (tmp_path / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
        store = FileFeatureStore(tmp_path)
        with pytest.raises(AlignmentError):
            store.sequences("test")

    def test_bad_manifest_is_schema_error(self, tmp_path):
        (tmp_path / "manifest.json").write_text('{"sequences": []}', encoding="utf-8")
        with pytest.raises(SchemaError):
            FileFeatureStore(tmp_path)
