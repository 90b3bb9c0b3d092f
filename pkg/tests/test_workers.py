import math

import numpy as np
import pytest

from hdrvqa.bench.manifest import DatasetManifest
from hdrvqa.errors import ModelFormatError, RegistryError
from hdrvqa.fusion import get_spec, save_model, train
from hdrvqa.jobs import JobBoard
from hdrvqa.model_manager import ModelManager
from hdrvqa.models import JobStatus, ManifestEntry, ModelSpec, TrainedModel
from hdrvqa.storage import FeatureStore, completed_rows, init_store, write_features_csv
from hdrvqa.workers import process_job, run_extraction

NAMES = ["Y-MS-ESSIM", "Y-MAD-Ref"]


def entry(video_id, ref=None, test=None, group=None):
    return ManifestEntry(
        video_id=video_id,
        content_id=group or video_id,
        content_group=group or video_id,
        ref_path=str(ref) if ref else None,
        test_path=str(test) if test else None,
        mos_dark=50.0,
        mos_bright=60.0,
    )


@pytest.fixture
def manifest(moving_pair, static_video, tmp_path):
    ref, test = moving_pair
    return DatasetManifest(
        entries=[
            entry("pan", ref, test),
            entry("static", static_video, static_video),
            entry("missing", tmp_path / "gone_64x64_10bit_420.yuv", static_video),
        ],
        root=tmp_path,
    )


class TestJobBoard:

    def test_queue_is_fifo(self):
        board = JobBoard()
        for vid in ("a", "b", "c"):
            board.create_job(vid)
        assert board.get_next_job_id() == "a"
        assert board.pending_job_ids() == ["b", "c"]

    def test_status_update_dequeues(self):
        board = JobBoard()
        board.create_job("a")
        board.create_job("b")
        board.update_job_status("a", JobStatus.FAILED, error_message="boom")
        assert board.get_queue_length() == 1
        assert board.failed_jobs()[0].error_message == "boom"
        assert board.get_pending_jobs_count() == 1
        assert board.status_counts() == {"failed": 1, "pending": 1}

    def test_duplicate(self):
        board = JobBoard()
        board.create_job("a")
        with pytest.raises(ValueError):
            board.create_job("a")

    def test_unknown_job(self):
        assert JobBoard().update_job_status("nope", JobStatus.COMPLETED) is None


class TestFeatureStore:

    def test_put_get(self, tmp_path, geom):
        store = FeatureStore(str(tmp_path / "cache"))
        key = store.fingerprint("v", None, None, NAMES, geom, 4)
        assert store.get(key) is None
        store.put(key, {"Y-MAD-Ref": np.float64(0.25)})
        assert store.get(key) == {"Y-MAD-Ref": 0.25}
        assert store.stats()["entries"] == 1
        assert store.delete(key)
        store.close()

    def test_fingerprint_tracks_inputs(self, tmp_path, geom, static_video):
        store = FeatureStore(str(tmp_path / "cache"))
        base = store.fingerprint("v", static_video, static_video, NAMES, geom, 4)
        assert base.startswith("features_v_")
        assert base == store.fingerprint("v", static_video, static_video, NAMES, geom, 4)
        assert base != store.fingerprint("v", static_video, static_video, NAMES[:1], geom, 4)
        assert base != store.fingerprint("v", static_video, static_video, NAMES, geom, 3)
        static_video.write_bytes(static_video.read_bytes()[:-1])
        assert base != store.fingerprint("v", static_video, static_video, NAMES, geom, 4)
        store.close()

    def test_completed_rows(self, tmp_path):
        path = tmp_path / "features.csv"
        assert completed_rows(path, NAMES) == {}
        write_features_csv(path, {"a": {"Y-MS-ESSIM": 0.9, "Y-MAD-Ref": 0.1}, "b": {"Y-MS-ESSIM": math.nan, "Y-MAD-Ref": 0.0}}, NAMES)
        assert completed_rows(path, NAMES) == {"a": {"Y-MS-ESSIM": 0.9, "Y-MAD-Ref": 0.1}}
        assert completed_rows(path, NAMES + ["Y-DLM-S"]) == {}

    def test_unreadable_csv(self, tmp_path):
        path = tmp_path / "features.csv"
        path.write_text("id,Y-MAD\nv,1\n")
        assert completed_rows(path, ["Y-MAD"]) == {}

    def test_non_numeric_csv(self, tmp_path):
        path = tmp_path / "features.csv"
        path.write_text("video_id,Y-MAD\nv,abc\n")
        assert completed_rows(path, ["Y-MAD"]) == {}

    def test_init_store_replaces_instance(self, tmp_path):
        first = init_store(str(tmp_path / "one"))
        second = init_store(str(tmp_path / "two"))
        assert second is not first
        assert second.cache_dir == tmp_path / "two"
        second.close()


class TestExtraction:

    def test_failures_do_not_stop_other_videos(self, manifest, geom, settings):
        result = run_extraction(manifest, NAMES, geom, settings)
        assert set(result.rows) == {"pan", "static"}
        assert list(result.failures) == ["missing"]
        assert result.rows["static"] == {"Y-MS-ESSIM": 1.0, "Y-MAD-Ref": 0.0}
        assert result.rows["pan"]["Y-MAD-Ref"] > 0

    def test_thread_count_does_not_change_rows(self, manifest, geom, settings):
        serial = run_extraction(manifest, NAMES, geom, settings, threads=1)
        threaded = run_extraction(manifest, NAMES, geom, settings, threads=3)
        assert serial.rows == threaded.rows
        assert serial.failures.keys() == threaded.failures.keys()

    def test_done_rows_are_skipped(self, manifest, geom, settings):
        done = {"pan": {"Y-MS-ESSIM": 0.5, "Y-MAD-Ref": 0.5}}
        result = run_extraction(manifest, NAMES, geom, settings, done=done)
        assert result.skipped == ["pan"]
        assert result.rows["pan"] == done["pan"]

    def test_cache_hit_on_second_run(self, manifest, geom, settings, tmp_path):
        store = FeatureStore(str(tmp_path / "cache"))
        first = run_extraction(manifest, NAMES, geom, settings, store=store)
        second = run_extraction(manifest, NAMES, geom, settings, store=store)
        assert first.cached == []
        assert sorted(second.cached) == ["pan", "static"]
        assert second.rows == first.rows
        store.close()

    def test_entry_without_paths_fails(self, geom, settings):
        manifest = DatasetManifest(entries=[entry("bare")])
        board = JobBoard()
        board.create_job("bare")
        assert process_job("bare", board, manifest, NAMES, geom, settings) is None
        job = board.get_job("bare")
        assert job.status == JobStatus.FAILED
        assert "ref_path" in job.error_message

    def test_unexpected_error_fails_only_that_job(self, manifest, geom, settings, monkeypatch):
        import hdrvqa.workers as workers

        real = workers.extract_video

        def flaky(stream, names, geom, settings, video_id=None):
            if video_id == "pan":
                raise ZeroDivisionError("division by zero")
            return real(stream, names, geom, settings, video_id=video_id)

        monkeypatch.setattr(workers, "extract_video", flaky)
        result = run_extraction(manifest, NAMES, geom, settings)
        assert set(result.rows) == {"static"}
        assert result.failures["pan"] == "division by zero"
        assert set(result.failures) == {"pan", "missing"}

    def test_unknown_job(self, manifest, geom, settings):
        assert process_job("nope", JobBoard(), manifest, NAMES, geom, settings) is None


class TestModelManager:

    @pytest.fixture
    def model_file(self, tmp_path, rng):
        X = rng.uniform(size=(10, 3))
        model = train(get_spec("Y-FUNQUE+"), X, X.sum(axis=1), 1.0)
        path = tmp_path / "model.json"
        path.write_bytes(save_model(model))
        return path

    def test_builtin(self):
        spec = ModelManager().resolve("3C-FUNQUE+", ["H2"])
        assert isinstance(spec, ModelSpec)
        assert spec.name == "3C-FUNQUE+ +HDRMAX2"

    def test_unknown_name(self):
        with pytest.raises(RegistryError):
            ModelManager().resolve("no-such-model")

    def test_file_is_loaded_once(self, model_file):
        manager = ModelManager()
        first = manager.resolve(str(model_file))
        assert isinstance(first, TrainedModel)
        assert manager.resolve(str(model_file)) is first
        assert manager.configs[str(model_file.resolve())]["lambda"] == 1.0

    def test_hdrmax_rejected_for_files(self, model_file):
        with pytest.raises(ModelFormatError):
            ModelManager().resolve(str(model_file), ["H1"])
