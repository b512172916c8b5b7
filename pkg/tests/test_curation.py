import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wlasl_pose.curation import FaceEmbedding, cluster_signers, compute_stats, read_embeddings
from wlasl_pose.data.poses import PoseSequence, PoseStore
from wlasl_pose.data.schema import GlossEntry, Manifest, SampleRecord


def closure_oracle(vectors, threshold):
    """Connected components by repeated flood fill over an explicit distance table."""
    n = len(vectors)
    near = [[float(np.sqrt(((vectors[i] - vectors[j]) ** 2).sum())) < threshold for j in range(n)] for i in range(n)]
    label = [-1] * n
    nxt = 0
    for i in range(n):
        if label[i] >= 0:
            continue
        label[i], stack = nxt, [i]
        while stack:
            u = stack.pop()
            for v in range(n):
                if near[u][v] and label[v] < 0:
                    label[v] = nxt
                    stack.append(v)
        nxt += 1
    return label


def as_partition(ids):
    groups = {}
    for i, g in enumerate(ids):
        groups.setdefault(g, set()).add(i)
    return {frozenset(s) for s in groups.values()}


def test_identical_vectors_share_signer():
    assert cluster_signers(np.array([[0.3, 0.4], [0.3, 0.4]])) == [0, 0]


def test_far_vectors_split():
    assert cluster_signers(np.array([[0.0, 0.0], [2.0, 0.0]])) == [0, 1]


def test_threshold_is_strict():
    assert cluster_signers(np.array([[0.0], [0.9]])) == [0, 1]


def test_chain_links_transitively():
    # a-b = 0.8, b-c = 0.8, a-c = 1.5
    cx = 2.25 / 1.6
    pts = np.array([[0.0, 0.0], [0.8, 0.0], [cx, np.sqrt(2.25 - cx**2)]])
    d = lambda i, j: np.linalg.norm(pts[i] - pts[j])  # noqa: E731
    assert d(0, 1) == pytest.approx(0.8) and d(1, 2) == pytest.approx(0.8) and d(0, 2) == pytest.approx(1.5)
    assert cluster_signers(pts) == [0, 0, 0]


def test_ids_follow_first_member():
    pts = np.array([[5.0], [0.0], [5.1], [0.2], [9.0]])
    assert cluster_signers(pts) == [0, 1, 0, 1, 2]


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        cluster_signers([FaceEmbedding("a", (0.0, 1.0)), FaceEmbedding("b", (0.0,))])
    with pytest.raises(ValueError):
        cluster_signers([])


def test_read_embeddings(tmp_path):
    p = tmp_path / "e.json"
    p.write_text(json.dumps([{"video_id": "1", "vector": [0, 1]}, {"video_id": "2", "vector": [0, 1.5]}]))
    emb = read_embeddings(p)
    assert emb[1] == FaceEmbedding("2", (0.0, 1.5))
    assert cluster_signers(emb) == [0, 0]


@pytest.mark.parametrize("seed", range(100))
def test_matches_closure_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 101))
    # few tight identities plus scatter, scaled so distances straddle the threshold
    centers = rng.normal(0, 0.12, size=(int(rng.integers(1, 8)), 128))
    vectors = centers[rng.integers(0, len(centers), n)] + rng.normal(0, 0.03, size=(n, 128))
    for t in (0.5, 0.9, 1.5):
        assert cluster_signers(vectors, t) == closure_oracle(vectors, t)


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1))
def test_threshold_monotone(seed):
    rng = np.random.default_rng(seed)
    vectors = rng.normal(0, 0.08, size=(int(rng.integers(2, 40)), 128))
    parts = [as_partition(cluster_signers(vectors, t)) for t in (0.5, 0.9, 1.5)]
    for fine, coarse in zip(parts, parts[1:]):
        assert all(any(f <= c for c in coarse) for f in fine)


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1))
def test_partition_independent_of_order(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 40))
    vectors = rng.normal(0, 0.1, size=(n, 16))
    perm = rng.permutation(n)
    base = cluster_signers(vectors)
    shuffled = cluster_signers(vectors[perm])
    assert len(base) == n
    assert as_partition(base) == {frozenset(int(perm[i]) for i in s) for s in as_partition(shuffled)}


# ---------------------------------------------------------------- stats


def store_with(tmp_path, lengths):
    store = PoseStore(tmp_path)
    entries = []
    for g, videos in lengths.items():
        recs = []
        for vid, (frames, fps, signer) in videos.items():
            kp = np.zeros((frames, 55, 3))
            store.save(PoseSequence(kp, fps, vid))
            recs.append(SampleRecord(g, vid, signer_id=signer))
        entries.append(GlossEntry(g, recs))
    return Manifest(entries), store


def test_single_video_stats(tmp_path):
    m, store = store_with(tmp_path, {"a": {"v": (50, 25.0, 0)}})
    s = compute_stats(m, store)
    assert (s.mean_duration, s.min_duration, s.max_duration, s.intra_class_std) == (2.0, 2.0, 2.0, 0.0)
    assert (s.gloss_count, s.video_count, s.signer_count) == (1, 1, 1)


def test_stats_recomputation(tmp_path):
    lengths = {
        "a": {"a1": (25, 25.0, 0), "a2": (75, 25.0, 1)},  # 1 s, 3 s
        "b": {"b1": (30, 30.0, 1), "b2": (60, 30.0, 2), "b3": (90, 30.0, 2)},  # 1, 2, 3 s
    }
    m, store = store_with(tmp_path, lengths)
    s = compute_stats(m, store)
    assert s.video_count == 5 and s.gloss_count == 2 and s.signer_count == 3
    assert s.mean_videos_per_gloss == 2.5
    assert s.mean_duration == pytest.approx(10.0 / 5)
    assert (s.min_duration, s.max_duration) == (1.0, 3.0)
    std_a = 1.0  # population std of {1, 3}
    std_b = (2.0 / 3.0) ** 0.5  # of {1, 2, 3}
    assert s.intra_class_std == pytest.approx((std_a + std_b) / 2, abs=1e-12)


def test_stats_use_temporal_boundary(tmp_path):
    store = PoseStore(tmp_path)
    store.save(PoseSequence(np.zeros((100, 55, 3)), 25.0, "v"))
    m = Manifest([GlossEntry("a", [SampleRecord("a", "v", frame_start=10, frame_end=34)])])
    assert compute_stats(m, store).mean_duration == 1.0


def test_stats_missing_pose_file(tmp_path):
    m = Manifest([GlossEntry("a", [SampleRecord("a", "ghost")])])
    with pytest.raises(FileNotFoundError, match="ghost"):
        compute_stats(m, PoseStore(tmp_path))


@settings(max_examples=25)
@given(st.lists(st.lists(st.integers(1, 200), min_size=1, max_size=5), min_size=1, max_size=4))
def test_stats_ordering(tmp_path_factory, frame_lists):
    root = tmp_path_factory.mktemp("stats")
    lengths = {f"g{i}": {f"g{i}_{j}": (f, 25.0, j) for j, f in enumerate(fl)} for i, fl in enumerate(frame_lists)}
    s = compute_stats(*store_with(root, lengths))
    assert s.min_duration <= s.mean_duration + 1e-12 and s.mean_duration <= s.max_duration + 1e-12
    assert s.intra_class_std >= 0 and s.video_count >= 0
