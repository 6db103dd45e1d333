import numpy as np
import pytest
from src.core.skeleton import (SkeletonGraph, SkeletonNode, SkeletonError, Pose, AnimationTrace,
                               validate_graph, forward_kinematics, trace_stats,
                               load_skeleton, save_skeleton, load_trace, save_trace)
from src.config import Config


def test_fk_two_node_chain(chain):
    graph = chain([1.0])
    pose = forward_kinematics(graph, np.zeros(3), np.zeros((2, 3)))
    assert np.allclose(pose.positions[1], [0.0, 1.0, 0.0])

    pose = forward_kinematics(graph, np.zeros(3), [[90.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    assert np.allclose(pose.positions[1], [0.0, 0.0, 1.0], atol=1e-9)


def test_fk_preserves_bone_lengths_and_reach(skeleton):
    rng = np.random.default_rng(5)
    reach = skeleton.path_lengths()
    root = skeleton.offsets[skeleton.root]
    for _ in range(50):
        pose = forward_kinematics(skeleton, root, rng.uniform(-180, 180, (len(skeleton), 3)))
        for parent, child, length in skeleton.edges():
            assert np.linalg.norm(pose.positions[child] - pose.positions[parent]) == pytest.approx(length, abs=1e-9)
        distances = np.linalg.norm(pose.positions - root, axis=1)
        assert (distances <= reach + 1e-9).all()


def test_fk_rejects_wrong_euler_count(skeleton):
    with pytest.raises(SkeletonError):
        forward_kinematics(skeleton, np.zeros(3), np.zeros((3, 3)))


def test_fk_rejects_cycle():
    graph = SkeletonGraph(nodes=[SkeletonNode(0, None, np.zeros(3)),
                                 SkeletonNode(1, 2, np.ones(3)),
                                 SkeletonNode(2, 1, np.ones(3))])
    with pytest.raises(SkeletonError, match="cycle"):
        forward_kinematics(graph, np.zeros(3), np.zeros((3, 3)))


def test_default_skeleton_is_valid(skeleton):
    assert validate_graph(skeleton, expected_count=Config.AVATAR_JOINTS) == []


def test_validate_graph_reports_multiple_roots():
    graph = SkeletonGraph(nodes=[SkeletonNode(0, None, np.zeros(3)), SkeletonNode(1, None, np.zeros(3))])
    assert any(v.startswith("multiple roots") for v in validate_graph(graph))


def test_validate_graph_reports_cycle():
    graph = SkeletonGraph(nodes=[SkeletonNode(0, None, np.zeros(3)),
                                 SkeletonNode(1, 2, np.ones(3)),
                                 SkeletonNode(2, 1, np.ones(3))])
    violations = validate_graph(graph)
    assert sum(v.startswith("cycle") for v in validate_graph(graph)) == 1
    assert not any(v.startswith("disconnected") for v in violations)


def test_validate_graph_other_violations():
    graph = SkeletonGraph(nodes=[SkeletonNode(0, None, np.zeros(3)),
                                 SkeletonNode(1, 0, np.zeros(3)),
                                 SkeletonNode(2, 7, np.ones(3))])
    violations = validate_graph(graph, expected_count=4)
    assert any(v.startswith("node count mismatch") for v in violations)
    assert any(v.startswith("non-positive bone length") for v in violations)
    assert any(v.startswith("unknown parent") for v in violations)
    assert validate_graph(SkeletonGraph(nodes=[])) == ["empty graph"]


def _trace(positions):
    frames = [Pose(positions=p, rotations=np.tile([0, 0, 0, 1.0], (len(p), 1))) for p in positions]
    return AnimationTrace(frames=frames)


def test_trace_stats_static_trace():
    stats = trace_stats(_trace([np.ones((4, 3))] * 5))
    assert np.allclose(stats.axis_min, 0.0) and np.allclose(stats.axis_max, 0.0)


def test_trace_stats_single_move():
    a = np.zeros((3, 3))
    b = a.copy()
    b[1, 0] += 0.3
    stats = trace_stats(_trace([a, b]))
    assert stats.axis_min[0] == pytest.approx(0.0)
    assert stats.axis_max[0] == pytest.approx(0.3)
    assert len(stats.histograms) == 3


def test_trace_stats_invariances():
    rng = np.random.default_rng(9)
    positions = rng.normal(size=(6, 5, 3))
    base = trace_stats(_trace(list(positions)))
    reversed_stats = trace_stats(_trace(list(positions[::-1])))
    permuted = trace_stats(_trace(list(positions[:, rng.permutation(5)])))
    for other in (reversed_stats, permuted):
        assert np.allclose(base.axis_min, other.axis_min)
        assert np.allclose(base.axis_max, other.axis_max)


def test_trace_stats_insufficient_frames():
    with pytest.raises(SkeletonError, match="insufficient frames"):
        trace_stats(_trace([np.zeros((2, 3))]))


def test_skeleton_and_trace_files_round_trip(tmp_path, skeleton, rest):
    save_skeleton(skeleton, tmp_path / "skeleton.json")
    loaded = load_skeleton(tmp_path / "skeleton.json")
    assert loaded.names == skeleton.names
    assert np.allclose(loaded.offsets, skeleton.offsets)

    save_trace(AnimationTrace(frames=[rest, rest]), tmp_path / "trace.json")
    trace = load_trace(tmp_path / "trace.json")
    assert len(trace) == 2 and trace.joint_count == len(skeleton)
    assert np.allclose(trace.frames[1].positions, rest.positions)


def test_bundled_skeleton_matches_default(skeleton):
    bundled = load_skeleton(Config.SKELETON_FILE)
    assert bundled.names == skeleton.names
    assert np.array_equal(bundled.parents, skeleton.parents)
    assert np.allclose(bundled.offsets, skeleton.offsets)


def test_load_skeleton_rejects_invalid_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"nodes": [{"id": 0, "parent": null, "rest_offset": [0, 0, 0]},'
                    ' {"id": 1, "parent": null, "rest_offset": [0, 1, 0]}]}', encoding="utf-8")
    with pytest.raises(SkeletonError, match="multiple roots"):
        load_skeleton(path)
