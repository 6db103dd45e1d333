import numpy as np
import pytest
from src.core.channel import ChannelRealization, sample_channel
from src.core.skeleton import SkeletonGraph, SkeletonNode, forward_kinematics
from src.services.semantic_service import (SemanticFrame, ConvergenceError, extract_semantics, absr_weights,
                                           channel_map, fields_for, semantic_service)
from src.services.knowledge_service import (build_base_knowledge, save_base_knowledge, load_base_knowledge,
                                            knowledge_service)
from src.utils.trace_tools import gen_trace


def test_gsar_extraction_copies_world_pose(rest, skeleton):
    frame = extract_semantics(rest, "gsar")
    assert frame.variant == "gsar"
    assert frame.values.shape == (len(skeleton), 7)
    assert np.allclose(frame.positions, rest.positions)
    assert np.allclose(frame.rotations, [0, 0, 0, 1])


def test_egsar_extraction_needs_graph(rest):
    with pytest.raises(ValueError, match="E-GSAR requires skeleton graph"):
        extract_semantics(rest, "egsar")
    with pytest.raises(ValueError):
        extract_semantics(rest, "pointcloud")


def test_egsar_eulers_rebuild_pose_through_fk(skeleton):
    trace = gen_trace("full_body", 5, seed=3, graph=skeleton)
    for pose in trace.frames:
        for framework in ("egsar", "ecgsar"):
            frame = extract_semantics(pose, framework, skeleton)
            assert frame.variant == "egsar" and frame.values.shape == (len(skeleton), 3)
            rebuilt = forward_kinematics(skeleton, skeleton.offsets[skeleton.root], frame.eulers)
            assert np.allclose(rebuilt.positions, pose.positions, atol=1e-6)


def test_semantic_frame_accessors():
    frame = SemanticFrame("egsar", np.zeros((4, 3)))
    assert frame.joint_count == 4 and frame.scalar_count == 12
    assert frame.fields == fields_for("ecgsar")
    with pytest.raises(ValueError):
        frame.positions
    with pytest.raises(ValueError):
        SemanticFrame("gsar", np.zeros((2, 7))).eulers
    assert len(fields_for("gsar")) == 7


def test_absr_weights_are_a_distribution(skeleton):
    weights = absr_weights(skeleton)
    assert weights.shape == (len(skeleton),)
    assert weights.sum() == pytest.approx(1.0)
    assert (weights > 0).all()
    degree = np.array([len(k) for k in skeleton.children()]) + (skeleton.parents >= 0)
    assert degree[int(np.argmax(weights))] >= 2


def test_absr_symmetric_star(star):
    weights = absr_weights(star(4))
    assert np.allclose(weights[1:], weights[1])
    assert weights[0] > weights[1]


def test_absr_longer_bones_weigh_more(chain):
    weights = absr_weights(chain([1.0, 3.0]))
    assert weights[2] > weights[0]


def _fixed_point_oracle(graph, alpha=0.7, tol=1e-13):
    n = len(graph)
    neighbors = {i: [] for i in range(n)}
    for parent, child, length in graph.edges():
        neighbors[parent].append((child, length))
        neighbors[child].append((parent, length))
    weights = [1.0 / n] * n
    for _ in range(100000):
        raw = [len(neighbors[i]) / (1 - alpha) + sum(l * weights[j] for j, l in neighbors[i]) for i in range(n)]
        total = sum(raw)
        new = [r / total for r in raw]
        if max(abs(a - b) for a, b in zip(new, weights)) < tol:
            return np.array(new)
        weights = new
    raise AssertionError("el oráculo no convergió")


@pytest.mark.parametrize("build", ["path", "star", "avatar"])
def test_absr_matches_fixed_point_oracle(build, chain, star, skeleton):
    graph = {"path": lambda: chain([0.3, 1.0, 0.5, 2.0]), "star": lambda: star(5, 0.4), "avatar": lambda: skeleton}[build]()
    assert np.allclose(absr_weights(graph), _fixed_point_oracle(graph), atol=1e-8, rtol=0)


def test_absr_edge_cases(chain):
    assert absr_weights(chain([])).tolist() == [1.0]
    with pytest.raises(ValueError):
        absr_weights(chain([1.0]), alpha=1.0)
    with pytest.raises(ConvergenceError) as info:
        absr_weights(chain([1.0, 2.0, 0.5]), epsilon=0.0, max_iter=3)
    assert info.value.weights.sum() == pytest.approx(1.0)


def test_channel_map_pairs_by_rank():
    channel = ChannelRealization(gains=np.array([1.0, 3.0, 2.0]), noise_power=1.0)
    assert channel_map([0.1, 0.5, 0.4], channel).tolist() == [0, 1, 2]
    assert channel_map([0.5, 0.1, 0.4], channel).tolist() == [1, 0, 2]


def test_channel_map_wraps_and_breaks_ties_by_index():
    channel = ChannelRealization(gains=np.array([0.5, 2.0]), noise_power=0.0)
    assert channel_map([0.4, 0.3, 0.2, 0.1], channel).tolist() == [1, 0, 1, 0]
    assert channel_map([0.25, 0.25, 0.25, 0.25], channel).tolist() == [1, 0, 1, 0]


def test_channel_map_puts_the_avatar_on_the_best_subchannels(skeleton):
    channel = sample_channel(64, 8.0, seed=21)
    weights = absr_weights(skeleton)
    mapping = channel_map(weights, channel)
    assert len(set(mapping.tolist())) == len(skeleton)
    best = np.argsort(-np.abs(channel.gains), kind="stable")[:len(skeleton)]
    assert set(mapping.tolist()) == set(best.tolist())
    quality = np.abs(channel.gains)[mapping]
    ranked = np.argsort(-weights, kind="stable")
    assert (np.diff(quality[ranked]) <= 0).all()


def test_absr_weights_ignore_node_labels(skeleton):
    perm = np.random.default_rng(4).permutation(len(skeleton))
    inverse = np.argsort(perm)
    nodes = []
    for new_id, old_id in enumerate(perm):
        old = skeleton.nodes[old_id]
        parent = None if old.parent is None else int(inverse[old.parent])
        nodes.append(SkeletonNode(id=new_id, parent=parent, rest_offset=old.rest_offset, name=old.name))
    relabelled = absr_weights(SkeletonGraph(nodes=nodes))
    assert np.allclose(relabelled, absr_weights(skeleton)[perm], atol=1e-8)


def test_mapping_for_frameworks(skeleton):
    channel = sample_channel(8, 10.0, seed=1)
    n = len(skeleton)
    assert semantic_service.mapping_for("gsar", n, channel).tolist() == [i % 8 for i in range(n)]
    mapping = semantic_service.mapping_for("ecgsar", n, channel, skeleton)
    best = int(np.argmax(np.abs(channel.gains)))
    assert mapping[int(np.argmax(semantic_service.weights_for(skeleton)))] == best
    with pytest.raises(ValueError):
        semantic_service.mapping_for("ecgsar", n, channel)


def test_base_knowledge_contents(skeleton, small_binding, small_stationary):
    gsar = build_base_knowledge("gsar", skeleton, small_binding, small_stationary)
    assert not gsar.has_graph and gsar.joint_count == len(skeleton)
    egsar = build_base_knowledge("egsar", skeleton, small_binding, small_stationary)
    assert egsar.has_graph
    assert np.allclose(egsar.avatar_position, skeleton.offsets[skeleton.root])
    with pytest.raises(ValueError):
        build_base_knowledge("ecgsar", None, small_binding, small_stationary)
    with pytest.raises(ValueError):
        build_base_knowledge("pointcloud", skeleton, small_binding, small_stationary)


def test_base_knowledge_file_round_trip(tmp_path, skeleton, small_binding, small_stationary):
    bk = build_base_knowledge("ecgsar", skeleton, small_binding, small_stationary)
    save_base_knowledge(bk, tmp_path / "ecgsar.json")
    assert (tmp_path / "ecgsar_avatar.ply").exists() and (tmp_path / "ecgsar_stationary.ply").exists()

    loaded = load_base_knowledge(tmp_path / "ecgsar.json")
    assert loaded.framework == "ecgsar" and loaded.joint_count == len(skeleton)
    assert loaded.graph.names == skeleton.names
    assert np.array_equal(loaded.avatar_binding.nodes, small_binding.nodes)
    assert np.allclose(loaded.avatar_binding.offsets, small_binding.offsets)
    assert np.array_equal(loaded.avatar_binding.colors, small_binding.colors)
    assert np.allclose(loaded.stationary.positions, small_stationary.positions, atol=1e-6)
    assert np.allclose(loaded.avatar_position, bk.avatar_position)


def test_knowledge_service_skips_pointcloud(skeleton, small_binding, small_stationary):
    knowledge = knowledge_service.prepare(["pointcloud", "gsar", "ecgsar"], skeleton, small_binding, small_stationary)
    assert sorted(knowledge) == ["ecgsar", "gsar"]
    assert knowledge["ecgsar"].has_graph and not knowledge["gsar"].has_graph
