import numpy as np
import pytest

from faultfusion.schemas import MiningMode
from faultfusion.tensor import Tape, Tensor, backward, set_default_dtype
from faultfusion.tensor.gradcheck import directional_gradient_error, max_gradient_error
from faultfusion.training.triplets import DISTANCE_EPS, mine_triplets, pairwise_distances, triplet_loss


def _brute_force_batch_hard(embeddings: np.ndarray, labels: np.ndarray) -> list[tuple[int, int, int]]:
    triplets = []
    for a in range(len(labels)):
        best_p, best_n = None, None
        for j in range(len(labels)):
            d = float(np.linalg.norm(embeddings[a] - embeddings[j]))
            if j != a and labels[j] == labels[a] and (best_p is None or d > best_p[0]):
                best_p = (d, j)
            if labels[j] != labels[a] and (best_n is None or d < best_n[0]):
                best_n = (d, j)
        if best_p is not None and best_n is not None:
            triplets.append((a, best_p[1], best_n[1]))
    return triplets


def _scalar_loss(triplets: list[tuple[int, int, int]], embeddings: list[np.ndarray], margin: float) -> float:
    total = 0.0
    for features in embeddings:
        hinge = 0.0
        for a, p, n in triplets:
            d_pos = np.sqrt(np.sum((features[a] - features[p]) ** 2) + DISTANCE_EPS)
            d_neg = np.sqrt(np.sum((features[a] - features[n]) ** 2) + DISTANCE_EPS)
            hinge += max(0.0, d_pos - d_neg + margin)
        total += hinge / len(triplets)
    return total


@pytest.mark.parametrize("seed", range(10))
def test_batch_hard_matches_brute_force(seed: int) -> None:
    """Farthest positive and nearest negative per anchor, exactly as an exhaustive scan finds them."""
    rng = np.random.default_rng(seed)
    embeddings = rng.normal(size=(int(rng.integers(4, 33)), 5))
    labels = rng.integers(0, 3, size=embeddings.shape[0])

    assert mine_triplets(embeddings, labels) == _brute_force_batch_hard(embeddings, labels)


def test_anchors_without_partners_are_skipped() -> None:
    """A singleton class has no positive; a single-class batch has no negatives at all."""
    embeddings = np.arange(8.0).reshape(4, 2)
    assert [t[0] for t in mine_triplets(embeddings, np.array([0, 0, 1, 2]))] == [0, 1]
    assert mine_triplets(embeddings, np.zeros(4, dtype=int)) == []


def test_random_mining_respects_labels() -> None:
    """Random triplets still pair same-class positives with other-class negatives."""
    labels = np.array([0, 0, 1, 1, 2, 2])
    triplets = mine_triplets(np.zeros((6, 2)), labels, MiningMode.RANDOM, np.random.default_rng(0))
    assert len(triplets) == 6
    for a, p, n in triplets:
        assert a != p
        assert labels[a] == labels[p] != labels[n]


def test_loss_matches_scalar_loop() -> None:
    """The vectorised hinge equals a per-triplet summation, summed over modalities."""
    rng = np.random.default_rng(3)
    labels = rng.integers(0, 3, size=12)
    features = [rng.normal(size=(12, 4)), rng.normal(size=(12, 6))]
    triplets = mine_triplets(np.concatenate(features, axis=1), labels)

    loss = triplet_loss(triplets, [Tensor(f, dtype=np.float64) for f in features], margin=0.27)

    assert loss.item() == pytest.approx(_scalar_loss(triplets, features, 0.27), abs=1e-6)
    assert triplet_loss([], [Tensor(features[0])], 0.27).item() == 0.0


def test_loss_gradient() -> None:
    """Distances and the hinge differentiate correctly."""
    set_default_dtype("float64")
    rng = np.random.default_rng(4)
    t, s = Tensor(rng.normal(size=(6, 3))), Tensor(rng.normal(size=(6, 3)))
    triplets = [(0, 1, 2), (1, 0, 3), (2, 3, 4), (4, 5, 0)]

    def fn() -> Tensor:
        return triplet_loss(triplets, {"t": t, "s": s}, margin=2.0)

    assert max_gradient_error(fn, [t, s]) < 1e-5


def test_pairwise_distances() -> None:
    """Distances are symmetric with a zero diagonal."""
    distances = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]))
    np.testing.assert_allclose(distances, [[0.0, 5.0], [5.0, 0.0]])


def test_gradient_step_pulls_positive_in_and_pushes_negative_out() -> None:
    """One descent step on an active triplet lowers d(a, p) - d(a, n)."""
    set_default_dtype("float64")
    embeddings = Tensor(np.random.default_rng(5).normal(size=(3, 4)), requires_grad=True)
    triplets = [(0, 1, 2)]

    def gap(values: np.ndarray) -> float:
        distances = pairwise_distances(values)
        return float(distances[0, 1] - distances[0, 2])

    before = gap(embeddings.data)
    with Tape():
        loss = triplet_loss(triplets, [embeddings], margin=abs(before) + 10.0)
        backward(loss)
    assert loss.item() > 0
    assert embeddings.grad is not None

    after = gap(embeddings.data - 0.01 * embeddings.grad)

    assert after < before


def _mined_loss_error(seed: int) -> float:
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.repeat([0, 1, 2], 2), rng.integers(0, 3, size=rng.integers(0, 6))])
    t, s = Tensor(rng.normal(size=(len(labels), 3))), Tensor(rng.normal(size=(len(labels), 2)))
    triplets = mine_triplets(np.concatenate([t.data, s.data], axis=1), labels)
    margin = float(rng.uniform(0.1, 3.0))
    return directional_gradient_error(lambda: triplet_loss(triplets, {"t": t, "s": s}, margin=margin), [t, s], rng)


def test_loss_gradient_on_random_batches() -> None:
    """The hinge over mined triplets passes directional checks on 100 random batches."""
    set_default_dtype("float64")
    errors = [_mined_loss_error(seed) for seed in range(100)]
    assert max(errors) < 1e-5, int(np.argmax(errors))
