import numpy as np
import pytest

from frechet_consensus.harness.rng import MAX_SEED, agent_stream


def test_streams_are_reproducible():
    assert agent_stream(3, 7).random() == agent_stream(3, 7).random()


def test_streams_are_independent_of_consumption_order():
    a = agent_stream(3, 1)
    a.random(100)
    assert agent_stream(3, 2).random() == agent_stream(3, 2).random()


def test_distinct_streams_differ():
    draws = {agent_stream(0, k).random() for k in range(50)}
    assert len(draws) == 50
    assert agent_stream(0, "graph").random() != agent_stream(0, 0).random()


def test_generator_is_philox():
    assert isinstance(agent_stream(1, 0).bit_generator, np.random.Philox)


@pytest.mark.parametrize("seed", [-1, MAX_SEED + 1])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        agent_stream(seed, 0)
    agent_stream(MAX_SEED, 0)
