import numpy as np
import pytest

from socnav.world_model import HumanVertex, ObservationFrame, RobotVertex


def make_robot(position=(0.0, 0.0), velocity=(0.0, 0.0), goal=(0.0, 4.0),
               radius=0.3, task="navigate_to_goal", elapsed=0.0) -> RobotVertex:
    return RobotVertex(
        position=position, velocity=velocity, radius=radius, goal=goal,
        task_label=task, elapsed_time=elapsed,
    )


def make_human(k=0, position=(3.0, 4.0), velocity=(0.0, 0.0), radius=0.3,
               activity="standing") -> HumanVertex:
    return HumanVertex(
        id=f"human_{k}", position=position, velocity=velocity, radius=radius,
        activity=activity,
    )


def make_frame(time=0.0, robot=None, humans=()) -> ObservationFrame:
    return ObservationFrame(
        time=time, robot=robot or make_robot(), humans=list(humans)
    )


def random_frame(rng: np.random.Generator, n_humans=None,
                 activities=("walking", "talking", "standing", "sitting", "phone"),
                 span=5.0) -> ObservationFrame:
    if n_humans is None:
        n_humans = int(rng.integers(0, 6))
    robot = make_robot(
        position=rng.uniform(-span, span, 2),
        velocity=rng.uniform(-1, 1, 2),
        goal=rng.uniform(-span, span, 2),
        elapsed=float(rng.uniform(0, 20)),
    )
    humans = [
        make_human(
            k,
            position=rng.uniform(-span, span, 2),
            velocity=rng.uniform(-1, 1, 2),
            activity=activities[int(rng.integers(len(activities)))],
        )
        for k in range(n_humans)
    ]
    return make_frame(time=float(rng.uniform(0.25, 30)), robot=robot, humans=humans)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
