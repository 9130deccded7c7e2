"""
Rendering observations into logical-form text
=============================================

Two consecutive frames become a spatial-temporal graph: one vertex per
agent, a distance edge for every agent pair, and temporal edges tracking
how the robot's goal distance and each human's speed changed. The graph
then renders into fixed sentence templates, one line per element.
"""

from socnav.world_model import (
    HumanVertex,
    ObservationFrame,
    RobotVertex,
    build_world_graph,
    render_observation_prompt,
)

robot_then = RobotVertex(position=(0.0, -2.0), velocity=(0.0, 0.0), radius=0.3,
                         goal=(0.0, 4.0), task_label="deliver_parcel")
robot_now = RobotVertex(position=(0.0, -1.75), velocity=(0.0, 1.0), radius=0.3,
                        goal=(0.0, 4.0), task_label="deliver_parcel",
                        elapsed_time=0.25)

walker_then = HumanVertex(id="human_0", position=(2.0, 0.0), velocity=(-1.0, 0.0),
                          radius=0.3, activity="walking")
walker_now = HumanVertex(id="human_0", position=(1.75, 0.0), velocity=(-1.0, 0.0),
                         radius=0.3, activity="walking")
talker = HumanVertex(id="human_1", position=(-1.5, 1.0), velocity=(0.0, 0.0),
                     radius=0.3, activity="talking")

prev = ObservationFrame(time=0.0, robot=robot_then, humans=[walker_then, talker])
curr = ObservationFrame(time=0.25, robot=robot_now, humans=[walker_now, talker])

# First frame: no previous observation, so edges render without comparisons.
first = build_world_graph(None, prev)
print("--- first frame (no deltas) ---")
print(render_observation_prompt(first))

# Second frame: deltas and trend words appear.
graph = build_world_graph(prev, curr)
print()
print("--- second frame (with temporal edges) ---")
print(render_observation_prompt(graph))

# The same graph always renders to the same bytes.
assert render_observation_prompt(graph) == render_observation_prompt(graph)
