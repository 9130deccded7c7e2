"""
Hierarchical social-compliance classification
=============================================

Every candidate action is judged over its predicted rollout by four
predicates: activity-aware distancing, minimum proxemic distancing,
collision freedom, and time feasibility. An action's compliance level is
the most stringent conjunction it satisfies; D1 keeps everything, D4 keeps
only safety and timeliness.
"""

import numpy as np

from socnav.constraints import ComplianceParams, compliance_level
from socnav.planner import CandidateAction, rollout
from socnav.world_model import HumanVertex, ObservationFrame, RobotVertex

params = ComplianceParams()
print("preferred distances:", params.pref_table)
print(f"d_min = {params.d_min} m, T_max = {params.t_max} s")
print()

robot = RobotVertex(position=(0.0, 0.0), velocity=(0.0, 0.0), radius=0.3,
                    goal=(6.0, 0.0))
talker = HumanVertex(id="human_0", position=(2.2, 0.0), velocity=(0.0, 0.0),
                     radius=0.3, activity="talking")
frame = ObservationFrame(time=0.0, robot=robot, humans=[talker])

# Rushing straight at a talking human trades social compliance away level
# by level as the speed rises.
for speed in (0.0, 0.25, 0.75, 1.0):
    action = CandidateAction((speed, 0.0), 0)
    ro = rollout(action, frame, h_steps=5, dt=0.25)
    level, facts = compliance_level(ro, elapsed=0.0, params=params)
    end_gap = float(np.linalg.norm(ro.human_positions[-1, 0] - ro.robot_positions[-1]))
    print(f"speed {speed:4.2f} m/s -> closest approach {end_gap:4.2f} m, "
          f"es={facts.es} ed={facts.ed} not_ec={facts.not_ec} et={facts.et} "
          f"=> {level.value}")

# The talking preference (1.2 m) plus both radii (0.6 m) means anything
# ending closer than 1.8 m already forfeits D1/D2.
