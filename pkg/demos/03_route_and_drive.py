"""Offline world: plan a route on the reference lot and integrate the
kinematic stepper until the vehicle parks. No bus, no processes."""

from avpsim.world.lotmap import load_map_file, reference_map_path
from avpsim.world.routing import SpotGoal, plan_route
from avpsim.world.sim import GoalReached, VehicleBody, World

lot = load_map_file(reference_map_path())
start = lot.spawn_points[0]
print(f"lot: {len(lot.spots)} spots, {len(lot.nodes)} waypoints")
print(f"spawn pose: ({start.x}, {start.y}, yaw {start.yaw:.2f})")

path = plan_route(lot, start, SpotGoal(7))
print(f"\nroute to spot 7 ({len(path)} poses):")
for p in path:
    print(f"  ({p.x:6.1f}, {p.y:6.1f})  yaw {p.yaw:5.2f}")

world = World(lot)
body = VehicleBody("demo", start)
world.spawn(body)
world.set_path("demo", path)

tick = 0
while tick < 5000:
    tick += 1
    if any(isinstance(e, GoalReached) for e in world.step(0.05)):
        break

final = lot.spot_approach[7].final
print(f"\narrived after {tick} ticks ({tick * 0.05:.1f} simulated seconds)")
print(f"pose   ({body.pose.x:.3f}, {body.pose.y:.3f}, yaw {body.pose.yaw:.3f})")
print(f"target ({final.x:.3f}, {final.y:.3f}, yaw {final.yaw:.3f})")
