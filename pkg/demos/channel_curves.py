"""Millimetre-wave link budget at a glance.

Prints the urban street-canyon pathloss curves (line-of-sight and blocked),
the resulting SNR over distance for the default radio, and a concrete
geometric-blockage example: a truck parked between two cars kills the link,
an equally low car does not.
"""

import numpy as np

from v2xric.channel import (ChannelParams, noise_floor, pathloss_los, pathloss_nlos,
                            sample_link, stochastic_blockage)
from v2xric.ran import NodeId, NodeKind, World
from v2xric.scenario import (CAR_EXTENT, TALL_EXTENT, VehicleState, build_intersection,
                             default_rsus)


def main():
    params = ChannelParams()
    nf = noise_floor(params)
    print(f"radio defaults: {params.carrier_ghz:.0f} GHz carrier, "
          f"{params.eirp_dbm:.0f} dBm EIRP, {params.bandwidth_hz / 1e6:.0f} MHz, "
          f"NF {params.noise_figure_db:.0f} dB")
    print(f"noise floor: {nf:.1f} dBm")
    print()

    print(" dist |  LOS loss | blocked loss |  LOS SNR | blocked SNR")
    print("------+-----------+--------------+----------+------------")
    for d in (10, 20, 40, 80, 100, 160, 320):
        los = pathloss_los(float(d), params.carrier_ghz)
        nlos = pathloss_nlos(float(d), params.carrier_ghz)
        print(f" {d:4d} | {los:7.2f} dB | {nlos:9.2f} dB | "
              f"{params.eirp_dbm - los - nf:+7.2f} | {params.eirp_dbm - nlos - nf:+8.2f}")
    print()

    # Geometric blockage: both antennas are car roofs 1.6 m up, so whatever
    # sits between them must rise above that height to matter.
    layout = build_intersection(arm_length_m=200.0, road_width_m=14.0)
    cars = [
        VehicleState(vid=0, position=(3.5, -60.0), heading=(0.0, 1.0),
                     speed_mps=0.0, extent=CAR_EXTENT),
        VehicleState(vid=1, position=(3.5, -20.0), heading=(0.0, 1.0),
                     speed_mps=0.0, extent=CAR_EXTENT),
    ]
    tx_id, rx_id = NodeId(NodeKind.CAV, 0), NodeId(NodeKind.CAV, 1)
    for label, extent in (("another car", CAR_EXTENT), ("a truck", TALL_EXTENT)):
        middle = VehicleState(vid=2, position=(3.5, -40.0), heading=(0.0, 1.0),
                              speed_mps=0.0, extent=extent)
        world = World(layout=layout, vehicles=cars + [middle], rsus=default_rsus(layout))
        by_node = {a.node: a for a in world.antennas()}
        link = sample_link(params, layout, world.vehicles,
                           by_node[tx_id], by_node[rx_id], t=0.0, seed=1)
        state = "line of sight" if link.los else "blocked"
        print(f"with {label:11s} in between: {state}, snr {link.snr_db:+.2f} dB")
    print()

    # Random (non-geometric) blockage is a seeded Bernoulli draw per link and tick.
    draws = np.array([
        stochastic_blockage(0.3, (tx_id, rx_id), t=k * 0.1, seed=5)
        for k in range(20000)
    ])
    print(f"random blockage at p_b=0.3: empirical rate {draws.mean():.4f} "
          f"over {draws.size} ticks")


if __name__ == "__main__":
    main()
