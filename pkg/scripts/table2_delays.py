"""Delay breakdown at a configuration: where the deadline is lost.

    python3 scripts/table2_delays.py --config configs/table2.cfg
    python3 scripts/table2_delays.py --config configs/calibrated.cfg
"""

import argparse

import numpy as np

from elsmvr import ScenarioConfig, load_config
from elsmvr.scenario import Network, generate_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--slots", type=int, default=200)
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else ScenarioConfig()

    rows = {k: [] for k in ("access", "backhaul_visible", "uav_proc", "sbs_proc",
                            "hit_visible", "miss_visible", "miss_full")}
    for seed in range(args.seeds):
        topo, trace = generate_scenario(cfg, seed, horizon=args.slots)
        net = Network(cfg, topo)
        rng = np.random.default_rng(seed)
        no_claims = np.zeros((net.n_sbs, net.n_users), dtype=bool)
        for req in trace.requests:
            assoc = net.resolve_association(no_claims)
            dl = net.delays(assoc, req, net.draw_fading(rng))
            c_vd, _, _, _ = dl["links"]
            rows["access"].append(dl["hit_visible"])
            rows["backhaul_visible"].append(net.catalog.size_visible_bits / c_vd)
            rows["uav_proc"].append(net.workload[req] * dl["u_j"] * net.budget.uav_sharing
                                    / net.budget.uav_cycles_bps)
            rows["sbs_proc"].append(net.workload[req] * dl["u_j"] / net.budget.sbs_cycles_bps)
            for k in ("hit_visible", "miss_visible", "miss_full"):
                rows[k].append(dl[k])
    print(f"deadline D = {cfg.d_ms:g} ms; nearest-SBS association; {args.seeds} drops x {args.slots} slots")
    print(f"{'term':18s} {'median ms':>12s} {'p90 ms':>12s} {'P(<= D)':>9s}")
    for k, v in rows.items():
        x = np.concatenate(v) * 1e3
        print(f"{k:18s} {np.median(x):12.2f} {np.percentile(x, 90):12.2f} {np.mean(x <= cfg.d_ms):9.3f}")


if __name__ == "__main__":
    main()
