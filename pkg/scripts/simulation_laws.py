"""Bottleneck throughput, Little's law and trace invariants on reference configurations."""

import argparse

from twinforge.bench import catalog, generate
from twinforge.model import DistSpec, Edge, EdgeKind, GraphBuilder, Node, NodeKind
from twinforge.sim import SimConfig, check_trace, little_check, simulate, trace_csv


def line(delays, arrival, cap=10):
    b = GraphBuilder("line")
    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": arrival}))
    ids = ["SRC"]
    for i, d in enumerate(delays, 1):
        b.add_node(Node(f"M{i}", NodeKind.MACHINE, {"delay": d}))
        ids.append(f"M{i}")
    b.add_node(Node("SINK", NodeKind.SINK))
    ids.append("SINK")
    for k, (u, v) in enumerate(zip(ids, ids[1:])):
        b.connect(u, Edge(f"B{k}", EdgeKind.BUFFER, params={"capacity": cap}), v)
    return b.build()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--horizon", type=float, default=50_000.0)
    a = ap.parse_args()

    print("bottleneck (deterministic, saturated source)")
    for delays in ([1.0, 2.0], [0.5, 1.5, 1.0], [3.0, 1.0, 2.0, 2.5]):
        rep = simulate(line(delays, 0.0), SimConfig(2000.0, 100.0, a.seed))
        target = 1 / max(delays)
        print(f"  delays={delays} throughput={rep.total_throughput:.4f} target={target:.4f} "
              f"ratio={rep.total_throughput / target:.4f}")

    print("Little's law (M/M/1-like, arrivals 0.4/s, service 1.0/s)")
    for rho_rate in (0.4, 0.7):
        g = line([DistSpec.exponential(1.0)], DistSpec.exponential(rho_rate), cap=100_000)
        rep = simulate(g, SimConfig(a.horizon, 1000.0, a.seed))
        chk = little_check(rep, rho_rate)
        print(f"  lambda={rho_rate} L={chk['L']:.4f} lambdaW={chk['lambda_W']:.4f} rel_err={chk['rel_err']:.4f}")

    print("trace invariants over the catalog (horizon 200)")
    bad = 0
    for spec in catalog():
        g = generate(spec).graph
        cfg = SimConfig(200.0, 20.0, a.seed, trace=True)
        r1, r2 = simulate(g, cfg), simulate(g, cfg)
        problems = check_trace(g, r1.trace)
        same = trace_csv(r1.trace) == trace_csv(r2.trace)
        bad += bool(problems) or not same
        print(f"  {spec.label:4s} events={len(r1.trace):6d} completed={r1.completed:4d} "
              f"violations={len(problems)} deterministic={same}")
    print(f"models with problems: {bad}")


if __name__ == "__main__":
    main()
