"""Netlist entries versus DSL statements for serial lines and square meshes."""

import argparse
import time

from twinforge import dsl
from twinforge.bench import generate, mesh_dsl, serial
from twinforge.netlist import IRKind, density, write_netlist


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--serial", type=int, nargs="+", default=[5, 20, 100, 1000])
    ap.add_argument("--mesh", type=int, nargs="+", default=[10, 50, 100])
    a = ap.parse_args()

    print("family,size,nodes,edges,netlist_entries,netlist_chars,dsl_statements,dsl_chars,dsl_ratio,netlist_ratio,seconds")
    for n in a.serial:
        t0 = time.perf_counter()
        b = generate(serial(n))
        d = density(b.dsl_text, IRKind.DSL, b.graph)
        e = density(b.netlist_text, IRKind.NETLIST, b.graph)
        dt = time.perf_counter() - t0
        print(f"serial,{n},{d.flat_nodes},{d.flat_edges},{e.entry_count},{e.char_count},"
              f"{d.entry_count},{d.char_count},{d.expansion_ratio:.1f},{e.expansion_ratio:.2f},{dt:.3f}")
    for n in a.mesh:
        t0 = time.perf_counter()
        text = mesh_dsl(n)
        g = dsl.load(text)
        d = density(text, IRKind.DSL, g)
        e = density(write_netlist(g), IRKind.NETLIST, g)
        dt = time.perf_counter() - t0
        print(f"mesh,{n},{d.flat_nodes},{d.flat_edges},{e.entry_count},{e.char_count},"
              f"{d.entry_count},{d.char_count},{d.expansion_ratio:.1f},{e.expansion_ratio:.2f},{dt:.3f}")


if __name__ == "__main__":
    main()
