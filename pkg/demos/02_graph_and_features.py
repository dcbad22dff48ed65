"""Turn a placed design into a circuit graph with node features.

Shows the three connection rules at work, how sparse the result is next
to the naive per-net clique expansion, and the structure of the type +
region feature rows.
"""

from collections import Counter

import numpy as np

from imlg import (
    BuildConfig,
    EncoderConfig,
    GenConfig,
    build_graph,
    clique_expansion_count,
    generate_labeled,
    read_graph,
    write_graph,
)

design, labels = generate_labeled(GenConfig(n_instances=2000, seed=42))
graph = build_graph(
    design, labels, cfg=BuildConfig(L=5.0, edge_cap=16), encoder_cfg=EncoderConfig(region_depth=4)
)

print(f"nodes: {graph.n}, edges: {graph.n_edges}, isolated: {len(graph.isolated)}")
print("edges by rule:", dict(Counter(rule for _i, _j, rule in graph.edges)))
print(f"clique expansion of the same netlist: {clique_expansion_count(design)} edges")

degrees = np.array([graph.degree(i) for i in range(graph.n)])
print(f"degree: min {degrees.min()}, median {int(np.median(degrees))}, max {degrees.max()}")

d = graph.features.shape[1]
print(f"\nfeature rows are {d}-dimensional: 6 type bits + 4 bits per region level")
row = graph.features[0]
print(f"node '{graph.names[0]}': type one-hot {row[:6].astype(int).tolist()}")
print(f"                 region code    {row[6:].astype(int).tolist()}")
print("every row has region_depth + 1 ones:",
      bool((graph.features.sum(axis=1) == 5).all()))

text = write_graph(graph)
open("/tmp/demo02.graph", "w").write(text)
back = read_graph(text)
print(f"\ngraph file round-trips: {back.edges == graph.edges} "
      f"({len(text.splitlines())} lines, /tmp/demo02.graph)")
